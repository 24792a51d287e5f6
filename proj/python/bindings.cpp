#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dglue/suites.hpp"

namespace py = pybind11;
using namespace dglue;

namespace {

BlockMetric metric_from(const std::vector<std::string>& entries, int n) {
  if (static_cast<int>(entries.size()) != n * n) {
    throw Error(ErrorCode::DimensionMismatch, "Gram needs n*n entries");
  }
  std::vector<Expr> e;
  for (const auto& s : entries) e.push_back(parse_scalar_field(s, n));
  return BlockMetric(Field::from_exprs(n, e));
}

std::vector<std::vector<double>> rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_dglue, m) {
  m.doc() = "Glued Euclidean blocks: fibres, metrics, connections and verification suites";
  py::register_exception<Error>(m, "DglueError", PyExc_RuntimeError);

  m.def("catalogue", &suite_catalogue, "Names of the verification suites");

  m.def(
      "run_json",
      [](const std::string& path, std::vector<std::string> suites, std::optional<std::string> mode,
         std::optional<std::uint64_t> seed) {
        RunOptions opts;
        opts.suites = std::move(suites);
        if (mode) opts.mode = parse_mode(*mode);
        opts.seed = seed;
        Scenario sc = load_scenario(path);
        py::gil_scoped_release release;
        return report_json(run_scenario(sc, opts));
      },
      py::arg("path"), py::arg("suites") = std::vector<std::string>{}, py::arg("mode") = py::none(),
      py::arg("seed") = py::none());

  m.def(
      "inspect",
      [](const std::string& path, const std::string& point) { return inspect_point(load_scenario(path), point); },
      py::arg("path"), py::arg("point"));

  m.def(
      "fibre",
      [](const std::string& path, const std::string& point) {
        ScenarioContext ctx(load_scenario(path));
        GluedPoint p = parse_point(*ctx.space(), point);
        auto f = compute_fibre(*ctx.space(), p, ctx.scenario().diff);
        py::dict d;
        d["region"] = region_name(p.region);
        d["dim"] = f->dim();
        d["basis"] = rows(f->basis.transpose());
        if (ctx.scenario().has_metrics) d["gram"] = rows(ctx.metric().gram(*f));
        return d;
      },
      py::arg("path"), py::arg("point"));

  m.def(
      "koszul",
      [](const std::vector<std::string>& gram, int n, const std::vector<double>& x, const std::string& mode) {
        return koszul_solve(metric_from(gram, n), {parse_mode(mode), 1e-5}).christoffel()(x);
      },
      py::arg("gram"), py::arg("n"), py::arg("x"), py::arg("mode") = "dual",
      "Christoffel symbols k*n*n + i*n + j of the Levi-Civita connection at x");

  m.def(
      "christoffel_oracle",
      [](const std::vector<std::string>& gram, int n, const std::vector<double>& x) {
        return christoffel_oracle(metric_from(gram, n)).christoffel()(x);
      },
      py::arg("gram"), py::arg("n"), py::arg("x"));
}
