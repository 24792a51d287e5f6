#include "dglue/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dglue {

using json = nlohmann::json;

const std::vector<std::string>& suite_catalogue() {
  static const std::vector<std::string> names = {
      "fibres",         "metric-gluing",  "leibniz",      "symmetry", "metric-compat",
      "bracket-split",  "covderiv-split", "torsion-split", "koszul",  "levi-civita-inheritance",
  };
  return names;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::ParseError, "field " + (path.empty() ? std::string("/") : path) + ": " + message);
}

const json& need(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "/" + key, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a list");
  return j;
}

Point point(const json& j, int n, const std::string& path) {
  array(j, path);
  if (n >= 0 && static_cast<int>(j.size()) != n) fail(path, "expected " + std::to_string(n) + " coordinates");
  Point p;
  for (size_t i = 0; i < j.size(); ++i) p.push_back(number(j[i], path + "/" + std::to_string(i)));
  return p;
}

std::vector<Point> points(const json& j, int n, const std::string& path) {
  std::vector<Point> out;
  array(j, path);
  for (size_t i = 0; i < j.size(); ++i) out.push_back(point(j[i], n, path + "/" + std::to_string(i)));
  return out;
}

Box box(const json& j, int n, const std::string& path) {
  Box b;
  array(j, path);
  if (static_cast<int>(j.size()) != n) fail(path, "expected " + std::to_string(n) + " intervals");
  for (size_t i = 0; i < j.size(); ++i) {
    Point iv = point(j[i], 2, path + "/" + std::to_string(i));
    if (!(iv[0] < iv[1])) fail(path + "/" + std::to_string(i), "interval must have lo < hi");
    b.emplace_back(iv[0], iv[1]);
  }
  return b;
}

std::vector<int> exponent_tuple(const std::string& key, int n, const std::string& path) {
  std::string s;
  for (char c : key) {
    if (c == '(' || c == ')' || c == '[' || c == ']' || c == ' ') continue;
    s.push_back(c);
  }
  std::vector<int> e;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 0) fail(path, "bad exponent tuple '" + key + "'");
    e.push_back(v);
  }
  if (static_cast<int>(e.size()) != n) {
    fail(path, "exponent tuple '" + key + "' needs " + std::to_string(n) + " entries");
  }
  return e;
}

Expr scalar(const json& j, int n, const std::string& path);

std::vector<Expr> scalar_list(const json& j, int n, const std::string& path) {
  array(j, path);
  std::vector<Expr> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(scalar(j[i], n, path + "/" + std::to_string(i)));
  return out;
}

Expr scalar(const json& j, int n, const std::string& path) {
  if (j.is_number()) return Expr(j.get<double>());
  if (!j.is_object() || j.size() != 1) fail(path, "expected a number or a one-key field object");
  const std::string op = j.begin().key();
  const json& arg = j.begin().value();
  const std::string sub = path + "/" + op;
  if (op == "var") {
    int i = integer(arg, sub);
    if (i < 0 || i >= n) fail(sub, "variable index out of range for dimension " + std::to_string(n));
    return Expr::var(i);
  }
  if (op == "poly") {
    if (!arg.is_object()) fail(sub, "expected a map from exponent tuples to coefficients");
    std::vector<Monomial> terms;
    for (auto it = arg.begin(); it != arg.end(); ++it) {
      terms.push_back({number(it.value(), sub + "/" + it.key()), exponent_tuple(it.key(), n, sub)});
    }
    return polynomial(terms);
  }
  if (op == "add" || op == "mul") {
    auto args = scalar_list(arg, n, sub);
    if (args.empty()) fail(sub, "needs at least one argument");
    Expr acc = args[0];
    for (size_t i = 1; i < args.size(); ++i) acc = op == "add" ? acc + args[i] : acc * args[i];
    return acc;
  }
  if (op == "div") {
    auto args = scalar_list(arg, n, sub);
    if (args.size() != 2) fail(sub, "needs two arguments");
    return args[0] / args[1];
  }
  if (op == "pow") {
    array(arg, sub);
    if (arg.size() != 2) fail(sub, "expected [field, integer exponent]");
    return pow(scalar(arg[0], n, sub + "/0"), integer(arg[1], sub + "/1"));
  }
  if (op == "neg") return -scalar(arg, n, sub);
  if (op == "exp") return exp(scalar(arg, n, sub));
  if (op == "log") return log(scalar(arg, n, sub));
  if (op == "sin") return sin(scalar(arg, n, sub));
  if (op == "cos") return cos(scalar(arg, n, sub));
  if (op == "sqrt") return sqrt(scalar(arg, n, sub));
  if (op == "cbrt") return cbrt(scalar(arg, n, sub));
  if (op == "abs") return abs(scalar(arg, n, sub));
  fail(path, "unknown field built-in '" + op + "'");
}

Field map_field(const json& j, int in, int out, const std::string& path) {
  if (!j.is_object() || j.size() != 1) fail(path, "expected one of identity, affine, components");
  const std::string kind = j.begin().key();
  const json& arg = j.begin().value();
  const std::string sub = path + "/" + kind;
  std::vector<Expr> comps;
  if (kind == "identity") {
    int d = integer(arg, sub);
    if (d != in || d != out) fail(sub, "identity needs matching dimensions");
    for (int i = 0; i < d; ++i) comps.push_back(Expr::var(i));
  } else if (kind == "affine") {
    const json& m = need(arg, "matrix", sub);
    Point offset = arg.contains("offset") ? point(arg["offset"], out, sub + "/offset") : Point(out, 0.0);
    array(m, sub + "/matrix");
    if (static_cast<int>(m.size()) != out) fail(sub + "/matrix", "expected " + std::to_string(out) + " rows");
    for (int r = 0; r < out; ++r) {
      Point row = point(m[r], in, sub + "/matrix/" + std::to_string(r));
      Expr e(offset[r]);
      for (int c = 0; c < in; ++c) {
        if (row[c] != 0.0) e = e + Expr(row[c]) * Expr::var(c);
      }
      comps.push_back(e);
    }
  } else if (kind == "components") {
    comps = scalar_list(arg, in, sub);
    if (static_cast<int>(comps.size()) != out) fail(sub, "expected " + std::to_string(out) + " components");
  } else {
    fail(path, "unknown map built-in '" + kind + "'");
  }
  return Field::from_exprs(in, comps);
}

EuclideanBlock block(const json& j, const std::string& path) {
  int n = integer(need(j, "dim", path), path + "/dim");
  if (n < 1 || n > kMaxPartials) fail(path + "/dim", "dimension must be between 1 and " + std::to_string(kMaxPartials));
  std::vector<Expr> domain;
  if (j.contains("domain")) domain = scalar_list(j["domain"], n, path + "/domain");
  Box b = j.contains("sample_box") ? box(j["sample_box"], n, path + "/sample_box") : Box{};
  std::vector<Point> seeds = j.contains("seeds") ? points(j["seeds"], n, path + "/seeds") : std::vector<Point>{};
  return EuclideanBlock(n, domain, b, seeds);
}

std::vector<Expr> matrix(const json& j, int n, const std::string& path) {
  array(j, path);
  if (static_cast<int>(j.size()) != n) fail(path, "expected " + std::to_string(n) + " rows");
  std::vector<Expr> out;
  for (int r = 0; r < n; ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    array(j[r], rp);
    if (static_cast<int>(j[r].size()) != n) fail(rp, "expected " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c) out.push_back(scalar(j[r][c], n, rp + "/" + std::to_string(c)));
  }
  return out;
}

std::vector<Expr> christoffel(const json& j, int n, const std::string& path) {
  std::vector<Expr> out(static_cast<size_t>(n) * n * n, Expr(0.0));
  if (j.is_string()) {
    if (j.get<std::string>() != "flat") fail(path, "expected \"flat\" or a list of symbols");
    return out;
  }
  array(j, path);
  for (size_t e = 0; e < j.size(); ++e) {
    const std::string ep = path + "/" + std::to_string(e);
    const json& idx = need(j[e], "index", ep);
    array(idx, ep + "/index");
    if (idx.size() != 3) fail(ep + "/index", "expected [k, i, j]");
    int k = integer(idx[0], ep + "/index/0"), i = integer(idx[1], ep + "/index/1"), l = integer(idx[2], ep + "/index/2");
    for (int v : {k, i, l}) {
      if (v < 0 || v >= n) fail(ep + "/index", "index out of range for dimension " + std::to_string(n));
    }
    out[static_cast<size_t>(k) * n * n + i * n + l] = scalar(need(j[e], "field", ep), n, ep + "/field");
  }
  return out;
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; })) {
      fail(path + "/" + it.key(), "unknown key");
    }
  }
}

Scenario from_json(const json& root) {
  check_keys(root,
             {"name", "blocks", "locus", "gluing", "hypotheses", "metrics", "connections", "diff", "sampling",
              "tolerances", "suites"},
             "");
  Scenario sc;
  sc.name = root.contains("name") && root["name"].is_string() ? root["name"].get<std::string>() : "scenario";

  const json& blocks = need(root, "blocks", "");
  sc.block1 = block(need(blocks, "block1", "/blocks"), "/blocks/block1");
  sc.block2 = block(need(blocks, "block2", "/blocks"), "/blocks/block2");
  const int n1 = sc.block1.dim(), n2 = sc.block2.dim();

  const json& loc = need(root, "locus", "");
  const json& kind = need(loc, "kind", "/locus");
  if (!kind.is_string()) fail("/locus/kind", "expected a string");
  const std::string k = kind.get<std::string>();
  if (k == "points") {
    sc.locus = GluingLocus::point_set(points(need(loc, "points", "/locus"), n1, "/locus/points"));
  } else if (k == "open") {
    auto pred = scalar_list(need(loc, "predicate", "/locus"), n1, "/locus/predicate");
    auto seeds = loc.contains("seeds") ? points(loc["seeds"], n1, "/locus/seeds") : std::vector<Point>{};
    sc.locus = GluingLocus::open_subdomain(pred, seeds);
  } else if (k == "submanifold") {
    const json& pb = need(loc, "param_box", "/locus");
    array(pb, "/locus/param_box");
    const int d = static_cast<int>(pb.size());
    if (d < 1 || d >= n1) fail("/locus/param_box", "parameter dimension must be between 1 and dim(block1) - 1");
    Box b = box(pb, d, "/locus/param_box");
    Field phi = map_field(need(loc, "map", "/locus"), d, n1, "/locus/map");
    auto seeds = loc.contains("param_seeds") ? points(loc["param_seeds"], d, "/locus/param_seeds") : std::vector<Point>{};
    sc.locus = GluingLocus::submanifold(phi, b, seeds);
  } else {
    fail("/locus/kind", "expected points, open or submanifold");
  }

  const json& glue = need(root, "gluing", "");
  sc.gluing.forward = map_field(need(glue, "forward", "/gluing"), n1, n2, "/gluing/forward");
  sc.gluing.inverse = map_field(need(glue, "inverse", "/gluing"), n2, n1, "/gluing/inverse");

  if (root.contains("hypotheses")) {
    const json& h = root["hypotheses"];
    check_keys(h, {"pullback_equality", "omega_equality"}, "/hypotheses");
    HypothesisFlags f;
    if (h.contains("pullback_equality")) f.pullback_equality = boolean(h["pullback_equality"], "/hypotheses/pullback_equality");
    if (h.contains("omega_equality")) f.omega_equality = boolean(h["omega_equality"], "/hypotheses/omega_equality");
    sc.hypotheses = f;
  }

  if (root.contains("metrics")) {
    const json& m = root["metrics"];
    sc.gram1 = matrix(need(m, "g1", "/metrics"), n1, "/metrics/g1");
    sc.gram2 = matrix(need(m, "g2", "/metrics"), n2, "/metrics/g2");
    sc.has_metrics = true;
  }

  if (root.contains("connections")) {
    const json& c = root["connections"];
    if (c.contains("levi_civita")) {
      if (c["levi_civita"] != "from_metric") fail("/connections/levi_civita", "only from_metric is supported");
      if (!sc.has_metrics) fail("/connections/levi_civita", "needs metrics");
      sc.connections = ConnectionKind::LeviCivita;
    } else {
      sc.christoffel1 = christoffel(need(c, "nabla1", "/connections"), n1, "/connections/nabla1");
      sc.christoffel2 = christoffel(need(c, "nabla2", "/connections"), n2, "/connections/nabla2");
      sc.connections = ConnectionKind::Explicit;
    }
  }

  if (root.contains("diff")) {
    const json& d = root["diff"];
    check_keys(d, {"mode", "fd_step"}, "/diff");
    if (d.contains("mode")) {
      if (!d["mode"].is_string()) fail("/diff/mode", "expected a string");
      try {
        sc.diff.mode = parse_mode(d["mode"].get<std::string>());
      } catch (const Error&) {
        fail("/diff/mode", "expected dual or fd");
      }
    }
    if (d.contains("fd_step")) sc.diff.fd_step = number(d["fd_step"], "/diff/fd_step");
  }

  if (root.contains("sampling")) {
    const json& s = root["sampling"];
    check_keys(s, {"per_axis", "locus", "probe_ratio", "probe_steps", "seed", "random_sections"}, "/sampling");
    if (s.contains("per_axis")) sc.plan.per_axis = integer(s["per_axis"], "/sampling/per_axis");
    if (s.contains("locus")) sc.plan.locus = integer(s["locus"], "/sampling/locus");
    if (s.contains("probe_ratio")) sc.plan.probe_ratio = number(s["probe_ratio"], "/sampling/probe_ratio");
    if (s.contains("probe_steps")) sc.plan.probe_steps = integer(s["probe_steps"], "/sampling/probe_steps");
    if (s.contains("random_sections")) sc.plan.random_sections = integer(s["random_sections"], "/sampling/random_sections");
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) fail("/sampling/seed", "expected a non-negative integer");
      sc.plan.seed = s["seed"].get<std::uint64_t>();
    }
    if (sc.plan.per_axis < 1 || sc.plan.locus < 1 || sc.plan.random_sections < 0) {
      fail("/sampling", "sample counts must be positive");
    }
  }

  if (root.contains("tolerances")) {
    const json& t = root["tolerances"];
    check_keys(t, {"domain", "numeric", "sigma_cutoff", "pd_floor", "symmetry", "pairing", "koszul"}, "/tolerances");
    auto set = [&](const char* key, double& dst) {
      if (t.contains(key)) dst = number(t[key], std::string("/tolerances/") + key);
    };
    set("domain", sc.tol.domain);
    set("numeric", sc.tol.numeric);
    set("sigma_cutoff", sc.tol.sigma_cutoff);
    set("pd_floor", sc.tol.pd_floor);
    set("symmetry", sc.tol.symmetry);
    set("pairing", sc.tol.pairing);
    set("koszul", sc.tol.koszul);
  }

  const auto& cat = suite_catalogue();
  if (!root.contains("suites") || root["suites"] == "all") {
    sc.suites = cat;
  } else {
    const json& s = array(root["suites"], "/suites");
    for (size_t i = 0; i < s.size(); ++i) {
      const std::string p = "/suites/" + std::to_string(i);
      if (!s[i].is_string()) fail(p, "expected a suite name");
      std::string name = s[i].get<std::string>();
      if (std::find(cat.begin(), cat.end(), name) == cat.end()) fail(p, "unknown suite '" + name + "'");
      sc.suites.push_back(name);
    }
  }
  return sc;
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    size_t pos = std::min<size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    int line = 1, col = 1;
    for (size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::ParseError,
                origin + ": line " + std::to_string(line) + ", column " + std::to_string(col) + ": malformed document");
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json root = parse_json(text, origin);
  try {
    return from_json(root);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParseError) throw;
    std::string msg = e.what();
    throw Error(ErrorCode::ParseError, origin + ": " + msg.substr(msg.find(": ") + 2));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

Expr parse_scalar_field(const std::string& json_text, int n) {
  json j = parse_json(json_text, "<field>");
  return scalar(j, n, "");
}

}  // namespace dglue
