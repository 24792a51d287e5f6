#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace dglue {

struct Witness {
  std::string location;
  std::string detail;
  double residual = 0.0;
};

struct CheckResult {
  bool ok = true;
  double max_residual = 0.0;
  double sum_residual = 0.0;
  int samples = 0;
  std::vector<Witness> witnesses;

  static constexpr size_t kMaxWitnesses = 5;

  // Returns true when the residual is within tolerance.
  bool record(double residual, double tol, const std::string& location, const std::string& detail) {
    ++samples;
    max_residual = std::max(max_residual, residual);
    sum_residual += residual;
    bool pass = residual <= tol;
    if (!pass) {
      ok = false;
      if (witnesses.size() < kMaxWitnesses) witnesses.push_back({location, detail, residual});
    }
    return pass;
  }

  double mean_residual() const { return samples ? sum_residual / samples : 0.0; }

  void merge(const CheckResult& other) {
    ok = ok && other.ok;
    max_residual = std::max(max_residual, other.max_residual);
    sum_residual += other.sum_residual;
    samples += other.samples;
    for (const auto& w : other.witnesses) {
      if (witnesses.size() < kMaxWitnesses) witnesses.push_back(w);
    }
  }
};

}  // namespace dglue
