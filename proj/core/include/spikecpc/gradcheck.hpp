#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace spikecpc::nn {

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Central finite differences against an analytic gradient, float64 only.
/// loss() must be a deterministic function of `params`. Componentwise error
/// is |a - n| / max(1, |a|, |n|).
inline GradCheckReport grad_check(const std::string& name, const std::function<double()>& loss,
                                  std::span<double> params, std::span<const double> analytic,
                                  double h = 1e-5, double tolerance = 1e-4) {
  GradCheckReport report;
  report.name = name;
  report.tolerance = tolerance;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double f_plus = loss();
    params[i] = saved - h;
    const double f_minus = loss();
    params[i] = saved;
    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
    const double err = std::abs(a - numeric) / denom;
    if (err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_index = i;
      report.analytic_at_worst = a;
      report.numeric_at_worst = numeric;
    }
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace spikecpc::nn
