#ifndef CARNOT_RICHARDSON_HPP
#define CARNOT_RICHARDSON_HPP

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <vector>

namespace carnot {

/// Extrapolation of a vector-valued quantity sampled along a decreasing
/// epsilon ladder, with the convergence order estimated from the data.
struct ExtrapolationResult {
  Eigen::VectorXd value;      // extrapolated limit (or last value if flagged)
  double order = 0.0;         // empirical convergence order; NaN when exact
  bool converged = true;      // false when successive differences grow
  bool exact = false;         // differences at roundoff from the start
  std::vector<double> diffs;  // ||v_k - v_{k-1}||
};

/// values[k] sampled at eps[k], eps strictly decreasing, size >= 3.
/// Error model value(eps) = v* + C eps^p; p is fit from the last triple.
inline ExtrapolationResult richardson_extrapolate(
    const std::vector<Eigen::VectorXd>& values, const std::vector<double>& eps,
    double roundoff_scale = 1.0) {
  ExtrapolationResult r;
  const std::size_t n = values.size();
  r.value = values.back();
  for (std::size_t k = 1; k < n; ++k)
    r.diffs.push_back((values[k] - values[k - 1]).norm());

  const double tiny = 1e-14 * std::max(1.0, roundoff_scale);
  bool all_tiny = true;
  for (double d : r.diffs) all_tiny = all_tiny && d < tiny;
  if (all_tiny) {
    r.exact = true;
    r.order = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  for (std::size_t k = 1; k < r.diffs.size(); ++k) {
    if (r.diffs[k] > r.diffs[k - 1] * (1.0 + 1e-9) && r.diffs[k] > tiny)
      r.converged = false;
  }
  if (!r.converged) return r;

  const std::size_t k = n - 1;
  double d1 = r.diffs[r.diffs.size() - 2];
  double d2 = r.diffs[r.diffs.size() - 1];
  if (d2 < tiny) {  // hit roundoff before the ladder ended
    r.order = std::numeric_limits<double>::quiet_NaN();
    r.exact = true;
    return r;
  }
  double ratio_eps = eps[k - 1] / eps[k];  // > 1
  double p = std::log(d1 / d2) / std::log(ratio_eps);
  p = std::min(6.0, std::max(0.25, p));
  r.order = p;
  double rho = std::pow(ratio_eps, p);
  r.value = values[k] + (values[k] - values[k - 1]) / (rho - 1.0);
  return r;
}

}  // namespace carnot

#endif
