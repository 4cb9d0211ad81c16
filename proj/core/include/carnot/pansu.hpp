#ifndef CARNOT_PANSU_HPP
#define CARNOT_PANSU_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "carnot/algebra.hpp"
#include "carnot/group.hpp"

namespace carnot {

using GroupMap = std::function<Vec(const Vec&)>;

/// delta_eps^{-1} ( f(x)^{-1} . f(x . delta_eps y) ).
Vec finite_difference(const CarnotStructure& cs, const GroupMap& f,
                      const Vec& x, double eps, const Vec& y);

/// Candidate derivative: a matrix in the graded basis plus the residuals
/// deciding whether it acts as a graded group morphism.
struct LinearCandidate {
  Mat matrix;
  double morphism_residual = 0.0;   // ||F[x,y]_N - [Fx,Fy]_N|| over probes
  double dilation_residual = 0.0;   // mass of the off-grade blocks
};

enum class LinearClass { HL, EndOnly, NotLinear };

LinearClass classify_linear(const CarnotStructure& cs,
                            const LinearCandidate& cand, double tol = 1e-6);

/// Measures the two residuals of an arbitrary matrix against the structure.
LinearCandidate measure_linear_candidate(const CarnotStructure& cs,
                                         const Mat& m, std::uint64_t seed = 0,
                                         int probe_pairs = 64);

struct PansuDerivativeReport {
  LinearCandidate candidate;
  std::vector<double> eps;
  std::vector<double> sup_discrepancy;  // sup over probes of |.|_1 distance
  bool divergent = false;               // non-decreasing discrepancy trend
  bool converged = false;
};

/// Fixed deterministic probe set: generator directions, one direction per
/// layer, and n_random seeded unit points.
std::vector<Vec> default_probe_set(const CarnotStructure& cs,
                                   std::uint64_t seed = 0, int n_random = 32);

/// Fits the best grade-block-diagonal matrix to the finite differences at
/// the smallest epsilon and reports the discrepancy trend along the ladder.
/// Divergence (e.g. right translations) is an outcome, not an error.
PansuDerivativeReport pansu_derivative_estimate(
    const CarnotStructure& cs, const GroupMap& f, const Vec& x,
    const std::vector<double>& eps_ladder, const std::vector<Vec>& probes);

// --- Curves -----------------------------------------------------------------

enum class Interpolation { LinearInCoordinates };

struct SampledCurve {
  std::vector<double> times;
  std::vector<Vec> points;
  Interpolation interpolation = Interpolation::LinearInCoordinates;
};

/// Sum of group log-increments; the algebra-valued development. The curve
/// is left-translated to start at 0.
SampledCurve develop_curve(const CarnotStructure& cs, const SampledCurve& c);

/// Ordered product of increments; inverts the development up to O(mesh).
SampledCurve lift_curve(const CarnotStructure& cs, const SampledCurve& sigma);

/// Partial Riemann sums of the i-fold bracket [sigma, d sigma]_i.
SampledCurve i_area(const CarnotStructure& cs, const SampledCurve& sigma,
                    int i);

/// Max over steps of the above-grade-1 mass of the left log-velocity,
/// relative to the step size; -> 0 at order >= 1 for horizontal curves.
double horizontality_defect(const CarnotStructure& cs, const SampledCurve& c);

// --- Virtual tangent (beta) limit -------------------------------------------

struct BetaLimitResult {
  Vec value;
  double order = 0.0;
  bool converged = true;
  bool exact = false;
  std::vector<double> diffs;
};

/// beta(x,y) = lim delta_eps^{-1}((delta_eps x) .G (delta_eps y)) under the
/// original product, extrapolated; equals the nilpotent product.
BetaLimitResult beta_limit(const CarnotStructure& cs, const Vec& x,
                           const Vec& y, const std::vector<double>& eps_ladder,
                           int truncation = 6);

}  // namespace carnot

#endif
