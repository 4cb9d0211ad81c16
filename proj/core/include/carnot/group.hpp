#ifndef CARNOT_GROUP_HPP
#define CARNOT_GROUP_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "carnot/algebra.hpp"
#include "carnot/rng.hpp"

namespace carnot {

/// Baker-Campbell-Hausdorff product log(exp(x) exp(y)) for the given
/// bracket, summed through total degree `order` (order <= 6). Exact when
/// the bracket is nilpotent of step <= order.
Vec bch(const LieBracket& bracket, const Vec& x, const Vec& y, int order);

/// Group product in exponential coordinates for the nilpotent structure;
/// exact for step <= 6, throws UnsupportedStep beyond.
Vec bch_multiply(const CarnotStructure& cs, const Vec& x, const Vec& y);

/// Product under the original (possibly non-nilpotent) bracket, truncated.
Vec bch_multiply_original(const CarnotStructure& cs, const Vec& x,
                          const Vec& y, int truncation = 6);

inline Vec group_inverse(const Vec& x) { return -x; }

enum class NormKind { One, Inf };

/// |x|_1 = sum_i ||x_i||^{1/i} or |x|_inf = max_i ||x_i||^{1/i}.
double homogeneous_norm(const CarnotStructure& cs, const Vec& x,
                        NormKind kind);

/// Homogeneous quasi-distance |x^{-1} y|_inf under the nilpotent product.
double box_distance(const CarnotStructure& cs, const Vec& x, const Vec& y);

/// ||x_i|| <= r^i for every layer, i.e. membership in Box(r).
bool box_membership(const CarnotStructure& cs, double r, const Vec& x);

// --- Carnot-Caratheodory distance (upper bounds) ---------------------------

/// Piecewise-constant horizontal control; every control lies in V_1.
struct HorizontalPath {
  std::vector<Vec> controls;
  std::vector<double> durations;
  double length() const;
};

struct CcOptions {
  int n_segments = 4;
  int budget = 1500;      // objective evaluations per start
  int starts = 6;
  std::uint64_t seed = 0;
  // endpoint tolerance, relative to |x^{-1}y|_1 in the homogeneous gauge
  double endpoint_tol = 1e-6;
  bool use_original_bracket = false;  // optimize under the G-product
  int truncation = 6;                 // series order for the G-product
};

struct CcDistanceResult {
  double upper_bound = 0.0;
  double endpoint_residual = 0.0;
  bool certified = false;  // endpoint reached within tolerance
  HorizontalPath path;
};

/// Endpoint of the path started at `from` (ordered product of exp(tau u)).
Vec path_endpoint(const CarnotStructure& cs, const HorizontalPath& path,
                  const Vec& from, bool original_bracket = false,
                  int truncation = 6);

/// Penalized multi-start shooting for d(x, y); certified upper bound only
/// when the endpoint tolerance is met (see CcDistanceResult.certified).
CcDistanceResult cc_distance_upper(const CarnotStructure& cs, const Vec& x,
                                   const Vec& y, const CcOptions& opt = {});

// --- Word factorization (Lemma-style product of exponentials) --------------

struct Letter {
  double t = 0.0;
  int generator = 0;  // index into the generator list (layer-1 basis)
};

struct WordOptions {
  double chart_radius = 0.5;  // in the |.|_1 norm
  double tol = 1e-9;
  int max_iter = 200;
};

struct WordFactorization {
  std::vector<Letter> letters;
  double reproduction_error = 0.0;  // ||product - x||
  double max_t = 0.0;
  double lemma_constant = 0.0;  // max|t_i| / ||x||^{1/m}
};

/// x as a finite product of exp(t_i X_{g(i)}); throws OutOfChartRadius when
/// |x|_1 exceeds the chart radius or the inversion does not converge.
WordFactorization word_factorization(const CarnotStructure& cs, const Vec& x,
                                     const WordOptions& opt = {});

HorizontalPath word_to_path(const CarnotStructure& cs,
                            const WordFactorization& word);

// --- Ball-Box constants and Hausdorff dimension -----------------------------

struct BoxConstants {
  double c_hat = 0.0;
  double C_hat = 0.0;
  int violations = 0;  // samples violating the sandwich with (c_hat, C_hat)
};

/// Empirical Ball-Box pair from |x|_inf / d(0,x) over the samples.
BoxConstants box_constants_estimate(const CarnotStructure& cs,
                                    const std::vector<Vec>& samples,
                                    const CcOptions& opt = {});

struct HausdorffDimension {
  double dimension = 0.0;
  double ci_halfwidth = 0.0;  // 95% CI on the fitted slope
  std::vector<double> scales;
  std::vector<std::size_t> counts;
};

using RegionSampler = std::function<Vec(Rng&)>;

/// Uniform sampler of the unit |.|_inf box.
RegionSampler unit_box_sampler(const CarnotStructure& cs);

/// Greedy maximal eps-packing counts in the |.|_inf quasi-distance; the
/// dimension is the slope of log N_eps against log(1/eps).
HausdorffDimension hausdorff_dimension_estimate(
    const CarnotStructure& cs, const RegionSampler& sampler,
    const std::vector<double>& scale_ladder, std::size_t n_samples = 200000,
    std::uint64_t seed = 0);

}  // namespace carnot

#endif
