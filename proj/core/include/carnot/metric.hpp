#ifndef CARNOT_METRIC_HPP
#define CARNOT_METRIC_HPP

#include <functional>
#include <vector>

#include "carnot/algebra.hpp"
#include "carnot/group.hpp"

namespace carnot {

using Metric = std::function<double(const Vec&, const Vec&)>;

Metric euclidean_metric();

/// n points with an explicit distance matrix; the constructor validates
/// symmetry, the zero diagonal, identity of indiscernibles and the triangle
/// inequality (violations beyond 1e-12 are rejected).
class FiniteMetricSpace {
 public:
  explicit FiniteMetricSpace(Mat distances);
  int size() const { return static_cast<int>(d_.rows()); }
  double operator()(int i, int j) const { return d_(i, j); }
  const Mat& matrix() const { return d_; }

 private:
  Mat d_;
};

struct MetricCurve {
  std::vector<double> times;
  std::vector<Vec> points;
  Metric metric = euclidean_metric();
};

/// Sum of consecutive distances over the given partition; a lower bound of
/// the true variation, monotone under refinement.
double variation(const MetricCurve& curve);

struct LengthResult {
  double length = 0.0;
  bool not_lipschitz = false;
  double max_quotient = 0.0;
};

/// Numerical metric derivative: the local sup of difference quotients over
/// a symmetric window, shrunk until the sup stabilizes within 1% (floor 3
/// samples); integrated by trapezoid. Quotients that keep growing as the
/// window shrinks raise the NotLipschitz flag.
LengthResult length_via_dilatation(const MetricCurve& curve);

struct HausdorffMeasure {
  double value = 0.0;               // at the finest delta
  std::vector<double> deltas;
  std::vector<double> estimates;    // N_delta * (2 delta)^k
  bool monotone = false;
};

/// Greedy farthest-point covering by delta-balls; sum of (diam)^k.
HausdorffMeasure hausdorff_measure_estimate(const std::vector<Vec>& cloud,
                                            const Metric& metric, double k,
                                            const std::vector<double>& deltas);

/// max over pairs of | d_Y(f(x), f(x')) - d_X(x, x') |.
double distortion(const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                  const Metric& dx, const Metric& dy);

struct IsometryWitness {
  std::vector<Vec> xs;          // points of X
  std::vector<Vec> images;      // f(x) in Y
  std::vector<Vec> y_cloud;     // sample of Y for the net check
  Metric dx;
  Metric dy;
};

struct GhBound {
  double bound = 0.0;      // 2 * epsilon
  double epsilon = 0.0;    // max(distortion, net radius)
  double distortion = 0.0;
  double net_radius = 0.0;
};

/// Prop-style bound d_GH < 2 eps from an eps-isometry witness; when the
/// claimed eps is beaten by the measurement the actual value is returned.
GhBound gh_upper_bound(const IsometryWitness& witness);

struct MidpointFailure {
  int i = 0, j = 0;
  double best = 0.0;  // min over z of max(d(i,z), d(z,j))
};

/// For every pair, searches all z for an approximate midpoint; returns the
/// pairs with no eps-midpoint.
std::vector<MidpointFailure> path_metric_midpoint_check(
    const FiniteMetricSpace& space, double eps);

/// Rescaled finite spaces against a fixed reference on the same index set;
/// the identity correspondence gives bound = 2 * distortion per lambda.
std::vector<double> tangent_cone_experiment(
    const std::function<FiniteMetricSpace(double)>& rescaled_space,
    const std::vector<double>& lambdas, const FiniteMetricSpace& reference);

/// Finite space of CC-distance upper bounds between the given points under
/// either product of the structure. Distances use left translation to the
/// origin; points are taken pairwise.
FiniteMetricSpace cc_sample_space(const CarnotStructure& cs,
                                  const std::vector<Vec>& points,
                                  const CcOptions& opt,
                                  bool original_bracket);

/// Builds (lambda d_G on delta_{1/lambda} p_i) for the cone experiment.
std::function<FiniteMetricSpace(double)> carnot_rescaled_family(
    const CarnotStructure& cs, const std::vector<Vec>& points,
    const CcOptions& opt);

}  // namespace carnot

#endif
