#include "carnot/pansu.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "carnot/richardson.hpp"
#include "carnot/rng.hpp"

namespace carnot {

Vec finite_difference(const CarnotStructure& cs, const GroupMap& f,
                      const Vec& x, double eps, const Vec& y) {
  Vec moved = f(bch_multiply(cs, x, cs.dilate(eps, y)));
  Vec diff = bch_multiply(cs, group_inverse(f(x)), moved);
  return cs.dilate_inv(eps, diff);
}

LinearCandidate measure_linear_candidate(const CarnotStructure& cs,
                                         const Mat& m, std::uint64_t seed,
                                         int probe_pairs) {
  LinearCandidate cand;
  cand.matrix = m;
  const int dim = cs.dim();

  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (cs.layer_of()[i] != cs.layer_of()[j])
        cand.dilation_residual = std::max(cand.dilation_residual,
                                          std::abs(m(i, j)));

  Rng rng(seed + 101);
  for (int rep = 0; rep < probe_pairs; ++rep) {
    Vec x = rng.unit_vector(dim);
    Vec y = rng.unit_vector(dim);
    Vec lhs = m * cs.nilpotent().apply(x, y);
    Vec rhs = cs.nilpotent().apply(m * x, m * y);
    cand.morphism_residual = std::max(cand.morphism_residual,
                                      (lhs - rhs).norm());
  }
  return cand;
}

LinearClass classify_linear(const CarnotStructure& cs,
                            const LinearCandidate& cand, double tol) {
  (void)cs;
  if (cand.morphism_residual > tol) return LinearClass::NotLinear;
  bool equivariant = cand.dilation_residual <= tol;
  Eigen::JacobiSVD<Mat> svd(cand.matrix);
  bool invertible =
      svd.singularValues()(svd.singularValues().size() - 1) > tol;
  return (equivariant && invertible) ? LinearClass::HL : LinearClass::EndOnly;
}

std::vector<Vec> default_probe_set(const CarnotStructure& cs,
                                   std::uint64_t seed, int n_random) {
  const int dim = cs.dim();
  std::vector<Vec> probes;
  for (int i = 0; i < dim; ++i)
    if (cs.layer_of()[i] == 1) probes.push_back(Vec::Unit(dim, i));
  for (int grade = 2; grade <= cs.step(); ++grade)
    for (int i = 0; i < dim; ++i)
      if (cs.layer_of()[i] == grade) {
        probes.push_back(Vec::Unit(dim, i));
        break;
      }
  Rng rng(seed);
  for (int r = 0; r < n_random; ++r) {
    Vec v = rng.unit_vector(dim);
    double n = homogeneous_norm(cs, v, NormKind::One);
    probes.push_back(cs.dilate(1.0 / n, v));
  }
  return probes;
}

PansuDerivativeReport pansu_derivative_estimate(
    const CarnotStructure& cs, const GroupMap& f, const Vec& x,
    const std::vector<double>& eps_ladder, const std::vector<Vec>& probes) {
  if (eps_ladder.size() < 3)
    throw InputError("eps ladder needs at least 3 entries");
  if (probes.empty()) throw InputError("empty probe set");
  const int dim = cs.dim();

  PansuDerivativeReport rep;
  rep.eps = eps_ladder;

  // Grade-blockwise least squares at the smallest epsilon.
  const double eps_fit = eps_ladder.back();
  std::vector<Vec> images(probes.size());
  for (std::size_t p = 0; p < probes.size(); ++p)
    images[p] = finite_difference(cs, f, x, eps_fit, probes[p]);

  Mat m = Mat::Zero(dim, dim);
  for (int grade = 1; grade <= cs.step(); ++grade) {
    std::vector<int> idx;
    for (int i = 0; i < dim; ++i)
      if (cs.layer_of()[i] == grade) idx.push_back(i);
    const int b = static_cast<int>(idx.size());
    if (b == 0) continue;
    Mat A(static_cast<int>(probes.size()), b);
    Mat B(static_cast<int>(probes.size()), b);
    for (std::size_t p = 0; p < probes.size(); ++p)
      for (int c = 0; c < b; ++c) {
        A(static_cast<int>(p), c) = probes[p][idx[c]];
        B(static_cast<int>(p), c) = images[p][idx[c]];
      }
    // block row-action: A * block^T ~ B in least squares
    Mat blockT = A.colPivHouseholderQr().solve(B);
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < b; ++c) m(idx[r], idx[c]) = blockT(c, r);
  }
  rep.candidate = measure_linear_candidate(cs, m);

  // Sup-discrepancy trend across the ladder.
  for (double eps : eps_ladder) {
    double sup = 0.0;
    for (const auto& y : probes) {
      Vec fd = finite_difference(cs, f, x, eps, y);
      Vec diff = bch_multiply(cs, group_inverse(Vec(m * y)), fd);
      sup = std::max(sup, homogeneous_norm(cs, diff, NormKind::One));
    }
    rep.sup_discrepancy.push_back(sup);
  }

  // A group difference of roundoff size has |.|_1 about eps_mach^{1/step}
  // (the top layer enters through its 1/step root), so the noise floor of
  // the sup-discrepancy is step-dependent.
  const double floor_tol = std::pow(10.0, -13.0 / cs.step());
  bool all_tiny = true;
  for (double d : rep.sup_discrepancy) all_tiny = all_tiny && d <= floor_tol;
  if (all_tiny) {
    rep.converged = true;
    return rep;
  }
  bool nondecreasing = true;
  for (std::size_t k = 1; k < rep.sup_discrepancy.size(); ++k)
    if (rep.sup_discrepancy[k] < 0.95 * rep.sup_discrepancy[k - 1])
      nondecreasing = false;
  rep.divergent = nondecreasing && rep.sup_discrepancy.back() > 10 * floor_tol;
  rep.converged = !rep.divergent &&
                  rep.sup_discrepancy.back() <=
                      std::max(0.5 * rep.sup_discrepancy.front(), floor_tol);
  return rep;
}

// ---------------------------------------------------------------------------
// Development, lift, i-area

namespace {

void check_times(const SampledCurve& c) {
  if (c.times.size() != c.points.size())
    throw InputError("curve times and points differ in length");
  for (std::size_t k = 1; k < c.times.size(); ++k)
    if (c.times[k] <= c.times[k - 1])
      throw InputError("curve times must be strictly increasing");
}

}  // namespace

SampledCurve develop_curve(const CarnotStructure& cs, const SampledCurve& c) {
  check_times(c);
  SampledCurve sigma;
  sigma.times = c.times;
  sigma.interpolation = c.interpolation;
  Vec acc = Vec::Zero(cs.dim());
  sigma.points.push_back(acc);
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    acc += bch_multiply(cs, group_inverse(c.points[k - 1]), c.points[k]);
    sigma.points.push_back(acc);
  }
  return sigma;
}

SampledCurve lift_curve(const CarnotStructure& cs, const SampledCurve& sigma) {
  check_times(sigma);
  SampledCurve c;
  c.times = sigma.times;
  c.interpolation = sigma.interpolation;
  Vec acc = Vec::Zero(cs.dim());
  c.points.push_back(acc);
  for (std::size_t k = 1; k < sigma.points.size(); ++k) {
    acc = bch_multiply(cs, acc, Vec(sigma.points[k] - sigma.points[k - 1]));
    c.points.push_back(acc);
  }
  return c;
}

SampledCurve i_area(const CarnotStructure& cs, const SampledCurve& sigma,
                    int i) {
  check_times(sigma);
  if (i < 1) throw InputError("i-area needs i >= 1");
  SampledCurve area;
  area.times = sigma.times;
  area.interpolation = sigma.interpolation;
  Vec acc = Vec::Zero(cs.dim());
  area.points.push_back(acc);
  for (std::size_t k = 1; k < sigma.points.size(); ++k) {
    acc += cs.nilpotent().nested(sigma.points[k - 1], sigma.points[k], i);
    area.points.push_back(acc);
  }
  return area;
}

double horizontality_defect(const CarnotStructure& cs, const SampledCurve& c) {
  check_times(c);
  double worst = 0.0;
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    Vec inc = bch_multiply(cs, group_inverse(c.points[k - 1]), c.points[k]);
    double dt = c.times[k] - c.times[k - 1];
    double vertical = 0.0;
    for (int grade = 2; grade <= cs.step(); ++grade)
      vertical += cs.layer_norm(inc, grade);
    worst = std::max(worst, vertical / dt);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// beta limit

BetaLimitResult beta_limit(const CarnotStructure& cs, const Vec& x,
                           const Vec& y, const std::vector<double>& eps_ladder,
                           int truncation) {
  if (eps_ladder.size() < 3)
    throw InputError("eps ladder needs at least 3 entries");
  std::vector<Vec> values;
  values.reserve(eps_ladder.size());
  for (double eps : eps_ladder) {
    Vec prod = bch_multiply_original(cs, cs.dilate(eps, x), cs.dilate(eps, y),
                                     truncation);
    values.push_back(cs.dilate_inv(eps, prod));
  }
  double scale = std::max(1.0, x.norm() + y.norm());
  ExtrapolationResult ex = richardson_extrapolate(values, eps_ladder, scale);
  return {ex.value, ex.order, ex.converged, ex.exact, ex.diffs};
}

}  // namespace carnot
