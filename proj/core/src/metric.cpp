#include "carnot/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "carnot/parallel.hpp"

namespace carnot {

Metric euclidean_metric() {
  return [](const Vec& a, const Vec& b) { return (a - b).norm(); };
}

// ---------------------------------------------------------------------------
// FiniteMetricSpace

FiniteMetricSpace::FiniteMetricSpace(Mat distances) : d_(std::move(distances)) {
  const int n = static_cast<int>(d_.rows());
  if (d_.cols() != n) throw InputError("distance matrix must be square");
  const double tol = 1e-12;
  for (int i = 0; i < n; ++i) {
    if (d_(i, i) != 0.0)
      throw InputError("distance matrix has a nonzero diagonal entry");
    for (int j = 0; j < n; ++j) {
      if (d_(i, j) < 0.0) throw InputError("negative distance");
      if (std::abs(d_(i, j) - d_(j, i)) > tol)
        throw InputError("distance matrix is not symmetric");
      if (i != j && d_(i, j) <= 0.0)
        throw InputError("distinct points at distance zero");
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (d_(i, k) > d_(i, j) + d_(j, k) + tol)
          throw InputError("triangle inequality violated beyond 1e-12");
}

// ---------------------------------------------------------------------------
// Variation and length

double variation(const MetricCurve& curve) {
  if (curve.points.size() < 2)
    throw InputError("variation needs at least 2 samples");
  double total = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k)
    total += curve.metric(curve.points[k - 1], curve.points[k]);
  return total;
}

LengthResult length_via_dilatation(const MetricCurve& curve) {
  const int n = static_cast<int>(curve.points.size());
  if (n < 4) throw InputError("length needs at least 4 samples");

  auto window_sup = [&](int i, int w) {
    int lo = std::max(0, i - w), hi = std::min(n - 1, i + w);
    double sup = 0.0;
    for (int u = lo; u <= hi; ++u)
      for (int v = u + 1; v <= hi; ++v) {
        double dt = curve.times[v] - curve.times[u];
        if (dt <= 0.0) continue;
        sup = std::max(sup, curve.metric(curve.points[u], curve.points[v]) / dt);
      }
    return sup;
  };

  LengthResult out;
  std::vector<double> dil(n, 0.0);
  for (int i = 0; i < n; ++i) {
    int w = std::max(2, n / 16);
    double q = window_sup(i, w);
    while (w > 1) {
      int w2 = std::max(1, w / 2);
      double q2 = window_sup(i, w2);
      if (std::abs(q2 - q) <= 0.01 * std::max(q, 1e-300)) {
        q = q2;
        break;
      }
      q = q2;
      w = w2;
    }
    dil[i] = q;
    out.max_quotient = std::max(out.max_quotient, q);
  }

  // Lipschitz means the difference quotients stay bounded at every chord
  // scale; quotients that grow as the chord shrinks signal a blow-up.
  auto shell_sup = [&](int lo, int hi) {
    double sup = 0.0;
    for (int i = 0; i < n; ++i)
      for (int sep = lo; sep <= hi && i + sep < n; ++sep) {
        double dt = curve.times[i + sep] - curve.times[i];
        if (dt <= 0.0) continue;
        sup = std::max(sup,
                       curve.metric(curve.points[i], curve.points[i + sep]) / dt);
      }
    return sup;
  };
  double fine_scale = shell_sup(1, 2);
  double coarse_scale = shell_sup(std::max(3, n / 32), std::max(4, n / 16));
  if (fine_scale > 2.0 * std::max(coarse_scale, 1e-300))
    out.not_lipschitz = true;
  for (int k = 1; k < n; ++k)
    out.length +=
        0.5 * (dil[k - 1] + dil[k]) * (curve.times[k] - curve.times[k - 1]);
  return out;
}

// ---------------------------------------------------------------------------
// Hausdorff measure by greedy covering

HausdorffMeasure hausdorff_measure_estimate(const std::vector<Vec>& cloud,
                                            const Metric& metric, double k,
                                            const std::vector<double>& deltas) {
  if (cloud.empty()) throw InputError("empty point cloud");
  if (k <= 0.0) throw InputError("Hausdorff exponent must be positive");
  const std::size_t n = cloud.size();

  // farthest-point traversal; the greedy order does not depend on delta
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> chosen;
  std::vector<std::size_t> owner(n, 0);  // nearest chosen point so far
  std::vector<double> cover_radius;      // after m+1 chosen points
  std::size_t cur = 0;
  for (std::size_t m = 0; m < n; ++m) {
    chosen.push_back(cur);
    double far = 0.0;
    std::size_t next = cur;
    for (std::size_t i = 0; i < n; ++i) {
      double d = metric(cloud[cur], cloud[i]);
      if (d < min_dist[i]) {
        min_dist[i] = d;
        owner[i] = m;
      }
      if (min_dist[i] > far) {
        far = min_dist[i];
        next = i;
      }
    }
    cover_radius.push_back(far);
    if (far == 0.0) break;
    cur = next;
  }

  HausdorffMeasure out;
  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  for (double delta : sorted) {
    std::size_t count = cover_radius.size();
    for (std::size_t m = 0; m < cover_radius.size(); ++m)
      if (cover_radius[m] <= delta) {
        count = m + 1;
        break;
      }
    // cover elements = clusters around the first `count` chosen points;
    // the estimate uses their measured diameters, not the 2 delta bound
    std::vector<std::vector<std::size_t>> clusters(count);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = owner[i];
      if (c >= count) {  // owned by a later center: reassign among the first
        double bestd = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < count; ++m) {
          double d = metric(cloud[chosen[m]], cloud[i]);
          if (d < bestd) {
            bestd = d;
            c = m;
          }
        }
      }
      clusters[c].push_back(i);
    }
    double sum = 0.0;
    for (const auto& cl : clusters) {
      double diam = 0.0;
      for (std::size_t a = 0; a < cl.size(); ++a)
        for (std::size_t b = a + 1; b < cl.size(); ++b)
          diam = std::max(diam, metric(cloud[cl[a]], cloud[cl[b]]));
      sum += std::pow(diam, k);
    }
    out.deltas.push_back(delta);
    out.estimates.push_back(sum);
  }
  out.value = out.estimates.back();
  out.monotone = true;
  for (std::size_t i = 1; i < out.estimates.size(); ++i)
    if (out.estimates[i] < out.estimates[i - 1] * 0.999) out.monotone = false;
  return out;
}

// ---------------------------------------------------------------------------
// Distortion, GH bound, midpoints

double distortion(const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                  const Metric& dx, const Metric& dy) {
  if (xs.size() != ys.size()) throw InputError("point lists differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      worst = std::max(worst, std::abs(dy(ys[i], ys[j]) - dx(xs[i], xs[j])));
  return worst;
}

GhBound gh_upper_bound(const IsometryWitness& witness) {
  GhBound out;
  out.distortion = distortion(witness.xs, witness.images, witness.dx,
                              witness.dy);
  for (const auto& y : witness.y_cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& img : witness.images)
      best = std::min(best, witness.dy(img, y));
    out.net_radius = std::max(out.net_radius, best);
  }
  out.epsilon = std::max(out.distortion, out.net_radius);
  out.bound = 2.0 * out.epsilon;
  return out;
}

std::vector<MidpointFailure> path_metric_midpoint_check(
    const FiniteMetricSpace& space, double eps) {
  std::vector<MidpointFailure> fails;
  const int n = space.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (int z = 0; z < n; ++z)
        best = std::min(best, std::max(space(i, z), space(z, j)));
      if (best > 0.5 * space(i, j) + eps) fails.push_back({i, j, best});
    }
  return fails;
}

// ---------------------------------------------------------------------------
// Tangent cone experiment

std::vector<double> tangent_cone_experiment(
    const std::function<FiniteMetricSpace(double)>& rescaled_space,
    const std::vector<double>& lambdas, const FiniteMetricSpace& reference) {
  std::vector<double> bounds;
  for (double lam : lambdas) {
    FiniteMetricSpace space = rescaled_space(lam);
    if (space.size() != reference.size())
      throw InputError("rescaled space and reference differ in size");
    double dis = 0.0;
    for (int i = 0; i < space.size(); ++i)
      for (int j = i + 1; j < space.size(); ++j)
        dis = std::max(dis, std::abs(space(i, j) - reference(i, j)));
    // identity correspondence: the image is all of the reference sample,
    // so the net radius vanishes and the bound is twice the distortion
    bounds.push_back(2.0 * dis);
  }
  return bounds;
}

FiniteMetricSpace cc_sample_space(const CarnotStructure& cs,
                                  const std::vector<Vec>& points,
                                  const CcOptions& opt,
                                  bool original_bracket) {
  const int n = static_cast<int>(points.size());
  Mat d = Mat::Zero(n, n);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
  std::vector<double> vals(pairs.size(), 0.0);
  parallel_for(pairs.size(), [&](std::size_t p) {
    auto [i, j] = pairs[p];
    CcOptions o = opt;
    o.use_original_bracket = original_bracket;
    o.seed = opt.seed + 31 * p;
    auto res = cc_distance_upper(cs, points[i], points[j], o);
    vals[p] = std::max(res.upper_bound, 1e-12);
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    d(pairs[p].first, pairs[p].second) = vals[p];
    d(pairs[p].second, pairs[p].first) = vals[p];
  }
  // Shortest-path closure: concatenating feasible paths keeps the upper
  // bound property and restores the triangle inequality lost to optimizer
  // slack.
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return FiniteMetricSpace(d);
}

std::function<FiniteMetricSpace(double)> carnot_rescaled_family(
    const CarnotStructure& cs, const std::vector<Vec>& points,
    const CcOptions& opt) {
  return [&cs, points, opt](double lambda) {
    std::vector<Vec> shrunk;
    shrunk.reserve(points.size());
    for (const auto& p : points) shrunk.push_back(cs.dilate(1.0 / lambda, p));
    CcOptions o = opt;
    o.use_original_bracket = true;
    FiniteMetricSpace small = cc_sample_space(cs, shrunk, o, true);
    return FiniteMetricSpace(lambda * small.matrix());
  };
}

}  // namespace carnot
