#include "carnot/group.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "carnot/parallel.hpp"

namespace carnot {

// ---------------------------------------------------------------------------
// Baker-Campbell-Hausdorff series
//
// Computed from the graded recursion
//   Z_1 = X + Y
//   (n+1) Z_{n+1} = 1/2 [X-Y, Z_n]
//       + sum_{p>=1, 2p<=n} K_{2p} sum_{k_1+...+k_{2p}=n} [Z_{k_1},[...,[Z_{k_{2p}}, X+Y]...]]
// with K_{2p} = B_{2p}/(2p)!. Exact for nilpotent brackets of step <= order.

namespace {

constexpr double kBchK[3] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0};

void compositions(int total, int parts, std::vector<int>& cur,
                  const std::function<void(const std::vector<int>&)>& emit) {
  if (parts == 1) {
    if (total >= 1) {
      cur.push_back(total);
      emit(cur);
      cur.pop_back();
    }
    return;
  }
  for (int first = 1; first <= total - (parts - 1); ++first) {
    cur.push_back(first);
    compositions(total - first, parts - 1, cur, emit);
    cur.pop_back();
  }
}

}  // namespace

Vec bch(const LieBracket& br, const Vec& x, const Vec& y, int order) {
  if (order < 1) throw InputError("bch order must be >= 1");
  if (order > 6) throw UnsupportedStep(order);

  const Vec xpy = x + y;
  if (order == 1) return xpy;
  // explicit low orders; they carry the hot loops (packing, shooting)
  if (order == 2) return xpy + 0.5 * br.apply(x, y);
  if (order == 3) {
    Vec xy = br.apply(x, y);
    return xpy + 0.5 * xy +
           (1.0 / 12.0) * (br.apply(x, xy) - br.apply(y, xy));
  }
  const Vec xmy = x - y;

  std::vector<Vec> z(order + 1, Vec::Zero(br.dim()));
  z[1] = xpy;
  for (int n = 1; n < order; ++n) {
    Vec acc = 0.5 * br.apply(xmy, z[n]);
    for (int p = 1; 2 * p <= n; ++p) {
      const double coeff = kBchK[p - 1];
      std::vector<int> cur;
      compositions(n, 2 * p, cur, [&](const std::vector<int>& ks) {
        Vec t = xpy;
        for (int idx = 2 * p - 1; idx >= 0; --idx) t = br.apply(z[ks[idx]], t);
        acc += coeff * t;
      });
    }
    z[n + 1] = acc / static_cast<double>(n + 1);
  }
  Vec out = Vec::Zero(br.dim());
  for (int n = 1; n <= order; ++n) out += z[n];
  return out;
}

Vec bch_multiply(const CarnotStructure& cs, const Vec& x, const Vec& y) {
  if (cs.step() > 6) throw UnsupportedStep(cs.step());
  return bch(cs.nilpotent(), x, y, cs.step());
}

Vec bch_multiply_original(const CarnotStructure& cs, const Vec& x,
                          const Vec& y, int truncation) {
  return bch(cs.original(), x, y, truncation);
}

// ---------------------------------------------------------------------------
// Homogeneous norms and boxes

double homogeneous_norm(const CarnotStructure& cs, const Vec& x,
                        NormKind kind) {
  double acc = 0.0;
  for (int i = 1; i <= cs.step(); ++i) {
    double li = std::pow(cs.layer_norm(x, i), 1.0 / i);
    if (kind == NormKind::One)
      acc += li;
    else
      acc = std::max(acc, li);
  }
  return acc;
}

double box_distance(const CarnotStructure& cs, const Vec& x, const Vec& y) {
  return homogeneous_norm(cs, bch_multiply(cs, group_inverse(x), y),
                          NormKind::Inf);
}

bool box_membership(const CarnotStructure& cs, double r, const Vec& x) {
  for (int i = 1; i <= cs.step(); ++i)
    if (cs.layer_norm(x, i) > std::pow(r, i)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Horizontal paths

double HorizontalPath::length() const {
  double l = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k)
    l += controls[k].norm() * durations[k];
  return l;
}

Vec path_endpoint(const CarnotStructure& cs, const HorizontalPath& path,
                  const Vec& from, bool original_bracket, int truncation) {
  const LieBracket& br =
      original_bracket ? cs.original() : cs.nilpotent();
  int order = original_bracket ? truncation : cs.step();
  Vec p = from;
  for (std::size_t k = 0; k < path.controls.size(); ++k)
    p = bch(br, p, Vec(path.durations[k] * path.controls[k]), order);
  return p;
}

// ---------------------------------------------------------------------------
// Word factorization

namespace {

std::vector<Letter> word_letters(const std::vector<int>& slots, double tau) {
  if (slots.size() == 1) return {{tau, slots[0]}};
  std::vector<int> tail(slots.begin() + 1, slots.end());
  std::vector<Letter> b = word_letters(tail, tau);
  std::vector<Letter> out;
  out.push_back({tau, slots[0]});
  out.insert(out.end(), b.begin(), b.end());
  out.push_back({-tau, slots[0]});
  for (auto it = b.rbegin(); it != b.rend(); ++it)
    out.push_back({-it->t, it->generator});
  return out;
}

std::vector<Letter> reversed_letters(const std::vector<Letter>& w) {
  std::vector<Letter> out;
  for (auto it = w.rbegin(); it != w.rend(); ++it)
    out.push_back({-it->t, it->generator});
  return out;
}

}  // namespace

namespace {

/// Adapted coordinate index of each generator slot, in alphabet order.
std::vector<int> layer1_indices(const CarnotStructure& cs) {
  std::vector<int> out;
  for (int c = 0; c < cs.dim(); ++c)
    if (cs.layer_of()[c] == 1) out.push_back(c);
  return out;
}

}  // namespace

WordFactorization word_factorization(const CarnotStructure& cs, const Vec& x,
                                     const WordOptions& opt) {
  const int dim = cs.dim();
  double n1 = homogeneous_norm(cs, x, NormKind::One);
  if (n1 > opt.chart_radius)
    throw OutOfChartRadius("point outside the factorization chart (|x|_1 = " +
                              std::to_string(n1) + " > " +
                              std::to_string(opt.chart_radius) + ")",
                          n1);

  const std::vector<int> layer1 = layer1_indices(cs);
  std::vector<int> slot_of_generator(dim, -1);  // basis index -> slot
  for (std::size_t s = 0; s < layer1.size(); ++s)
    slot_of_generator[cs.basis().words[layer1[s]][0]] = static_cast<int>(s);

  auto block = [&](int i, double u) -> std::vector<Letter> {
    std::vector<Letter> out;
    if (u == 0.0) return out;
    int grade = cs.layer_of()[i];
    if (grade == 1) {
      out.push_back({u, slot_of_generator[cs.basis().words[i][0]]});
      return out;
    }
    std::vector<int> slots;
    for (int g : cs.basis().words[i]) slots.push_back(slot_of_generator[g]);
    double tau = std::pow(std::abs(u), 1.0 / grade);
    std::vector<Letter> w = word_letters(slots, tau);
    return u >= 0.0 ? w : reversed_letters(w);
  };

  auto assemble = [&](const Vec& u) {
    std::vector<Letter> letters;
    for (int i = 0; i < dim; ++i) {
      auto b = block(i, u[i]);
      letters.insert(letters.end(), b.begin(), b.end());
    }
    return letters;
  };
  auto product = [&](const std::vector<Letter>& letters) {
    Vec p = Vec::Zero(dim);
    Vec e = Vec::Zero(dim);
    for (const auto& l : letters) {
      e.setZero();
      e[layer1[l.generator]] = l.t;
      p = bch_multiply(cs, p, e);
    }
    return p;
  };

  // Chart inversion: the block map is identity plus grade-raising terms,
  // so the coordinate update u += (P(u)^{-1} x) contracts near 0.
  Vec u = x;
  double err = std::numeric_limits<double>::infinity();
  std::vector<Letter> letters;
  for (int it = 0; it < opt.max_iter; ++it) {
    letters = assemble(u);
    Vec p = product(letters);
    Vec e = bch_multiply(cs, group_inverse(p), x);
    err = e.norm();
    if (err <= opt.tol) break;
    if (!std::isfinite(err) || err > 10.0 * std::max(1.0, x.norm()))
      throw OutOfChartRadius("word inversion diverged", err);
    u += e;
  }
  if (err > opt.tol)
    throw OutOfChartRadius("word inversion did not converge", err);

  WordFactorization out;
  out.letters = letters;
  {
    Vec p = product(letters);
    out.reproduction_error = (p - x).norm();
  }
  for (const auto& l : out.letters)
    out.max_t = std::max(out.max_t, std::abs(l.t));
  double xn = x.norm();
  out.lemma_constant =
      xn > 0.0 ? out.max_t / std::pow(xn, 1.0 / cs.step()) : 0.0;
  return out;
}

HorizontalPath word_to_path(const CarnotStructure& cs,
                            const WordFactorization& word) {
  const std::vector<int> layer1 = layer1_indices(cs);
  HorizontalPath path;
  for (const auto& l : word.letters) {
    if (l.t == 0.0) continue;
    Vec u = Vec::Zero(cs.dim());
    u[layer1[l.generator]] = l.t >= 0.0 ? 1.0 : -1.0;
    path.controls.push_back(u);
    path.durations.push_back(std::abs(l.t));
  }
  return path;
}

// ---------------------------------------------------------------------------
// Nelder-Mead (used by the CC shooting scheme)

namespace {

struct NelderMead {
  std::function<double(const Vec&)> f;
  int evals = 0;
  int budget = 1000;

  double eval(const Vec& x) {
    ++evals;
    return f(x);
  }

  Vec minimize(const Vec& x0, double scale) {
    const int n = static_cast<int>(x0.size());
    std::vector<Vec> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 1; i <= n; ++i) xs[i][i - 1] += scale;
    for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

    while (evals < budget) {
      std::vector<int> idx(n + 1);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(),
                [&](int a, int b) { return fs[a] < fs[b]; });
      std::vector<Vec> xs2(n + 1);
      std::vector<double> fs2(n + 1);
      for (int i = 0; i <= n; ++i) {
        xs2[i] = xs[idx[i]];
        fs2[i] = fs[idx[i]];
      }
      xs = std::move(xs2);
      fs = std::move(fs2);
      if (std::abs(fs[n] - fs[0]) <= 1e-14 * (1.0 + std::abs(fs[0]))) break;

      Vec centroid = Vec::Zero(n);
      for (int i = 0; i < n; ++i) centroid += xs[i];
      centroid /= n;

      Vec xr = centroid + (centroid - xs[n]);
      double fr = eval(xr);
      if (fr < fs[0]) {
        Vec xe = centroid + 2.0 * (centroid - xs[n]);
        double fe = eval(xe);
        if (fe < fr) { xs[n] = xe; fs[n] = fe; }
        else         { xs[n] = xr; fs[n] = fr; }
      } else if (fr < fs[n - 1]) {
        xs[n] = xr; fs[n] = fr;
      } else {
        Vec xc = centroid + 0.5 * (xs[n] - centroid);
        double fc = eval(xc);
        if (fc < fs[n]) { xs[n] = xc; fs[n] = fc; }
        else {
          for (int i = 1; i <= n; ++i) {
            xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
            fs[i] = eval(xs[i]);
          }
        }
      }
    }
    int best = 0;
    for (int i = 1; i <= n; ++i)
      if (fs[i] < fs[best]) best = i;
    return xs[best];
  }
};

}  // namespace

CcDistanceResult cc_distance_upper(const CarnotStructure& cs, const Vec& x,
                                   const Vec& y, const CcOptions& opt) {
  if (opt.n_segments < 1) throw InputError("n_segments must be >= 1");
  const int dim = cs.dim();

  // Left-invariance: optimize from 0 to w = x^{-1} y.
  Vec w = opt.use_original_bracket
              ? bch_multiply_original(cs, group_inverse(x), y, opt.truncation)
              : bch_multiply(cs, group_inverse(x), y);

  CcDistanceResult best;
  best.upper_bound = std::numeric_limits<double>::infinity();
  best.endpoint_residual = homogeneous_norm(cs, w, NormKind::One);
  if (w.norm() < 1e-14) {
    best.upper_bound = 0.0;
    best.endpoint_residual = 0.0;
    best.certified = true;
    return best;
  }

  std::vector<int> v1_idx;
  for (int c = 0; c < dim; ++c)
    if (cs.layer_of()[c] == 1) v1_idx.push_back(c);
  const int p = static_cast<int>(v1_idx.size());
  const int nseg = opt.n_segments;
  const double tau = 1.0 / nseg;

  auto unpack = [&](const Vec& u) {
    HorizontalPath path;
    for (int k = 0; k < nseg; ++k) {
      Vec c = Vec::Zero(dim);
      for (int a = 0; a < p; ++a) c[v1_idx[a]] = u[k * p + a];
      path.controls.push_back(c);
      path.durations.push_back(tau);
    }
    return path;
  };
  // Endpoint error in the homogeneous gauge: every term of the objective
  // then scales linearly under dilations, so rescaled problems follow the
  // same optimizer trajectory.
  const double wnorm = homogeneous_norm(cs, w, NormKind::One);
  const double tol = opt.endpoint_tol * wnorm;
  auto residual = [&](const HorizontalPath& path) {
    Vec endp = path_endpoint(cs, path, Vec::Zero(dim),
                             opt.use_original_bracket, opt.truncation);
    Vec diff = opt.use_original_bracket
                   ? bch_multiply_original(cs, group_inverse(endp), w,
                                           opt.truncation)
                   : bch_multiply(cs, group_inverse(endp), w);
    return homogeneous_norm(cs, diff, NormKind::One);
  };
  auto consider = [&](const HorizontalPath& path) {
    double res = residual(path);
    double len = path.length();
    if (res <= tol) {
      if (!best.certified || len < best.upper_bound) {
        best.upper_bound = len;
        best.endpoint_residual = res;
        best.certified = true;
        best.path = path;
      }
    } else if (!best.certified && res < best.endpoint_residual) {
      best.endpoint_residual = res;
      best.upper_bound = len;
      best.path = path;
    }
  };

  // Word-factorization candidate: always reaches the endpoint under the
  // nilpotent product; dilations bring w inside the chart. Under the
  // original bracket it is only a warm start, considered like any other.
  HorizontalPath word_path;
  {
    double n1 = homogeneous_norm(cs, w, NormKind::One);
    double s = std::max(1.0, n1 / 0.4);
    try {
      WordFactorization f = word_factorization(cs, cs.dilate(1.0 / s, w));
      for (auto& l : f.letters) l.t *= s;
      word_path = word_to_path(cs, f);
      consider(word_path);
    } catch (const OutOfChartRadius&) {
      // fall through to shooting
    }
  }

  // Multi-start penalized shooting.
  std::vector<HorizontalPath> results(opt.starts);
  parallel_for(static_cast<std::size_t>(opt.starts), [&](std::size_t s) {
    Rng rng = Rng::stream(opt.seed, 1000 + s);
    Vec u0 = Vec::Zero(nseg * p);
    const std::size_t n_letters = word_path.controls.size();
    if (s == 0) {
      // straight shot toward the first-layer component
      for (int k = 0; k < nseg; ++k)
        for (int a = 0; a < p; ++a) u0[k * p + a] = w[v1_idx[a]];
    } else if (s == 1 && n_letters > 0 &&
               n_letters <= static_cast<std::size_t>(nseg)) {
      // embed the word letters as the leading segments
      for (std::size_t k = 0; k < n_letters; ++k)
        for (int a = 0; a < p; ++a)
          u0[k * p + a] =
              word_path.controls[k][v1_idx[a]] * word_path.durations[k] / tau;
    } else {
      for (int i = 0; i < u0.size(); ++i)
        u0[i] = rng.normal() * 1.5 * wnorm;
    }
    Vec u = u0;
    for (double mu : {1e2, 1e3, 1e5, 1e7}) {
      NelderMead nm;
      nm.budget = opt.budget / 4;
      nm.f = [&](const Vec& v) {
        HorizontalPath path = unpack(v);
        return path.length() + mu * residual(path);
      };
      u = nm.minimize(u, 0.3 * wnorm);
    }
    results[s] = unpack(u);
  });
  for (const auto& path : results) consider(path);

  return best;
}

// ---------------------------------------------------------------------------
// Ball-Box constants

BoxConstants box_constants_estimate(const CarnotStructure& cs,
                                    const std::vector<Vec>& samples,
                                    const CcOptions& opt) {
  if (samples.empty()) throw InputError("empty sample for box constants");
  std::vector<double> ratios(samples.size(), 0.0);
  parallel_for(samples.size(), [&](std::size_t i) {
    CcOptions o = opt;
    o.seed = opt.seed + 17 * i;
    CcDistanceResult d =
        cc_distance_upper(cs, Vec::Zero(cs.dim()), samples[i], o);
    double ninf = homogeneous_norm(cs, samples[i], NormKind::Inf);
    ratios[i] = d.certified && d.upper_bound > 0.0 ? ninf / d.upper_bound : -1.0;
  });
  BoxConstants bc;
  bc.c_hat = std::numeric_limits<double>::infinity();
  for (double r : ratios) {
    if (r < 0.0) { ++bc.violations; continue; }
    bc.c_hat = std::min(bc.c_hat, r);
    bc.C_hat = std::max(bc.C_hat, r);
  }
  return bc;
}

// ---------------------------------------------------------------------------
// Hausdorff dimension by greedy packing

RegionSampler unit_box_sampler(const CarnotStructure& cs) {
  int dim = cs.dim();
  return [dim, &cs](Rng& rng) {
    for (;;) {
      Vec v = rng.uniform_vector(dim, -1.0, 1.0);
      if (box_membership(cs, 1.0, v)) return v;
    }
  };
}

namespace {

struct PackGrid {
  double cell_xy, cell_z;
  int gx, gy, gz;  // pruning coordinates (gz < 0: no vertical key)
  std::map<std::tuple<long, long, long>, std::vector<int>> cells;

  std::tuple<long, long, long> key(const Vec& v) const {
    return {static_cast<long>(std::floor(v[gx] / cell_xy)),
            static_cast<long>(std::floor(v[gy] / cell_xy)),
            gz >= 0 ? static_cast<long>(std::floor(v[gz] / cell_z)) : 0L};
  }
};

}  // namespace

HausdorffDimension hausdorff_dimension_estimate(
    const CarnotStructure& cs, const RegionSampler& sampler,
    const std::vector<double>& scale_ladder, std::size_t n_samples,
    std::uint64_t seed) {
  if (scale_ladder.size() < 4)
    throw InputError("need at least 4 packing scales");
  double smax = *std::max_element(scale_ladder.begin(), scale_ladder.end());
  double smin = *std::min_element(scale_ladder.begin(), scale_ladder.end());
  if (smax / smin < 10.0 * (1.0 - 1e-9))
    throw InputError("packing scales must span at least one decade");

  Rng rng(seed);
  std::vector<Vec> stream;
  stream.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) stream.push_back(sampler(rng));

  std::vector<int> v1_idx;
  for (int c = 0; c < cs.dim(); ++c)
    if (cs.layer_of()[c] == 1) v1_idx.push_back(c);

  HausdorffDimension out;
  out.scales = scale_ladder;
  out.counts.resize(scale_ladder.size());

  std::vector<std::vector<int>> layer_idx(cs.step());
  for (int c = 0; c < cs.dim(); ++c)
    layer_idx[cs.layer_of()[c] - 1].push_back(c);
  // vertical pruning key: a single grade-2 coordinate, if there is one
  int gz = cs.step() >= 2 && layer_idx[1].size() >= 1 ? layer_idx[1][0] : -1;
  double coord_bound = 0.0;  // sup |x_c| over the samples, for the twist term
  for (const auto& s : stream)
    coord_bound = std::max(coord_bound, s.cwiseAbs().maxCoeff());
  const auto& entries = cs.nilpotent().entries();
  const int step = cs.step();
  const int dim = cs.dim();
  const double eps_min =
      *std::min_element(scale_ladder.begin(), scale_ladder.end());
  const int Q = cs.homogeneous_dimension();

  parallel_for(scale_ladder.size(), [&](std::size_t si) {
    const double eps = scale_ladder[si];

    // Greedy filling from a finite stream is the less complete the fewer
    // candidates land in each eps-ball. Matching the candidate count to
    // eps^{-Q} keeps the filling fraction scale-consistent, which is what
    // the slope fit needs; the fraction itself cancels between rungs.
    std::size_t m = stream.size();
    double frac = std::pow(eps_min / eps, Q);
    if (frac < 1.0)
      m = std::max<std::size_t>(
          2000, static_cast<std::size_t>(frac * stream.size()));
    m = std::min(m, stream.size());
    std::vector<Vec> samples(stream.begin(), stream.begin() + m);
    std::sort(samples.begin(), samples.end(), [](const Vec& a, const Vec& b) {
      for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
      }
      return false;
    });
    std::vector<double> eps_pow2(step);  // (eps^i)^2 per layer
    for (int i = 1; i <= step; ++i) eps_pow2[i - 1] = std::pow(eps, 2.0 * i);

    // blocked means |a^{-1} b|_inf < eps, i.e. every layer under eps^i;
    // the product is expanded with raw loops to keep the hot path
    // allocation-free (series through degree 3 covers steps 1..3;
    // higher steps fall back to the generic routine)
    std::vector<double> d(dim), br1(dim), t(dim), inc(dim);
    auto bracket_into = [&](const std::vector<double>& x,
                            const std::vector<double>& y,
                            std::vector<double>& outv) {
      std::fill(outv.begin(), outv.end(), 0.0);
      for (const auto& e : entries)
        outv[e.k] += e.c * (x[e.i] * y[e.j] - x[e.j] * y[e.i]);
    };
    std::vector<double> av(dim), bv(dim);
    auto blocked = [&](const Vec& a, const Vec& b) {
      // layer-1 part of the difference is just b - a: cheapest gate first
      double s1 = 0.0;
      for (int c : layer_idx[0]) {
        double dd = b[c] - a[c];
        s1 += dd * dd;
      }
      if (s1 >= eps_pow2[0]) return false;
      if (step == 1) return true;
      if (step <= 3) {
        for (int c = 0; c < dim; ++c) {
          av[c] = a[c];
          bv[c] = b[c];
          d[c] = b[c] - a[c];
        }
        bracket_into(av, bv, br1);
        if (step == 2) {
          for (int c = 0; c < dim; ++c) inc[c] = d[c] - 0.5 * br1[c];
        } else {
          // bch(-a, b) through degree 3
          bracket_into(av, br1, t);
          for (int c = 0; c < dim; ++c) inc[c] = t[c] / 12.0;
          bracket_into(bv, br1, t);
          for (int c = 0; c < dim; ++c)
            inc[c] = d[c] - 0.5 * br1[c] + inc[c] + t[c] / 12.0;
        }
        for (int i = 1; i < step; ++i) {
          double s = 0.0;
          for (int c : layer_idx[i]) s += inc[c] * inc[c];
          if (s >= eps_pow2[i]) return false;
        }
        return true;
      }
      Vec full = bch(cs.nilpotent(), Vec(-a), b, step);
      for (int i = 1; i < step; ++i) {
        double s = 0.0;
        for (int c : layer_idx[i]) s += full[c] * full[c];
        if (s >= eps_pow2[i]) return false;
      }
      return true;
    };

    // Grade-2 pruning: |(a^{-1}b)_2| < eps^2 for a blocking pair, and the
    // twist linking (b-a)_gz to the group difference is bounded by the
    // total bracket mass into gz times the coordinate range.
    double s_gz = 0.0;
    if (gz >= 0)
      for (const auto& e : entries)
        if (e.k == gz) s_gz += std::abs(e.c);
    double zwin = eps * eps + s_gz * coord_bound * eps;
    PackGrid grid{eps, std::max(zwin, 1e-12), v1_idx[0],
                  v1_idx.size() > 1 ? v1_idx[1] : v1_idx[0], gz, {}};
    const long dz_lo = gz >= 0 ? -1 : 0, dz_hi = gz >= 0 ? 1 : 0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Vec& p = samples[i];
      auto [cx, cy, cz] = grid.key(p);
      bool ok = true;
      for (long dx = -1; dx <= 1 && ok; ++dx)
        for (long dy = -1; dy <= 1 && ok; ++dy)
          for (long dz = dz_lo; dz <= dz_hi && ok; ++dz) {
            auto it = grid.cells.find({cx + dx, cy + dy, cz + dz});
            if (it == grid.cells.end()) continue;
            for (int j : it->second) {
              // |.|_inf dominates the first-layer distance and the pruned
              // vertical window, so only nearby cells matter
              if (blocked(samples[j], p)) { ok = false; break; }
            }
          }
      if (ok) {
        ++kept;
        grid.cells[{cx, cy, cz}].push_back(static_cast<int>(i));
      }
    }
    out.counts[si] = kept;
  });

  // slope of log N against log(1/eps); counts are Poisson-like, so
  // var(log N) ~ 1/N and the fine, well-populated scales carry the weight.
  // Rungs where nearly nothing blocked only echo the candidate count and
  // carry no geometry, so they are excluded like the empty ones.
  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < scale_ladder.size(); ++i) {
    if (out.counts[i] < 3) continue;
    double frac = std::pow(eps_min / scale_ladder[i], Q);
    std::size_t m = stream.size();
    if (frac < 1.0)
      m = std::min(stream.size(),
                   std::max<std::size_t>(
                       2000, static_cast<std::size_t>(frac * stream.size())));
    if (out.counts[i] > 0.9 * static_cast<double>(m)) continue;
    xs.push_back(std::log(1.0 / scale_ladder[i]));
    ys.push_back(std::log(static_cast<double>(out.counts[i])));
    ws.push_back(static_cast<double>(out.counts[i]));
  }
  if (xs.size() < 3)
    throw NumericalDiagnostic("degenerate packing fit: fewer than 3 usable "
                              "scales",
                              static_cast<double>(xs.size()));
  const std::size_t n = xs.size();
  double wsum = std::accumulate(ws.begin(), ws.end(), 0.0);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += ws[i] * xs[i];
    my += ws[i] * ys[i];
  }
  mx /= wsum;
  my /= wsum;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
  }
  double slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ys[i] - my - slope * (xs[i] - mx);
    sse += ws[i] * r * r;
  }
  double se = n > 2 ? std::sqrt(sse / ((n - 2) * sxx)) : 0.0;
  out.dimension = slope;
  out.ci_halfwidth = 2.0 * se;
  return out;
}

}  // namespace carnot
