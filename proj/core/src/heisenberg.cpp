#include "carnot/heisenberg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "carnot/group.hpp"
#include "carnot/parallel.hpp"
#include "carnot/rng.hpp"

namespace carnot {

// ---------------------------------------------------------------------------
// Group operations

double omega(const Vec& x, const Vec& y) {
  const int n = static_cast<int>(x.size()) / 2;
  if (y.size() != x.size() || x.size() != 2 * n)
    throw InputError("omega: dimension mismatch");
  return x.head(n).dot(y.tail(n)) - x.tail(n).dot(y.head(n));
}

Vec apply_j(const Vec& x) {
  const int n = static_cast<int>(x.size()) / 2;
  Vec out(x.size());
  out.head(n) = x.tail(n);
  out.tail(n) = -x.head(n);
  return out;
}

HPoint h_mul(const HPoint& p, const HPoint& q) {
  if (p.x.size() != q.x.size()) throw InputError("h_mul: dimension mismatch");
  return {p.x + q.x, p.xbar + q.xbar + 0.5 * omega(p.x, q.x)};
}

HPoint h_inv(const HPoint& p) { return {-p.x, -p.xbar}; }

HPoint h_dilate(double eps, const HPoint& p) {
  return {eps * p.x, eps * eps * p.xbar};
}

HPoint h_bracket(const HPoint& p, const HPoint& q) {
  return {Vec::Zero(p.x.size()), omega(p.x, q.x)};
}

SampledCurve lift_planar_curve(const SampledCurve& planar, double xbar0) {
  SampledCurve out;
  out.times = planar.times;
  out.interpolation = planar.interpolation;
  if (planar.points.empty()) return out;
  double xbar = xbar0;
  for (std::size_t k = 0; k < planar.points.size(); ++k) {
    if (k > 0) xbar += 0.5 * omega(planar.points[k - 1], planar.points[k]);
    Vec p(planar.points[k].size() + 1);
    p.head(planar.points[k].size()) = planar.points[k];
    p[p.size() - 1] = xbar;
    out.points.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature helpers (composite 8-point Gauss-Legendre)

namespace {

constexpr double kGlNode[4] = {0.1834346424956498, 0.5255324099163290,
                               0.7966664774136267, 0.9602898564975363};
constexpr double kGlWeight[4] = {0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};

double gauss_segment(const std::function<double(double)>& f, double a,
                     double b, int panels) {
  double total = 0.0;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double mid = a + (p + 0.5) * h;
    double half = 0.5 * h;
    for (int i = 0; i < 4; ++i) {
      total += kGlWeight[i] * half *
               (f(mid + half * kGlNode[i]) + f(mid - half * kGlNode[i]));
    }
  }
  return total;
}

}  // namespace

Mat planar_jacobian(const PlanarMap& phi, const Vec& x, double fd_step) {
  const int d = static_cast<int>(x.size());
  Mat jac(d, d);
  for (int c = 0; c < d; ++c) {
    Vec hi = x, lo = x;
    hi[c] += fd_step;
    lo[c] -= fd_step;
    jac.col(c) = (phi(hi) - phi(lo)) / (2.0 * fd_step);
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Symplectomorphism lifts

namespace {

/// (phi^* lambda - lambda) at p in the direction v.
double pullback_defect(const PlanarMap& phi, const Vec& p, const Vec& v,
                       double fd_step) {
  Vec hi = p + fd_step * v;
  Vec lo = p - fd_step * v;
  Vec dphi_v = (phi(hi) - phi(lo)) / (2.0 * fd_step);
  return 0.5 * omega(phi(p), dphi_v) - 0.5 * omega(p, v);
}

double loop_integral(const PlanarMap& phi, const Vec& center, int axis_a,
                     int axis_b, double size, int panels, double fd_step) {
  const int d = static_cast<int>(center.size());
  Vec ea = Vec::Unit(d, axis_a), eb = Vec::Unit(d, axis_b);
  auto edge = [&](const Vec& from, const Vec& dir, double len) {
    return gauss_segment(
        [&](double t) {
          return pullback_defect(phi, Vec(from + t * dir), dir, fd_step);
        },
        0.0, len, panels);
  };
  Vec c0 = center - size * ea - size * eb;
  Vec c1 = center + size * ea - size * eb;
  Vec c2 = center + size * ea + size * eb;
  Vec c3 = center - size * ea + size * eb;
  return edge(c0, ea, 2 * size) + edge(c1, eb, 2 * size) +
         edge(c2, -ea, 2 * size) + edge(c3, -eb, 2 * size);
}

}  // namespace

LiftedMap lift_symplectomorphism(const PlanarMap& phi, double a,
                                 const Vec& base_point,
                                 const LiftOptions& opt) {
  const int d = static_cast<int>(base_point.size());
  if (d % 2 != 0) throw InputError("base point must live in R^{2n}");
  const int panels = std::max(1, opt.quad_points / 8);

  // Loop certificates: rectangles in every coordinate plane, two centers.
  double worst = 0.0;
  for (double size : opt.loop_sizes) {
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        for (int shift = 0; shift < 2; ++shift) {
          Vec center = base_point;
          if (shift == 1) center += 0.3 * size * Vec::Ones(d);
          double loop =
              loop_integral(phi, center, i, j, size, panels, opt.fd_step);
          worst = std::max(worst, std::abs(loop) / (4.0 * size * size));
        }
  }
  if (worst > opt.loop_tol) throw NotSymplectic(worst);

  LiftedMap out;
  out.phi = phi;
  out.a = a;
  out.base_point = base_point;
  out.loop_residual = worst;
  double fd = opt.fd_step;
  out.F = [phi, a, base_point, panels, fd, d](const Vec& x) {
    double acc = a;
    Vec p = base_point;
    for (int c = 0; c < d; ++c) {
      double lo = p[c], hi = x[c];
      if (lo != hi) {
        Vec dir = Vec::Unit(d, c);
        Vec from = p;
        acc += gauss_segment(
            [&](double t) {
              Vec q = from;
              q[c] = t;
              return pullback_defect(phi, q, dir, fd);
            },
            lo, hi, panels);
      }
      p[c] = x[c];
    }
    return acc;
  };
  return out;
}

Mat pansu_derivative_closed_form(const HMap& map, const HPoint& p,
                                 double fd_step) {
  const int d = static_cast<int>(p.x.size());
  Mat out = Mat::Zero(d + 1, d + 1);

  Mat dfdx(d, d);
  for (int c = 0; c < d; ++c) {
    HPoint hi = p, lo = p;
    hi.x[c] += fd_step;
    lo.x[c] -= fd_step;
    dfdx.col(c) = (map.f(hi) - map.f(lo)) / (2.0 * fd_step);
  }
  Vec dfdbar(d);
  double dbardbar;
  {
    HPoint hi = p, lo = p;
    hi.xbar += fd_step;
    lo.xbar -= fd_step;
    dfdbar = (map.f(hi) - map.f(lo)) / (2.0 * fd_step);
    dbardbar = (map.fbar(hi) - map.fbar(lo)) / (2.0 * fd_step);
  }

  out.topLeftCorner(d, d) = dfdx + 0.5 * dfdbar * apply_j(p.x).transpose();
  out(d, d) = dbardbar - 0.5 * omega(map.f(p), dfdbar);
  return out;
}

Mat pansu_derivative_closed_form(const LiftedMap& map, const HPoint& p,
                                 double fd_step) {
  HMap hm;
  hm.f = [&map](const HPoint& q) { return map.phi(q.x); };
  hm.fbar = [&map](const HPoint& q) { return q.xbar + map.F(q.x); };
  return pansu_derivative_closed_form(hm, p, fd_step);
}

// ---------------------------------------------------------------------------
// Hamiltonians

HamiltonianSpec quadratic_bump(double r0, double R, double amplitude) {
  if (!(0.0 < r0 && r0 < R)) throw InputError("need 0 < r0 < R");
  double denom = R * R - r0 * r0;
  // seventh-order smoothstep: C^3 at both seams, which the Gauss panels of
  // the lift reconstruction rely on
  auto chi = [=](double r2) {
    double u = (R * R - r2) / denom;
    if (u >= 1.0) return 1.0;
    if (u <= 0.0) return 0.0;
    return u * u * u * u * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
  };
  auto dchi = [=](double r2) {  // d chi / d r^2
    double u = (R * R - r2) / denom;
    if (u >= 1.0 || u <= 0.0) return 0.0;
    double um = 1.0 - u;
    double ds = 140.0 * u * u * u * um * um * um;
    return ds * (-1.0 / denom);
  };
  HamiltonianSpec spec;
  spec.support_radius = R;
  spec.H = [=](double, const Vec& x) {
    double r2 = x.squaredNorm();
    return amplitude * 0.5 * r2 * chi(r2);
  };
  spec.grad = [=](double, const Vec& x) {
    double r2 = x.squaredNorm();
    double coeff = amplitude * (chi(r2) + r2 * dchi(r2));
    return Vec(coeff * x);
  };
  return spec;
}

HamiltonianSpec poly_bump(double R, double amplitude, const Vec& center) {
  HamiltonianSpec spec;
  spec.support_radius = R + center.norm();
  spec.H = [=](double, const Vec& x) {
    double u = 1.0 - (x - center).squaredNorm() / (R * R);
    return u > 0.0 ? amplitude * u * u * u : 0.0;
  };
  spec.grad = [=](double, const Vec& x) {
    double u = 1.0 - (x - center).squaredNorm() / (R * R);
    if (u <= 0.0) return Vec(Vec::Zero(x.size()));
    return Vec(amplitude * 3.0 * u * u * (-2.0 / (R * R)) * (x - center));
  };
  return spec;
}

HamiltonianSpec scale_hamiltonian(const HamiltonianSpec& h, double s) {
  HamiltonianSpec out = h;
  auto H = h.H;
  auto g = h.grad;
  out.H = [H, s](double t, const Vec& x) { return s * H(t, x); };
  out.grad = [g, s](double t, const Vec& x) { return Vec(s * g(t, x)); };
  return out;
}

HamiltonianSpec sum_hamiltonian(const HamiltonianSpec& a,
                                const HamiltonianSpec& b) {
  HamiltonianSpec out;
  out.support_radius = std::max(a.support_radius, b.support_radius);
  auto Ha = a.H, Hb = b.H;
  auto ga = a.grad, gb = b.grad;
  out.H = [Ha, Hb](double t, const Vec& x) { return Ha(t, x) + Hb(t, x); };
  out.grad = [ga, gb](double t, const Vec& x) {
    return Vec(ga(t, x) + gb(t, x));
  };
  return out;
}

HamiltonianSpec modulate_hamiltonian(const HamiltonianSpec& h,
                                     const std::function<double(double)>& m) {
  HamiltonianSpec out = h;
  auto H = h.H;
  auto g = h.grad;
  out.H = [H, m](double t, const Vec& x) { return m(t) * H(t, x); };
  out.grad = [g, m](double t, const Vec& x) { return Vec(m(t) * g(t, x)); };
  return out;
}

// ---------------------------------------------------------------------------
// Flows

namespace {

struct ExtState {
  Vec x;
  double action = 0.0;
  double lift = 0.0;
};

ExtState ext_derivative(const HamiltonianSpec& spec, double t,
                        const ExtState& s) {
  Vec v = apply_j(spec.grad(t, s.x));
  double half_omega = 0.5 * omega(s.x, v);
  return {v, half_omega + spec.H(t, s.x), half_omega};
}

ExtState ext_axpy(const ExtState& s, double h, const ExtState& d) {
  return {s.x + h * d.x, s.action + h * d.action, s.lift + h * d.lift};
}

}  // namespace

FlowLiftData flow_lift_data(const HamiltonianSpec& spec, const Vec& x0,
                            double T, int steps) {
  if (steps < 1) throw InputError("steps must be >= 1");
  FlowLiftData out;
  ExtState s{x0, 0.0, 0.0};
  double h = T / steps;
  out.times.push_back(0.0);
  out.states.push_back(s.x);
  out.action.push_back(0.0);
  out.lift.push_back(0.0);
  for (int k = 0; k < steps; ++k) {
    double t = k * h;
    ExtState k1 = ext_derivative(spec, t, s);
    ExtState k2 = ext_derivative(spec, t + h / 2, ext_axpy(s, h / 2, k1));
    ExtState k3 = ext_derivative(spec, t + h / 2, ext_axpy(s, h / 2, k2));
    ExtState k4 = ext_derivative(spec, t + h, ext_axpy(s, h, k3));
    s.x += h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    s.action +=
        h / 6.0 * (k1.action + 2 * k2.action + 2 * k3.action + k4.action);
    s.lift += h / 6.0 * (k1.lift + 2 * k2.lift + 2 * k3.lift + k4.lift);
    if (!s.x.allFinite())
      throw NumericalDiagnostic("flow integration blew up", t);
    out.times.push_back((k + 1) * h);
    out.states.push_back(s.x);
    out.action.push_back(s.action);
    out.lift.push_back(s.lift);
  }
  return out;
}

FlowResult hamiltonian_flow(const HamiltonianSpec& spec, const Vec& x0,
                            double T, int steps) {
  FlowLiftData data = flow_lift_data(spec, x0, T, steps);
  FlowResult out;
  out.trajectory.times = data.times;
  out.trajectory.points = data.states;
  double h0 = spec.H(0.0, x0);
  for (std::size_t k = 0; k < data.times.size(); ++k)
    out.energy_drift = std::max(
        out.energy_drift, std::abs(spec.H(data.times[k], data.states[k]) - h0));
  return out;
}

PlanarMap flow_time_map(const HamiltonianSpec& spec, double t, int steps) {
  return [spec, t, steps](const Vec& x) {
    if (t == 0.0) return x;
    return flow_lift_data(spec, x, t, steps).states.back();
  };
}

VerticalFlowResult vertical_flow_check(const HamiltonianSpec& spec,
                                       const Vec& x0, double T, int steps,
                                       int grid) {
  if (grid < 5) throw InputError("vertical check grid must be >= 5");
  const int d = static_cast<int>(x0.size());
  const Vec base = Vec::Zero(d);
  const double fd = 1e-5;
  const int panels = 24;

  // quadrature nodes of the axis path base -> x0
  struct Node {
    Vec p;
    int axis;
    double weight;  // GL weight times half panel width (signed)
  };
  std::vector<Node> nodes;
  {
    Vec p = base;
    for (int c = 0; c < d; ++c) {
      double lo = p[c], hi = x0[c];
      if (lo != hi) {
        double h = (hi - lo) / panels;
        for (int pan = 0; pan < panels; ++pan) {
          double mid = lo + (pan + 0.5) * h;
          double half = 0.5 * h;
          for (int i = 0; i < 4; ++i)
            for (double sgn : {1.0, -1.0}) {
              Vec q = p;
              q[c] = mid + sgn * half * kGlNode[i];
              nodes.push_back({q, c, kGlWeight[i] * half});
            }
        }
      }
      p[c] = x0[c];
    }
  }

  // trajectories of every node and its FD offsets, sampled on the grid
  const int per_node = 2 * d + 1;
  std::vector<std::vector<Vec>> traj(nodes.size() * per_node);
  auto record = [&](const Vec& start, std::size_t slot) {
    FlowLiftData data = flow_lift_data(spec, start, T, steps);
    std::vector<Vec>& states = traj[slot];
    states.reserve(grid + 1);
    for (int g = 0; g <= grid; ++g) {
      double frac = static_cast<double>(g) / grid;
      std::size_t idx = static_cast<std::size_t>(
          std::llround(frac * steps));
      states.push_back(data.states[idx]);
    }
  };
  parallel_for(nodes.size(), [&](std::size_t i) {
    record(nodes[i].p, i * per_node);
    for (int c = 0; c < d; ++c) {
      Vec hi = nodes[i].p, lo = nodes[i].p;
      hi[c] += fd;
      lo[c] -= fd;
      record(hi, i * per_node + 1 + 2 * c);
      record(lo, i * per_node + 2 + 2 * c);
    }
  });

  // horizontal lift of the trajectory of x0 (trapezoid route)
  FlowLiftData own = flow_lift_data(spec, x0, T, steps);
  SampledCurve planar;
  planar.times = own.times;
  planar.points = own.states;
  SampledCurve lifted = lift_planar_curve(planar, 0.0);

  VerticalFlowResult out;
  std::vector<double> vert(grid + 1);
  for (int g = 0; g <= grid; ++g) {
    double F = 0.0;  // slice-lift primitive F_t(x0) by line integration
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Vec& pt = traj[i * per_node][g];
      int c = nodes[i].axis;
      const Vec& hi = traj[i * per_node + 1 + 2 * c][g];
      const Vec& lo = traj[i * per_node + 2 + 2 * c][g];
      Vec dphi = (hi - lo) / (2.0 * fd);
      F += nodes[i].weight *
           (0.5 * omega(pt, dphi) - 0.5 * omega(nodes[i].p, Vec::Unit(d, c)));
    }
    double frac = static_cast<double>(g) / grid;
    std::size_t idx = static_cast<std::size_t>(std::llround(frac * steps));
    vert[g] = lifted.points[idx][d] - F;
    out.times.push_back(T * frac);
  }
  out.vertical = vert;

  double dt = T / grid;
  for (int g = 1; g < grid; ++g) {
    double rate = (vert[g + 1] - vert[g - 1]) / (2.0 * dt);
    std::size_t idx = static_cast<std::size_t>(
        std::llround(static_cast<double>(g) / grid * steps));
    double h_here = spec.H(out.times[g], own.states[idx]);
    out.max_residual = std::max(out.max_residual, std::abs(rate + h_here));
  }
  return out;
}

double hofer_length(const std::function<double(double, const Vec&)>& H,
                    const std::vector<Vec>& domain_samples, int t_subdiv) {
  if (domain_samples.empty()) throw InputError("empty domain sample");
  auto sup_at = [&](double t) {
    double m = 0.0;
    for (const auto& x : domain_samples) m = std::max(m, std::abs(H(t, x)));
    return m;
  };
  double total = 0.0;
  double h = 1.0 / t_subdiv;
  for (int k = 0; k < t_subdiv; ++k)
    total += 0.5 * h * (sup_at(k * h) + sup_at((k + 1) * h));
  return total;
}

// ---------------------------------------------------------------------------
// Width and heights

RegionInvariants invariants_width_heights(const FiberRegion& region,
                                          const std::vector<int>& orders,
                                          std::size_t n_samples,
                                          std::uint64_t seed) {
  const int d = static_cast<int>(region.base_lo.size());
  double boxvol = 1.0;
  for (int c = 0; c < d; ++c) boxvol *= region.base_hi[c] - region.base_lo[c];

  Rng rng(seed);
  double sum_in = 0.0, sum_len = 0.0, sum_len2 = 0.0;
  std::vector<double> sum_root(orders.size(), 0.0),
      sum_root2(orders.size(), 0.0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Vec x(d);
    for (int c = 0; c < d; ++c)
      x[c] = rng.uniform(region.base_lo[c], region.base_hi[c]);
    if (!region.in_base(x)) continue;
    sum_in += 1.0;
    double len = 0.0;
    for (auto [lo, hi] : region.fiber(x)) len += std::max(0.0, hi - lo);
    sum_len += len;
    sum_len2 += len * len;
    for (std::size_t o = 0; o < orders.size(); ++o) {
      double r = std::pow(len, 1.0 / orders[o]);
      sum_root[o] += r;
      sum_root2[o] += r * r;
    }
  }
  if (sum_in == 0.0)
    throw NumericalDiagnostic("projected volume vanished on the sample", 0.0);

  const double n = static_cast<double>(n_samples);
  double p = sum_in / n;
  double base_vol = p * boxvol;
  double mean_len = sum_len / n;
  RegionInvariants out;
  out.base_volume = base_vol;
  out.volume = mean_len * boxvol;
  out.width = mean_len / p;

  double var_len = (sum_len2 / n - mean_len * mean_len) / n;
  double var_p = p * (1.0 - p) / n;
  out.width_se =
      out.width * std::sqrt(var_len / (mean_len * mean_len) + var_p / (p * p));

  for (std::size_t o = 0; o < orders.size(); ++o) {
    int i = orders[o];
    double mean_r = sum_root[o] / n;
    // (h_i)^i = boxvol * mean_r / base_vol^i
    double hi_pow = boxvol * mean_r / std::pow(base_vol, i);
    double h = std::pow(hi_pow, 1.0 / i);
    double var_r = (sum_root2[o] / n - mean_r * mean_r) / n;
    double rel_h = (1.0 / i) * std::sqrt(var_r / (mean_r * mean_r) +
                                         static_cast<double>(i) * i * var_p /
                                             (p * p));
    out.heights.push_back(h);
    out.heights_se.push_back(h * rel_h);
  }
  return out;
}

FiberRegion map_region(const FiberRegion& region, const LiftedMap& map,
                       const PlanarMap& phi_inverse, const Vec& new_lo,
                       const Vec& new_hi) {
  FiberRegion out;
  out.base_lo = new_lo;
  out.base_hi = new_hi;
  auto in_base = region.in_base;
  out.in_base = [phi_inverse, in_base](const Vec& y) {
    return in_base(phi_inverse(y));
  };
  auto fiber = region.fiber;
  auto F = map.F;
  out.fiber = [phi_inverse, fiber, F](const Vec& y) {
    Vec x = phi_inverse(y);
    double shift = F(x);
    std::vector<std::pair<double, double>> intervals = fiber(x);
    for (auto& iv : intervals) {
      iv.first += shift;
      iv.second += shift;
    }
    return intervals;
  };
  return out;
}

// ---------------------------------------------------------------------------
// Hofer lower bound

std::pair<double, double> cc_ball_volume_ratio(int n,
                                               const HoferOptions& opt) {
  static std::mutex mu;
  static std::map<std::pair<int, std::uint64_t>, std::pair<double, double>>
      cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({n, opt.seed});
    if (it != cache.end()) return it->second;
  }

  CarnotStructure cs = make_carnot(heisenberg_spec(n));
  const double box_r = 2.0;  // empirical Ball-Box constants sit near 1
  // Lebesgue volume of Box(r): 2n-ball of radius r times the 2 r^2 fiber
  double ball2n = std::pow(M_PI, n) / std::tgamma(n + 1.0);
  double boxvol = ball2n * std::pow(box_r, 2 * n) * 2.0 * box_r * box_r;

  Rng rng(opt.seed + 99);
  std::vector<Vec> pts;
  pts.reserve(opt.ball_samples);
  auto sampler = unit_box_sampler(cs);
  for (std::size_t s = 0; s < opt.ball_samples; ++s)
    pts.push_back(cs.dilate(box_r, sampler(rng)));

  std::vector<char> inside(pts.size(), 0);
  parallel_for(pts.size(), [&](std::size_t i) {
    CcOptions copt;
    copt.budget = opt.cc_budget;
    copt.starts = 2;
    copt.seed = opt.seed + i;
    auto d = cc_distance_upper(cs, Vec::Zero(cs.dim()), pts[i], copt);
    inside[i] = d.certified && d.upper_bound <= 1.0 ? 1 : 0;
  });
  double count = 0.0;
  for (char c : inside) count += c;
  double frac = count / static_cast<double>(pts.size());
  double vol_cc = frac * boxvol;
  double se_frac =
      std::sqrt(frac * (1.0 - frac) / static_cast<double>(pts.size()));
  double ratio = vol_cc / ball2n;
  double se = se_frac * boxvol / ball2n;

  std::lock_guard<std::mutex> lock(mu);
  cache[{n, opt.seed}] = {ratio, se};
  return {ratio, se};
}

HoferCheckResult hofer_lower_bound_check(const HamiltonianSpec& spec,
                                         const HoferOptions& opt) {
  const int d = 2;  // H(1)
  if (spec.support_radius > opt.A_radius)
    throw InputError("Hamiltonian support exceeds the region A");

  // The flow must stay inside A: probe a ring of starting points.
  for (int k = 0; k < 16; ++k) {
    double th = 2.0 * M_PI * k / 16.0;
    Vec x0(d);
    x0 << 0.9 * spec.support_radius * std::cos(th),
        0.9 * spec.support_radius * std::sin(th);
    FlowLiftData data = flow_lift_data(spec, x0, 1.0, opt.flow_steps);
    for (const auto& s : data.states)
      if (s.norm() > opt.A_radius)
        throw InputError("flow escapes the region A");
  }

  // V(phi, A) = min_a int_A |F + a|, F the action primitive of the time-1
  // map; the minimum sits at the weighted median of -F.
  std::vector<double> fvals;
  std::vector<double> weights;
  double cell = (2.0 * opt.A_radius) / opt.grid;
  for (int ix = 0; ix < opt.grid; ++ix)
    for (int iy = 0; iy < opt.grid; ++iy) {
      Vec x(d);
      x << -opt.A_radius + (ix + 0.5) * cell, -opt.A_radius + (iy + 0.5) * cell;
      if (x.norm() > opt.A_radius) continue;
      FlowLiftData data = flow_lift_data(spec, x, 1.0, opt.flow_steps);
      fvals.push_back(data.action.back());
      weights.push_back(cell * cell);
    }
  std::vector<std::size_t> order(fvals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return -fvals[a] < -fvals[b];
  });
  double total_w = 0.0;
  for (double w : weights) total_w += w;
  double acc = 0.0, a_star = 0.0;
  for (std::size_t i : order) {
    acc += weights[i];
    if (acc >= 0.5 * total_w) {
      a_star = -fvals[i];
      break;
    }
  }
  double V = 0.0;
  for (std::size_t i = 0; i < fvals.size(); ++i)
    V += weights[i] * std::abs(fvals[i] + a_star);

  // rhs: vol(A) times the Hofer length proxy of the generating flow
  std::vector<Vec> domain;
  Rng rng(opt.seed + 7);
  while (domain.size() < 600) {
    Vec x = rng.uniform_vector(d, -opt.A_radius, opt.A_radius);
    if (x.norm() <= opt.A_radius) domain.push_back(x);
  }
  double hl = hofer_length(spec.H, domain, opt.t_subdiv);
  double volA = M_PI * opt.A_radius * opt.A_radius;

  auto [C, C_se] = cc_ball_volume_ratio(1, opt);

  HoferCheckResult out;
  out.V = V;
  out.C = C;
  out.C_se = C_se;
  out.lhs = C * V;
  out.rhs = volA * hl;
  out.pass = out.lhs <= out.rhs + opt.tolerance;
  return out;
}

RigidityProbe horizontal_slicewise_probe(const HamiltonianSpec& spec,
                                         const std::vector<Vec>& samples,
                                         double T, int steps) {
  RigidityProbe out;
  for (const auto& x0 : samples) {
    FlowLiftData data = flow_lift_data(spec, x0, T, steps);
    for (std::size_t k = 0; k < data.times.size(); ++k) {
      double t = data.times[k];
      const Vec& x = data.states[k];
      // the slice-lift vertical rate differs from the horizontal-lift rate
      // exactly by H along the trajectory
      out.horizontality_defect =
          std::max(out.horizontality_defect, std::abs(spec.H(t, x)));
      out.max_speed = std::max(out.max_speed, apply_j(spec.grad(t, x)).norm());
    }
  }
  return out;
}

}  // namespace carnot
