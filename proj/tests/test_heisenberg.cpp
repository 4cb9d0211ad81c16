#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "carnot/algebra.hpp"
#include "carnot/group.hpp"
#include "carnot/heisenberg.hpp"
#include "carnot/rng.hpp"

using namespace carnot;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

SampledCurve planar_circle(double r, int n, double turns = 1.0) {
  SampledCurve c;
  for (int k = 0; k <= n; ++k) {
    double t = turns * 2.0 * M_PI * k / n;
    c.times.push_back(static_cast<double>(k) / n);
    c.points.push_back(v2(r * std::cos(t), r * std::sin(t)));
  }
  return c;
}

}  // namespace

TEST_CASE("h(1) product, inverse, dilation") {
  HPoint p{v2(1, 0), 0.0}, q{v2(0, 1), 0.0};
  HPoint pq = h_mul(p, q);
  CHECK(pq.x[0] == 1.0);
  CHECK(pq.x[1] == 1.0);
  CHECK(pq.xbar == doctest::Approx(0.5));

  HPoint r{v2(0.3, -0.7), 0.4};
  HPoint ri = h_inv(r);
  CHECK(h_mul(r, ri).x.norm() == 0.0);
  CHECK(h_mul(r, ri).xbar == 0.0);

  HPoint d = h_dilate(2.0, HPoint{v2(1, 1), 1.0});
  CHECK(d.x[0] == 2.0);
  CHECK(d.x[1] == 2.0);
  CHECK(d.xbar == 4.0);
}

TEST_CASE("group axioms on random triples") {
  Rng rng(1);
  for (int rep = 0; rep < 1000; ++rep) {
    HPoint a{rng.uniform_vector(2, -2, 2), rng.uniform(-2, 2)};
    HPoint b{rng.uniform_vector(2, -2, 2), rng.uniform(-2, 2)};
    HPoint c{rng.uniform_vector(2, -2, 2), rng.uniform(-2, 2)};
    HPoint l = h_mul(h_mul(a, b), c);
    HPoint r = h_mul(a, h_mul(b, c));
    CHECK((l.x - r.x).norm() + std::abs(l.xbar - r.xbar) <= 1e-12);
  }
}

TEST_CASE("h_mul agrees with the group_ops product on h(1)") {
  auto cs = make_carnot(heisenberg_spec(1));
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    Vec a = rng.uniform_vector(3, -2, 2), b = rng.uniform_vector(3, -2, 2);
    Vec via_bch = bch_multiply(cs, a, b);
    HPoint ha{a.head(2), a[2]}, hb{b.head(2), b[2]};
    HPoint via_h = h_mul(ha, hb);
    CHECK((via_bch.head(2) - via_h.x).norm() <= 1e-12);
    CHECK(std::abs(via_bch[2] - via_h.xbar) <= 1e-12);
  }
}

TEST_CASE("planar lifts: lines, circles, constants") {
  // straight line through 0: omega(tv, v) = 0, the lift stays level
  SampledCurve line;
  for (int k = 0; k <= 100; ++k) {
    line.times.push_back(k / 100.0);
    line.points.push_back(v2(0.3 * k / 100.0, -0.5 * k / 100.0));
  }
  auto lifted = lift_planar_curve(line, 0.7);
  for (const auto& p : lifted.points) CHECK(p[2] == doctest::Approx(0.7));

  // one positive turn of the unit circle advances xbar by its area
  auto circle = planar_circle(1.0, 4000);
  auto lc = lift_planar_curve(circle, 0.0);
  CHECK(lc.points.back()[2] == doctest::Approx(M_PI).epsilon(1e-6));

  SampledCurve constant;
  for (int k = 0; k <= 10; ++k) {
    constant.times.push_back(k / 10.0);
    constant.points.push_back(v2(0.4, 0.2));
  }
  auto lc2 = lift_planar_curve(constant, -0.3);
  for (const auto& p : lc2.points) CHECK(p[2] == doctest::Approx(-0.3));
}

TEST_CASE("horizontality of planar lifts improves at second order") {
  // The discrete lift is horizontal step by step, so probe the analytic
  // lift of the circle (whose vertical part is the swept area) against the
  // sampled-increment criterion.
  auto cs = make_carnot(heisenberg_spec(1));
  auto defect_at = [&](int n) {
    SampledCurve c;
    const double r = 1.0;
    for (int k = 0; k <= n; ++k) {
      double t = static_cast<double>(k) / n;
      double th = 2.0 * M_PI * t;
      Vec p(3);
      p << r * std::cos(th), r * std::sin(th), 0.5 * r * r * th;
      c.times.push_back(t);
      c.points.push_back(p);
    }
    return horizontality_defect(cs, c);
  };
  double coarse = defect_at(200), fine = defect_at(400);
  CHECK(fine <= 0.3 * coarse);  // order >= 2 would give 0.25
}

TEST_CASE("lift of the identity and of linear symplectic maps") {
  PlanarMap id = [](const Vec& x) { return x; };
  auto lid = lift_symplectomorphism(id, 0.3, v2(0, 0));
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Vec x = rng.uniform_vector(2, -2, 2);
    CHECK(lid.F(x) == doctest::Approx(0.3).epsilon(1e-9));
  }

  Mat a(2, 2);
  a << 2.0, 0.3, 1.0, 0.65;  // det = 1
  REQUIRE(a.determinant() == doctest::Approx(1.0));
  PlanarMap lin = [a](const Vec& x) { return Vec(a * x); };
  auto llin = lift_symplectomorphism(lin, -0.2, v2(0, 0));
  for (int rep = 0; rep < 20; ++rep) {
    Vec x = rng.uniform_vector(2, -2, 2);
    CHECK(llin.F(x) == doctest::Approx(-0.2).epsilon(1e-8));
  }
}

TEST_CASE("non-symplectic maps are rejected with the loop residual") {
  PlanarMap stretch = [](const Vec& x) { return Vec(v2(2.0 * x[0], x[1])); };
  try {
    lift_symplectomorphism(stretch, 0.0, v2(0, 0));
    FAIL("expected NotSymplectic");
  } catch (const NotSymplectic& e) {
    // loop integral over a rectangle is (det - 1) * area
    CHECK(e.residual == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("closed-form Pansu derivative of lifted maps") {
  PlanarMap id = [](const Vec& x) { return x; };
  auto lid = lift_symplectomorphism(id, 0.0, v2(0, 0));
  Mat d = pansu_derivative_closed_form(lid, HPoint{v2(0.4, -0.2), 0.3});
  CHECK((d - Mat::Identity(3, 3)).norm() <= 1e-8);

  Mat a(2, 2);
  a << 1.0, 0.8, 0.0, 1.0;
  PlanarMap shear = [a](const Vec& x) { return Vec(a * x); };
  auto lsh = lift_symplectomorphism(shear, 0.0, v2(0, 0));
  Mat ds = pansu_derivative_closed_form(lsh, HPoint{v2(0.3, 0.5), -0.1});
  Mat want = Mat::Zero(3, 3);
  want.topLeftCorner(2, 2) = a;
  want(2, 2) = 1.0;
  CHECK((ds - want).norm() <= 1e-7);

  // rotation-flow lift at an arbitrary point: diag(R_theta, 1)
  double th = 0.9;
  Mat rot(2, 2);
  rot << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
  PlanarMap rmap = [rot](const Vec& x) { return Vec(rot * x); };
  auto lrot = lift_symplectomorphism(rmap, 0.0, v2(0, 0));
  Mat dr = pansu_derivative_closed_form(lrot, HPoint{v2(-0.6, 0.2), 0.4});
  Mat wantr = Mat::Zero(3, 3);
  wantr.topLeftCorner(2, 2) = rot;
  wantr(2, 2) = 1.0;
  CHECK((dr - wantr).norm() <= 1e-7);
}

TEST_CASE("lifted maps preserve volume: |det - 1| <= 1e-6 at 100 points") {
  PlanarMap nonlinear = [](const Vec& x) {
    return Vec(v2(x[0], x[1] + 0.4 * std::sin(x[0])));
  };
  auto lift = lift_symplectomorphism(nonlinear, 0.0, v2(0, 0));
  Rng rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    HPoint p{rng.uniform_vector(2, -1.5, 1.5), rng.uniform(-1, 1)};
    Mat d = pansu_derivative_closed_form(lift, p);
    CHECK(std::abs(d.determinant() - 1.0) <= 1e-6);
  }
}

TEST_CASE("lift functoriality up to a vertical constant") {
  Mat a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  PlanarMap f = [a](const Vec& x) { return Vec(a * x); };
  PlanarMap g = [](const Vec& x) {
    return Vec(v2(x[0], x[1] + 0.3 * std::sin(x[0])));
  };
  PlanarMap fg = [&](const Vec& x) { return f(g(x)); };

  auto lf = lift_symplectomorphism(f, 0.15, v2(0, 0));
  auto lg = lift_symplectomorphism(g, -0.4, v2(0, 0));
  auto lfg = lift_symplectomorphism(fg, 0.0, v2(0, 0));

  Rng rng(5);
  double first_gap = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    HPoint p{rng.uniform_vector(2, -1.2, 1.2), rng.uniform(-1, 1)};
    HPoint composed = lf.apply(lg.apply(p));
    HPoint direct = lfg.apply(p);
    CHECK((composed.x - direct.x).norm() <= 1e-9);
    double gap = composed.xbar - direct.xbar;
    if (rep == 0) first_gap = gap;
    CHECK(gap == doctest::Approx(first_gap).epsilon(1e-6));
  }
}

TEST_CASE("hamiltonian flows: constants, rotations, translations") {
  // H = 0
  HamiltonianSpec zero;
  zero.support_radius = 1.0;
  zero.H = [](double, const Vec&) { return 0.0; };
  zero.grad = [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  auto still = hamiltonian_flow(zero, v2(0.5, 0.2), 1.0, 100);
  for (const auto& p : still.trajectory.points)
    CHECK((p - v2(0.5, 0.2)).norm() == 0.0);

  // H = |x|^2/2 inside the flat region of the bump: rotation, period 2 pi
  auto bump = quadratic_bump(1.0, 2.0);
  Vec x0 = v2(0.5, 0.0);
  auto flow = hamiltonian_flow(bump, x0, 2.0 * M_PI, 6283);
  CHECK((flow.trajectory.points.back() - x0).norm() <= 1e-8);
  CHECK(flow.energy_drift <= 1e-8);
  for (const auto& p : flow.trajectory.points)
    CHECK(p.norm() == doctest::Approx(0.5).epsilon(1e-8));

  // linear H: uniform translation at velocity J p
  HamiltonianSpec lin;
  lin.support_radius = 100.0;
  Vec pvec = v2(0.3, -0.2);
  lin.H = [pvec](double, const Vec& x) { return pvec.dot(x); };
  lin.grad = [pvec](double, const Vec&) { return pvec; };
  auto tr = hamiltonian_flow(lin, v2(0, 0), 1.0, 100);
  CHECK((tr.trajectory.points.back() - apply_j(pvec)).norm() <= 1e-12);
}

TEST_CASE("flow time maps are symplectic to finite-difference accuracy") {
  auto bump = quadratic_bump(0.8, 1.6);
  PlanarMap time1 = flow_time_map(bump, 1.0, 400);
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    Vec x = rng.uniform_vector(2, -1.4, 1.4);
    Mat d = planar_jacobian(time1, x, 1e-5);
    Mat J(2, 2);
    J << 0, 1, -1, 0;
    CHECK((d.transpose() * J * d - J).norm() <= 1e-6);
  }
}

TEST_CASE("action primitive matches the line-integral lift of the time-1 map") {
  auto bump = quadratic_bump(0.7, 1.4, 0.8);
  PlanarMap time1 = flow_time_map(bump, 1.0, 800);
  LiftOptions opt;
  opt.quad_points = 320;  // the integrand is only C^3 across the bump seams
  auto lifted = lift_symplectomorphism(time1, 0.0, v2(0, 0), opt);
  for (Vec x : {v2(0.3, 0.1), v2(-0.4, 0.5), v2(0.9, -0.9), v2(1.5, 0.2)}) {
    double via_lift = lifted.F(x);
    double via_action = flow_lift_data(bump, x, 1.0, 800).action.back();
    CHECK(std::abs(via_lift - via_action) <=
          1e-5 * std::max(1.0, std::abs(via_action)));
  }
}

TEST_CASE("vertical flow check: zero Hamiltonian and points outside support") {
  HamiltonianSpec zero;
  zero.support_radius = 1.0;
  zero.H = [](double, const Vec&) { return 0.0; };
  zero.grad = [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  auto res = vertical_flow_check(zero, v2(0.4, 0.1), 1.0, 200, 20);
  CHECK(res.max_residual <= 1e-12);

  // Outside the support the point does not move and the vertical part is
  // constant up to the line-integral quadrature bias across the bump seams.
  auto bump = quadratic_bump(0.5, 1.0);
  auto outside = vertical_flow_check(bump, v2(1.8, 0.9), 1.0, 400, 20);
  CHECK(outside.max_residual <= 5e-4);
  for (double v : outside.vertical) CHECK(std::abs(v) <= 2e-4);
}

TEST_CASE("vertical flow check: quadratic bump inside the support") {
  auto bump = quadratic_bump(1.0, 2.0);
  auto res = vertical_flow_check(bump, v2(0.5, 0.0), 1.0, 1000, 50);
  CHECK(res.max_residual <= 1e-4);
  // the vertical part accumulates -H t with H = |x0|^2/2 conserved
  double H0 = 0.5 * 0.25;
  CHECK(res.vertical.back() == doctest::Approx(-H0).epsilon(1e-4));
}

TEST_CASE("hofer length of simple Hamiltonians") {
  std::vector<Vec> samples;
  Rng rng(7);
  for (int k = 0; k < 500; ++k) samples.push_back(rng.uniform_vector(2, -1, 1));

  CHECK(hofer_length([](double, const Vec&) { return 0.0; }, samples) == 0.0);
  CHECK(hofer_length([](double, const Vec&) { return -0.7; }, samples) ==
        doctest::Approx(0.7));

  auto bump = quadratic_bump(0.9, 1.0);
  double hl = hofer_length(bump.H, samples);
  // max of |x|^2/2 over the flat region: (0.81)/2 at |x| = 0.9
  CHECK(hl >= 0.9 * 0.405);
  CHECK(hl <= 0.5 + 1e-9);
}

TEST_CASE("width and heights of a cylinder, and their invariance") {
  FiberRegion cyl;
  cyl.base_lo = v2(-1, -1);
  cyl.base_hi = v2(1, 1);
  cyl.in_base = [](const Vec& x) { return x.norm() <= 1.0; };
  const double h = 0.8;
  cyl.fiber = [h](const Vec&) {
    return std::vector<std::pair<double, double>>{{0.0, h}};
  };
  auto inv = invariants_width_heights(cyl, {1, 2}, 40000, 0);
  CHECK(inv.width == doctest::Approx(h).epsilon(1e-12));  // fibers constant
  CHECK(inv.base_volume == doctest::Approx(M_PI).epsilon(0.05));

  // vertical shift: identical invariants
  FiberRegion shifted = cyl;
  shifted.fiber = [h](const Vec&) {
    return std::vector<std::pair<double, double>>{{2.0, 2.0 + h}};
  };
  auto inv2 = invariants_width_heights(shifted, {1, 2}, 40000, 0);
  CHECK(inv2.width == doctest::Approx(inv.width).epsilon(1e-12));
  CHECK(inv2.heights[0] == doctest::Approx(inv.heights[0]).epsilon(1e-12));

  // nonlinear lifted shear: equality within 3 combined standard errors
  PlanarMap shear = [](const Vec& x) {
    return Vec(v2(x[0], x[1] + 0.3 * std::sin(x[0])));
  };
  PlanarMap shear_inv = [](const Vec& y) {
    return Vec(v2(y[0], y[1] - 0.3 * std::sin(y[0])));
  };
  auto lift = lift_symplectomorphism(shear, 0.0, v2(0, 0));
  auto image = map_region(cyl, lift, shear_inv, v2(-1, -1.4), v2(1, 1.4));
  auto inv3 = invariants_width_heights(image, {1, 2}, 40000, 1);
  CHECK(std::abs(inv3.width - inv.width) <=
        3.0 * std::sqrt(inv3.width_se * inv3.width_se +
                        inv.width_se * inv.width_se) +
            1e-9);
  for (int o = 0; o < 2; ++o)
    CHECK(std::abs(inv3.heights[o] - inv.heights[o]) <=
          3.0 * std::sqrt(inv3.heights_se[o] * inv3.heights_se[o] +
                          inv.heights_se[o] * inv.heights_se[o]) +
              1e-9);
}

TEST_CASE("rigidity probe: zero flows are flat, real flows are not") {
  HamiltonianSpec zero;
  zero.support_radius = 1.0;
  zero.H = [](double, const Vec&) { return 0.0; };
  zero.grad = [](double, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  std::vector<Vec> samples = {v2(0.2, 0.1), v2(-0.5, 0.4)};
  auto flat = horizontal_slicewise_probe(zero, samples, 1.0, 100);
  CHECK(flat.horizontality_defect == 0.0);
  CHECK(flat.max_speed == 0.0);

  auto bump = quadratic_bump(0.8, 1.6);
  auto moving = horizontal_slicewise_probe(bump, samples, 1.0, 100);
  CHECK(moving.horizontality_defect > 1e-3);
  CHECK(moving.max_speed > 1e-2);
}
