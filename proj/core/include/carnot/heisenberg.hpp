#ifndef CARNOT_HEISENBERG_HPP
#define CARNOT_HEISENBERG_HPP

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "carnot/algebra.hpp"
#include "carnot/pansu.hpp"

namespace carnot {

// Conventions, fixed once for the whole module: omega(x,y) = x^T J y with
// J = [[0, I_n], [-I_n, 0]]; the primitive is lambda_x(v) = omega(x,v)/2
// (so d lambda = omega and pullbacks of linear symplectic maps drop out);
// Hamiltonian fields solve xdot = J grad H, i.e. omega(xdot, v) = dH v.

/// Point of H(n) = R^{2n} x R.
struct HPoint {
  Vec x;
  double xbar = 0.0;
  int n() const { return static_cast<int>(x.size()) / 2; }
};

double omega(const Vec& x, const Vec& y);
Vec apply_j(const Vec& x);  // J x

HPoint h_mul(const HPoint& p, const HPoint& q);
HPoint h_inv(const HPoint& p);
HPoint h_dilate(double eps, const HPoint& p);
HPoint h_bracket(const HPoint& p, const HPoint& q);

/// Horizontal lift of a planar curve: xbar(t) = xbar0 + int omega(c, cdot)/2,
/// trapezoid in the increments (exact for the linear interpolant).
SampledCurve lift_planar_curve(const SampledCurve& planar, double xbar0);

// --- Lifts of symplectomorphisms --------------------------------------------

using PlanarMap = std::function<Vec(const Vec&)>;

struct LiftOptions {
  double loop_tol = 1e-6;
  int quad_points = 64;     // Gauss-Legendre nodes per path segment
  double fd_step = 1e-5;
  std::vector<double> loop_sizes = {0.5, 1.0};
};

/// Volume-preserving lift (phi(x), xbar + F(x)) with F(base_point) = a and
/// dF the pullback defect of the primitive.
struct LiftedMap {
  PlanarMap phi;
  double a = 0.0;
  Vec base_point;
  double loop_residual = 0.0;
  std::function<double(const Vec&)> F;

  HPoint apply(const HPoint& p) const { return {phi(p.x), p.xbar + F(p.x)}; }
};

/// Central-difference Jacobian of a planar map.
Mat planar_jacobian(const PlanarMap& phi, const Vec& x, double fd_step = 1e-5);

/// F is reconstructed by line integration of phi^* lambda - lambda along an
/// axis-by-axis path from base_point; the loop-integral certificate is the
/// symplecticity check and failing it throws NotSymplectic.
LiftedMap lift_symplectomorphism(const PlanarMap& phi, double a,
                                 const Vec& base_point,
                                 const LiftOptions& opt = {});

/// The (2n+1)-square matrix of the Pansu derivative of a smooth map of
/// H(n), assembled from classical partials by central differences.
struct HMap {
  std::function<Vec(const HPoint&)> f;
  std::function<double(const HPoint&)> fbar;
};
Mat pansu_derivative_closed_form(const HMap& map, const HPoint& p,
                                 double fd_step = 1e-5);
Mat pansu_derivative_closed_form(const LiftedMap& map, const HPoint& p,
                                 double fd_step = 1e-5);

// --- Hamiltonian flows -------------------------------------------------------

struct HamiltonianSpec {
  std::function<double(double, const Vec&)> H;
  std::function<Vec(double, const Vec&)> grad;  // spatial gradient
  double support_radius = 0.0;
};

/// amplitude * (1/2)|x|^2 inside radius r0, smoothly cut off to 0 at R (C^2).
HamiltonianSpec quadratic_bump(double r0, double R, double amplitude = 1.0);
/// amplitude * (1 - |x-c|^2/R^2)^3 inside the disk of radius R around c.
HamiltonianSpec poly_bump(double R, double amplitude, const Vec& center);
HamiltonianSpec scale_hamiltonian(const HamiltonianSpec& h, double s);
HamiltonianSpec sum_hamiltonian(const HamiltonianSpec& a,
                                const HamiltonianSpec& b);
/// Time-modulated amplitude: H(t,x) = m(t) * h(t,x).
HamiltonianSpec modulate_hamiltonian(const HamiltonianSpec& h,
                                     const std::function<double(double)>& m);

struct FlowResult {
  SampledCurve trajectory;   // planar, times in [0, T]
  double energy_drift = 0.0; // max |H(x_t) - H(x_0)| (autonomous H)
};

/// Fixed-step RK4 for xdot = J grad H; throws NumericalDiagnostic carrying
/// the last valid time on blowup.
FlowResult hamiltonian_flow(const HamiltonianSpec& spec, const Vec& x0,
                            double T, int steps);

/// Time-t flow map as a planar map (integrates from 0 each call).
PlanarMap flow_time_map(const HamiltonianSpec& spec, double t, int steps);

/// Action primitive of the time-t map along the trajectory of x0:
/// F_t(x0) = int_0^t [ omega(phi_s, phidot_s)/2 + H(s, phi_s) ] ds.
/// Matches the line-integral reconstruction of lift_symplectomorphism.
struct FlowLiftData {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<double> action;     // F_t(x0)
  std::vector<double> lift;       // vertical part of the horizontal lift
};
FlowLiftData flow_lift_data(const HamiltonianSpec& spec, const Vec& x0,
                            double T, int steps);

struct VerticalFlowResult {
  double max_residual = 0.0;
  std::vector<double> times;
  std::vector<double> vertical;   // vertical part of phi^v_t(x0, 0)
};

/// Hamilton's equation in H(n): composes the inverse slice lift with the
/// horizontal flow and compares the vertical rate against the Hamiltonian
/// along the trajectory. The slice lifts are rebuilt by line integration,
/// so the check ties three independent quadrature routes together.
/// With this module's orientation conventions the vertical part satisfies
/// d/dt vert = -H(t, phi_t(x0)).
VerticalFlowResult vertical_flow_check(const HamiltonianSpec& spec,
                                       const Vec& x0, double T, int steps,
                                       int grid = 50);

/// Trapezoid in t of the max of |H(t, .)| over the sample points.
double hofer_length(const std::function<double(double, const Vec&)>& H,
                    const std::vector<Vec>& domain_samples, int t_subdiv = 64);

// --- Invariants of volume preserving maps ------------------------------------

/// Region of H(n) described by fibers over a base set.
struct FiberRegion {
  Vec base_lo, base_hi;  // bounding box of the projection
  std::function<bool(const Vec&)> in_base;
  // disjoint (lo, hi) intervals of the fiber over x
  std::function<std::vector<std::pair<double, double>>(const Vec&)> fiber;
};

struct RegionInvariants {
  double width = 0.0;
  double width_se = 0.0;
  std::vector<double> heights;
  std::vector<double> heights_se;
  double volume = 0.0;       // of the region in H(n)
  double base_volume = 0.0;  // of the projection
};

RegionInvariants invariants_width_heights(const FiberRegion& region,
                                          const std::vector<int>& orders,
                                          std::size_t n_samples,
                                          std::uint64_t seed);

/// Image of a fiber region under a lifted map, given the planar inverse.
FiberRegion map_region(const FiberRegion& region, const LiftedMap& map,
                       const PlanarMap& phi_inverse, const Vec& new_lo,
                       const Vec& new_hi);

// --- Hofer lower bound --------------------------------------------------------

struct HoferOptions {
  double A_radius = 2.0;      // disk region A (centered at 0)
  int grid = 80;              // quadrature grid per axis for V
  int flow_steps = 400;
  int t_subdiv = 32;
  std::size_t ball_samples = 4000;
  int cc_budget = 1200;
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
};

struct HoferCheckResult {
  double lhs = 0.0;  // C * V(phi, A)
  double rhs = 0.0;  // vol(A) * int ||H_t||_inf dt
  double V = 0.0;
  double C = 0.0;
  double C_se = 0.0;
  bool pass = false;
};

/// Monte Carlo estimate of vol(B^CC(0,1)) / vol(B^E(0,1)) on H(n); cached
/// per (n, seed) within the process.
std::pair<double, double> cc_ball_volume_ratio(int n,
                                               const HoferOptions& opt = {});

/// Checks C V(phi, A) <= vol(A) int ||H_t||_inf dt for the time-1 map of
/// the given compactly supported flow; throws InputError when the flow
/// leaves A.
HoferCheckResult hofer_lower_bound_check(const HamiltonianSpec& spec,
                                         const HoferOptions& opt = {});

/// Diagnostics for the slice-lift rigidity statement: a C^2 flow whose
/// slices are lifted maps and whose trajectories are horizontal must be
/// constant. Returns the horizontality defect max |H| along trajectories
/// and the max flow speed over the samples.
struct RigidityProbe {
  double horizontality_defect = 0.0;
  double max_speed = 0.0;
};
RigidityProbe horizontal_slicewise_probe(const HamiltonianSpec& spec,
                                         const std::vector<Vec>& samples,
                                         double T, int steps);

}  // namespace carnot

#endif
