#ifndef CARNOT_ALGEBRA_HPP
#define CARNOT_ALGEBRA_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "carnot/errors.hpp"

namespace carnot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One sparse structure constant: [e_i, e_j] += c * e_k.
struct BracketEntry {
  int i = 0, j = 0, k = 0;
  double c = 0.0;
};

/// Sparse antisymmetric bilinear bracket on R^dim. Entries are kept in
/// canonical form (i < j, merged); the antisymmetric completion is implicit.
class LieBracket {
 public:
  LieBracket() = default;
  LieBracket(int dim, std::vector<BracketEntry> entries);

  int dim() const { return dim_; }
  const std::vector<BracketEntry>& entries() const { return entries_; }

  Vec apply(const Vec& x, const Vec& y) const;
  /// Matrix of ad_x = [x, .].
  Mat ad(const Vec& x) const;
  /// i-fold nested bracket [x,[x,...,[x,y]...]]; depth 0 returns y.
  Vec nested(const Vec& x, const Vec& y, int depth) const;

  double max_coefficient() const;
  /// max over basis triples i<j<k of || [[ei,ej],ek] + cyclic ||.
  double jacobi_residual() const;

 private:
  int dim_ = 0;
  std::vector<BracketEntry> entries_;
};

/// Raw input (g, D): dimension, sparse structure constants, generating set.
struct LieAlgebraSpec {
  int dim = 0;
  std::vector<BracketEntry> structure;  // as given; i>j entries allowed
  std::vector<int> generators;
  std::string name;

  /// Canonicalized bracket (throws InputError on out-of-range indices).
  LieBracket bracket() const;
};

struct ValidationReport {
  double antisymmetry_residual = 0.0;
  double jacobi_residual = 0.0;
  double scale = 1.0;  // residuals are compared against 1e-10 * scale
  bool passed = false;
};

/// Checks antisymmetry of the stored entries and the Jacobi identity.
ValidationReport validate_algebra(const LieAlgebraSpec& spec);

/// V^1 subset V^2 subset ... V^m = g generated by D.
struct Filtration {
  std::vector<Mat> layers;  // orthonormal column bases of V^1..V^m
  int step = 0;
  std::vector<int> dims() const;
};

/// V^1 = span(D), V^{i+1} = V^i + [D, V^i]; throws NotBracketGenerating
/// when the fixed point has dimension < dim(g).
Filtration build_filtration(const LieAlgebraSpec& spec);

/// Adapted basis: every vector is a multibracket of generators, picked in
/// lexicographic word order; layer_of is the word length.
struct AdaptedBasis {
  Mat change_of_basis;                  // columns in input coordinates
  Mat inverse;
  std::vector<int> layer_of;
  std::vector<std::vector<int>> words;  // generator indices, outermost first
};

AdaptedBasis build_graded_basis(const LieAlgebraSpec& spec,
                                const Filtration& filt);

/// Graded nilpotent structure carried in the adapted basis, together with
/// the original bracket expressed in the same basis. Dilations are diagonal
/// here: coordinate of grade i scales by eps^i.
class CarnotStructure {
 public:
  CarnotStructure(std::string name, AdaptedBasis basis, LieBracket original,
                  LieBracket nilpotent);

  int dim() const { return nilpotent_.dim(); }
  int step() const { return step_; }
  int homogeneous_dimension() const { return homogeneous_dimension_; }
  const std::string& name() const { return name_; }
  const std::vector<int>& layer_of() const { return basis_.layer_of; }
  std::vector<int> layer_dims() const;
  const AdaptedBasis& basis() const { return basis_; }
  const LieBracket& nilpotent() const { return nilpotent_; }
  const LieBracket& original() const { return original_; }

  Vec dilate(double eps, const Vec& x) const;
  Vec dilate_inv(double eps, const Vec& x) const;
  /// Euclidean norm of the grade-i block of x (i in 1..step).
  double layer_norm(const Vec& x, int i) const;
  Vec layer_component(const Vec& x, int i) const;

 private:
  std::string name_;
  AdaptedBasis basis_;
  LieBracket original_;
  LieBracket nilpotent_;
  int step_ = 0;
  int homogeneous_dimension_ = 0;
};

/// Keeps C_ijk with l(i)+l(j) = l(k), drops the grade-deficient part, and
/// throws InputError when a constant with l(i)+l(j) < l(k) is present (a
/// genuine filtration cannot produce one).
CarnotStructure nilpotentize(const LieAlgebraSpec& spec,
                             const AdaptedBasis& basis);

/// validate -> filtration -> graded basis -> nilpotentize.
CarnotStructure make_carnot(const LieAlgebraSpec& spec);

struct LimitBracketResult {
  Vec value;
  double order = 0.0;
  bool converged = true;
  bool exact = false;
  std::vector<double> diffs;
};

/// delta_eps^{-1} [delta_eps x, delta_eps y]_G extrapolated along the
/// ladder; an independent oracle for the closed-form nilpotent bracket.
LimitBracketResult nilpotent_bracket_limit(const CarnotStructure& cs,
                                           const Vec& x, const Vec& y,
                                           const std::vector<double>& eps_ladder);

struct MagicIdentityResult {
  /// || [[X,U]_G,V]_N + [U,[X,V]_G]_N - [X,[U,V]_N]_G ||
  double identity_residual = 0.0;
  /// max over the eps grid of the dilation-compatibility defect
  /// || (d_e^{-1}[X, d_e Y]_N - d_e^{-1}[X, d_e Y]_G) - ([X,Y]_N - [X,Y]_G) ||
  double dilation_residual = 0.0;
};

MagicIdentityResult magic_identity_residual(
    const CarnotStructure& cs, const Vec& X, const Vec& U, const Vec& V,
    const std::vector<double>& eps_grid = {0.5, 0.25, 0.125});

/// Matrix of the derivative of left translation at the origin,
/// sum_{i>=0} ad_X^i / (i+1)!. The series is cut at the nilpotency degree
/// of ad_X; for a non-nilpotent bracket a truncation order is required.
Mat left_translation_derivative(const LieBracket& bracket, const Vec& X,
                                std::optional<int> truncation = std::nullopt);
Mat left_translation_derivative(const CarnotStructure& cs, const Vec& X);

// Builtin algebras used across tests and the CLI.
LieAlgebraSpec heisenberg_spec(int n);
LieAlgebraSpec sussmann_spec(double alpha = 1.0, double beta = 1.0);
LieAlgebraSpec free_step2_spec(int generators);
LieAlgebraSpec abelian_spec(int dim, int n_generators);
/// Strictly upper triangular (n x n) matrices; step n-1.
LieAlgebraSpec upper_triangular_spec(int n);

}  // namespace carnot

#endif
