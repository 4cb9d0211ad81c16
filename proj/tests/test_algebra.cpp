#include <doctest.h>

#include <Eigen/Dense>
#include <set>

#include "carnot/algebra.hpp"
#include "carnot/group.hpp"
#include "carnot/rng.hpp"
#include "oracles.hpp"

using namespace carnot;

TEST_CASE("validate_algebra accepts h(1) and the abelian algebra") {
  auto rep = validate_algebra(heisenberg_spec(1));
  CHECK(rep.passed);
  CHECK(rep.antisymmetry_residual == 0.0);
  CHECK(rep.jacobi_residual == 0.0);

  auto rep2 = validate_algebra(abelian_spec(3, 3));
  CHECK(rep2.passed);
  CHECK(rep2.jacobi_residual == 0.0);
}

TEST_CASE("validate_algebra flags a Jacobi-breaking corruption") {
  // Note [e1,e2]=e3 plus [e2,e3]=e1 happens to satisfy Jacobi (it is e(2)
  // in disguise; the cyclic sum collapses termwise). Checked by the raw
  // expansion oracle, then asserted, so the corruption below uses a target
  // that genuinely breaks the identity.
  LieAlgebraSpec still_valid = heisenberg_spec(1);
  still_valid.structure.push_back({1, 2, 0, 1.0});
  {
    Vec e0 = Vec::Unit(3, 0), e1 = Vec::Unit(3, 1), e2 = Vec::Unit(3, 2);
    Vec j = oracles::raw_jacobi(3, still_valid.structure, e0, e1, e2);
    CHECK(j.norm() == 0.0);
    CHECK(validate_algebra(still_valid).passed);
  }

  LieAlgebraSpec corrupted = heisenberg_spec(1);
  corrupted.structure.push_back({1, 2, 1, 1.0});  // [e2,e3] = e2 (1-based)
  Vec e0 = Vec::Unit(3, 0), e1 = Vec::Unit(3, 1), e2 = Vec::Unit(3, 2);
  Vec j = oracles::raw_jacobi(3, corrupted.structure, e0, e1, e2);
  REQUIRE(j.norm() > 0.5);
  auto rep = validate_algebra(corrupted);
  CHECK(rep.jacobi_residual == doctest::Approx(j.norm()).epsilon(1e-12));
  CHECK_FALSE(rep.passed);
}

TEST_CASE("validate_algebra rejects malformed entries") {
  LieAlgebraSpec bad = heisenberg_spec(1);
  bad.structure.push_back({0, 1, 7, 1.0});
  CHECK_THROWS_AS(validate_algebra(bad), InputError);

  LieAlgebraSpec dup = heisenberg_spec(1);
  dup.generators = {0, 0};
  CHECK_THROWS_AS(validate_algebra(dup), InputError);
}

TEST_CASE("antisymmetry residual sees inconsistent duplicated entries") {
  LieAlgebraSpec s = heisenberg_spec(1);
  s.structure.push_back({1, 0, 2, 1.0});  // should be -1 for consistency
  auto rep = validate_algebra(s);
  CHECK(rep.antisymmetry_residual == doctest::Approx(2.0));
  CHECK_FALSE(rep.passed);
}

TEST_CASE("filtration of h(1): m=2, dims (2,3)") {
  auto filt = build_filtration(heisenberg_spec(1));
  CHECK(filt.step == 2);
  CHECK(filt.dims() == std::vector<int>{2, 3});
}

TEST_CASE("filtration of the Sussmann algebra: m=3, dims (2,3,4)") {
  auto filt = build_filtration(sussmann_spec());
  CHECK(filt.step == 3);
  CHECK(filt.dims() == std::vector<int>{2, 3, 4});
}

TEST_CASE("abelian R^3 with D = span{e1} is not bracket generating") {
  try {
    build_filtration(abelian_spec(3, 1));
    FAIL("expected NotBracketGenerating");
  } catch (const NotBracketGenerating& e) {
    CHECK(e.stabilized_dim == 1);
  }
}

TEST_CASE("graded basis of h(1) and the free step-2 algebra") {
  {
    auto spec = heisenberg_spec(1);
    auto basis = build_graded_basis(spec, build_filtration(spec));
    CHECK(basis.layer_of == std::vector<int>{1, 1, 2});
    CHECK(basis.words[2] == std::vector<int>{0, 1});
  }
  {
    auto spec = free_step2_spec(3);
    auto basis = build_graded_basis(spec, build_filtration(spec));
    CHECK(basis.layer_of == std::vector<int>{1, 1, 1, 2, 2, 2});
  }
  {
    auto spec = sussmann_spec();
    auto basis = build_graded_basis(spec, build_filtration(spec));
    CHECK(basis.layer_of == std::vector<int>{1, 1, 2, 3});
  }
}

TEST_CASE("nilpotentisation of the Sussmann algebra matches the table") {
  auto cs = make_carnot(sussmann_spec());
  REQUIRE(cs.dim() == 4);
  CHECK(cs.step() == 3);
  CHECK(cs.homogeneous_dimension() == 7);

  // [X1,X2]_N = X3, [X1,X3]_N = X4, everything else zero.
  Mat expected = Mat::Zero(4, 4 * 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Vec b = cs.nilpotent().apply(Vec::Unit(4, i), Vec::Unit(4, j));
      Vec want = Vec::Zero(4);
      if (i == 0 && j == 1) want = Vec::Unit(4, 2);
      if (i == 1 && j == 0) want = -Vec::Unit(4, 2);
      if (i == 0 && j == 2) want = Vec::Unit(4, 3);
      if (i == 2 && j == 0) want = -Vec::Unit(4, 3);
      CHECK((b - want).norm() <= 1e-12);
    }
}

TEST_CASE("already-Carnot input keeps its constants") {
  auto cs = make_carnot(heisenberg_spec(1));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec g = cs.original().apply(Vec::Unit(3, i), Vec::Unit(3, j));
      Vec n = cs.nilpotent().apply(Vec::Unit(3, i), Vec::Unit(3, j));
      CHECK((g - n).norm() == 0.0);
    }
}

TEST_CASE("homogeneous dimension Q = 2n+2 for h(n)") {
  for (int n : {1, 2, 3})
    CHECK(make_carnot(heisenberg_spec(n)).homogeneous_dimension() == 2 * n + 2);
}

TEST_CASE("nilpotent bracket satisfies Jacobi and grading for all builtins") {
  for (const auto& spec :
       {heisenberg_spec(1), heisenberg_spec(2), sussmann_spec(),
        free_step2_spec(3), upper_triangular_spec(4)}) {
    auto cs = make_carnot(spec);
    CHECK(cs.nilpotent().jacobi_residual() <= 1e-10);

    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
      Vec x = rng.uniform_vector(cs.dim(), -1, 1);
      Vec y = rng.uniform_vector(cs.dim(), -1, 1);
      for (double eps : {0.5, 2.0, 10.0}) {
        Vec lhs = cs.nilpotent().apply(cs.dilate(eps, x), cs.dilate(eps, y));
        Vec rhs = cs.dilate(eps, cs.nilpotent().apply(x, y));
        double tol = 1e-12 * x.norm() * y.norm() *
                     std::pow(eps, 2.0 * cs.step());
        CHECK((lhs - rhs).norm() <= std::max(tol, 1e-12));
      }
    }
  }
}

TEST_CASE("grading violation in the input constants is reported") {
  // Hand the Sussmann spec a basis that is not adapted: swapping the roles
  // of a grade-1 and a grade-2 vector produces a constant with
  // l(i)+l(j) < l(k).
  auto spec = sussmann_spec();
  auto basis = build_graded_basis(spec, build_filtration(spec));
  std::swap(basis.layer_of[1], basis.layer_of[2]);
  CHECK_THROWS_AS(nilpotentize(spec, basis), InputError);
}

TEST_CASE("bracket limit is an oracle for the closed form") {
  std::vector<double> ladder = {0.2, 0.1, 0.05, 0.025, 0.0125};
  for (const auto& spec : {heisenberg_spec(1), heisenberg_spec(2),
                           sussmann_spec(), free_step2_spec(3)}) {
    auto cs = make_carnot(spec);
    Rng rng(11);
    for (int rep = 0; rep < 100; ++rep) {
      Vec x = rng.uniform_vector(cs.dim(), -1, 1);
      Vec y = rng.uniform_vector(cs.dim(), -1, 1);
      auto lim = nilpotent_bracket_limit(cs, x, y, ladder);
      Vec closed = cs.nilpotent().apply(x, y);
      CHECK(lim.converged);
      CHECK((lim.value - closed).norm() <= 1e-8);
    }
  }
}

TEST_CASE("bracket limit on Sussmann (X2, X3) goes to zero") {
  auto cs = make_carnot(sussmann_spec());
  std::vector<double> ladder = {0.2, 0.1, 0.05, 0.025};
  auto lim = nilpotent_bracket_limit(cs, Vec::Unit(4, 1), Vec::Unit(4, 2),
                                     ladder);
  CHECK(lim.value.norm() <= 1e-10);
  // Expanding delta_eps^{-1}[delta_eps X2, delta_eps X3]_G by hand gives
  // eps^2 (a X1 + b X2): the grade-deficient component sits two grades below
  // the (1,2) grade sum, so the decay order is exactly 2.
  CHECK(lim.order == doctest::Approx(2.0).epsilon(0.05));
  CHECK(lim.diffs.front() > 1e-3);
}

TEST_CASE("bracket limit is exact where the grading already matches") {
  auto cs = make_carnot(heisenberg_spec(1));
  std::vector<double> ladder = {0.4, 0.2, 0.1};
  auto lim = nilpotent_bracket_limit(cs, Vec::Unit(3, 0), Vec::Unit(3, 1),
                                     ladder);
  CHECK(lim.exact);
  CHECK((lim.value - Vec::Unit(3, 2)).norm() <= 1e-14);

  Vec zero = Vec::Zero(3);
  auto lim0 = nilpotent_bracket_limit(cs, Vec::Unit(3, 0), zero, ladder);
  CHECK(lim0.value.norm() == 0.0);
}

TEST_CASE("magic identity residual vanishes when both brackets coincide") {
  for (const auto& spec : {heisenberg_spec(1), free_step2_spec(3)}) {
    auto cs = make_carnot(spec);
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      Vec X = rng.uniform_vector(cs.dim(), -1, 1);
      Vec U = rng.uniform_vector(cs.dim(), -1, 1);
      Vec V = rng.uniform_vector(cs.dim(), -1, 1);
      auto r = magic_identity_residual(cs, X, U, V);
      CHECK(r.identity_residual <= 1e-12);
      CHECK(r.dilation_residual <= 1e-12);
    }
  }
}

TEST_CASE("magic identity on Sussmann agrees with the raw expansion") {
  auto cs = make_carnot(sussmann_spec());
  const auto& g = cs.original().entries();
  const auto& n = cs.nilpotent().entries();
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    Vec X = rng.uniform_vector(4, -1, 1);
    Vec U = rng.uniform_vector(4, -1, 1);
    Vec V = rng.uniform_vector(4, -1, 1);
    auto r = magic_identity_residual(cs, X, U, V);
    Vec lhs = oracles::raw_bracket(4, n, oracles::raw_bracket(4, g, X, U), V) +
              oracles::raw_bracket(4, n, U, oracles::raw_bracket(4, g, X, V));
    Vec rhs = oracles::raw_bracket(4, g, X, oracles::raw_bracket(4, n, U, V));
    CHECK(r.identity_residual ==
          doctest::Approx((lhs - rhs).norm()).epsilon(1e-10));
  }

  // The spec's example triple (X2, X1, X3): the expansion collapses, the
  // residual is 0. The cyclic rearrangement (X3, X1, X2) does not collapse.
  auto r1 = magic_identity_residual(cs, Vec::Unit(4, 1), Vec::Unit(4, 0),
                                    Vec::Unit(4, 2));
  CHECK(r1.identity_residual <= 1e-12);
  auto r2 = magic_identity_residual(cs, Vec::Unit(4, 2), Vec::Unit(4, 0),
                                    Vec::Unit(4, 1));
  CHECK(r2.identity_residual == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("left translation derivative: identity at 0, unipotent elsewhere") {
  auto cs = make_carnot(sussmann_spec());
  CHECK((left_translation_derivative(cs, Vec::Zero(4)) - Mat::Identity(4, 4))
            .norm() == 0.0);

  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Vec X = rng.uniform_vector(4, -2, 2);
    Mat d = left_translation_derivative(cs, X);
    CHECK(d.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("left translation derivative of h(1) along e1") {
  auto cs = make_carnot(heisenberg_spec(1));
  Mat d = left_translation_derivative(cs, Vec::Unit(3, 0));
  Mat want = Mat::Identity(3, 3);
  want(2, 1) = 0.5;  // e2 -> e2 + (1/2) e3
  CHECK((d - want).norm() <= 1e-14);
}

TEST_CASE("left translation derivative of the Sussmann N-bracket along X1") {
  auto cs = make_carnot(sussmann_spec());
  Mat d = left_translation_derivative(cs, Vec::Unit(4, 0));
  // oracle: I + ad/2 + ad^2/6 multiplied out by hand for ad_{X1}
  Mat ad = Mat::Zero(4, 4);
  ad(2, 1) = 1.0;  // [X1, X2] = X3
  ad(3, 2) = 1.0;  // [X1, X3] = X4
  Mat want = Mat::Identity(4, 4) + ad / 2.0 + ad * ad / 6.0;
  CHECK((d - want).norm() <= 1e-14);
  CHECK(want(3, 1) == doctest::Approx(1.0 / 6.0));

  CHECK_THROWS_AS(
      left_translation_derivative(cs.original(), Vec::Unit(4, 2), std::nullopt),
      InputError);  // ad_{X3} has [X3,X4]=X4: not nilpotent
}

TEST_CASE("validation is cheap and exact on the upper-triangular family") {
  for (int n : {3, 4, 5}) {
    auto rep = validate_algebra(upper_triangular_spec(n));
    CHECK(rep.passed);
  }
}
