#include "carnot/algebra.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "carnot/richardson.hpp"

namespace carnot {

namespace {

constexpr double kRankTol = 1e-10;  // singular-value threshold, relative

void check_entry_indices(const BracketEntry& e, int dim) {
  if (e.i < 0 || e.i >= dim || e.j < 0 || e.j >= dim || e.k < 0 || e.k >= dim)
    throw InputError("structure constant entry (" + std::to_string(e.i) + "," +
                     std::to_string(e.j) + "," + std::to_string(e.k) +
                     ") out of range for dim " + std::to_string(dim));
}

/// Orthonormal basis of the column span; rank cut at kRankTol * sigma_max.
Mat orthonormal_span(const Mat& columns) {
  if (columns.cols() == 0) return Mat(columns.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(columns, Eigen::ComputeThinU);
  double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > kRankTol * smax) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

// ---------------------------------------------------------------------------
// LieBracket

LieBracket::LieBracket(int dim, std::vector<BracketEntry> entries) : dim_(dim) {
  // Canonicalize to i<j; reversed entries contribute with flipped sign,
  // duplicated consistent statements are averaged out.
  std::map<std::tuple<int, int, int>, std::pair<double, double>> acc;
  for (const auto& e : entries) {
    check_entry_indices(e, dim);
    if (e.i == e.j) continue;  // diagonal carries no bracket content
    if (e.i < e.j)
      acc[{e.i, e.j, e.k}].first += e.c;
    else
      acc[{e.j, e.i, e.k}].second += e.c;
  }
  for (const auto& [key, cs] : acc) {
    auto [lo, hi, k] = key;
    bool has_fwd = cs.first != 0.0;
    bool has_rev = cs.second != 0.0;
    double c;
    if (has_fwd && has_rev)
      c = 0.5 * (cs.first - cs.second);
    else if (has_rev)
      c = -cs.second;
    else
      c = cs.first;
    if (c != 0.0) entries_.push_back({lo, hi, k, c});
  }
}

Vec LieBracket::apply(const Vec& x, const Vec& y) const {
  Vec out = Vec::Zero(dim_);
  for (const auto& e : entries_)
    out[e.k] += e.c * (x[e.i] * y[e.j] - x[e.j] * y[e.i]);
  return out;
}

Mat LieBracket::ad(const Vec& x) const {
  Mat m = Mat::Zero(dim_, dim_);
  for (const auto& e : entries_) {
    m(e.k, e.j) += e.c * x[e.i];
    m(e.k, e.i) -= e.c * x[e.j];
  }
  return m;
}

Vec LieBracket::nested(const Vec& x, const Vec& y, int depth) const {
  Vec v = y;
  for (int d = 0; d < depth; ++d) v = apply(x, v);
  return v;
}

double LieBracket::max_coefficient() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, std::abs(e.c));
  return m;
}

double LieBracket::jacobi_residual() const {
  double worst = 0.0;
  Vec ei = Vec::Zero(dim_), ej = Vec::Zero(dim_), ek = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j)
      for (int k = j + 1; k < dim_; ++k) {
        ei.setZero(); ej.setZero(); ek.setZero();
        ei[i] = 1.0; ej[j] = 1.0; ek[k] = 1.0;
        Vec r = apply(apply(ei, ej), ek) + apply(apply(ej, ek), ei) +
                apply(apply(ek, ei), ej);
        worst = std::max(worst, r.norm());
      }
  return worst;
}

// ---------------------------------------------------------------------------
// Spec validation

LieBracket LieAlgebraSpec::bracket() const {
  if (dim < 1) throw InputError("algebra dimension must be >= 1");
  return LieBracket(dim, structure);
}

ValidationReport validate_algebra(const LieAlgebraSpec& spec) {
  if (spec.dim < 1) throw InputError("algebra dimension must be >= 1");
  std::set<int> gen_seen;
  for (int g : spec.generators) {
    if (g < 0 || g >= spec.dim)
      throw InputError("generator index " + std::to_string(g) +
                       " out of range");
    if (!gen_seen.insert(g).second)
      throw InputError("generator index " + std::to_string(g) + " repeated");
  }

  ValidationReport rep;
  double cmax = 0.0;
  std::map<std::tuple<int, int, int>, std::pair<bool, double>> fwd, rev;
  for (const auto& e : spec.structure) {
    check_entry_indices(e, spec.dim);
    cmax = std::max(cmax, std::abs(e.c));
    if (e.i == e.j) {
      rep.antisymmetry_residual =
          std::max(rep.antisymmetry_residual, std::abs(e.c));
      continue;
    }
    auto key = e.i < e.j ? std::make_tuple(e.i, e.j, e.k)
                         : std::make_tuple(e.j, e.i, e.k);
    auto& slot = e.i < e.j ? fwd[key] : rev[key];
    slot.first = true;
    slot.second += e.c;
  }
  for (const auto& [key, f] : fwd) {
    auto it = rev.find(key);
    if (it != rev.end() && it->second.first)
      rep.antisymmetry_residual = std::max(
          rep.antisymmetry_residual, std::abs(f.second + it->second.second));
  }

  rep.jacobi_residual = spec.bracket().jacobi_residual();
  rep.scale = std::max(1.0, cmax * cmax);
  bool antisym_ok =
      rep.antisymmetry_residual <= 1e-10 * std::max(1.0, cmax);
  bool jacobi_ok = rep.jacobi_residual <= 1e-10 * rep.scale;
  rep.passed = antisym_ok && jacobi_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Filtration

std::vector<int> Filtration::dims() const {
  std::vector<int> d;
  d.reserve(layers.size());
  for (const auto& m : layers) d.push_back(static_cast<int>(m.cols()));
  return d;
}

Filtration build_filtration(const LieAlgebraSpec& spec) {
  LieBracket br = spec.bracket();
  if (spec.generators.empty())
    throw InputError("generating set is empty");
  const int dim = spec.dim;

  Mat v1(dim, static_cast<int>(spec.generators.size()));
  v1.setZero();
  for (std::size_t c = 0; c < spec.generators.size(); ++c)
    v1(spec.generators[c], static_cast<int>(c)) = 1.0;
  v1 = orthonormal_span(v1);

  Filtration filt;
  filt.layers.push_back(v1);
  Mat cur = v1;
  for (int iter = 0; iter < dim + 1; ++iter) {
    if (cur.cols() == dim) break;
    Mat stacked(dim, cur.cols() + v1.cols() * cur.cols());
    stacked.leftCols(cur.cols()) = cur;
    int col = static_cast<int>(cur.cols());
    for (int g = 0; g < v1.cols(); ++g)
      for (int c = 0; c < cur.cols(); ++c)
        stacked.col(col++) = br.apply(v1.col(g), cur.col(c));
    Mat next = orthonormal_span(stacked);
    if (next.cols() == cur.cols()) {
      throw NotBracketGenerating(static_cast<int>(cur.cols()), dim);
    }
    filt.layers.push_back(next);
    cur = next;
  }
  if (cur.cols() != dim)
    throw NotBracketGenerating(static_cast<int>(cur.cols()), dim);
  filt.step = static_cast<int>(filt.layers.size());
  return filt;
}

// ---------------------------------------------------------------------------
// Adapted basis

namespace {

/// Bracket(w) = [X_{w0}, [X_{w1}, [..., X_{w_{s-1}}]...]] for unit vectors.
Vec bracket_of_word(const LieBracket& br, const std::vector<int>& word) {
  const int dim = br.dim();
  Vec v = Vec::Zero(dim);
  v[word.back()] = 1.0;
  for (int t = static_cast<int>(word.size()) - 2; t >= 0; --t) {
    Vec e = Vec::Zero(dim);
    e[word[t]] = 1.0;
    v = br.apply(e, v);
  }
  return v;
}

/// Enumerates generator tuples of a given length in lexicographic order
/// (alphabet order = order of the generator list).
struct WordEnumerator {
  const std::vector<int>& alphabet;
  std::vector<int> positions;  // indices into alphabet
  bool done = false;

  WordEnumerator(const std::vector<int>& a, int length)
      : alphabet(a), positions(length, 0) {}

  std::vector<int> word() const {
    std::vector<int> w(positions.size());
    for (std::size_t t = 0; t < positions.size(); ++t)
      w[t] = alphabet[positions[t]];
    return w;
  }

  void advance() {
    for (int t = static_cast<int>(positions.size()) - 1; t >= 0; --t) {
      if (++positions[t] < static_cast<int>(alphabet.size())) return;
      positions[t] = 0;
    }
    done = true;
  }
};

}  // namespace

AdaptedBasis build_graded_basis(const LieAlgebraSpec& spec,
                                const Filtration& filt) {
  LieBracket br = spec.bracket();
  const int dim = spec.dim;
  const auto dims = filt.dims();

  AdaptedBasis out;
  out.change_of_basis.resize(dim, dim);
  Mat accepted(dim, 0);  // orthonormalized shadow of the accepted columns
  int n_accepted = 0;

  auto try_accept = [&](const Vec& v, int grade,
                        const std::vector<int>& word) -> bool {
    Vec residual = v;
    if (accepted.cols() > 0)
      residual -= accepted * (accepted.transpose() * v);
    if (residual.norm() <= kRankTol * std::max(1.0, v.norm())) return false;
    out.change_of_basis.col(n_accepted) = v;
    out.layer_of.push_back(grade);
    out.words.push_back(word);
    accepted.conservativeResize(dim, accepted.cols() + 1);
    accepted.col(accepted.cols() - 1) = residual.normalized();
    ++n_accepted;
    return true;
  };

  for (int s = 1; s <= filt.step && n_accepted < dim; ++s) {
    if (s > dim + 1)
      throw NumericalDiagnostic("adapted-basis word length exceeded dim+1",
                                static_cast<double>(s));
    int target = dims[s - 1];
    WordEnumerator en(spec.generators, s);
    while (!en.done && n_accepted < target) {
      std::vector<int> w = en.word();
      en.advance();
      Vec v = bracket_of_word(br, w);
      if (v.norm() <= kRankTol) continue;
      try_accept(v, s, w);
    }
    if (n_accepted < target)
      throw NumericalDiagnostic(
          "multibrackets of generators do not span layer " + std::to_string(s),
          static_cast<double>(target - n_accepted));
  }

  out.inverse = out.change_of_basis.fullPivLu().inverse();
  return out;
}

// ---------------------------------------------------------------------------
// CarnotStructure

CarnotStructure::CarnotStructure(std::string name, AdaptedBasis basis,
                                 LieBracket original, LieBracket nilpotent)
    : name_(std::move(name)),
      basis_(std::move(basis)),
      original_(std::move(original)),
      nilpotent_(std::move(nilpotent)) {
  step_ = 0;
  for (int l : basis_.layer_of) step_ = std::max(step_, l);
  homogeneous_dimension_ = 0;
  for (int l : basis_.layer_of) homogeneous_dimension_ += l;
}

std::vector<int> CarnotStructure::layer_dims() const {
  std::vector<int> d(step_, 0);
  for (int l : basis_.layer_of) ++d[l - 1];
  return d;
}

Vec CarnotStructure::dilate(double eps, const Vec& x) const {
  Vec out(x.size());
  for (int i = 0; i < x.size(); ++i)
    out[i] = std::pow(eps, basis_.layer_of[i]) * x[i];
  return out;
}

Vec CarnotStructure::dilate_inv(double eps, const Vec& x) const {
  return dilate(1.0 / eps, x);
}

double CarnotStructure::layer_norm(const Vec& x, int i) const {
  double s = 0.0;
  for (int c = 0; c < x.size(); ++c)
    if (basis_.layer_of[c] == i) s += x[c] * x[c];
  return std::sqrt(s);
}

Vec CarnotStructure::layer_component(const Vec& x, int i) const {
  Vec out = Vec::Zero(x.size());
  for (int c = 0; c < x.size(); ++c)
    if (basis_.layer_of[c] == i) out[c] = x[c];
  return out;
}

// ---------------------------------------------------------------------------
// Nilpotentisation

CarnotStructure nilpotentize(const LieAlgebraSpec& spec,
                             const AdaptedBasis& basis) {
  LieBracket input = spec.bracket();
  const int dim = spec.dim;
  const double scale = std::max(1.0, input.max_coefficient());
  const double noise = 1e-12 * scale;

  std::vector<BracketEntry> adapted, graded;
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      Vec w = input.apply(basis.change_of_basis.col(i),
                          basis.change_of_basis.col(j));
      Vec coeffs = basis.inverse * w;
      for (int k = 0; k < dim; ++k) {
        double c = coeffs[k];
        if (std::abs(c) <= noise) continue;
        int li = basis.layer_of[i], lj = basis.layer_of[j],
            lk = basis.layer_of[k];
        if (li + lj < lk)
          throw InputError(
              "structure constants violate the filtration grading at (" +
              std::to_string(i) + "," + std::to_string(j) + "," +
              std::to_string(k) + "); the adapted basis is inconsistent");
        adapted.push_back({i, j, k, c});
        if (li + lj == lk) graded.push_back({i, j, k, c});
      }
    }

  CarnotStructure cs(spec.name, basis, LieBracket(dim, adapted),
                     LieBracket(dim, graded));

  double jac = cs.nilpotent().jacobi_residual();
  if (jac > 1e-10 * std::max(1.0, std::pow(scale, 2)))
    throw NumericalDiagnostic(
        "nilpotentized bracket fails the Jacobi identity", jac);

  // Generation: V_{i+1} = [V_1, V_i]_N, checked by rank.
  auto dims = cs.layer_dims();
  for (int i = 1; i < cs.step(); ++i) {
    Mat prod(dim, 0);
    for (int a = 0; a < dim; ++a) {
      if (basis.layer_of[a] != 1) continue;
      for (int b = 0; b < dim; ++b) {
        if (basis.layer_of[b] != i) continue;
        Vec ea = Vec::Zero(dim), eb = Vec::Zero(dim);
        ea[a] = 1.0;
        eb[b] = 1.0;
        Vec v = cs.nilpotent().apply(ea, eb);
        prod.conservativeResize(dim, prod.cols() + 1);
        prod.col(prod.cols() - 1) = v;
      }
    }
    Mat span = orthonormal_span(prod);
    if (span.cols() != dims[i])
      throw NumericalDiagnostic("graded bracket does not generate layer " +
                                    std::to_string(i + 1),
                                static_cast<double>(dims[i] - span.cols()));
  }
  return cs;
}

CarnotStructure make_carnot(const LieAlgebraSpec& spec) {
  ValidationReport rep = validate_algebra(spec);
  if (!rep.passed)
    throw InputError("algebra '" + spec.name +
                     "' failed validation (antisymmetry residual " +
                     std::to_string(rep.antisymmetry_residual) +
                     ", Jacobi residual " +
                     std::to_string(rep.jacobi_residual) + ")");
  Filtration filt = build_filtration(spec);
  AdaptedBasis basis = build_graded_basis(spec, filt);
  return nilpotentize(spec, basis);
}

// ---------------------------------------------------------------------------
// Limits and identities

LimitBracketResult nilpotent_bracket_limit(
    const CarnotStructure& cs, const Vec& x, const Vec& y,
    const std::vector<double>& eps_ladder) {
  if (eps_ladder.size() < 3)
    throw InputError("eps ladder needs at least 3 entries");
  for (std::size_t k = 1; k < eps_ladder.size(); ++k)
    if (eps_ladder[k] >= eps_ladder[k - 1])
      throw InputError("eps ladder must be strictly decreasing");

  std::vector<Vec> values;
  values.reserve(eps_ladder.size());
  for (double eps : eps_ladder)
    values.push_back(cs.dilate_inv(
        eps, cs.original().apply(cs.dilate(eps, x), cs.dilate(eps, y))));

  double scale = std::max({1.0, x.norm() * y.norm(),
                           cs.original().max_coefficient()});
  ExtrapolationResult ex = richardson_extrapolate(values, eps_ladder, scale);
  return {ex.value, ex.order, ex.converged, ex.exact, ex.diffs};
}

MagicIdentityResult magic_identity_residual(const CarnotStructure& cs,
                                            const Vec& X, const Vec& U,
                                            const Vec& V,
                                            const std::vector<double>& eps_grid) {
  const LieBracket& g = cs.original();
  const LieBracket& n = cs.nilpotent();
  MagicIdentityResult r;
  Vec lhs = n.apply(g.apply(X, U), V) + n.apply(U, g.apply(X, V));
  Vec rhs = g.apply(X, n.apply(U, V));
  r.identity_residual = (lhs - rhs).norm();

  Vec base = n.apply(X, U) - g.apply(X, U);
  for (double eps : eps_grid) {
    Vec du = cs.dilate(eps, U);
    Vec scaled =
        cs.dilate_inv(eps, n.apply(X, du)) - cs.dilate_inv(eps, g.apply(X, du));
    r.dilation_residual = std::max(r.dilation_residual, (scaled - base).norm());
  }
  return r;
}

Mat left_translation_derivative(const LieBracket& bracket, const Vec& X,
                                std::optional<int> truncation) {
  const int dim = bracket.dim();
  Mat ad = bracket.ad(X);
  int terms;
  if (truncation.has_value()) {
    terms = *truncation;
  } else {
    // series must terminate: find the nilpotency degree of ad_X
    Mat p = ad;
    terms = 0;
    double scale = std::max(1.0, ad.norm());
    while (p.norm() > 1e-13 * scale && terms < dim + 1) {
      p = ad * p;
      ++terms;
    }
    if (p.norm() > 1e-13 * scale)
      throw InputError(
          "ad_X is not nilpotent; a truncation order is required");
  }
  Mat out = Mat::Identity(dim, dim);
  Mat p = Mat::Identity(dim, dim);
  double fact = 1.0;
  for (int i = 1; i <= terms; ++i) {
    p = ad * p;
    fact *= static_cast<double>(i + 1);
    out += p / fact;
  }
  return out;
}

Mat left_translation_derivative(const CarnotStructure& cs, const Vec& X) {
  return left_translation_derivative(cs.nilpotent(), X, cs.step() - 1);
}

// ---------------------------------------------------------------------------
// Builtin algebras

LieAlgebraSpec heisenberg_spec(int n) {
  LieAlgebraSpec s;
  s.name = "h" + std::to_string(n);
  s.dim = 2 * n + 1;
  for (int i = 0; i < n; ++i) s.structure.push_back({i, n + i, 2 * n, 1.0});
  for (int i = 0; i < 2 * n; ++i) s.generators.push_back(i);
  return s;
}

LieAlgebraSpec sussmann_spec(double alpha, double beta) {
  // [X1,X2]=X3, [X1,X3]=X4, [X2,X3]=a X1 + b X2, [X2,X4]=b X3, [X3,X4]=b X4;
  // Jacobi holds for any a, b. Zero-based indices shift everything by one.
  LieAlgebraSpec s;
  s.name = "sussmann";
  s.dim = 4;
  s.structure = {{0, 1, 2, 1.0},   {0, 2, 3, 1.0},  {1, 2, 0, alpha},
                 {1, 2, 1, beta},  {1, 3, 2, beta}, {2, 3, 3, beta}};
  s.generators = {0, 1};
  return s;
}

LieAlgebraSpec free_step2_spec(int generators) {
  LieAlgebraSpec s;
  s.name = "free-step2-" + std::to_string(generators) + "gen";
  int p = generators;
  s.dim = p + p * (p - 1) / 2;
  int k = p;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) s.structure.push_back({i, j, k++, 1.0});
  for (int i = 0; i < p; ++i) s.generators.push_back(i);
  return s;
}

LieAlgebraSpec abelian_spec(int dim, int n_generators) {
  LieAlgebraSpec s;
  s.name = "abelian-r" + std::to_string(dim);
  s.dim = dim;
  for (int i = 0; i < n_generators; ++i) s.generators.push_back(i);
  return s;
}

LieAlgebraSpec upper_triangular_spec(int n) {
  LieAlgebraSpec s;
  s.name = "ut" + std::to_string(n);
  std::map<std::pair<int, int>, int> index;
  int idx = 0;
  for (int d = 1; d < n; ++d)          // enumerate by superdiagonal
    for (int i = 0; i + d < n; ++i) index[{i, i + d}] = idx++;
  s.dim = idx;
  // [E_ab, E_cd] = delta_bc E_ad - delta_da E_cb
  for (const auto& [ab, ia] : index)
    for (const auto& [cd, ic] : index) {
      if (ia >= ic) continue;
      auto [a, b] = ab;
      auto [c, d] = cd;
      if (b == c) s.structure.push_back({ia, ic, index[{a, d}], 1.0});
      if (d == a) s.structure.push_back({ia, ic, index[{c, b}], -1.0});
    }
  for (int i = 0; i + 1 < n; ++i) s.generators.push_back(index[{i, i + 1}]);
  return s;
}

}  // namespace carnot
