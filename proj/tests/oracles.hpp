#ifndef CARNOT_TESTS_ORACLES_HPP
#define CARNOT_TESTS_ORACLES_HPP

// Test-only reference computations, kept independent of the library code
// paths they check.

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "carnot/algebra.hpp"

namespace oracles {

using carnot::Mat;
using carnot::Vec;

// --- Matrix route for nilpotent BCH -----------------------------------------
// Strictly upper triangular n x n matrices with the basis E_{ij} enumerated
// by superdiagonal (matching carnot::upper_triangular_spec). exp and log are
// finite series, so log(exp(A) exp(B)) is exact up to roundoff.

struct UpperTriangular {
  int n;
  std::vector<std::pair<int, int>> basis;  // (i, j) per coordinate
  std::map<std::pair<int, int>, int> index;

  explicit UpperTriangular(int n_) : n(n_) {
    for (int d = 1; d < n; ++d)
      for (int i = 0; i + d < n; ++i) {
        index[{i, i + d}] = static_cast<int>(basis.size());
        basis.push_back({i, i + d});
      }
  }

  Mat to_matrix(const Vec& x) const {
    Mat m = Mat::Zero(n, n);
    for (std::size_t c = 0; c < basis.size(); ++c)
      m(basis[c].first, basis[c].second) = x[static_cast<int>(c)];
    return m;
  }

  Vec to_coords(const Mat& m) const {
    Vec x(static_cast<int>(basis.size()));
    for (std::size_t c = 0; c < basis.size(); ++c)
      x[static_cast<int>(c)] = m(basis[c].first, basis[c].second);
    return x;
  }

  Mat expm(const Mat& a) const {
    Mat out = Mat::Identity(n, n);
    Mat p = Mat::Identity(n, n);
    double fact = 1.0;
    for (int k = 1; k < n; ++k) {
      p = p * a;
      fact *= k;
      out += p / fact;
    }
    return out;
  }

  Mat logm(const Mat& g) const {  // g = I + N with N strictly upper
    Mat nmat = g - Mat::Identity(n, n);
    Mat out = Mat::Zero(n, n);
    Mat p = Mat::Identity(n, n);
    for (int k = 1; k < n; ++k) {
      p = p * nmat;
      out += (k % 2 == 1 ? 1.0 : -1.0) * p / k;
    }
    return out;
  }

  /// log(exp(x) exp(y)) in coordinates.
  Vec bch(const Vec& x, const Vec& y) const {
    return to_coords(logm(expm(to_matrix(x)) * expm(to_matrix(y))));
  }
};

// --- Brute-force bracket evaluation ------------------------------------------
// A second, loop-level implementation of sparse bracket application used to
// cross-check identities; deliberately does not reuse carnot::LieBracket.

inline Vec raw_bracket(int dim, const std::vector<carnot::BracketEntry>& entries,
                       const Vec& x, const Vec& y) {
  Vec out = Vec::Zero(dim);
  for (const auto& e : entries) {
    out[e.k] += e.c * x[e.i] * y[e.j];
    out[e.k] -= e.c * x[e.j] * y[e.i];
  }
  return out;
}

/// Cyclic Jacobi sum [[x,y],z] + [[y,z],x] + [[z,x],y] via raw loops.
inline Vec raw_jacobi(int dim, const std::vector<carnot::BracketEntry>& entries,
                      const Vec& x, const Vec& y, const Vec& z) {
  return raw_bracket(dim, entries, raw_bracket(dim, entries, x, y), z) +
         raw_bracket(dim, entries, raw_bracket(dim, entries, y, z), x) +
         raw_bracket(dim, entries, raw_bracket(dim, entries, z, x), y);
}

}  // namespace oracles

#endif
