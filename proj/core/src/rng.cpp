#include "carnot/rng.hpp"

#include <cmath>

namespace carnot {

namespace {
// splitmix64, used both as the generator and as the seed mixer.
std::uint64_t splitmix(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix(s);
  s ^= stream_id * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix(s);
  return Rng(a ^ (b + stream_id));
}

std::uint64_t Rng::next() { return splitmix(state_); }

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

Eigen::VectorXd Rng::uniform_vector(int dim, double a, double b) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = uniform(a, b);
  return v;
}

Eigen::VectorXd Rng::unit_vector(int dim) {
  Eigen::VectorXd v(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (int i = 0; i < dim; ++i) v[i] = normal();
    n = v.norm();
  }
  return v / n;
}

}  // namespace carnot
