#ifndef CARNOT_RNG_HPP
#define CARNOT_RNG_HPP

#include <Eigen/Core>
#include <cstdint>

namespace carnot {

/// Deterministic random source. All randomness in the library flows through
/// this type so that a (seed, stream) pair fully reproduces a run on any
/// platform; the standard <random> distributions are implementation-defined
/// and are deliberately not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) { next(); next(); }

  /// Independent stream derived from (seed, stream_id); used to keep
  /// parallel work deterministic regardless of thread count.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next();

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal();

  Eigen::VectorXd uniform_vector(int dim, double a, double b);
  Eigen::VectorXd unit_vector(int dim);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace carnot

#endif
