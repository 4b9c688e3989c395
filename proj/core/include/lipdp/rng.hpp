#ifndef LIPDP_RNG_HPP
#define LIPDP_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "lipdp/tensor.hpp"

namespace lipdp {

/// Deterministic random stream. The same seed followed by the same call
/// sequence yields bit-identical outputs; normal() uses an explicit
/// Box-Muller transform so results do not depend on the standard
/// library's distribution internals. Single-owner: do not share one
/// instance across threads without external serialization.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Number of raw 64-bit engine words consumed so far.
  std::uint64_t position() const { return position_; }

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  /// True with probability p. p >= 1 always succeeds.
  bool bernoulli(double p);

  /// Uniform index in [0, n).
  std::size_t uniform_index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t position_ = 0;
};

/// I.i.d. N(0, stddev^2) entries; stddev == 0 yields exact zeros without
/// consuming the stream.
Tensor gaussian_noise(std::vector<std::size_t> shape, double stddev,
                      RngState& rng);

}  // namespace lipdp

#endif  // LIPDP_RNG_HPP
