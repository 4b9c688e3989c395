#include "lipdp/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lipdp {

double RngState::uniform() {
  ++position_;
  // 53 random bits into [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngState::normal() {
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

bool RngState::bernoulli(double p) {
  if (p < 0.0) throw std::invalid_argument("bernoulli probability < 0");
  return uniform() < p;
}

std::size_t RngState::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index over empty range");
  ++position_;
  return static_cast<std::size_t>(engine_() % n);
}

Tensor gaussian_noise(std::vector<std::size_t> shape, double stddev,
                      RngState& rng) {
  if (stddev < 0.0) throw std::invalid_argument("noise stddev < 0");
  Tensor out(std::move(shape));
  if (stddev == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = stddev * rng.normal();
  }
  return out;
}

}  // namespace lipdp
