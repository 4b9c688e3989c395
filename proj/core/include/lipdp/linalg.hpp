#ifndef LIPDP_LINALG_HPP
#define LIPDP_LINALG_HPP

#include "lipdp/tensor.hpp"

namespace lipdp {

struct SpectralOptions {
  double tol = 1e-6;
  int max_iter = 200;
};

struct SpectralResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;

  operator double() const { return value; }
};

/// Largest singular value of a rank-2 tensor by power iteration on
/// A^T A. The start vector is the normalized all-ones vector; after the
/// first run converges, one fixed-perturbation restart guards against a
/// start vector orthogonal to the top singular direction. Stops when the
/// Rayleigh residual drops below tol relative to the current estimate,
/// then refines the estimate by a two-dimensional Rayleigh-Ritz step so
/// nearly tied top eigenvalues cannot park the iterate between them;
/// the refined value never exceeds the true norm. Non-convergence
/// within max_iter is reported through the flag along with the last
/// estimate.
SpectralResult spectral_norm(const Tensor& matrix,
                             const SpectralOptions& options = {});

SpectralResult spectral_norm(const Tensor& matrix, double tol, int max_iter);

/// Square root of the sum of squared entries, accumulated left to right.
double frobenius_norm(const Tensor& t);

enum class WeightNorm { kSpectral, kFrobenius };

}  // namespace lipdp

#endif  // LIPDP_LINALG_HPP
