#pragma once

#include <cstdint>

#include "vbmse/common.hpp"

namespace vbmse {

// Gaussian generator for the observation model y = mu + Sigma^{1/2} x with
// x ~ N(0, I). sigma_sqrt is the symmetric PSD square root of sigma.
struct SyntheticModel {
  Mat sigma;
  Mat sigma_sqrt;
  Vec mu;
  std::uint64_t seed = 0;

  Index p() const { return sigma.rows(); }
};

// Builds the model from a symmetric PSD covariance; validates that
// sigma_sqrt * sigma_sqrt reconstructs sigma to 1e-10 relative Frobenius.
SyntheticModel make_model(Mat sigma, Vec mu, std::uint64_t seed);

// Exponentially decaying correlation [Sigma]_ij = rho^|i-j|; SPD for |rho| < 1.
Mat ar1_sigma(Index p, double rho);

// Low-rank-plus-diagonal covariance L L^T + D with n_factors Gaussian loading
// columns and uniform idiosyncratic variances; deterministic given seed.
Mat factor_sigma(Index p, Index n_factors, std::uint64_t seed);

struct Sample {
  Mat y;  // p x n observations
  Mat x;  // p x n latent standard normal draws
};

// Draws n columns y_j = mu + Sigma^{1/2} x_j. The per-trial stream is derived
// from (model.seed, trial), so parallel repetitions are reproducible and
// independent of scheduling.
Sample generate(const SyntheticModel& model, Index n, std::uint64_t trial = 0);

}  // namespace vbmse
