#pragma once

#include <optional>
#include <string>

#include "vbmse/common.hpp"
#include "vbmse/moments.hpp"

namespace vbmse {

// Budget-constrained minimum-variance holdings. Weights may be negative
// (shorting); the only constraint is that they sum to one.
struct PortfolioWeights {
  Vec weights;
  std::string method;
  std::optional<double> gamma_used;

  double sum() const { return weights.sum(); }
};

// w = (S + gamma I)^-1 1 / (1' (S + gamma I)^-1 1), applied through the cached
// factorization; the regularized matrix is always invertible for gamma > 0.
PortfolioWeights gmvp_weights(const SpectralMoments& sm, double gamma);

// Oracle weights from a known invertible covariance: w = Sigma^-1 1 / (1' Sigma^-1 1).
PortfolioWeights gmvp_weights_true(const Mat& sigma_true);

// Ledoit-Wolf linear shrinkage baseline: weights from beta*S_n + gamma_lw*I
// where S_n is the 1/n SCM of the centered block and the intensity
// b^2/d^2 in [0, 1] is estimated from the data.
struct LwEstimate {
  double beta = 0.0;       // weight on the SCM
  double gamma = 0.0;      // ridge offset (intensity * mean variance)
  double intensity = 0.0;  // shrinkage toward the scaled identity, in [0, 1]
};

PortfolioWeights lw_weights(const Mat& train, LwEstimate* estimate = nullptr);

// Moore-Penrose pseudo-inverse of the SCM in the oracle formula; exposes the
// p > n failure mode of the unregularized estimator.
PortfolioWeights scm_pinv_weights(const SpectralMoments& sm);

PortfolioWeights equal_weights(Index p);

}  // namespace vbmse
