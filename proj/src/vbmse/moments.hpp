#pragma once

#include "vbmse/common.hpp"

namespace vbmse {

// Sample mean, sample covariance and its eigendecomposition for one training
// window. The factorization is computed once per window and reused across the
// whole regularization grid: every resolvent trace then costs O(p) per gamma.
// Immutable after construction; safe to share across threads.
struct SpectralMoments {
  Vec mu;            // sample mean, length p
  Mat sigma;         // SCM, p x p, symmetric PSD
  Vec eigenvalues;   // non-increasing, clamped at 0
  Mat eigenvectors;  // orthogonal, columns aligned with eigenvalues
  Index n = 0;       // observation count used for the SCM
  Index p = 0;
  double aspect_ratio = 0.0;  // p / n

  // Mean eigenvalue tr(sigma)/p; the scale unit for gamma grids.
  double lambda_bar() const { return p > 0 ? eigenvalues.sum() / static_cast<double>(p) : 0.0; }

  // Numerical rank: eigenvalues above max(p, n) * eps * lambda_max.
  Index rank() const;
};

// Arithmetic column mean over n >= 1 observations.
Vec sample_mean(const Mat& train);

// Unbiased-style sample covariance with denominator n - 1, centered at the
// sample mean. Throws NumericError("degenerate SCM") for n < 2.
Mat sample_cov(const Mat& train);

// Eigen-factorizes a symmetric PSD matrix, clamping round-off negatives to
// zero. Throws NumericError if the input is asymmetric beyond 1e-12 relative
// or indefinite beyond round-off scale.
SpectralMoments spectral(const Mat& sigma_hat, const Vec& mu_hat, Index n);

// Convenience: mean + SCM + factorization of one training block.
SpectralMoments fit_moments(const Mat& train);

// The three scalar resolvent traces from which every MSE estimator here is
// assembled, all evaluated from the cached spectrum:
//   a       = (1/n) tr[S (S + gamma I)^-1]          = (1/n) sum lambda/(lambda+gamma)
//   a_prime = da/dgamma = -(1/n) tr[S (S+gamma I)^-2]
//   b       = (1/n) tr[S^1/2 (S^1/2 - i sqrt(gamma) I)^-1]
// where S is the SCM. Note Re(b) == a and Im(b) >= 0.
struct TraceFunctionals {
  double a = 0.0;
  double a_prime = 0.0;
  Complex b{0.0, 0.0};
  double gamma = 0.0;
};

TraceFunctionals trace_functionals(const SpectralMoments& sm, double gamma);
TraceFunctionals trace_functionals(const Vec& eigenvalues, Index n, double gamma);

}  // namespace vbmse
