#pragma once

#include <cstdint>
#include <optional>

#include "vbmse/common.hpp"
#include "vbmse/moments.hpp"

namespace vbmse {

struct FixedPointOptions {
  double damping = 0.5;      // weight on the fixed-point map in a damped step
  double tolerance = 1e-12;  // on |delta - F(delta)|, relative to 1 + |delta|
  int max_iterations = 1000;
  // false: delta_tilde = 1/(1+delta). true: the exact finite-n trace of the
  // centering projector, delta_tilde = (n-1)/(n(1+delta)); the difference is
  // O(1/n) and is exposed only for sensitivity testing.
  bool exact_t_factor = false;
};

struct FixedPointSolution {
  Complex delta{0.0, 0.0};
  Complex delta_tilde{0.0, 0.0};
  int iterations = 0;
  double residual = 0.0;
};

// Solves delta = (1/n) sum_i s_i / (delta_tilde * s_i - z) with
// delta_tilde = kappa/(1+delta) over the given spectrum, by damped fixed-point
// iteration with a safeguarded Newton accelerator (the pure damped map stalls
// for |z| << mean(s); see delta solver notes in rmt.cpp). Throws NumericError
// on non-convergence, carrying the final residual.
FixedPointSolution solve_resolvent_delta(const Vec& spectrum, Index n, Complex z,
                                         const FixedPointOptions& opts = {},
                                         std::optional<Complex> warm_start = std::nullopt);

// Stieltjes-type fixed point of the covariance resolvent at z = -gamma:
// delta1 = (1/n) tr[Sigma (delta_tilde1 Sigma + gamma I)^-1]. The solution is
// real and positive for gamma > 0 and a PSD Sigma with tr(Sigma) > 0.
FixedPointSolution solve_delta1(const Vec& sigma_eigenvalues, Index n, double gamma,
                                const FixedPointOptions& opts = {},
                                std::optional<Complex> warm_start = std::nullopt);
FixedPointSolution solve_delta1(const Mat& sigma, Index n, double gamma,
                                const FixedPointOptions& opts = {});

// Companion fixed point for the square-root resolvent at shift i*sqrt(gamma):
// delta2 = (1/n) tr[Sigma^1/2 (delta_tilde2 Sigma^1/2 - i sqrt(gamma) I)^-1].
FixedPointSolution solve_delta2(const Vec& sigma_eigenvalues, Index n, double gamma,
                                const FixedPointOptions& opts = {},
                                std::optional<Complex> warm_start = std::nullopt);
FixedPointSolution solve_delta2(const Mat& sigma, Index n, double gamma,
                                const FixedPointOptions& opts = {});

// Analytic gamma-derivatives of the delta1 system, obtained by implicit
// differentiation of the fixed point (never by finite differences in the
// production path):
//   psi = (1/n) tr[Sigma R^2],  phi = (1/n) tr[Sigma^2 R^2],
//   R = (delta_tilde1 Sigma + gamma I)^-1,
//   delta1' = -psi / (1 - phi * delta_tilde1^2 / kappa),
//   delta_tilde1' = -delta1' * delta_tilde1^2 / kappa.
// delta1 decreases in gamma, so delta1' <= 0 and delta_tilde1' >= 0.
struct Delta1Derivatives {
  double delta1_prime = 0.0;
  double delta_tilde_prime = 0.0;
  double psi = 0.0;
  double phi = 0.0;
};

Delta1Derivatives delta1_derivatives(const Vec& sigma_eigenvalues, Index n, double gamma,
                                     const FixedPointSolution& fp,
                                     const FixedPointOptions& opts = {});

// Data-only estimators of the deterministic equivalents, assembled from the
// trace functionals of one SCM:
//   delta1_hat  = a/(1-a)            delta1_hat'       = a'/(1-a)^2
//   dtilde1_hat = 1-a                dtilde1_hat'      = -a'
//   delta2_hat  = b/(1-b)
// Requires a < 1; a >= 1 signals gamma too small relative to the spectrum at
// extreme aspect ratios (impossible for a genuine SCM, whose rank <= n-1).
struct ConsistentDeltas {
  double delta1_hat = 0.0;
  double delta1_hat_prime = 0.0;
  double delta1_tilde_hat = 0.0;
  double delta1_tilde_hat_prime = 0.0;
  Complex delta2_hat{0.0, 0.0};
  double gamma = 0.0;
};

ConsistentDeltas consistent_deltas(const TraceFunctionals& tf);

// Limiting spectral measure of the SCM weighted by overlaps with a matrix
// diagonalized in the true eigenbasis: for theta_quad_i = w_i' Theta w_i, the
// random measure (1/n) sum_i (v_i' Theta v_i) delta_{lambda_i} converges to a
// deterministic measure whose density follows from the trace relation above
// by Stieltjes inversion,
//   rho(l) = (1/pi) Im (1/n) sum_i theta_quad_i / (dtilde(l+i eta) sigma_i - (l+i eta)).
// `masses` holds density times node width, so sum_k f(lambdas_k) * masses_k
// integrates f against the absolutely continuous part. The point mass at zero
// (present for p > n) is not represented; integrands with f(0) = 0 are exact
// without it. Nodes are laid out on a sqrt scale to resolve the hard edge.
struct MixedDensity {
  Vec lambdas;
  Vec masses;
};

MixedDensity de_mixed_density(const Vec& sigma_eigenvalues, const Vec& theta_quad, Index n,
                              const FixedPointOptions& opts = {}, int nodes = 3000,
                              double eta_rel = 1e-6);

// Monte-Carlo check of one deterministic-equivalent trace relation on the
// model y = mu + Sigma^{1/2} x. `which` selects, at z = -gamma (R denotes
// (delta_tilde Sigma + gamma I)^-1 and S the SCM of a simulated dataset):
//   1: tr[Theta (S+gamma I)^-1]    ~ tr[Theta R]
//   2: tr[Theta S (S+gamma I)^-1]  ~ delta_tilde tr[Theta Sigma R]
//   3: tr[Theta (S+gamma I)^-2]    ~ tr[Theta R^2] + delta_tilde' tr[Theta Sigma R^2]
//   4: tr[Theta S (S+gamma I)^-2]  ~ (delta_tilde - gamma delta_tilde') tr[Theta Sigma R^2]
// With imaginary_axis set (relation 1 only), the resolvents are evaluated at
// z = i sqrt(gamma) instead. Returns |LHS_avg - RHS| / |RHS| where LHS_avg
// averages the random trace over `reps` datasets; defined as 0 when both
// sides vanish.
double de_relation_check(const Mat& sigma, const Mat& theta, Index n, double gamma, int which,
                         int reps, std::uint64_t seed, bool imaginary_axis = false,
                         const FixedPointOptions& opts = {});

}  // namespace vbmse
