#include "vbmse/rmt.hpp"

#include <cmath>

#include "vbmse/datagen.hpp"

namespace vbmse {

namespace {

double kappa_of(const FixedPointOptions& opts, Index n) {
  return opts.exact_t_factor ? static_cast<double>(n - 1) / static_cast<double>(n) : 1.0;
}

struct MapEval {
  Complex value;       // F(delta)
  Complex derivative;  // dF/ddelta
};

// F(delta) = (1/n) sum s_i / (s_i * kappa/(1+delta) - z) and its derivative.
MapEval eval_map(const Vec& spectrum, Index n, Complex z, double kappa, Complex delta) {
  const Complex one_plus = 1.0 + delta;
  const Complex dtilde = kappa / one_plus;
  Complex f{0.0, 0.0};
  Complex sum_sq{0.0, 0.0};
  for (Index i = 0; i < spectrum.size(); ++i) {
    const double s = spectrum(i);
    if (s == 0.0) continue;
    const Complex denom = dtilde * s - z;
    f += s / denom;
    sum_sq += (s * s) / (denom * denom);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  MapEval out;
  out.value = f * inv_n;
  out.derivative = (kappa / (one_plus * one_plus)) * sum_sq * inv_n;
  return out;
}

}  // namespace

FixedPointSolution solve_resolvent_delta(const Vec& spectrum, Index n, Complex z,
                                         const FixedPointOptions& opts,
                                         std::optional<Complex> warm_start) {
  if (n < 1) throw InvalidArgument("sample count must be positive");
  if (z.imag() == 0.0 && z.real() >= 0.0)
    throw InvalidArgument("shift must lie off the positive real axis");
  for (Index i = 0; i < spectrum.size(); ++i)
    if (spectrum(i) < 0.0) throw InvalidArgument("spectrum must be nonnegative");

  const double kappa = kappa_of(opts, n);
  const bool real_axis = (z.imag() == 0.0);

  // All-zero spectrum: the map is identically zero.
  if (spectrum.size() == 0 || spectrum.maxCoeff() == 0.0) {
    return FixedPointSolution{Complex(0.0, 0.0), Complex(kappa, 0.0), 0, 0.0};
  }

  Complex delta = warm_start.value_or(Complex(1.0, 0.0));
  if (real_axis && delta.real() < 0.0) delta = Complex(0.0, 0.0);

  // Damped fixed-point steps with a safeguarded Newton accelerator on
  // g(delta) = delta - F(delta). The damped map alone contracts at a rate
  // approaching 1 - O(sqrt(|z|/s_bar)), which exceeds the iteration budget on
  // the low end of the default grid; a Newton step is accepted whenever it
  // reduces |g|, restoring fast convergence there.
  MapEval f = eval_map(spectrum, n, z, kappa, delta);
  double residual = std::abs(delta - f.value);
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    if (residual <= opts.tolerance * (1.0 + std::abs(delta))) {
      return FixedPointSolution{delta, kappa / (1.0 + delta), iter, residual};
    }
    bool stepped = false;
    const Complex g = delta - f.value;
    const Complex gprime = 1.0 - f.derivative;
    if (std::abs(gprime) > 1e-14) {
      Complex candidate = delta - g / gprime;
      if (real_axis) candidate = Complex(std::max(candidate.real(), 0.0), 0.0);
      // For Im z > 0 the map sends the closed upper half-plane into itself, so
      // the damped iteration stays on the Herglotz branch; only accept Newton
      // candidates that do too, or spurious roots can be reached.
      if (z.imag() > 0.0 && candidate.imag() < 0.0) candidate = Complex(candidate.real(), 0.0);
      if (std::abs(1.0 + candidate) > 1e-14) {
        const MapEval fc = eval_map(spectrum, n, z, kappa, candidate);
        if (std::abs(candidate - fc.value) < residual) {
          delta = candidate;
          f = fc;
          residual = std::abs(delta - f.value);
          stepped = true;
        }
      }
    }
    if (!stepped) {
      delta = (1.0 - opts.damping) * delta + opts.damping * f.value;
      f = eval_map(spectrum, n, z, kappa, delta);
      residual = std::abs(delta - f.value);
    }
  }
  throw NumericError("resolvent fixed point did not converge after " +
                     std::to_string(opts.max_iterations) + " iterations; residual " +
                     std::to_string(residual));
}

FixedPointSolution solve_delta1(const Vec& sigma_eigenvalues, Index n, double gamma,
                                const FixedPointOptions& opts, std::optional<Complex> warm_start) {
  if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");
  return solve_resolvent_delta(sigma_eigenvalues, n, Complex(-gamma, 0.0), opts, warm_start);
}

FixedPointSolution solve_delta1(const Mat& sigma, Index n, double gamma,
                                const FixedPointOptions& opts) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (sigma + sigma.transpose()));
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  return solve_delta1(Vec(solver.eigenvalues().cwiseMax(0.0)), n, gamma, opts);
}

FixedPointSolution solve_delta2(const Vec& sigma_eigenvalues, Index n, double gamma,
                                const FixedPointOptions& opts, std::optional<Complex> warm_start) {
  if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");
  return solve_resolvent_delta(sigma_eigenvalues.cwiseMax(0.0).cwiseSqrt(), n,
                               Complex(0.0, std::sqrt(gamma)), opts, warm_start);
}

FixedPointSolution solve_delta2(const Mat& sigma, Index n, double gamma,
                                const FixedPointOptions& opts) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (sigma + sigma.transpose()));
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  return solve_delta2(Vec(solver.eigenvalues().cwiseMax(0.0)), n, gamma, opts);
}

Delta1Derivatives delta1_derivatives(const Vec& sigma_eigenvalues, Index n, double gamma,
                                     const FixedPointSolution& fp, const FixedPointOptions& opts) {
  const double kappa = kappa_of(opts, n);
  const double dtilde = fp.delta_tilde.real();
  double psi = 0.0, phi = 0.0;
  for (Index i = 0; i < sigma_eigenvalues.size(); ++i) {
    const double s = sigma_eigenvalues(i);
    const double denom = dtilde * s + gamma;
    psi += s / (denom * denom);
    phi += s * s / (denom * denom);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  psi *= inv_n;
  phi *= inv_n;

  const double stability = 1.0 - phi * dtilde * dtilde / kappa;
  if (stability <= 0.0)
    throw NumericError("fixed-point stability factor non-positive: " + std::to_string(stability));

  Delta1Derivatives out;
  out.psi = psi;
  out.phi = phi;
  out.delta1_prime = -psi / stability;
  out.delta_tilde_prime = -out.delta1_prime * dtilde * dtilde / kappa;
  return out;
}

ConsistentDeltas consistent_deltas(const TraceFunctionals& tf) {
  if (tf.a >= 1.0 - 1e-12) {
    throw NumericError("resolvent trace at unit boundary: a = " + std::to_string(tf.a) +
                       " (gamma too small relative to the spectrum)");
  }
  ConsistentDeltas cd;
  cd.gamma = tf.gamma;
  const double one_minus_a = 1.0 - tf.a;
  cd.delta1_hat = tf.a / one_minus_a;
  cd.delta1_hat_prime = tf.a_prime / (one_minus_a * one_minus_a);
  cd.delta1_tilde_hat = one_minus_a;
  cd.delta1_tilde_hat_prime = -tf.a_prime;
  cd.delta2_hat = tf.b / (1.0 - tf.b);
  return cd;
}

MixedDensity de_mixed_density(const Vec& sigma_eigenvalues, const Vec& theta_quad, Index n,
                              const FixedPointOptions& opts, int nodes, double eta_rel) {
  if (theta_quad.size() != sigma_eigenvalues.size())
    throw InvalidArgument("theta projection length mismatch");
  if (nodes < 16) throw InvalidArgument("need at least 16 quadrature nodes");

  MixedDensity out;
  const Index p = sigma_eigenvalues.size();
  const double smax = p > 0 ? sigma_eigenvalues.maxCoeff() : 0.0;
  if (smax <= 0.0) {
    out.lambdas = Vec::Zero(0);
    out.masses = Vec::Zero(0);
    return out;
  }
  const double ratio = static_cast<double>(p) / static_cast<double>(n);
  const double edge = (1.0 + std::sqrt(ratio)) * (1.0 + std::sqrt(ratio)) * smax;
  const double hi = 1.25 * edge;
  const double lo = 1e-9 * edge;
  const double eta = eta_rel * edge;

  out.lambdas.resize(nodes);
  out.masses.resize(nodes);
  const double u_lo = std::sqrt(lo), u_hi = std::sqrt(hi);
  const double du = (u_hi - u_lo) / static_cast<double>(nodes);
  std::optional<Complex> warm;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int k = 0; k < nodes; ++k) {
    const double u = u_lo + (k + 0.5) * du;
    const double lambda = u * u;
    const Complex z(lambda, eta);
    const FixedPointSolution fp = solve_resolvent_delta(sigma_eigenvalues, n, z, opts, warm);
    warm = fp.delta;
    Complex trace{0.0, 0.0};
    for (Index i = 0; i < p; ++i)
      trace += theta_quad(i) / (fp.delta_tilde * sigma_eigenvalues(i) - z);
    out.lambdas(k) = lambda;
    out.masses(k) = std::max(trace.imag() * inv_n / M_PI, 0.0) * 2.0 * u * du;
  }
  return out;
}

double de_relation_check(const Mat& sigma, const Mat& theta, Index n, double gamma, int which,
                         int reps, std::uint64_t seed, bool imaginary_axis,
                         const FixedPointOptions& opts) {
  if (which < 1 || which > 4) throw InvalidArgument("relation index must be in {1,2,3,4}");
  if (imaginary_axis && which != 1)
    throw InvalidArgument("the imaginary-axis point is exercised for relation 1 only");
  if (reps < 1) throw InvalidArgument("reps must be positive");
  if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");

  const Index p = sigma.rows();
  if (theta.rows() != p || theta.cols() != p) throw InvalidArgument("theta shape mismatch");

  Eigen::SelfAdjointEigenSolver<Mat> true_eig(0.5 * (sigma + sigma.transpose()));
  if (true_eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Vec sig_vals = true_eig.eigenvalues().cwiseMax(0.0);
  const Mat& w = true_eig.eigenvectors();
  // theta projected on the eigenbasis of the true covariance: c_i = w_i' Theta w_i.
  const Vec c = (w.transpose() * theta * w).diagonal();

  const Complex z = imaginary_axis ? Complex(0.0, std::sqrt(gamma)) : Complex(-gamma, 0.0);
  const FixedPointSolution fp = solve_resolvent_delta(sig_vals, n, z, opts);
  const Complex dtilde = fp.delta_tilde;

  Complex rhs{0.0, 0.0};
  switch (which) {
    case 1:
      for (Index i = 0; i < p; ++i) rhs += c(i) / (dtilde * sig_vals(i) - z);
      break;
    case 2:
      for (Index i = 0; i < p; ++i) rhs += dtilde * c(i) * sig_vals(i) / (dtilde * sig_vals(i) - z);
      break;
    case 3:
    case 4: {
      const Delta1Derivatives der = delta1_derivatives(sig_vals, n, gamma, fp, opts);
      const double dt = dtilde.real();
      for (Index i = 0; i < p; ++i) {
        const double denom = dt * sig_vals(i) + gamma;
        if (which == 3)
          rhs += c(i) * (1.0 + der.delta_tilde_prime * sig_vals(i)) / (denom * denom);
        else
          rhs += c(i) * (dt - gamma * der.delta_tilde_prime) * sig_vals(i) / (denom * denom);
      }
      break;
    }
  }

  const SyntheticModel model = make_model(sigma, Vec::Zero(p), seed);
  Complex lhs_sum{0.0, 0.0};
  for (int rep = 0; rep < reps; ++rep) {
    const Sample sample = generate(model, n, static_cast<std::uint64_t>(rep));
    const SpectralMoments sm = fit_moments(sample.y);
    const Vec d = (sm.eigenvectors.transpose() * theta * sm.eigenvectors).diagonal();
    Complex lhs{0.0, 0.0};
    for (Index i = 0; i < p; ++i) {
      const double lam = sm.eigenvalues(i);
      switch (which) {
        case 1:
          lhs += d(i) / (lam - z);
          break;
        case 2:
          lhs += d(i) * lam / (lam + gamma);
          break;
        case 3:
          lhs += d(i) / ((lam + gamma) * (lam + gamma));
          break;
        case 4:
          lhs += d(i) * lam / ((lam + gamma) * (lam + gamma));
          break;
      }
    }
    lhs_sum += lhs;
  }
  const Complex lhs_avg = lhs_sum / static_cast<double>(reps);

  const double rhs_mag = std::abs(rhs);
  if (rhs_mag < 1e-300) return std::abs(lhs_avg) < 1e-300 ? 0.0 : std::abs(lhs_avg);
  return std::abs(lhs_avg - rhs) / rhs_mag;
}

}  // namespace vbmse
