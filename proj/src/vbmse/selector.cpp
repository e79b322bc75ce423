#include "vbmse/selector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

namespace vbmse {

NoiseEstimate estimate_noise(const SpectralMoments& sm, const Vec& y, double gamma) {
  if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");
  if (y.size() != sm.p) throw InvalidArgument("observation length does not match dimension");
  const Vec centered = y - sm.mu;
  const Vec projected = sm.eigenvectors.transpose() * centered;
  Vec scaled(sm.p);
  for (Index i = 0; i < sm.p; ++i) {
    const double lam = sm.eigenvalues(i);
    scaled(i) = std::sqrt(lam) / (lam + gamma) * projected(i);
  }
  NoiseEstimate est;
  est.x_hat = sm.eigenvectors * scaled;
  est.gamma = gamma;
  return est;
}

std::string variant_name(MseVariant v) {
  switch (v) {
    case MseVariant::McOracle: return "mc_oracle";
    case MseVariant::SemiOracle: return "semi_oracle";
    case MseVariant::Plugin: return "plugin";
    case MseVariant::Asymptotic: return "asymptotic";
    case MseVariant::Consistent: return "consistent";
  }
  return "unknown";
}

std::string formula_name(const ConsistentFormula& f) {
  std::string name = f.factor == CurvatureFactor::MinusGammaDtilde ? "factor_minus" : "factor_plus";
  name += f.sign == BracketSign::Plus ? "/trace_plus" : "/trace_minus";
  return name;
}

ConsistentFormula formula_from_name(const std::string& name) {
  ConsistentFormula f;
  if (name.find("factor_minus") != std::string::npos)
    f.factor = CurvatureFactor::MinusGammaDtilde;
  else if (name.find("factor_plus") != std::string::npos)
    f.factor = CurvatureFactor::PlusGammaDtilde;
  else
    throw InvalidArgument("unknown formula name '" + name + "'");
  if (name.find("trace_plus") != std::string::npos)
    f.sign = BracketSign::Plus;
  else if (name.find("trace_minus") != std::string::npos)
    f.sign = BracketSign::Minus;
  else
    throw InvalidArgument("unknown formula name '" + name + "'");
  return f;
}

double mse_plugin(const TraceFunctionals& tf, Index n, Index p) {
  const double ratio = static_cast<double>(p) / static_cast<double>(n);
  const double head = static_cast<double>(n + 1) / static_cast<double>(n);
  // (1/n) sum l^2/(l+g)^2 == a + gamma * a'.
  return ratio + head * (tf.a + tf.gamma * tf.a_prime) - 2.0 * tf.a;
}

double mse_plugin(const SpectralMoments& sm, double gamma) {
  return mse_plugin(trace_functionals(sm, gamma), sm.n, sm.p);
}

SemiOracleCache make_semi_oracle_cache(const SpectralMoments& sm, const Mat& sigma_true,
                                       const Mat& sigma_sqrt_true) {
  if (sigma_true.rows() != sm.p || sigma_true.cols() != sm.p)
    throw InvalidArgument("true covariance shape mismatch");
  SemiOracleCache cache;
  cache.sigma_quad = (sm.eigenvectors.transpose() * sigma_true * sm.eigenvectors).diagonal();
  cache.sigma_sqrt_quad =
      (sm.eigenvectors.transpose() * sigma_sqrt_true * sm.eigenvectors).diagonal();
  cache.eigenvalues = sm.eigenvalues;
  cache.n = sm.n;
  cache.p = sm.p;
  return cache;
}

double mse_semi_oracle(const SemiOracleCache& cache, double gamma) {
  if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");
  const double inv_n = 1.0 / static_cast<double>(cache.n);
  double quad = 0.0, cross = 0.0;
  for (Index i = 0; i < cache.p; ++i) {
    const double lam = cache.eigenvalues(i);
    const double denom = lam + gamma;
    quad += cache.sigma_quad(i) * lam / (denom * denom);
    cross += cache.sigma_sqrt_quad(i) * std::sqrt(lam) / denom;
  }
  const double ratio = static_cast<double>(cache.p) * inv_n;
  const double head = static_cast<double>(cache.n + 1) * inv_n;
  return ratio + head * quad * inv_n - 2.0 * cross * inv_n;
}

double mse_semi_oracle(const SpectralMoments& sm, const SyntheticModel& model, double gamma) {
  return mse_semi_oracle(make_semi_oracle_cache(sm, model.sigma, model.sigma_sqrt), gamma);
}

namespace {

// Quadratic term of the asymptotic MSE: (n+1)/n * curvature * phi.
double asymptotic_quadratic_term(const Vec& sigma_vals, Index n, double gamma,
                                 const FixedPointOptions& fp_opts, CurvatureFactor factor) {
  const FixedPointSolution fp1 = solve_delta1(sigma_vals, n, gamma, fp_opts);
  const double dtilde1 = fp1.delta_tilde.real();
  const Delta1Derivatives der = delta1_derivatives(sigma_vals, n, gamma, fp1, fp_opts);
  const double curvature = factor == CurvatureFactor::MinusGammaDtilde
                               ? dtilde1 - gamma * der.delta_tilde_prime
                               : dtilde1 + gamma * der.delta_tilde_prime;
  return static_cast<double>(n + 1) / static_cast<double>(n) * curvature * der.phi;
}

// Cross term (1/n) E tr[Sigma^1/2 S^1/2 (S+gI)^-1] from the weighted limiting
// measure: integrate sqrt(l)/(l+g), which vanishes at the zero atom.
double cross_term_spectral(const MixedDensity& density, double gamma) {
  double value = 0.0;
  for (Index k = 0; k < density.lambdas.size(); ++k) {
    const double lam = density.lambdas(k);
    value += std::sqrt(lam) / (lam + gamma) * density.masses(k);
  }
  return value;
}

// Cross term from the square-root-resolvent fixed point (diagnostic route).
double cross_term_sqrt_fp(const Vec& sigma_vals, Index n, double gamma,
                          const FixedPointOptions& fp_opts) {
  const FixedPointSolution fp2 = solve_delta2(sigma_vals, n, gamma, fp_opts);
  const Complex dtilde2 = fp2.delta_tilde;
  const Complex shift(0.0, std::sqrt(gamma));
  Complex cross{0.0, 0.0};
  for (Index i = 0; i < sigma_vals.size(); ++i) {
    const double root = std::sqrt(std::max(sigma_vals(i), 0.0));
    if (root == 0.0) continue;
    cross += root / (dtilde2 * root - shift);
  }
  return cross.real() / static_cast<double>(n);
}

Vec sqrt_theta_quad(const Vec& sigma_vals) {
  return sigma_vals.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

double mse_asymptotic(const Vec& sigma_true_eigenvalues, Index n, double gamma,
                      const FixedPointOptions& fp_opts, CurvatureFactor factor,
                      AsymptoticBRoute route) {
  const Index p = sigma_true_eigenvalues.size();
  const double ratio = static_cast<double>(p) / static_cast<double>(n);
  const double quad = asymptotic_quadratic_term(sigma_true_eigenvalues, n, gamma, fp_opts, factor);
  double cross = 0.0;
  if (route == AsymptoticBRoute::Spectral) {
    const MixedDensity density =
        de_mixed_density(sigma_true_eigenvalues, sqrt_theta_quad(sigma_true_eigenvalues), n, fp_opts);
    cross = cross_term_spectral(density, gamma);
  } else {
    cross = cross_term_sqrt_fp(sigma_true_eigenvalues, n, gamma, fp_opts);
  }
  return ratio + quad - 2.0 * cross;
}

double mse_consistent(const ConsistentDeltas& cd, const TraceFunctionals& tf, Index n, Index p,
                      const ConsistentFormula& formula) {
  if (cd.delta1_hat_prime == 0.0)
    throw NumericError("derivative singular: flat zero spectrum has no curvature information");
  const double curvature = formula.factor == CurvatureFactor::MinusGammaDtilde
                               ? cd.delta1_tilde_hat - tf.gamma * cd.delta1_tilde_hat_prime
                               : cd.delta1_tilde_hat + tf.gamma * cd.delta1_tilde_hat_prime;
  const double trace_term = -tf.a_prime;  // (1/n) tr[S (S+gI)^-2]
  const double bracket = curvature * cd.delta1_hat_prime +
                         (formula.sign == BracketSign::Plus ? trace_term : -trace_term);
  const double one_plus = 1.0 + cd.delta1_hat;
  const double head = static_cast<double>(n + 1) / static_cast<double>(n);
  const double ratio = static_cast<double>(p) / static_cast<double>(n);
  return ratio - 2.0 * cd.delta2_hat.real() +
         head * (one_plus * one_plus / cd.delta1_hat_prime) * bracket;
}

double mse_consistent(const SpectralMoments& sm, double gamma, const ConsistentFormula& formula) {
  const TraceFunctionals tf = trace_functionals(sm, gamma);
  return mse_consistent(consistent_deltas(tf), tf, sm.n, sm.p, formula);
}

namespace {

// Runs fn(trial) for trial in [0, trials) on a small pool, writing each result
// into its own slot; reductions afterwards are in index order, so results do
// not depend on the thread count.
void parallel_trials(int trials, int threads, const std::function<void(int)>& fn) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  const int workers = std::min(trials, threads > 0 ? threads : hw);
  if (workers <= 1) {
    for (int t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int t = w; t < trials; t += workers) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

struct McAccumulator {
  // Per-gamma average of ||x - x_hat||^2 / n over trials, one slot per trial.
  std::vector<std::vector<double>> per_trial;
};

void mc_trial_values(const SyntheticModel& model, Index n, const Vec& gammas, std::uint64_t trial,
                     std::vector<double>& out) {
  // One extra column provides the evaluation pair (x_t, y_t).
  const Sample sample = generate(model, n + 1, trial);
  const Mat train = sample.y.leftCols(n);
  const SpectralMoments sm = fit_moments(train);

  const Vec y_eval = sample.y.col(n);
  const Vec x_eval = sample.x.col(n);
  // Rotate once into the SCM eigenbasis; each gamma is then O(p).
  const Vec w = sm.eigenvectors.transpose() * (y_eval - sm.mu);
  const Vec x_rot = sm.eigenvectors.transpose() * x_eval;

  const double inv_n = 1.0 / static_cast<double>(n);
  out.resize(static_cast<std::size_t>(gammas.size()));
  for (Index g = 0; g < gammas.size(); ++g) {
    const double gamma = gammas(g);
    double err = 0.0;
    for (Index i = 0; i < sm.p; ++i) {
      const double lam = sm.eigenvalues(i);
      const double diff = x_rot(i) - std::sqrt(lam) / (lam + gamma) * w(i);
      err += diff * diff;
    }
    out[static_cast<std::size_t>(g)] = err * inv_n;
  }
}

}  // namespace

McCurve mc_curve(const SyntheticModel& model, Index n, const Vec& gammas, int trials, int threads,
                 std::uint64_t stream_offset) {
  if (trials < 1) throw InvalidArgument("trials must be positive");
  for (Index g = 0; g < gammas.size(); ++g)
    if (gammas(g) <= 0.0) throw InvalidArgument("gamma grid must be positive");

  McAccumulator acc;
  acc.per_trial.resize(static_cast<std::size_t>(trials));
  parallel_trials(trials, threads, [&](int t) {
    mc_trial_values(model, n, gammas, stream_offset + static_cast<std::uint64_t>(t),
                    acc.per_trial[static_cast<std::size_t>(t)]);
  });

  McCurve curve;
  curve.gammas = gammas;
  curve.trials = trials;
  curve.means = Vec::Zero(gammas.size());
  curve.std_errors = Vec::Zero(gammas.size());
  for (Index g = 0; g < gammas.size(); ++g) {
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) sum += acc.per_trial[static_cast<std::size_t>(t)][static_cast<std::size_t>(g)];
    const double mean = sum / trials;
    double ss = 0.0;
    for (int t = 0; t < trials; ++t) {
      const double d = acc.per_trial[static_cast<std::size_t>(t)][static_cast<std::size_t>(g)] - mean;
      ss += d * d;
    }
    curve.means(g) = mean;
    curve.std_errors(g) = trials > 1 ? std::sqrt(ss / (trials - 1) / trials) : 0.0;
  }
  return curve;
}

McEstimate mse_mc_oracle(const SyntheticModel& model, Index n, double gamma, int trials,
                         int threads, std::uint64_t stream_offset) {
  if (trials < 100) throw InvalidArgument("MC oracle needs at least 100 trials");
  Vec grid(1);
  grid(0) = gamma;
  const McCurve curve = mc_curve(model, n, grid, trials, threads, stream_offset);
  return McEstimate{curve.means(0), curve.std_errors(0), trials};
}

Vec make_gamma_grid(double lambda_bar, const GridConfig& cfg) {
  if (!(lambda_bar > 0.0))
    throw NumericError("cannot build gamma grid: spectrum has zero scale (tr(S)/p = " +
                       std::to_string(lambda_bar) + ")");
  if (cfg.points < 1) throw InvalidArgument("grid needs at least one point");
  if (!(cfg.min_mult > 0.0)) throw InvalidArgument("grid lower bound must be positive");
  if (cfg.points > 1 && !(cfg.max_mult > cfg.min_mult))
    throw InvalidArgument("grid bounds must satisfy min_mult < max_mult");
  Vec grid(cfg.points);
  if (cfg.points == 1) {
    grid(0) = cfg.min_mult * lambda_bar;
    return grid;
  }
  const double lo = std::log(cfg.min_mult * lambda_bar);
  const double hi = std::log(cfg.max_mult * lambda_bar);
  for (int k = 0; k < cfg.points; ++k) {
    grid(k) = std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cfg.points - 1));
  }
  return grid;
}

Vec refine_grid(const Vec& gammas) {
  if (gammas.size() < 2) return gammas;
  Vec out(2 * gammas.size() - 1);
  for (Index i = 0; i < gammas.size(); ++i) {
    out(2 * i) = gammas(i);
    if (i + 1 < gammas.size()) out(2 * i + 1) = std::sqrt(gammas(i) * gammas(i + 1));
  }
  return out;
}

namespace {

// Evaluates `value(gamma)` over the grid, dropping points that fail
// numerically; rethrows if nothing survives. Ties at the minimum resolve to
// the smaller gamma.
MseCurve build_curve(const Vec& gammas, MseVariant variant, Index n, Index p,
                     const std::function<double(double)>& value) {
  std::vector<double> kept_gamma, kept_value;
  kept_gamma.reserve(static_cast<std::size_t>(gammas.size()));
  std::exception_ptr first_error;
  for (Index g = 0; g < gammas.size(); ++g) {
    try {
      const double v = value(gammas(g));
      if (!std::isfinite(v)) throw NumericError("non-finite MSE value");
      kept_gamma.push_back(gammas(g));
      kept_value.push_back(v);
    } catch (const NumericError&) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (kept_gamma.empty()) {
    if (first_error) std::rethrow_exception(first_error);
    throw InvalidArgument("empty gamma grid");
  }
  MseCurve curve;
  curve.variant = variant;
  curve.n = n;
  curve.p = p;
  curve.gammas = Eigen::Map<const Vec>(kept_gamma.data(), static_cast<Index>(kept_gamma.size()));
  curve.values = Eigen::Map<const Vec>(kept_value.data(), static_cast<Index>(kept_value.size()));
  Index best = 0;
  for (Index i = 1; i < curve.values.size(); ++i)
    if (curve.values(i) < curve.values(best)) best = i;
  curve.gamma_opt = curve.gammas(best);
  return curve;
}

}  // namespace

MseCurve consistent_curve(const SpectralMoments& sm, const Vec& gammas,
                          const ConsistentFormula& formula) {
  return build_curve(gammas, MseVariant::Consistent, sm.n, sm.p,
                     [&](double g) { return mse_consistent(sm, g, formula); });
}

MseCurve plugin_curve(const SpectralMoments& sm, const Vec& gammas) {
  return build_curve(gammas, MseVariant::Plugin, sm.n, sm.p,
                     [&](double g) { return mse_plugin(sm, g); });
}

MseCurve semi_oracle_curve(const SpectralMoments& sm, const SyntheticModel& model,
                           const Vec& gammas) {
  const SemiOracleCache cache = make_semi_oracle_cache(sm, model.sigma, model.sigma_sqrt);
  return build_curve(gammas, MseVariant::SemiOracle, sm.n, sm.p,
                     [&](double g) { return mse_semi_oracle(cache, g); });
}

MseCurve asymptotic_curve(const Vec& sigma_true_eigenvalues, Index n, const Vec& gammas,
                          const FixedPointOptions& fp_opts, CurvatureFactor factor,
                          AsymptoticBRoute route) {
  const double ratio =
      static_cast<double>(sigma_true_eigenvalues.size()) / static_cast<double>(n);
  if (route == AsymptoticBRoute::SqrtFixedPoint) {
    return build_curve(gammas, MseVariant::Asymptotic, n, sigma_true_eigenvalues.size(),
                       [&](double g) {
                         return ratio +
                                asymptotic_quadratic_term(sigma_true_eigenvalues, n, g, fp_opts,
                                                          factor) -
                                2.0 * cross_term_sqrt_fp(sigma_true_eigenvalues, n, g, fp_opts);
                       });
  }
  // The weighted measure is gamma-independent; invert it once for the grid.
  const MixedDensity density = de_mixed_density(
      sigma_true_eigenvalues, sqrt_theta_quad(sigma_true_eigenvalues), n, fp_opts);
  return build_curve(gammas, MseVariant::Asymptotic, n, sigma_true_eigenvalues.size(),
                     [&](double g) {
                       return ratio +
                              asymptotic_quadratic_term(sigma_true_eigenvalues, n, g, fp_opts,
                                                        factor) -
                              2.0 * cross_term_spectral(density, g);
                     });
}

MseCurve select_gamma(const SpectralMoments& sm, const GridConfig& grid,
                      const ConsistentFormula& formula) {
  return consistent_curve(sm, make_gamma_grid(sm.lambda_bar(), grid), formula);
}

}  // namespace vbmse
