#include "vbmse/datagen.hpp"

#include <cmath>

#include "vbmse/rng.hpp"

namespace vbmse {

SyntheticModel make_model(Mat sigma, Vec mu, std::uint64_t seed) {
  if (sigma.rows() != sigma.cols()) throw InvalidArgument("covariance must be square");
  if (mu.size() != sigma.rows()) throw InvalidArgument("mean length does not match covariance size");

  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (sigma + sigma.transpose()));
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  Vec lambda = solver.eigenvalues();
  const double lmax = std::max(lambda.maxCoeff(), 0.0);
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-10 * std::max(lmax, 1e-300))
      throw NumericError("covariance is not positive semidefinite");
    if (lambda(i) < 0.0) lambda(i) = 0.0;
  }

  SyntheticModel model;
  model.sigma = std::move(sigma);
  model.sigma_sqrt =
      solver.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * solver.eigenvectors().transpose();
  model.mu = std::move(mu);
  model.seed = seed;

  const double defect = (model.sigma_sqrt * model.sigma_sqrt - model.sigma).norm();
  if (defect > 1e-10 * std::max(model.sigma.norm(), 1e-300))
    throw NumericError("square root reconstruction defect " + std::to_string(defect));
  return model;
}

Mat ar1_sigma(Index p, double rho) {
  if (p < 1) throw InvalidArgument("dimension must be positive");
  if (std::abs(rho) >= 1.0) throw InvalidArgument("AR(1) coefficient must satisfy |rho| < 1");
  Mat sigma(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(static_cast<double>(i - j)));
  return sigma;
}

Mat factor_sigma(Index p, Index n_factors, std::uint64_t seed) {
  if (p < 1) throw InvalidArgument("dimension must be positive");
  if (n_factors < 1 || n_factors > p) throw InvalidArgument("factor count must be in [1, p]");
  Rng rng(seed, 0xfac70ULL);
  Mat loadings(p, n_factors);
  rng.fill_normal(loadings);
  loadings *= 1.0 / std::sqrt(static_cast<double>(n_factors));
  Vec idio(p);
  for (Index i = 0; i < p; ++i) idio(i) = 0.1 + 0.9 * rng.next_double();
  Mat sigma = loadings * loadings.transpose();
  sigma.diagonal() += idio;
  return 0.5 * (sigma + sigma.transpose());
}

Sample generate(const SyntheticModel& model, Index n, std::uint64_t trial) {
  if (n < 1) throw InvalidArgument("sample count must be positive");
  Rng rng(model.seed, trial);
  Sample sample;
  sample.x.resize(model.p(), n);
  rng.fill_normal(sample.x);
  sample.y = model.sigma_sqrt * sample.x;
  sample.y.colwise() += model.mu;
  return sample;
}

}  // namespace vbmse
