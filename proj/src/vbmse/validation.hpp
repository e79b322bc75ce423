#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vbmse/common.hpp"
#include "vbmse/selector.hpp"

namespace vbmse {

// Cross-cutting numerical harness binding the deterministic-equivalent
// relations, the MSE cross-checks and the bracket-sign gate to tolerances.
// Consumed by the `validate` command and by CI.

struct SuiteConfig {
  Index p = 100;
  Index n = 100;
  int reps = 20;
  std::uint64_t seed = 20260801;
  double rho = 0.6;               // AR(1) coefficient of the test covariance
  double gamma_mult = 1.0;        // relation checks run at gamma = mult * mean eigenvalue
  double de_tolerance = 0.05;     // asymptotic / deterministic-equivalent claims
  double mc_sigma_tolerance = 3.0;  // MC cross-checks, in standard errors
  double delta_tolerance = 0.05;  // consistency of delta estimators
  int mc_cross_trials = 2000;
  int mc_curve_trials = 150;
  GridConfig grid{1e-4, 1e3, 120};
  int threads = 0;
};

struct CheckResult {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int reps = 0;
  Index p = 0;
  Index n = 0;
  std::uint64_t seed = 0;
};

struct GateResult {
  ConsistentFormula chosen;
  // median |consistent - semi_oracle| / |semi_oracle| per formula variant
  std::map<std::string, double> deviations;
};

struct SuiteReport {
  SuiteConfig config;
  std::vector<CheckResult> checks;
  GateResult gate;
  bool all_pass = false;
};

// Evaluates both sign conventions of the consistent-MSE bracket (and both
// curvature-factor conventions) against the semi-oracle on synthetic AR(1)
// data and returns the variant with the smallest median relative deviation
// over the central grid decades.
GateResult run_sign_gate(Index p, Index n, int reps, std::uint64_t seed, double rho = 0.6,
                         const GridConfig& grid = {1e-4, 1e3, 120});

SuiteReport run_suite(const SuiteConfig& config = {});

std::string suite_report_json(const SuiteReport& report);

// Median of a copy; 0 for empty input.
double median(std::vector<double> values);

// Index range [first, last] of the grid points within `decades` decades
// centered at the geometric midpoint of the grid.
std::pair<Index, Index> central_decades(const Vec& gammas, double decades = 2.0);

}  // namespace vbmse
