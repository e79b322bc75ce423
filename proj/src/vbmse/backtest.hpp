#pragma once

#include <string>
#include <vector>

#include "vbmse/common.hpp"
#include "vbmse/ingest.hpp"
#include "vbmse/selector.hpp"

namespace vbmse {

enum class Method { VbMse, Plugin, Lw, ScmPinv, EqualWeight };

Method method_from_string(const std::string& name);
std::string method_name(Method m);
std::vector<std::string> known_methods();

struct BacktestConfig {
  GridConfig grid;
  ConsistentFormula formula;
  double annualization_days = 250.0;  // realized risk is scaled by sqrt of this
  bool capture_weights = false;       // keep per-window weights in the report
};

// Out-of-sample result of one (method, window length) pair. Exactly
// T - n_window out-of-sample days are produced; weights are fixed within each
// holding block and the trailing partial block is kept.
struct BacktestReport {
  std::string method;
  Index n_window = 0;
  Index rebalance = 0;
  std::vector<double> oos_returns;           // chronological, length T - n_window
  std::vector<double> gammas;                // per-rebalance selected gamma, where applicable
  std::vector<Vec> window_weights;           // filled when capture_weights is set
  Index num_rebalances = 0;
  double realized_risk_daily = 0.0;          // stddev of oos_returns, n-1 denominator
  double realized_risk_annualized = 0.0;
};

// Fits moments on each training window, builds weights with the requested
// method and records w'y for every holding day. A method failure in any
// window aborts with an error naming that window; nothing is skipped
// silently.
BacktestReport run_backtest(const ReturnsMatrix& r, Index n_window, Index rebalance, Method method,
                            const BacktestConfig& cfg = {});

// Cross product of methods x window lengths, each via run_backtest.
std::vector<BacktestReport> sweep_windows(const ReturnsMatrix& r, const std::vector<Index>& n_list,
                                          const std::vector<Method>& methods, Index rebalance = 20,
                                          const BacktestConfig& cfg = {});

}  // namespace vbmse
