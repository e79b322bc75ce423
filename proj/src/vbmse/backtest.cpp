#include "vbmse/backtest.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "vbmse/portfolio.hpp"

namespace vbmse {

Method method_from_string(const std::string& name) {
  if (name == "vb_mse") return Method::VbMse;
  if (name == "plugin") return Method::Plugin;
  if (name == "lw") return Method::Lw;
  if (name == "scm_pinv") return Method::ScmPinv;
  if (name == "equal_weight") return Method::EqualWeight;
  std::ostringstream msg;
  msg << "unknown method '" << name << "'; valid methods:";
  for (const auto& m : known_methods()) msg << ' ' << m;
  throw InvalidArgument(msg.str());
}

std::string method_name(Method m) {
  switch (m) {
    case Method::VbMse: return "vb_mse";
    case Method::Plugin: return "plugin";
    case Method::Lw: return "lw";
    case Method::ScmPinv: return "scm_pinv";
    case Method::EqualWeight: return "equal_weight";
  }
  return "unknown";
}

std::vector<std::string> known_methods() {
  return {"vb_mse", "plugin", "lw", "scm_pinv", "equal_weight"};
}

namespace {

struct WindowFit {
  PortfolioWeights weights;
  double gamma = std::numeric_limits<double>::quiet_NaN();
};

WindowFit fit_window(const ReturnsMatrix& r, const WindowSlice& slice, Method method,
                     const BacktestConfig& cfg) {
  WindowFit fit;
  switch (method) {
    case Method::EqualWeight:
      fit.weights = equal_weights(r.p());
      return fit;
    case Method::Lw: {
      const Mat train = slice.train(r);
      LwEstimate est;
      fit.weights = lw_weights(train, &est);
      fit.gamma = est.gamma;
      return fit;
    }
    default:
      break;
  }
  const SpectralMoments sm = fit_moments(slice.train(r));
  switch (method) {
    case Method::VbMse: {
      const MseCurve curve = select_gamma(sm, cfg.grid, cfg.formula);
      fit.weights = gmvp_weights(sm, curve.gamma_opt);
      fit.gamma = curve.gamma_opt;
      break;
    }
    case Method::Plugin: {
      const MseCurve curve = plugin_curve(sm, make_gamma_grid(sm.lambda_bar(), cfg.grid));
      fit.weights = gmvp_weights(sm, curve.gamma_opt);
      fit.gamma = curve.gamma_opt;
      break;
    }
    case Method::ScmPinv:
      fit.weights = scm_pinv_weights(sm);
      break;
    default:
      throw InvalidArgument("unhandled method");
  }
  return fit;
}

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

BacktestReport run_backtest(const ReturnsMatrix& r, Index n_window, Index rebalance, Method method,
                            const BacktestConfig& cfg) {
  const auto slices = rolling_windows(r, n_window, rebalance);

  BacktestReport report;
  report.method = method_name(method);
  report.n_window = n_window;
  report.rebalance = rebalance;
  report.num_rebalances = static_cast<Index>(slices.size());
  report.oos_returns.reserve(static_cast<std::size_t>(r.days() - n_window));

  for (std::size_t k = 0; k < slices.size(); ++k) {
    const WindowSlice& slice = slices[k];
    WindowFit fit;
    try {
      fit = fit_window(r, slice, method, cfg);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "method " << method_name(method) << " failed in window " << k
          << " (training days " << slice.t_index - slice.train_len << ".." << slice.t_index - 1
          << "): " << e.what();
      throw NumericError(msg.str());
    }
    if (std::abs(fit.weights.sum() - 1.0) > 1e-12) {
      throw NumericError("weights violate the budget constraint in window " + std::to_string(k));
    }
    if (std::isfinite(fit.gamma)) report.gammas.push_back(fit.gamma);
    if (cfg.capture_weights) report.window_weights.push_back(fit.weights.weights);
    const auto hold = slice.hold(r);
    for (Index j = 0; j < hold.cols(); ++j) {
      report.oos_returns.push_back(fit.weights.weights.dot(hold.col(j)));
    }
  }

  report.realized_risk_daily = sample_stddev(report.oos_returns);
  report.realized_risk_annualized = report.realized_risk_daily * std::sqrt(cfg.annualization_days);
  return report;
}

std::vector<BacktestReport> sweep_windows(const ReturnsMatrix& r, const std::vector<Index>& n_list,
                                          const std::vector<Method>& methods, Index rebalance,
                                          const BacktestConfig& cfg) {
  std::vector<BacktestReport> reports;
  reports.reserve(methods.size() * n_list.size());
  for (const Method method : methods) {
    for (const Index n : n_list) {
      reports.push_back(run_backtest(r, n, rebalance, method, cfg));
    }
  }
  return reports;
}

}  // namespace vbmse
