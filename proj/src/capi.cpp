#include "vbmse.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "vbmse/backtest.hpp"
#include "vbmse/csv_io.hpp"
#include "vbmse/datagen.hpp"
#include "vbmse/ingest.hpp"
#include "vbmse/rng.hpp"
#include "vbmse/selector.hpp"
#include "vbmse/validation.hpp"

struct vbmse_returns {
  vbmse::ReturnsMatrix data;
};

namespace {

thread_local std::string g_last_error;

vbmse_status fail(vbmse_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
vbmse_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return VBMSE_OK;
  } catch (const vbmse::ParseError& e) {
    return fail(VBMSE_ERROR_PARSE, e.what());
  } catch (const vbmse::InvalidArgument& e) {
    return fail(VBMSE_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const vbmse::InsufficientHistory& e) {
    return fail(VBMSE_ERROR_INSUFFICIENT_HISTORY, e.what());
  } catch (const vbmse::NumericError& e) {
    return fail(VBMSE_ERROR_NUMERIC, e.what());
  } catch (const vbmse::IoError& e) {
    return fail(VBMSE_ERROR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(VBMSE_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(VBMSE_ERROR_INTERNAL, "unknown error");
  }
}

vbmse::GridConfig to_grid(const vbmse_grid_options& g) {
  return vbmse::GridConfig{g.min_mult, g.max_mult, g.points};
}

vbmse::ConsistentFormula to_formula(const vbmse_select_options& o) {
  vbmse::ConsistentFormula f;
  if (o.bracket_sign > 0)
    f.sign = vbmse::BracketSign::Plus;
  else if (o.bracket_sign < 0)
    f.sign = vbmse::BracketSign::Minus;
  if (o.curvature_factor == 1)
    f.factor = vbmse::CurvatureFactor::MinusGammaDtilde;
  else if (o.curvature_factor == 2)
    f.factor = vbmse::CurvatureFactor::PlusGammaDtilde;
  return f;
}

vbmse::SyntheticModel to_model(const vbmse_synth_options& s) {
  if (s.p < 2) throw vbmse::InvalidArgument("synthetic model needs p >= 2");
  const vbmse::Mat sigma = s.n_factors > 0 ? vbmse::factor_sigma(s.p, s.n_factors, s.seed)
                                           : vbmse::ar1_sigma(s.p, s.rho);
  return vbmse::make_model(sigma, vbmse::Vec::Constant(s.p, s.mu), s.seed);
}

std::vector<std::string> split_csv_list(const char* text) {
  std::vector<std::string> out;
  if (!text) return out;
  std::string token;
  std::istringstream stream(text);
  while (std::getline(stream, token, ',')) {
    while (!token.empty() && token.front() == ' ') token.erase(token.begin());
    while (!token.empty() && token.back() == ' ') token.pop_back();
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

std::vector<vbmse::Method> parse_methods(const char* text) {
  auto names = split_csv_list(text);
  if (names.empty()) names = {"vb_mse"};
  std::vector<vbmse::Method> methods;
  methods.reserve(names.size());
  for (const auto& name : names) methods.push_back(vbmse::method_from_string(name));
  return methods;
}

vbmse::BacktestConfig to_backtest_config(const vbmse_backtest_options& o, bool capture_weights) {
  vbmse::BacktestConfig cfg;
  cfg.grid = to_grid(o.select.grid);
  cfg.formula = to_formula(o.select);
  cfg.annualization_days = o.annualization_days;
  cfg.capture_weights = capture_weights;
  return cfg;
}

// Perturbs the final holding block in place. Those columns are nobody's
// training data, so portfolio weights must be identical with and without the
// perturbation; only the tail returns may move.
void poison_tail_block(vbmse::ReturnsMatrix& r, vbmse::Index n_window, vbmse::Index rebalance,
                       std::uint64_t seed) {
  const auto slices = vbmse::rolling_windows(r, n_window, rebalance);
  const auto& last = slices.back();
  vbmse::Rng rng(seed, 0xbadULL);
  const double scale = 0.01 * std::max(1.0, r.values.cwiseAbs().maxCoeff());
  for (vbmse::Index j = 0; j < last.hold_len; ++j)
    for (vbmse::Index i = 0; i < r.p(); ++i)
      r.values(i, last.t_index + j) += scale * rng.next_normal();
}

vbmse::ReturnsMatrix synth_returns(const vbmse_synth_options& s) {
  if (s.days < 2) throw vbmse::InvalidArgument("synthetic data needs at least 2 days");
  const vbmse::SyntheticModel model = to_model(s);
  const vbmse::Sample sample = vbmse::generate(model, s.days, 0);
  vbmse::ReturnsMatrix r;
  r.values = sample.y;
  r.assets.reserve(static_cast<std::size_t>(s.p));
  for (int32_t i = 0; i < s.p; ++i) r.assets.push_back("A" + std::to_string(i + 1));
  r.dates.reserve(static_cast<std::size_t>(s.days));
  for (int32_t t = 0; t < s.days; ++t) {
    std::ostringstream day;
    day.width(6);
    day.fill('0');
    day << t + 1;
    r.dates.push_back("d" + day.str());
  }
  return r;
}

}  // namespace

extern "C" {

const char* vbmse_version(void) { return "1.0.0"; }

const char* vbmse_last_error(void) { return g_last_error.c_str(); }

vbmse_status vbmse_returns_load_csv(const char* path, int32_t prices_mode, vbmse_returns** out) {
  if (!path || !out) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<vbmse_returns>();
    handle->data = vbmse::parse_returns_csv(
        path, prices_mode ? vbmse::CsvMode::Prices : vbmse::CsvMode::Returns);
    *out = handle.release();
  });
}

vbmse_status vbmse_returns_from_values(const double* values, int32_t p, int32_t days,
                                       vbmse_returns** out) {
  if (!values || !out) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (p < 2 || days < 2) throw vbmse::InvalidArgument("need p >= 2 and days >= 2");
    auto handle = std::make_unique<vbmse_returns>();
    handle->data.values = Eigen::Map<const vbmse::Mat>(values, p, days);
    for (int32_t i = 0; i < p; ++i) handle->data.assets.push_back("A" + std::to_string(i + 1));
    for (int32_t t = 0; t < days; ++t) handle->data.dates.push_back("d" + std::to_string(t + 1));
    *out = handle.release();
  });
}

void vbmse_synth_options_init(vbmse_synth_options* opts) {
  if (!opts) return;
  opts->p = 50;
  opts->days = 500;
  opts->rho = 0.6;
  opts->mu = 0.0;
  opts->n_factors = 0;
  opts->seed = 1;
}

vbmse_status vbmse_returns_synth(const vbmse_synth_options* opts, vbmse_returns** out) {
  if (!opts || !out) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<vbmse_returns>();
    handle->data = synth_returns(*opts);
    *out = handle.release();
  });
}

void vbmse_returns_free(vbmse_returns* r) { delete r; }

vbmse_status vbmse_returns_dims(const vbmse_returns* r, int32_t* p, int32_t* days) {
  if (!r || !p || !days) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  *p = static_cast<int32_t>(r->data.p());
  *days = static_cast<int32_t>(r->data.days());
  return VBMSE_OK;
}

vbmse_status vbmse_returns_write_csv(const vbmse_returns* r, const char* path) {
  if (!r || !path) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { vbmse::atomic_write_text(path, vbmse::returns_to_csv(r->data)); });
}

void vbmse_select_options_init(vbmse_select_options* opts) {
  if (!opts) return;
  opts->grid = vbmse_grid_options{1e-4, 1e3, 200};
  opts->exact_t_factor = 0;
  opts->bracket_sign = 0;
  opts->curvature_factor = 0;
}

vbmse_status vbmse_select_gamma(const vbmse_returns* r, const vbmse_select_options* opts,
                                double* gamma_opt, const char* curve_csv_path_or_null) {
  if (!r || !opts || !gamma_opt) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const vbmse::SpectralMoments sm = vbmse::fit_moments(r->data.values);
    const vbmse::MseCurve curve = vbmse::select_gamma(sm, to_grid(opts->grid), to_formula(*opts));
    *gamma_opt = curve.gamma_opt;
    if (curve_csv_path_or_null) {
      vbmse::atomic_write_text(
          curve_csv_path_or_null,
          vbmse::curve_csv(curve.gammas, {{"mse_consistent", curve.values}}));
    }
  });
}

void vbmse_curve_options_init(vbmse_curve_options* opts) {
  if (!opts) return;
  vbmse_select_options_init(&opts->select);
  opts->variants = nullptr;
  opts->mc_trials = 0;
  opts->threads = 0;
}

vbmse_status vbmse_mse_curve(const vbmse_returns* r, const vbmse_synth_options* synth,
                             const vbmse_curve_options* opts, const char* out_csv_path) {
  if (!opts || !out_csv_path) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  if ((r == nullptr) == (synth == nullptr))
    return fail(VBMSE_ERROR_INVALID_ARGUMENT, "exactly one of returns/synth must be given");
  return guarded([&] {
    std::optional<vbmse::SyntheticModel> model;
    vbmse::Mat training;
    if (synth) {
      model = to_model(*synth);
      if (synth->days < 2) throw vbmse::InvalidArgument("synthetic data needs at least 2 days");
      training = vbmse::generate(*model, synth->days, 0).y;
    } else {
      training = r->data.values;
    }
    const vbmse::SpectralMoments sm = vbmse::fit_moments(training);
    const vbmse::Vec gammas = vbmse::make_gamma_grid(sm.lambda_bar(), to_grid(opts->select.grid));

    auto requested = split_csv_list(opts->variants);
    if (requested.empty()) {
      requested = {"consistent", "plugin"};
      if (model) {
        requested.push_back("semi_oracle");
        requested.push_back("asymptotic");
        if (opts->mc_trials > 0) requested.push_back("mc_oracle");
      }
    }

    std::vector<std::pair<std::string, vbmse::Vec>> columns;
    std::optional<vbmse::Vec> sig_vals;
    if (model) {
      Eigen::SelfAdjointEigenSolver<vbmse::Mat> eig(model->sigma);
      sig_vals = eig.eigenvalues().cwiseMax(0.0).eval();
    }
    for (const auto& name : requested) {
      if (name == "consistent") {
        const auto curve = vbmse::consistent_curve(sm, gammas, to_formula(opts->select));
        if (curve.gammas.size() != gammas.size())
          throw vbmse::NumericError("consistent curve dropped grid points");
        columns.emplace_back("mse_consistent", curve.values);
      } else if (name == "plugin") {
        columns.emplace_back("mse_plugin", vbmse::plugin_curve(sm, gammas).values);
      } else if (name == "semi_oracle") {
        if (!model) throw vbmse::InvalidArgument("semi_oracle needs a synthetic model");
        columns.emplace_back("mse_semi_oracle",
                             vbmse::semi_oracle_curve(sm, *model, gammas).values);
      } else if (name == "asymptotic") {
        if (!model) throw vbmse::InvalidArgument("asymptotic needs a synthetic model");
        columns.emplace_back(
            "mse_asymptotic",
            vbmse::asymptotic_curve(*sig_vals, sm.n, gammas).values);
      } else if (name == "mc_oracle") {
        if (!model) throw vbmse::InvalidArgument("mc_oracle needs a synthetic model");
        if (opts->mc_trials < 100) throw vbmse::InvalidArgument("mc_oracle needs mc_trials >= 100");
        const auto mc =
            vbmse::mc_curve(*model, sm.n, gammas, opts->mc_trials, opts->threads, 0x9a11ULL);
        columns.emplace_back("mse_mc_oracle", mc.means);
        columns.emplace_back("mse_mc_oracle_se", mc.std_errors);
      } else {
        throw vbmse::InvalidArgument("unknown MSE variant '" + name + "'");
      }
    }
    vbmse::atomic_write_text(out_csv_path, vbmse::curve_csv(gammas, columns));
  });
}

void vbmse_backtest_options_init(vbmse_backtest_options* opts) {
  if (!opts) return;
  vbmse_select_options_init(&opts->select);
  opts->rebalance = 20;
  opts->annualization_days = 250.0;
  opts->methods = nullptr;
  opts->poison_tail = 0;
  opts->poison_seed = 7;
}

vbmse_status vbmse_backtest(const vbmse_returns* r, int32_t n_window,
                            const vbmse_backtest_options* opts, const char* report_csv_path,
                            const char* oos_csv_path_or_null,
                            const char* weights_csv_path_or_null) {
  if (!r || !opts || !report_csv_path) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    vbmse::ReturnsMatrix data = r->data;
    if (opts->poison_tail) poison_tail_block(data, n_window, opts->rebalance, opts->poison_seed);
    const auto methods = parse_methods(opts->methods);
    const auto cfg = to_backtest_config(*opts, weights_csv_path_or_null != nullptr);
    std::vector<vbmse::BacktestReport> reports;
    reports.reserve(methods.size());
    for (const auto method : methods)
      reports.push_back(vbmse::run_backtest(data, n_window, opts->rebalance, method, cfg));
    vbmse::atomic_write_text(report_csv_path, vbmse::report_csv(reports));
    if (oos_csv_path_or_null)
      vbmse::atomic_write_text(oos_csv_path_or_null, vbmse::oos_returns_csv(reports, data));
    if (weights_csv_path_or_null)
      vbmse::atomic_write_text(weights_csv_path_or_null, vbmse::weights_csv(reports, data));
  });
}

vbmse_status vbmse_sweep(const vbmse_returns* r, const int32_t* n_windows, int32_t n_windows_len,
                         const vbmse_backtest_options* opts, const char* report_csv_path) {
  if (!r || !n_windows || n_windows_len < 1 || !opts || !report_csv_path)
    return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null or empty argument");
  return guarded([&] {
    const auto methods = parse_methods(opts->methods);
    std::vector<vbmse::Index> n_list(n_windows, n_windows + n_windows_len);
    const auto cfg = to_backtest_config(*opts, false);
    const auto reports = vbmse::sweep_windows(r->data, n_list, methods, opts->rebalance, cfg);
    vbmse::atomic_write_text(report_csv_path, vbmse::report_csv(reports));
  });
}

void vbmse_validate_options_init(vbmse_validate_options* opts) {
  if (!opts) return;
  opts->p = 100;
  opts->n = 100;
  opts->reps = 20;
  opts->seed = 20260801;
  opts->de_tolerance = 0.05;
  opts->mc_sigma_tolerance = 3.0;
  opts->threads = 0;
}

vbmse_status vbmse_validate(const vbmse_validate_options* opts, const char* json_path,
                            int32_t* all_pass) {
  if (!opts || !json_path || !all_pass) return fail(VBMSE_ERROR_INVALID_ARGUMENT, "null argument");
  bool passed = false;
  const vbmse_status status = guarded([&] {
    vbmse::SuiteConfig cfg;
    cfg.p = opts->p;
    cfg.n = opts->n;
    cfg.reps = opts->reps;
    cfg.seed = opts->seed;
    cfg.de_tolerance = opts->de_tolerance;
    cfg.mc_sigma_tolerance = opts->mc_sigma_tolerance;
    cfg.threads = opts->threads;
    const vbmse::SuiteReport report = vbmse::run_suite(cfg);
    vbmse::atomic_write_text(json_path, vbmse::suite_report_json(report));
    passed = report.all_pass;
  });
  if (status != VBMSE_OK) return status;
  *all_pass = passed ? 1 : 0;
  if (!passed) return fail(VBMSE_ERROR_VALIDATION_FAILED, "one or more validation checks failed");
  return VBMSE_OK;
}

}  // extern "C"
