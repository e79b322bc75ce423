// Batch front end over the vbmse shared library: fit, select gamma, backtest,
// sweep, synthesize fixtures and run the numerical validation suite. CSV in,
// CSV/JSON out; deterministic under a fixed --seed.
//
// Exit codes: 0 success, 1 validation failure, 2 usage or input error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vbmse.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitUsage = 2;

struct ReturnsHandle {
  vbmse_returns* ptr = nullptr;
  ~ReturnsHandle() { vbmse_returns_free(ptr); }
};

int report_error(const char* what, vbmse_status status) {
  std::fprintf(stderr, "error: %s: %s\n", what, vbmse_last_error());
  return status == VBMSE_ERROR_VALIDATION_FAILED ? kExitValidationFailure : kExitUsage;
}

// "p=50,n=500,rho=0.6,mu=1.0[,seed=7][,factors=3]"
vbmse_synth_options parse_synth_spec(const std::string& spec) {
  vbmse_synth_options opts;
  vbmse_synth_options_init(&opts);
  std::string token;
  std::istringstream stream(spec);
  while (std::getline(stream, token, ',')) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--synth", "expected key=value pairs");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "p")
        opts.p = std::stoi(value);
      else if (key == "n" || key == "days")
        opts.days = std::stoi(value);
      else if (key == "rho")
        opts.rho = std::stod(value);
      else if (key == "mu")
        opts.mu = std::stod(value);
      else if (key == "seed")
        opts.seed = std::stoull(value);
      else if (key == "factors")
        opts.n_factors = std::stoi(value);
      else
        throw CLI::ValidationError("--synth", "unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw CLI::ValidationError("--synth", "bad value for '" + key + "'");
    }
  }
  return opts;
}

struct CommonFlags {
  std::string input;
  std::string mode = "returns";
  std::string synth_spec;
  double grid_min_mult = 1e-4;
  double grid_max_mult = 1e3;
  int grid_points = 200;
  bool exact_t = false;
  int bracket_sign = 0;      // advanced override; 0 keeps the frozen default
  int curvature_factor = 0;  // advanced override; 0 keeps the frozen default
  std::uint64_t seed = 1;
};

void add_grid_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--grid-min-mult", flags.grid_min_mult,
                  "grid lower bound as a multiple of tr(SCM)/p");
  cmd->add_option("--grid-max-mult", flags.grid_max_mult,
                  "grid upper bound as a multiple of tr(SCM)/p");
  cmd->add_option("--grid-points", flags.grid_points, "log-spaced grid size")->default_val(200);
  cmd->add_flag("--exact-t", flags.exact_t,
                "use the exact (n-1)/n trace factor in the fixed points");
  cmd->add_option("--eq22-sign", flags.bracket_sign,
                  "override the frozen bracket sign (+1/-1); diagnostics only")
      ->group("");
  cmd->add_option("--eq22-factor", flags.curvature_factor,
                  "override the curvature-factor convention (1/2); diagnostics only")
      ->group("");
}

vbmse_select_options to_select(const CommonFlags& flags) {
  vbmse_select_options opts;
  vbmse_select_options_init(&opts);
  opts.grid.min_mult = flags.grid_min_mult;
  opts.grid.max_mult = flags.grid_max_mult;
  opts.grid.points = flags.grid_points;
  opts.exact_t_factor = flags.exact_t ? 1 : 0;
  opts.bracket_sign = flags.bracket_sign;
  opts.curvature_factor = flags.curvature_factor;
  return opts;
}

int load_returns(const CommonFlags& flags, ReturnsHandle& handle) {
  const int prices = flags.mode == "prices" ? 1 : 0;
  const vbmse_status status = vbmse_returns_load_csv(flags.input.c_str(), prices, &handle.ptr);
  if (status != VBMSE_OK) return report_error("reading input", status);
  return kExitOk;
}

void print_check_table(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) return;
  nlohmann::json summary;
  try {
    in >> summary;
  } catch (...) {
    return;
  }
  std::printf("%-28s %12s %12s  %s\n", "check", "deviation", "tolerance", "result");
  for (const auto& check : summary.value("checks", nlohmann::json::array())) {
    std::printf("%-28s %12.4e %12.4e  %s\n", check.value("name", "?").c_str(),
                check.value("deviation", 0.0), check.value("tolerance", 0.0),
                check.value("pass", false) ? "pass" : "FAIL");
  }
  if (summary.contains("eq22_gate")) {
    std::printf("bracket gate chose: %s\n",
                summary["eq22_gate"].value("chosen", "?").c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regularized minimum-variance portfolio toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string output;
  std::string oos_output, weights_output;
  std::string methods = "vb_mse";
  std::string variants;
  std::vector<int> n_list;
  int window = 0;
  int rebalance = 20;
  int trials = 0;
  int threads = 0;
  double annualization = 250.0;
  bool poison_tail = false;

  // synth: write a synthetic returns CSV fixture.
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic returns CSV");
  synth_cmd->add_option("--synth", flags.synth_spec, "p=..,n=..,rho=..,mu=..[,seed=..][,factors=..]")
      ->required();
  synth_cmd->add_option("--output", output, "output CSV path")->required();
  synth_cmd->add_option("--seed", flags.seed, "seed override");

  // select-gamma: print gamma_opt and write the consistent-MSE curve.
  auto* select_cmd = app.add_subcommand("select-gamma", "select the regularization parameter");
  select_cmd->add_option("--input", flags.input, "returns CSV")->required();
  select_cmd->add_option("--mode", flags.mode, "input mode: returns|prices")
      ->check(CLI::IsMember({"returns", "prices"}));
  select_cmd->add_option("--output", output, "curve CSV path");
  add_grid_flags(select_cmd, flags);

  // mse-curve: all-variant curve CSV.
  auto* curve_cmd = app.add_subcommand("mse-curve", "write MSE curves over the gamma grid");
  curve_cmd->add_option("--input", flags.input, "returns CSV");
  curve_cmd->add_option("--mode", flags.mode, "input mode: returns|prices")
      ->check(CLI::IsMember({"returns", "prices"}));
  curve_cmd->add_option("--synth", flags.synth_spec, "synthetic model spec (enables oracle curves)");
  curve_cmd->add_option("--output", output, "curve CSV path")->required();
  curve_cmd->add_option("--variants", variants,
                        "comma list: consistent,plugin,semi_oracle,asymptotic,mc_oracle");
  curve_cmd->add_option("--trials", trials, "Monte-Carlo trials for mc_oracle");
  curve_cmd->add_option("--threads", threads, "worker threads (0 = auto)");
  add_grid_flags(curve_cmd, flags);

  // backtest / sweep.
  auto* backtest_cmd = app.add_subcommand("backtest", "rolling out-of-sample backtest");
  backtest_cmd->add_option("--input", flags.input, "returns CSV")->required();
  backtest_cmd->add_option("--mode", flags.mode, "input mode: returns|prices")
      ->check(CLI::IsMember({"returns", "prices"}));
  backtest_cmd->add_option("--window", window, "training window length in days")->required();
  backtest_cmd->add_option("--rebalance", rebalance, "holding days per window")->default_val(20);
  backtest_cmd->add_option("--methods", methods, "comma list of methods")->default_val("vb_mse");
  backtest_cmd->add_option("--annualization", annualization, "trading days per year")
      ->default_val(250.0);
  backtest_cmd->add_option("--output", output, "report CSV path")->required();
  backtest_cmd->add_option("--dump-returns", oos_output, "per-day out-of-sample returns CSV");
  backtest_cmd->add_option("--dump-weights", weights_output, "per-window weights CSV");
  backtest_cmd->add_flag("--poison-tail", poison_tail,
                         "test mode: perturb the final holding block before running")
      ->group("");
  backtest_cmd->add_option("--seed", flags.seed, "seed for the poisoning perturbation");
  add_grid_flags(backtest_cmd, flags);

  auto* sweep_cmd = app.add_subcommand("sweep", "backtest across training-window lengths");
  sweep_cmd->add_option("--input", flags.input, "returns CSV")->required();
  sweep_cmd->add_option("--mode", flags.mode, "input mode: returns|prices")
      ->check(CLI::IsMember({"returns", "prices"}));
  sweep_cmd->add_option("--n-list", n_list, "training window lengths")->required()->delimiter(',');
  sweep_cmd->add_option("--rebalance", rebalance, "holding days per window")->default_val(20);
  sweep_cmd->add_option("--methods", methods, "comma list of methods")->default_val("vb_mse");
  sweep_cmd->add_option("--annualization", annualization, "trading days per year")
      ->default_val(250.0);
  sweep_cmd->add_option("--output", output, "report CSV path")->required();
  add_grid_flags(sweep_cmd, flags);

  // validate: numerical suite, JSON summary.
  int val_p = 100, val_n = 100, val_reps = 20;
  double de_tolerance = 0.05;
  auto* validate_cmd = app.add_subcommand("validate", "run the numerical validation suite");
  validate_cmd->add_option("--p", val_p, "dimension")->default_val(100);
  validate_cmd->add_option("--n", val_n, "sample count")->default_val(100);
  validate_cmd->add_option("--reps", val_reps, "Monte-Carlo repetitions")->default_val(20);
  validate_cmd->add_option("--seed", flags.seed, "suite seed");
  validate_cmd->add_option("--de-tolerance", de_tolerance,
                           "tolerance for deterministic-equivalent checks");
  validate_cmd->add_option("--threads", threads, "worker threads (0 = auto)");
  validate_cmd->add_option("--output", output, "JSON summary path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (synth_cmd->parsed()) {
    vbmse_synth_options opts = parse_synth_spec(flags.synth_spec);
    if (flags.seed != 1) opts.seed = flags.seed;
    ReturnsHandle handle;
    vbmse_status status = vbmse_returns_synth(&opts, &handle.ptr);
    if (status != VBMSE_OK) return report_error("generating data", status);
    status = vbmse_returns_write_csv(handle.ptr, output.c_str());
    if (status != VBMSE_OK) return report_error("writing output", status);
    int32_t p = 0, days = 0;
    vbmse_returns_dims(handle.ptr, &p, &days);
    std::printf("wrote %d assets x %d days to %s\n", p, days, output.c_str());
    return kExitOk;
  }

  if (select_cmd->parsed()) {
    ReturnsHandle handle;
    if (const int rc = load_returns(flags, handle); rc != kExitOk) return rc;
    const vbmse_select_options opts = to_select(flags);
    double gamma_opt = 0.0;
    const vbmse_status status = vbmse_select_gamma(
        handle.ptr, &opts, &gamma_opt, output.empty() ? nullptr : output.c_str());
    if (status != VBMSE_OK) return report_error("selecting gamma", status);
    std::printf("gamma_opt=%.17g\n", gamma_opt);
    return kExitOk;
  }

  if (curve_cmd->parsed()) {
    const bool has_input = !flags.input.empty();
    const bool has_synth = !flags.synth_spec.empty();
    if (has_input == has_synth) {
      std::fprintf(stderr, "error: mse-curve needs exactly one of --input / --synth\n");
      return kExitUsage;
    }
    vbmse_curve_options opts;
    vbmse_curve_options_init(&opts);
    opts.select = to_select(flags);
    opts.variants = variants.empty() ? nullptr : variants.c_str();
    opts.mc_trials = trials;
    opts.threads = threads;
    vbmse_status status = VBMSE_OK;
    if (has_synth) {
      vbmse_synth_options synth = parse_synth_spec(flags.synth_spec);
      if (flags.seed != 1) synth.seed = flags.seed;
      status = vbmse_mse_curve(nullptr, &synth, &opts, output.c_str());
    } else {
      ReturnsHandle handle;
      if (const int rc = load_returns(flags, handle); rc != kExitOk) return rc;
      status = vbmse_mse_curve(handle.ptr, nullptr, &opts, output.c_str());
    }
    if (status != VBMSE_OK) return report_error("computing curves", status);
    std::printf("wrote %s\n", output.c_str());
    return kExitOk;
  }

  if (backtest_cmd->parsed() || sweep_cmd->parsed()) {
    ReturnsHandle handle;
    if (const int rc = load_returns(flags, handle); rc != kExitOk) return rc;
    vbmse_backtest_options opts;
    vbmse_backtest_options_init(&opts);
    opts.select = to_select(flags);
    opts.rebalance = rebalance;
    opts.annualization_days = annualization;
    opts.methods = methods.c_str();
    opts.poison_tail = poison_tail ? 1 : 0;
    opts.poison_seed = flags.seed;
    vbmse_status status = VBMSE_OK;
    if (backtest_cmd->parsed()) {
      status = vbmse_backtest(handle.ptr, window, &opts, output.c_str(),
                              oos_output.empty() ? nullptr : oos_output.c_str(),
                              weights_output.empty() ? nullptr : weights_output.c_str());
    } else {
      std::vector<int32_t> windows(n_list.begin(), n_list.end());
      status = vbmse_sweep(handle.ptr, windows.data(), static_cast<int32_t>(windows.size()),
                           &opts, output.c_str());
    }
    if (status != VBMSE_OK) return report_error("running backtest", status);
    std::printf("wrote %s\n", output.c_str());
    return kExitOk;
  }

  if (validate_cmd->parsed()) {
    vbmse_validate_options opts;
    vbmse_validate_options_init(&opts);
    opts.p = val_p;
    opts.n = val_n;
    opts.reps = val_reps;
    opts.seed = flags.seed;
    opts.de_tolerance = de_tolerance;
    opts.threads = threads;
    int32_t all_pass = 0;
    const vbmse_status status = vbmse_validate(&opts, output.c_str(), &all_pass);
    if (status == VBMSE_OK || status == VBMSE_ERROR_VALIDATION_FAILED) print_check_table(output);
    if (status == VBMSE_OK && all_pass) {
      std::printf("validation suite passed; summary at %s\n", output.c_str());
      return kExitOk;
    }
    if (status == VBMSE_ERROR_VALIDATION_FAILED) {
      std::fprintf(stderr, "validation suite FAILED; summary at %s\n", output.c_str());
      return kExitValidationFailure;
    }
    return report_error("running validation", status);
  }

  return kExitUsage;
}
