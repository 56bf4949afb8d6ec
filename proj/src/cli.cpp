#include "depin/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <ostream>

#include "depin/errors.hpp"
#include "depin/verify.hpp"

namespace depin {

namespace fs = std::filesystem;

namespace {

void write_resolved(const RunConfig& config) {
  write_atomic(fs::path(config.out) / "resolved_config.cfg", to_text(config));
}

PrecipitateConfig field_config(const RunConfig& config) {
  const PrecipitateParams p = config.precipitate_params();
  if (p.count > 0) return sample_config(p);
  p.validate();
  return PrecipitateConfig{p, {}};
}

struct Model {
  int dim = 1;
  Obstacles obstacles;
  double varpi = 0.0;
};

Model build_model(const RunConfig& config) {
  const PinningField field(field_config(config), config.epsilon);
  Model m;
  switch (config.equation) {
    case Equation::dislocation: {
      m.dim = 1;
      m.varpi = config.varpi;
      if (std::isnan(m.varpi)) {
        m.varpi = field.config().centers.empty() ? 0.0 : field.config().centers.front().x[1];
      }
      m.obstacles = slice_glide_plane(field, m.varpi).obstacles();
      break;
    }
    case Equation::twin:
      m.dim = 2;
      m.obstacles = field.obstacles();
      break;
    default:
      m.dim = qew_dim(config.equation);
      m.obstacles = field.obstacles();
      break;
  }
  return m;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace

int cmd_gen(const RunConfig& config, std::ostream& log) {
  const PrecipitateConfig field = field_config(config);
  write_atomic(fs::path(config.out) / "precipitates.csv", precipitates_csv(field));
  write_resolved(config);
  if (config.verbosity > 0) {
    log << "wrote " << field.centers.size() << " precipitates to "
        << (fs::path(config.out) / "precipitates.csv").string() << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
  const Model model = build_model(config);
  const EvolverSpec spec = config.evolver_spec();
  Evolver evolver(spec, model.dim, model.obstacles);

  InterfaceState state(model.dim, config.n_grid);
  if (!config.resume.empty()) {
    state = read_state(config.resume);
    require(state.dim() == model.dim && state.n() == config.n_grid, "resume",
            "saved state does not match the equation and grid");
  }
  require(config.t_max > state.t(), "t_max", "must exceed the start time of the run");

  const Thresholds th = config.thresholds();
  std::vector<ProbeSample> samples;
  StoppingRule rule;
  rule.t_max = config.t_max;
  rule.sample_interval =
      config.sample_interval > 0.0 ? config.sample_interval : (config.t_max - state.t()) / 100.0;
  const auto footprints = evolver.footprints();
  rule.on_sample = [&](const InterfaceState& s, const TrajectorySample& sample) {
    samples.push_back(annotate_sample(s, sample, footprints));
    return false;
  };
  const auto summary = evolve(std::move(state), evolver, rule);

  const fs::path out(config.out);
  write_atomic(out / "trajectory.csv", trajectory_csv(summary.samples));
  write_state(out / "final_state", summary.final_state);
  nlohmann::json j;
  j["equation"] = to_string(config.equation);
  j["force"] = config.force;
  j["dt"] = evolver.dt();
  j["t_final"] = summary.final_state.t();
  j["obstacles"] = footprints.size();
  if (config.equation == Equation::dislocation) j["varpi"] = model.varpi;
  if (config.classify) {
    const Classification c =
        classify(samples, config.force, static_cast<int>(footprints.size()), th, dwell_time(spec, th));
    j["classification"] = to_json(c);
    if (config.verbosity > 0) log << "verdict: " << to_string(c.verdict) << "\n";
  }
  write_atomic(out / "classification.json", json_text(j));
  write_resolved(config);
  if (config.verbosity > 0) {
    const auto& last = summary.samples.back();
    log << "t = " << last.t << ": min " << last.min << ", mean " << last.mean << ", max "
        << last.max << "\n";
  }
  return kExitOk;
}

int cmd_bounds(const RunConfig& config, std::ostream& log) {
  BoundReport r;
  switch (config.equation) {
    case Equation::dislocation:
      r = disloc_bounds(config.R, config.lambda, config.phi_lower, config.phi_upper, config.beta);
      break;
    case Equation::twin:
      r = twin_bounds(config.R, config.lambda, config.phi_lower, config.phi_upper, config.beta);
      break;
    default:
      r = qew_bounds(qew_dim(config.equation), config.R, config.lambda, config.phi_lower,
                     config.phi_upper, config.beta);
      break;
  }
  const std::string text = json_text(to_json(r));
  write_atomic(fs::path(config.out) / "bounds.json", text);
  write_resolved(config);
  log << text;
  return kExitOk;
}

int cmd_sweep(const RunConfig& config, std::ostream& log) {
  SweepOptions options = config.sweep_options();
  const fs::path out(config.out);
  std::mutex log_mutex;
  options.on_row = [&](std::size_t i, const SweepRow& row) {
    char name[32];
    std::snprintf(name, sizeof name, "cell_%03zu.csv", i);
    write_atomic(out / "cells" / name, sweep_csv(std::span<const SweepRow>(&row, 1)));
    if (config.verbosity > 0) {
      std::lock_guard lock(log_mutex);
      log << "R = " << row.R << " seed " << row.seed << ": [" << row.F_lo << ", " << row.F_hi << "]"
          << (row.excluded ? " excluded" : "") << "\n";
    }
  };
  const SweepResult result = sweep_radius(options);
  write_atomic(out / "sweep.csv", sweep_csv(result.rows));
  nlohmann::json fit = to_json(result.fit);
  if (!result.fit_ok) {
    fit["slope"] = nullptr;
    fit["stderr"] = nullptr;
    fit["intercept"] = nullptr;
    fit["error"] = result.fit_error;
  }
  write_atomic(out / "fit.json", json_text(fit));
  write_resolved(config);
  log << json_text(fit);
  if (!result.fit_ok) {
    log << "fit failed: " << result.fit_error << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
  VerifyOptions o;
  o.seed = config.seed;
  o.field = config.precipitate_params();
  o.alpha = config.alpha;
  o.alpha_fault = config.fault == "alpha" ? 0.05 : 0.0;
  o.full = config.verify_full;
  const VerifyReport report = run_verification(o);
  write_atomic(fs::path(config.out) / "verify.txt", report.text());
  write_resolved(config);
  log << report.text();
  return report.all_passed() ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interface depinning in precipitate fields"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> settings;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  std::string equation;
  double alpha = 0.0;
  std::string resume;
  bool inject_fault = false;
  bool full = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "root seed (U64)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads for sweeps");
    sub->add_option("--equation", equation, "twin | dislocation | qew1 | qew2 | qew3");
    sub->add_option("--alpha", alpha, "order of the fractional operator");
    sub->add_option("--set", settings, "override a configuration key (key=value), repeatable");
  };
  auto* gen = app.add_subcommand("gen", "sample a precipitate field and write it as CSV");
  auto* simulate = app.add_subcommand("simulate", "evolve an interface and classify it");
  auto* bounds = app.add_subcommand("bounds", "analytic critical-force bounds as JSON");
  auto* sweep = app.add_subcommand("sweep", "critical force versus radius and scaling fit");
  auto* verify = app.add_subcommand("verify", "self-checks of the numerical building blocks");
  for (auto* sub : {gen, simulate, bounds, sweep, verify}) common(sub);
  simulate->add_option("--resume", resume, "continue from a saved state (path without .bin/.hdr)");
  verify->add_flag("--inject-fault", inject_fault, "perturb the operator order to test detection");
  verify->add_flag("--full", full, "larger statistical samples");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set", "expected key=value, got '" + s + "'");
      config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) config.seed = seed;
    if (sub->count("--out")) config.out = out_dir;
    if (sub->count("--threads")) config.threads = threads;
    if (sub->count("--equation")) config.equation = parse_equation(equation);
    if (sub->count("--alpha")) config.alpha = alpha;
    if (!resume.empty()) config.resume = resume;
    if (inject_fault) config.fault = "alpha";
    if (full) config.verify_full = true;
    config.validate();

    if (sub == gen) return cmd_gen(config, out);
    if (sub == simulate) return cmd_simulate(config, out);
    if (sub == bounds) return cmd_bounds(config, out);
    if (sub == sweep) return cmd_sweep(config, out);
    return cmd_verify(config, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IllDefinedProfile& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const BudgetExhausted& e) {
    err << "budget exhausted: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace depin
