#include "depin/depinning.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "depin/errors.hpp"
#include "depin/rng.hpp"

namespace depin {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pinned: return "Pinned";
    case Verdict::propagating: return "Propagating";
    case Verdict::undecided: return "Undecided";
  }
  return "Unknown";
}

double relaxation_time(const EvolverSpec& spec) {
  const double order = spec.op == OperatorKind::fractional ? spec.alpha : 1.0;
  return 1.0 / std::pow(std::numbers::pi, 2.0 * order);
}

double dwell_time(const EvolverSpec& spec, const Thresholds& th) {
  return th.t_dwell > 0.0 ? th.t_dwell : th.dwell_tau_multiple * relaxation_time(spec);
}

// ---------------------------------------------------------------------------

Classification classify(std::span<const ProbeSample> samples, double F, int n_obstacles,
                        const Thresholds& th, double t_dwell) {
  Classification c;
  if (samples.empty()) return c;
  const auto& last = samples.back();
  c.max_displacement = last.s.max;
  c.crossed = last.crossed;
  c.simulated_time = last.s.t;

  const auto m = static_cast<std::size_t>(th.trailing_samples);
  if (samples.size() > m) {
    const auto& ref = samples[samples.size() - 1 - m];
    c.trailing_velocity = (last.s.mean - ref.s.mean) / (last.s.t - ref.s.t);
  }

  const int k_eff = std::min(th.k_min, n_obstacles);
  if (samples.size() > m && last.crossed >= k_eff && c.trailing_velocity > 0.0 &&
      c.trailing_velocity >= th.v_min_factor * F) {
    c.verdict = Verdict::propagating;
    return c;
  }

  // Pinned: every sample in the last t_dwell is (almost) at rest and below
  // the next untouched obstacle.
  const double t_start = last.s.t - t_dwell;
  if (t_start < samples.front().s.t - 1e-12) return c;
  const double v_pin = th.v_pin_factor * F;
  for (std::size_t i = samples.size(); i-- > 1;) {
    const auto& s = samples[i];
    if (s.s.max_velocity > v_pin || !(s.s.max < s.ceiling)) return c;
    if (samples[i - 1].s.t <= t_start + 1e-12) {
      c.verdict = Verdict::pinned;
      return c;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------

ProbeSample annotate_sample(const InterfaceState& state, const TrajectorySample& s,
                            std::span<const Footprint> footprints) {
  ProbeSample out;
  out.s = s;
  out.ceiling = std::numeric_limits<double>::infinity();
  const auto u = state.values();
  for (const auto& fp : footprints) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t node : fp.nodes) {
      lo = std::min(lo, u[node]);
      hi = std::max(hi, u[node]);
    }
    if (lo > fp.y + fp.outer) {
      ++out.crossed;
    } else if (hi <= fp.y - fp.outer) {
      out.ceiling = std::min(out.ceiling, fp.y - fp.outer);
    }
  }
  return out;
}

ProbeRecord probe(Evolver& evolver, double F, const Thresholds& th) {
  const auto wall_start = std::chrono::steady_clock::now();
  evolver.set_force(F);
  const auto footprints = evolver.footprints();
  const int n_obstacles = static_cast<int>(footprints.size());
  const int k_eff = std::min(th.k_min, n_obstacles);
  const double t_dwell = dwell_time(evolver.spec(), th);
  const double interval = t_dwell / th.samples_per_dwell;

  double t_max = 4.0 * t_dwell;
  if (F > 0.0) {
    const double target = k_eff > 0 ? footprints[static_cast<std::size_t>(k_eff - 1)].y +
                                          footprints[static_cast<std::size_t>(k_eff - 1)].outer
                                    : 0.0;
    t_max = std::max(t_max, th.t_factor * target / F + th.trailing_samples * interval);
  }

  std::vector<ProbeSample> samples;
  Classification verdict;
  StoppingRule rule;
  rule.sample_interval = interval;
  rule.extrapolate = th.extrapolate;
  // A jump may not carry a node over a flat top or touch an obstacle that is
  // still untouched.
  rule.accept_jump = [&](const InterfaceState& state, std::span<const double> cand) {
    const auto u = state.values();
    for (const auto& fp : footprints) {
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t node : fp.nodes) hi = std::max(hi, u[node]);
      const bool untouched = hi <= fp.y - fp.outer;
      for (std::size_t node : fp.nodes) {
        if (untouched && cand[node] > fp.y - fp.outer) return false;
        if (u[node] < fp.y + fp.plateau && cand[node] >= fp.y + fp.plateau) return false;
      }
    }
    return true;
  };
  bool skip_first = false;
  rule.on_sample = [&](const InterfaceState& state, const TrajectorySample& s) {
    if (skip_first) {
      skip_first = false;  // already recorded as the last sample of the first leg
      return false;
    }
    samples.push_back(annotate_sample(state, s, footprints));
    verdict = classify(samples, F, n_obstacles, th, t_dwell);
    return verdict.verdict != Verdict::undecided;
  };

  ProbeRecord rec;
  rec.F = F;
  rule.t_max = t_max;
  auto summary = evolve(InterfaceState(evolver.dim(), evolver.spec().n_grid), evolver, rule);
  if (verdict.verdict == Verdict::undecided) {
    // Continuing the same trajectory is identical to a fresh longer run.
    rec.retried = true;
    rule.t_max = t_max * th.retry_factor;
    skip_first = true;
    evolve(std::move(summary.final_state), evolver, rule);
  }
  rec.verdict = verdict.verdict;
  rec.evidence = verdict;
  rec.evidence.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return rec;
}

ProbeRecord probe(const ProbeSetup& setup, double F, const Thresholds& th) {
  EvolverSpec spec = setup.spec;
  spec.force = F;
  Evolver evolver(spec, setup.dim, setup.obstacles);
  return probe(evolver, F, th);
}

// ---------------------------------------------------------------------------

std::string DepinningEstimate::trace() const {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (i) os << ';';
    const char tag = probes[i].verdict == Verdict::pinned        ? 'P'
                     : probes[i].verdict == Verdict::propagating ? 'D'
                                                                 : 'U';
    os << probes[i].F << ':' << tag;
  }
  return os.str();
}

DepinningEstimate bisect_critical_force(const ProbeSetup& setup, double F_a, double F_b,
                                        const BisectionOptions& options) {
  require(std::isfinite(F_a) && F_a >= 0.0, "F_a", "must be finite and >= 0");
  require(std::isfinite(F_b) && F_b > F_a, "F_b", "must exceed F_a");
  require(options.tol > 0.0, "tol", "must be positive");
  require(options.budget >= 2, "budget", "must allow at least two probes");

  EvolverSpec spec = setup.spec;
  spec.force = F_b;
  Evolver evolver(spec, setup.dim, setup.obstacles);

  DepinningEstimate est;
  auto run = [&](double F) {
    est.probes.push_back(probe(evolver, F, options.thresholds));
    return est.probes.back().verdict;
  };
  auto out_of_budget = [&] { return static_cast<int>(est.probes.size()) >= options.budget; };

  double lo = F_a;
  double hi = F_b;
  bool hi_undecided = false;
  bool lo_pinned = false;

  // Upper end: grow until not Pinned.
  while (true) {
    const Verdict v = run(hi);
    if (v != Verdict::pinned) {
      hi_undecided = v == Verdict::undecided;
      break;
    }
    lo = hi;
    lo_pinned = true;
    if (out_of_budget()) throw BudgetExhausted("no propagating force found up to " + std::to_string(hi));
    hi *= 2.0;
  }
  // Lower end: shrink towards 0 until Pinned.
  if (!lo_pinned) {
    while (true) {
      if (out_of_budget()) throw BudgetExhausted("no pinned force found down to " + std::to_string(lo));
      const Verdict v = run(lo);
      if (v == Verdict::pinned) break;
      hi = lo;
      hi_undecided = v == Verdict::undecided;
      if (lo == 0.0) throw BudgetExhausted("the interface is not pinned even at F = 0");
      lo = lo * 0.5 < 0.5 * options.tol ? 0.0 : lo * 0.5;
    }
  }

  while (hi - lo > options.tol && !out_of_budget()) {
    const double mid = 0.5 * (lo + hi);
    const Verdict v = run(mid);
    if (v == Verdict::pinned) {
      lo = mid;
    } else {
      hi = mid;
      hi_undecided = v == Verdict::undecided;
    }
  }
  est.converged = hi - lo <= options.tol;
  // An Undecided upper end usually marks slow creep just above threshold;
  // step upwards until a force is decided Propagating.
  for (double step = options.tol; hi_undecided && est.converged && !out_of_budget(); step *= 2.0) {
    const Verdict v = run(hi + step);
    if (v == Verdict::pinned) break;  // non-monotone; left for the audit
    if (v == Verdict::propagating) {
      hi += step;
      hi_undecided = false;
    }
  }
  est.F_lo = lo;
  est.F_hi = hi;
  est.iterations = static_cast<int>(est.probes.size());
  est.hi_from_undecided = hi_undecided;
  return est;
}

int monotonicity_violations(std::span<const ProbeRecord> probes) {
  int count = 0;
  for (const auto& a : probes) {
    if (a.verdict != Verdict::propagating) continue;
    for (const auto& b : probes) {
      if (b.verdict == Verdict::pinned && b.F > a.F) ++count;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------

void SweepOptions::validate() const {
  require(!R_list.empty(), "R_list", "must not be empty");
  for (double R : R_list) require(R > 0.0 && R < 0.5, "R_list", "radii must lie in (0, 1/2)");
  require(n_seeds >= 1, "seeds", "must be at least 1");
  require(count >= 1, "count", "must be at least 1");
  require(kind != DefectKind::qew || (qew_dim >= 1 && qew_dim <= 3), "qew_dim",
          "must be 1, 2 or 3");
  require(tol_fraction > 0.0, "tol_fraction", "must be positive");
  require(delta >= 0.0, "delta", "must be >= 0");
  require(threads >= 1, "threads", "must be at least 1");
}

BoundReport sweep_bounds(const SweepOptions& o, double R) {
  switch (o.kind) {
    case DefectKind::dislocation: return disloc_bounds(R, o.lambda, o.phi_lower, o.phi_upper, o.beta);
    case DefectKind::twin: return twin_bounds(R, o.lambda, o.phi_lower, o.phi_upper, o.beta);
    case DefectKind::qew: return qew_bounds(o.qew_dim, R, o.lambda, o.phi_lower, o.phi_upper, o.beta);
  }
  throw ValidationError("kind", "unknown defect kind");
}

ProbeSetup sweep_cell_setup(const SweepOptions& o, double R, std::uint64_t cell_seed) {
  PrecipitateParams p;
  p.R = R;
  p.lambda = o.lambda;
  p.beta = o.beta;
  p.phi_lower = o.phi_lower;
  p.phi_upper = o.phi_upper;
  p.count = o.count;
  p.layout = Layout::column;
  p.seed = cell_seed;
  p.torus_dim = o.kind == DefectKind::qew ? o.qew_dim : 2;
  p.y_window = 3.0 * R + (o.count - 1) * p.min_spacing() + 1.0;
  const PinningField field(sample_config(p), o.epsilon);

  ProbeSetup setup;
  setup.spec.n_grid = o.n_grid;
  setup.spec.dt = o.dt;
  switch (o.kind) {
    case DefectKind::dislocation:
      setup.spec.op = OperatorKind::mean_curvature;
      setup.dim = 1;
      // Central cut through the column.
      setup.obstacles = slice_glide_plane(field, field.config().centers.front().x[1]).obstacles();
      break;
    case DefectKind::twin:
      setup.spec.op = OperatorKind::fractional;
      setup.spec.alpha = o.alpha;
      setup.dim = 2;
      setup.obstacles = field.obstacles();
      break;
    case DefectKind::qew:
      setup.spec.op = OperatorKind::laplacian;
      setup.dim = o.qew_dim;
      setup.obstacles = field.obstacles();
      break;
  }
  return setup;
}

SweepRow run_sweep_cell(const SweepOptions& o, double R, std::uint64_t cell_seed) {
  const BoundReport bounds = sweep_bounds(o, R);
  BisectionOptions bo;
  bo.tol = o.tol_fraction * bounds.upper;
  bo.budget = o.budget;
  bo.thresholds = o.thresholds;
  const auto est = bisect_critical_force(sweep_cell_setup(o, R, cell_seed), 0.5 * bounds.lower,
                                         1.25 * bounds.upper, bo);
  SweepRow row;
  row.kind = o.kind;
  row.R = R;
  row.seed = cell_seed;
  row.F_lo = est.F_lo;
  row.F_hi = est.F_hi;
  row.analytic_lower = bounds.lower;
  row.analytic_upper = bounds.upper;
  row.bounds_feasible = bounds.feasible();
  row.excluded = est.hi_from_undecided || !est.converged;
  const double mid = row.midpoint();
  row.sandwich_ok = mid >= bounds.lower * (1.0 - o.delta) && mid <= bounds.upper * (1.0 + o.delta);
  row.verdict_trace = est.trace();
  return row;
}

SweepResult sweep_radius(const SweepOptions& o) {
  o.validate();
  struct Cell {
    double R;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double R : o.R_list) {
    for (int s = 0; s < o.n_seeds; ++s) {
      cells.push_back({R, derive_seed(o.seed, Stream::sweep_cell, static_cast<std::uint64_t>(s))});
    }
  }

  SweepResult result;
  result.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        result.rows[i] = run_sweep_cell(o, cells[i].R, cells[i].seed);
        if (o.on_row) o.on_row(i, result.rows[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(o.threads, static_cast<int>(cells.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  try {
    result.fit = fit_exponent(result.rows);
    result.fit_ok = true;
  } catch (const ValidationError& e) {
    result.fit_error = e.what();
    for (const auto& row : result.rows) result.fit.excluded += row.excluded ? 1 : 0;
  }
  return result;
}

// ---------------------------------------------------------------------------

FitResult fit_exponent(std::span<const double> R, std::span<const double> F) {
  require(R.size() == F.size(), "rows", "R and F must have equal length");
  require(R.size() >= 3, "rows", "at least 3 points are needed for a fit with an error");
  const auto n = static_cast<double>(R.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    require(R[i] > 0.0 && F[i] > 0.0, "rows", "R and F must be positive for a log-log fit");
    mx += std::log(R[i]);
    my += std::log(F[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    const double dx = std::log(R[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(F[i]) - my);
  }
  require(sxx > 0.0, "rows", "log R has zero variance");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    const double r = std::log(F[i]) - fit.intercept - fit.slope * std::log(R[i]);
    ssr += r * r;
  }
  fit.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
  fit.n_rows = static_cast<int>(R.size());
  return fit;
}

FitResult fit_exponent(std::span<const SweepRow> rows) {
  std::vector<double> R;
  std::vector<double> F;
  int excluded = 0;
  for (const auto& row : rows) {
    if (row.excluded) {
      ++excluded;
      continue;
    }
    R.push_back(row.R);
    F.push_back(row.midpoint());
  }
  FitResult fit = fit_exponent(R, F);
  fit.excluded = excluded;
  return fit;
}

}  // namespace depin
