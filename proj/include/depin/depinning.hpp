#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "depin/analytic_bounds.hpp"
#include "depin/evolvers.hpp"
#include "depin/precipitate_field.hpp"

namespace depin {

enum class Verdict { pinned, propagating, undecided };

std::string to_string(Verdict v);

/// Finite-time surrogates for the pinned / propagating dichotomy.
struct Thresholds {
  double v_min_factor = 0.25;   // propagating: trailing velocity >= v_min_factor * F
  double v_pin_factor = 1e-4;   // pinned: sup-norm velocity <= v_pin_factor * F
  double t_dwell = 0.0;         // <= 0: dwell_tau_multiple relaxation times
  double dwell_tau_multiple = 20.0;
  int k_min = 3;                // crossings required to call propagation
  int trailing_samples = 10;
  double samples_per_dwell = 10.0;
  double t_factor = 4.0;        // t_max = t_factor * (free-flight time to clear k_eff obstacles)
  double retry_factor = 4.0;    // t_max multiplier for the single Undecided retry
  bool extrapolate = true;      // accelerate geometric relaxation (see StoppingRule)
};

/// Slowest relaxation time of the linear operator on T^n: 1/pi^(2 alpha).
double relaxation_time(const EvolverSpec& spec);
double dwell_time(const EvolverSpec& spec, const Thresholds& th);

/// One trajectory sample augmented with obstacle bookkeeping.
struct ProbeSample {
  TrajectorySample s;
  int crossed = 0;         // obstacles with min over the footprint > y + outer
  double ceiling = 0.0;    // lowest lower face among untouched, uncrossed obstacles
};

struct Classification {
  Verdict verdict = Verdict::undecided;
  double max_displacement = 0.0;
  double trailing_velocity = 0.0;
  int crossed = 0;
  double simulated_time = 0.0;
  double wall_seconds = 0.0;
};

/// Adds obstacle bookkeeping (crossings, ceiling) to a trajectory sample.
ProbeSample annotate_sample(const InterfaceState& state, const TrajectorySample& s,
                            std::span<const Footprint> footprints);

/// Applies the rules to the samples seen so far. Undecided is returned
/// whenever neither rule holds yet.
Classification classify(std::span<const ProbeSample> samples, double F, int n_obstacles,
                        const Thresholds& th, double t_dwell);

/// Everything a probe needs apart from the force.
struct ProbeSetup {
  EvolverSpec spec;  // force is overwritten per probe
  int dim = 1;
  Obstacles obstacles;
};

struct ProbeRecord {
  double F = 0.0;
  Verdict verdict = Verdict::undecided;  // after the retry
  bool retried = false;
  Classification evidence;
};

/// Simulates from u = 0 under force F until classified or t_max; one retry
/// with a longer horizon when Undecided.
ProbeRecord probe(Evolver& evolver, double F, const Thresholds& th);
ProbeRecord probe(const ProbeSetup& setup, double F, const Thresholds& th);

struct BisectionOptions {
  double tol = 1e-3;   // absolute width of the final bracket
  int budget = 40;     // maximum number of probes
  Thresholds thresholds;
};

struct DepinningEstimate {
  double F_lo = 0.0;  // largest force classified Pinned
  double F_hi = 0.0;  // smallest force classified Propagating (Undecided if none)
  int iterations = 0;
  bool converged = false;
  bool hi_from_undecided = false;
  std::vector<ProbeRecord> probes;

  double midpoint() const { return 0.5 * (F_lo + F_hi); }
  /// Verdicts in probe order, e.g. "0.05:P;0.12:D;0.085:U".
  std::string trace() const;
};

/// Bisection on F, monotone by comparison. The initial bracket is widened
/// geometrically until its ends are Pinned / Propagating; throws
/// BudgetExhausted when that fails within the budget. Undecided probes count
/// as not pinned; if the final upper end is Undecided, forces hi + tol,
/// hi + 2 tol, ... are probed until one is Propagating.
DepinningEstimate bisect_critical_force(const ProbeSetup& setup, double F_a, double F_b,
                                        const BisectionOptions& options);

/// Number of (Pinned above Propagating) pairs among the probes.
int monotonicity_violations(std::span<const ProbeRecord> probes);

// --- sweeps -----------------------------------------------------------------

struct SweepRow;

struct SweepOptions {
  DefectKind kind = DefectKind::dislocation;
  int qew_dim = 1;
  std::vector<double> R_list{0.02, 0.04, 0.06, 0.08, 0.10};
  int n_seeds = 3;
  std::uint64_t seed = 1;
  double lambda = 1.0;
  double phi_lower = 1.0;
  double phi_upper = 1.0;
  double beta = 0.5;
  double epsilon = 0.0;  // <= 0: default_epsilon(lambda)
  int count = 1;         // precipitates per column
  double alpha = 0.5;    // twin evolver order
  int n_grid = 256;
  double dt = 0.0;
  double tol_fraction = 0.02;  // bisection tolerance relative to the analytic upper bound
  double delta = 0.25;         // sandwich slack
  int budget = 40;
  int threads = 1;
  Thresholds thresholds = [] {
    Thresholds t;
    t.k_min = 1;
    return t;
  }();
  /// Called from the worker thread as each cell finishes.
  std::function<void(std::size_t index, const SweepRow& row)> on_row;

  void validate() const;
};

struct SweepRow {
  DefectKind kind = DefectKind::dislocation;
  double R = 0.0;
  std::uint64_t seed = 0;
  double F_lo = 0.0;
  double F_hi = 0.0;
  double analytic_lower = 0.0;
  double analytic_upper = 0.0;
  bool bounds_feasible = false;
  bool excluded = false;     // F_hi rests on an Undecided probe
  bool sandwich_ok = false;  // midpoint within [lower (1 - delta), upper (1 + delta)]
  std::string verdict_trace;

  double midpoint() const { return 0.5 * (F_lo + F_hi); }
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int n_rows = 0;
  int excluded = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  FitResult fit;
  bool fit_ok = false;
  std::string fit_error;  // why the fit could not be computed
};

/// Builds the obstacle field of one sweep cell: column layout, glide plane
/// through the column for dislocations.
ProbeSetup sweep_cell_setup(const SweepOptions& options, double R, std::uint64_t cell_seed);
BoundReport sweep_bounds(const SweepOptions& options, double R);

SweepRow run_sweep_cell(const SweepOptions& options, double R, std::uint64_t cell_seed);
SweepResult sweep_radius(const SweepOptions& options);

/// OLS of log F on log R. Requires >= 3 points and more than one distinct R.
FitResult fit_exponent(std::span<const double> R, std::span<const double> F);
/// Uses the bracket midpoints of non-excluded rows.
FitResult fit_exponent(std::span<const SweepRow> rows);

}  // namespace depin
