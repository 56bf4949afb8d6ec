#include "depin/evolvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "depin/errors.hpp"

namespace depin {

namespace {

constexpr double kDefaultDtCap = 0.01;

std::size_t grid_size(int dim, int n) {
  std::size_t s = 1;
  for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

InterfaceState::InterfaceState(int dim, int n)
    : InterfaceState(dim, n, 0.0, std::vector<double>(grid_size(dim, n), 0.0)) {}

InterfaceState::InterfaceState(int dim, int n, double t, std::vector<double> values)
    : dim_(dim), n_(n), t_(t), values_(std::move(values)) {
  require(dim >= 1 && dim <= 3, "dim", "interfaces are graphs over T^1, T^2 or T^3");
  require(n >= 4 && n % 2 == 0, "N", "grid size must be even and >= 4");
  require(std::isfinite(t) && t >= 0.0, "t", "time must be finite and non-negative");
  require(values_.size() == grid_size(dim, n), "values", "size must be N^dim");
  require(all_finite(), "values", "heights must be finite");
}

std::size_t InterfaceState::index(std::span<const int> j) const {
  std::size_t idx = 0;
  for (int d = 0; d < dim_; ++d) {
    const int w = ((j[d] % n_) + n_) % n_;
    idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(w);
  }
  return idx;
}

std::array<double, 3> InterfaceState::point(std::size_t i) const {
  std::array<double, 3> x{};
  for (int d = dim_ - 1; d >= 0; --d) {
    x[d] = coordinate(static_cast<int>(i % static_cast<std::size_t>(n_)));
    i /= static_cast<std::size_t>(n_);
  }
  return x;
}

double InterfaceState::min() const { return *std::min_element(values_.begin(), values_.end()); }
double InterfaceState::max() const { return *std::max_element(values_.begin(), values_.end()); }
double InterfaceState::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(size());
}
bool InterfaceState::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------

void EvolverSpec::validate() const {
  if (op == OperatorKind::fractional) {
    require(alpha >= 0.5 && alpha < 1.0, "alpha", "fractional order must lie in [1/2, 1)");
  }
  require(std::isfinite(force) && force >= 0.0, "F", "driving force must be >= 0");
  require(std::isfinite(dt), "dt", "must be finite");
  require(n_grid >= 4 && n_grid % 2 == 0, "N", "grid size must be even and >= 4");
  require(std::isfinite(t_max) && t_max > 0.0, "t_max", "must be positive");
}

double max_stable_dt(const EvolverSpec& spec, int n_grid, double lipschitz_y) {
  const double inf = std::numeric_limits<double>::infinity();
  if (spec.op == OperatorKind::mean_curvature) {
    const double h = 2.0 / n_grid;
    const double pot = lipschitz_y > 0.0 ? 0.5 / lipschitz_y : inf;
    return std::min(0.4 * h * h, pot);
  }
  return lipschitz_y > 0.0 ? 1.0 / lipschitz_y : inf;
}

double default_dt(const EvolverSpec& spec, int n_grid, double lipschitz_y) {
  if (spec.op == OperatorKind::mean_curvature) return max_stable_dt(spec, n_grid, lipschitz_y);
  const double pot = lipschitz_y > 0.0 ? 0.9 / lipschitz_y : kDefaultDtCap;
  return std::min(pot, kDefaultDtCap);
}

// ---------------------------------------------------------------------------

Evolver::Evolver(const EvolverSpec& spec, int dim, Obstacles obstacles)
    : spec_(spec), dim_(dim), n_(spec.n_grid), obstacles_(std::move(obstacles)) {
  spec_.validate();
  require(dim >= 1 && dim <= 3, "dim", "interfaces are graphs over T^1, T^2 or T^3");
  require(obstacles_.empty() || obstacles_.dim() == dim, "dim",
          "obstacle field and interface dimension differ");
  if (spec_.op == OperatorKind::mean_curvature) {
    require(dim == 1, "dim", "the curvature evolver is one-dimensional");
  }

  const double lip = obstacles_.lipschitz_y();
  const double limit = max_stable_dt(spec_, n_, lip);
  if (spec_.dt > 0.0) {
    require(spec_.dt <= limit * (1.0 + 1e-12), "dt",
            "exceeds the stability bound " + std::to_string(limit));
    dt_ = spec_.dt;
  } else {
    dt_ = default_dt(spec_, n_, lip);
  }

  const std::size_t size = grid_size(dim, n_);
  phi_.resize(size);
  work_.resize(size);
  if (spec_.op != OperatorKind::mean_curvature) {
    const double exponent = spec_.op == OperatorKind::fractional ? spec_.alpha : 1.0;
    spectral_.emplace(dim, n_, exponent);
    spectrum_.resize(spectral_->spectrum_size());
  }
  build_footprints();
}

void Evolver::set_force(double f) {
  require(std::isfinite(f) && f >= 0.0, "F", "driving force must be >= 0");
  spec_.force = f;
}

void Evolver::build_footprints() {
  const double h = 2.0 / n_;
  for (const auto& inc : obstacles_.inclusions()) {
    // Per-axis nonzero nodes.
    std::array<std::vector<std::pair<int, double>>, 3> axis;
    for (int d = 0; d < dim_; ++d) {
      for (int j = 0; j < n_; ++j) {
        const double p =
            plateau_profile(wrap_torus(-1.0 + j * h - inc.x[d]), inc.plateau, inc.outer);
        if (p > 0.0) axis[d].emplace_back(j, p);
      }
    }
    Footprint fp{inc.y, inc.plateau, inc.outer, {}, {}};
    std::size_t total = 1;
    for (int d = 0; d < dim_; ++d) total *= axis[d].size();
    fp.nodes.reserve(total);
    fp.weights.reserve(total);
    std::array<std::size_t, 3> k{};
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rest = c;
      for (int d = dim_ - 1; d >= 0; --d) {
        k[d] = rest % axis[d].size();
        rest /= axis[d].size();
      }
      std::size_t node = 0;
      double w = inc.amplitude;
      for (int d = 0; d < dim_; ++d) {
        node = node * static_cast<std::size_t>(n_) + static_cast<std::size_t>(axis[d][k[d]].first);
        w *= axis[d][k[d]].second;
      }
      fp.nodes.push_back(node);
      fp.weights.push_back(w);
    }
    if (!fp.nodes.empty()) footprints_.push_back(std::move(fp));
  }
}

void Evolver::potential(std::span<const double> u, std::span<double> phi) const {
  std::fill(phi.begin(), phi.end(), 0.0);
  for (const auto& fp : footprints_) {
    for (std::size_t k = 0; k < fp.nodes.size(); ++k) {
      const std::size_t i = fp.nodes[k];
      const double dy = u[i] - fp.y;
      if (std::abs(dy) < fp.outer) phi[i] += fp.weights[k] * plateau_profile(dy, fp.plateau, fp.outer);
    }
  }
}

void Evolver::step(InterfaceState& state, double limit) {
  require(state.dim() == dim_ && state.n() == n_, "state", "grid does not match the evolver");
  const double dt = limit > 0.0 ? std::min(dt_, limit) : dt_;
  if (spec_.op == OperatorKind::mean_curvature) {
    step_curvature(state, dt);
  } else {
    step_spectral(state, dt);
  }
  state.set_t(state.t() + dt);
  double sum = 0.0;
  for (double v : state.values()) sum += v;
  if (!std::isfinite(sum)) throw NumericalError("non-finite interface height at t = " +
                                                std::to_string(state.t()));
}

void Evolver::step_spectral(InterfaceState& state, double dt) {
  auto u = state.values();
  potential(u, phi_);
  const double f = spec_.force;
  for (std::size_t i = 0; i < u.size(); ++i) work_[i] = u[i] + dt * (f - phi_[i]);
  spectral_->forward(work_, spectrum_);
  const auto sym = spectral_->symbol();
  for (std::size_t k = 0; k < spectrum_.size(); ++k) spectrum_[k] /= 1.0 + dt * sym[k];
  spectral_->inverse(spectrum_, u);
}

void Evolver::step_curvature(InterfaceState& state, double dt) {
  auto u = state.values();
  potential(u, phi_);
  const int n = n_;
  const double h = 2.0 / n;
  const double f = spec_.force;
  for (int i = 0; i < n; ++i) {
    const double left = u[static_cast<std::size_t>((i + n - 1) % n)];
    const double right = u[static_cast<std::size_t>((i + 1) % n)];
    const double mid = u[static_cast<std::size_t>(i)];
    const double vx = (right - left) / (2.0 * h);
    const double vxx = (right - 2.0 * mid + left) / (h * h);
    const double s = std::sqrt(1.0 + vx * vx);
    work_[static_cast<std::size_t>(i)] = mid + dt * (vxx / s + s * (f - phi_[static_cast<std::size_t>(i)]));
  }
  std::copy(work_.begin(), work_.end(), u.begin());
}

double Evolver::frozen_flight(InterfaceState& state, double t_limit) {
  if (!spectral_) return 0.0;
  const double horizon = t_limit - state.t();
  if (horizon <= 2.0 * dt_) return 0.0;
  auto u = state.values();

  // Frozen forcing g = F - phi and a ceiling per node that keeps it in its
  // current band: below the lower face, or on the flat top.
  std::fill(phi_.begin(), phi_.end(), 0.0);
  std::vector<std::pair<std::size_t, double>> ceilings;
  for (const auto& fp : footprints_) {
    const double margin = 1e-3 * (fp.outer - fp.plateau);
    for (std::size_t k = 0; k < fp.nodes.size(); ++k) {
      const std::size_t node = fp.nodes[k];
      const double dy = u[node] - fp.y;
      if (dy <= -fp.outer) {
        ceilings.emplace_back(node, fp.y - fp.outer - margin);
      } else if (std::abs(dy) <= fp.plateau) {
        phi_[node] += fp.weights[k];
        ceilings.emplace_back(node, fp.y + fp.plateau - margin);
      } else if (dy < fp.outer) {
        return 0.0;  // on a ramp
      }
    }
  }

  spectrum0_.resize(spectral_->spectrum_size());
  forcing_.resize(spectral_->spectrum_size());
  spectral_->forward(u, spectrum0_);
  // The forcing spectrum is reused while the frozen potential is unchanged.
  if (forcing_phi_ != phi_ || forcing_force_ != spec_.force) {
    for (std::size_t i = 0; i < work_.size(); ++i) work_[i] = spec_.force - phi_[i];
    spectral_->forward(work_, forcing_);
    forcing_phi_ = phi_;
    forcing_force_ = spec_.force;
  }
  const auto sym = spectral_->symbol();

  auto evaluate = [&](double s) {
    spectrum_[0] = spectrum0_[0] + s * forcing_[0];
    for (std::size_t k = 1; k < spectrum_.size(); ++k) {
      const double decay = std::exp(-s * sym[k]);
      spectrum_[k] = spectrum0_[k] * decay - forcing_[k] * (std::expm1(-s * sym[k]) / sym[k]);
    }
    spectral_->inverse(spectrum_, work_);
  };
  // Endpoint checks suffice because the trajectory is nondecreasing in time.
  auto admissible = [&](double s) {
    evaluate(s);
    for (const auto& [node, ceiling] : ceilings) {
      if (!(work_[node] < ceiling)) return false;
    }
    return true;
  };

  // Admissibility is monotone in s, so a full-horizon success settles it.
  double good = horizon;
  double bad = -1.0;
  if (!admissible(horizon)) {
    good = std::min(4.0 * dt_, horizon);
    if (good >= horizon || !admissible(good)) return 0.0;
  }
  while (good < horizon) {
    const double trial = std::min(2.0 * good, horizon);
    if (admissible(trial)) {
      good = trial;
    } else {
      bad = trial;
      break;
    }
  }
  if (bad > 0.0) {
    while (bad - good > dt_) {
      const double mid = 0.5 * (good + bad);
      (admissible(mid) ? good : bad) = mid;
    }
  }
  evaluate(good);
  std::copy(work_.begin(), work_.end(), u.begin());
  state.set_t(state.t() + good);
  if (!state.all_finite()) throw NumericalError("non-finite interface height after a flight");
  return good;
}

// ---------------------------------------------------------------------------

void step_fractional(InterfaceState& state, Evolver& evolver) {
  require(evolver.spec().op == OperatorKind::fractional, "operator", "expected fractional");
  require(state.dim() == 2, "dim", "the fractional evolver acts on T^2");
  evolver.step(state);
}

void step_mean_curvature(InterfaceState& state, Evolver& evolver) {
  require(evolver.spec().op == OperatorKind::mean_curvature, "operator",
          "expected mean_curvature");
  require(state.dim() == 1, "dim", "the curvature evolver acts on T^1");
  evolver.step(state);
}

void step_laplacian(InterfaceState& state, Evolver& evolver) {
  require(evolver.spec().op == OperatorKind::laplacian, "operator", "expected laplacian");
  evolver.step(state);
}

// ---------------------------------------------------------------------------

TrajectorySummary evolve(InterfaceState state, Evolver& evolver, const StoppingRule& stopping) {
  require(stopping.sample_interval > 0.0, "sample_interval", "must be positive");
  require(stopping.t_max > state.t(), "t_max", "must exceed the initial time");
  require(state.dim() == evolver.dim() && state.n() == evolver.spec().n_grid, "state",
          "grid does not match the evolver");

  TrajectorySummary out;
  auto make_sample = [&](const std::vector<double>& prev, double t_prev, double mean_prev) {
    TrajectorySample s;
    s.t = state.t();
    s.min = state.min();
    s.mean = state.mean();
    s.max = state.max();
    if (!out.samples.empty()) {
      const double span = s.t - t_prev;
      s.mean_velocity = (s.mean - mean_prev) / span;
      double vmax = 0.0;
      const auto u = state.values();
      for (std::size_t i = 0; i < u.size(); ++i) vmax = std::max(vmax, std::abs(u[i] - prev[i]));
      s.max_velocity = vmax / span;
    }
    return s;
  };

  std::vector<double> prev(state.values().begin(), state.values().end());
  out.samples.push_back(make_sample(prev, state.t(), state.mean()));
  if (stopping.on_sample && stopping.on_sample(state, out.samples.back())) {
    out.stopped_early = true;
    out.final_state = std::move(state);
    return out;
  }

  // Extrapolation bookkeeping: velocity field of the previous interval and
  // the decay ratios seen since the last jump.
  constexpr int kDecayWindow = 3;
  constexpr double kAlignment = 0.05;
  constexpr double kRatioSpread = 0.1;
  constexpr double kMaxSpans = 200.0;
  constexpr double kBackwardTolerance = 0.05;
  constexpr int kTrialSteps = 20;
  std::vector<double> vel_prev;
  std::vector<double> vel;
  std::vector<double> candidate;
  std::vector<double> ratios;
  if (stopping.extrapolate) {
    vel_prev.assign(state.size(), 0.0);
    vel.assign(state.size(), 0.0);
    candidate.assign(state.size(), 0.0);
  }
  bool have_vel_prev = false;
  // An overshoot past the limit shows up as a node moving backwards. Stiff
  // contact modes settle within a few steps, so the test is on displacement.
  auto jump_keeps_rising = [&](const std::vector<double>& cand, double jump) {
    InterfaceState trial(state.dim(), state.n(), state.t(), cand);
    for (int i = 0; i < kTrialSteps; ++i) evolver.step(trial);
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (trial[i] - cand[i] < -kBackwardTolerance * jump) return false;
    return true;
  };

  constexpr int kFlightRetry = 64;
  int k = 1;
  const double t0 = state.t();
  while (true) {
    const double target = std::min(t0 + k * stopping.sample_interval, stopping.t_max);
    const double eps = 1e-12 * (1.0 + std::abs(target));
    int since_flight = kFlightRetry;
    while (target - state.t() > eps) {
      if (stopping.use_frozen_flight && since_flight >= kFlightRetry) {
        since_flight = 0;
        if (evolver.frozen_flight(state, target) > 0.0) continue;
      }
      evolver.step(state, target - state.t());
      ++since_flight;
    }
    state.set_t(target);

    const double t_prev = out.samples.back().t;
    const double mean_prev = out.samples.back().mean;
    out.samples.push_back(make_sample(prev, t_prev, mean_prev));
    if (stopping.extrapolate) {
      const double span = target - t_prev;
      const auto u = state.values();
      for (std::size_t i = 0; i < u.size(); ++i) vel[i] = (u[i] - prev[i]) / span;
      bool jumped = false;
      if (have_vel_prev) {
        double vn = 0.0, vp = 0.0;
        for (std::size_t i = 0; i < vel.size(); ++i) {
          vn = std::max(vn, std::abs(vel[i]));
          vp = std::max(vp, std::abs(vel_prev[i]));
        }
        const double r = vp > 0.0 ? vn / vp : 0.0;
        double misfit = 0.0;
        for (std::size_t i = 0; i < vel.size(); ++i)
          misfit = std::max(misfit, std::abs(vel[i] - r * vel_prev[i]));
        if (vn > 0.0 && r > 0.0 && r < 1.0 && misfit <= kAlignment * vn) {
          ratios.push_back(r);
        } else {
          ratios.clear();
        }
        if (static_cast<int>(ratios.size()) >= kDecayWindow) {
          const auto [lo, hi] = std::minmax_element(ratios.end() - kDecayWindow, ratios.end());
          const double rate = -std::log(*hi);
          if (std::log(*hi) - std::log(*lo) <= kRatioSpread * rate) {
            // v(t) = v e^{-(t - t_k)/tau}: remaining rise v tau.
            const double tau = std::min(span / rate, kMaxSpans * span);
            const double scale = stopping.extrapolation_damping * tau;
            for (std::size_t i = 0; i < u.size(); ++i) candidate[i] = u[i] + scale * vel[i];
            if (jump_keeps_rising(candidate, scale * vn) &&
                (!stopping.accept_jump || stopping.accept_jump(state, candidate))) {
              std::copy(candidate.begin(), candidate.end(), u.begin());
              out.samples.back().min = state.min();
              out.samples.back().mean = state.mean();
              out.samples.back().max = state.max();
              ++out.jumps;
              jumped = true;
            }
            ratios.clear();
          }
        }
      }
      have_vel_prev = !jumped;
      std::swap(vel, vel_prev);
    }
    std::copy(state.values().begin(), state.values().end(), prev.begin());
    if (stopping.on_sample && stopping.on_sample(state, out.samples.back())) {
      out.stopped_early = true;
      break;
    }
    if (target >= stopping.t_max) break;
    ++k;
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace depin
