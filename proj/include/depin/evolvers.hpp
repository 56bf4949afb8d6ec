#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "depin/precipitate_field.hpp"
#include "depin/spectral.hpp"

namespace depin {

/// Graph height u on the periodic grid x_j = -1 + j h, h = 2/N, over T^n.
/// Row-major storage with axis 0 varying slowest.
class InterfaceState {
 public:
  InterfaceState() = default;
  /// Zero initial condition at t = 0.
  InterfaceState(int dim, int n);
  InterfaceState(int dim, int n, double t, std::vector<double> values);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double t() const { return t_; }
  void set_t(double t) { t_ = t; }
  double spacing() const { return 2.0 / n_; }
  double coordinate(int j) const { return -1.0 + j * spacing(); }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Flat index with periodic wrap on each axis.
  std::size_t index(std::span<const int> j) const;
  /// Grid coordinates of a flat index.
  std::array<double, 3> point(std::size_t i) const;

  double min() const;
  double max() const;
  double mean() const;
  bool all_finite() const;

 private:
  int dim_ = 1;
  int n_ = 0;
  double t_ = 0.0;
  std::vector<double> values_;
};

enum class OperatorKind { fractional, mean_curvature, laplacian };

struct EvolverSpec {
  OperatorKind op = OperatorKind::laplacian;
  double alpha = 0.5;  // fractional only, in [1/2, 1)
  double force = 0.0;
  double dt = 0.0;  // <= 0 selects default_dt()
  int n_grid = 256;
  double t_max = 1.0;

  void validate() const;
};

/// Largest step allowed by the scheme for this spec and obstacle field.
double max_stable_dt(const EvolverSpec& spec, int n_grid, double lipschitz_y);
/// Step chosen when spec.dt <= 0.
double default_dt(const EvolverSpec& spec, int n_grid, double lipschitz_y);

/// Grid footprint of one obstacle: the nodes where its x-profile is nonzero,
/// with weight amplitude * prod_d p(x_d - X_d).
struct Footprint {
  double y = 0.0;
  double plateau = 0.0;
  double outer = 0.0;
  std::vector<std::size_t> nodes;
  std::vector<double> weights;
};

class Evolver {
 public:
  Evolver(const EvolverSpec& spec, int dim, Obstacles obstacles = {});

  const EvolverSpec& spec() const { return spec_; }
  int dim() const { return dim_; }
  double dt() const { return dt_; }
  double force() const { return spec_.force; }
  void set_force(double f);
  const Obstacles& obstacles() const { return obstacles_; }
  std::span<const Footprint> footprints() const { return footprints_; }

  /// phi(x_j, u_j) at every node.
  void potential(std::span<const double> u, std::span<double> phi) const;

  /// One step of length min(dt, limit); limit <= 0 means dt. Throws
  /// NumericalError on non-finite output.
  void step(InterfaceState& state, double limit = 0.0);

  /// Spectral schemes only. While every footprint node sits either off its
  /// obstacle or on its flat top (no node on a y-ramp), the potential is a
  /// fixed function of x and the linear problem is solved exactly per Fourier
  /// mode. Advances as far as possible towards t_limit without any node
  /// reaching a ramp and returns the time advanced (0 when not applicable).
  /// Assumes u is nondecreasing in time, true for zero data and F >= 0.
  double frozen_flight(InterfaceState& state, double t_limit);

 private:
  void step_spectral(InterfaceState& state, double dt);
  void step_curvature(InterfaceState& state, double dt);
  void build_footprints();

  EvolverSpec spec_;
  int dim_;
  int n_;
  Obstacles obstacles_;
  std::vector<Footprint> footprints_;
  double dt_ = 0.0;
  std::optional<SpectralOperator> spectral_;
  std::vector<double> phi_;
  std::vector<double> work_;
  std::vector<std::complex<double>> spectrum_;
  std::vector<std::complex<double>> spectrum0_;
  std::vector<std::complex<double>> forcing_;
  std::vector<double> forcing_phi_;
  double forcing_force_ = 0.0;
};

// One-step entry points per equation. Each validates the operator kind and
// state dimension, then delegates to Evolver::step.
void step_fractional(InterfaceState& state, Evolver& evolver);
void step_mean_curvature(InterfaceState& state, Evolver& evolver);
void step_laplacian(InterfaceState& state, Evolver& evolver);

struct TrajectorySample {
  double t = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  double mean_velocity = 0.0;  // between this sample and the previous one
  double max_velocity = 0.0;   // sup over nodes of |du/dt| between samples
};

struct StoppingRule {
  double t_max = 1.0;
  double sample_interval = 0.1;
  bool use_frozen_flight = true;
  /// Relaxation acceleration: once the velocity field has decayed by a steady
  /// geometric ratio over three consecutive intervals, the state is moved a
  /// fraction `extrapolation_damping` of the way to the predicted limit.
  /// Time is not advanced by a jump.
  bool extrapolate = false;
  double extrapolation_damping = 0.9;
  /// Optional veto on a proposed jump (current state, candidate heights).
  std::function<bool(const InterfaceState&, std::span<const double>)> accept_jump;
  /// Called after each sample; returning true stops the run.
  std::function<bool(const InterfaceState&, const TrajectorySample&)> on_sample;
};

struct TrajectorySummary {
  std::vector<TrajectorySample> samples;  // includes t = t0
  InterfaceState final_state;
  bool stopped_early = false;
  int jumps = 0;
};

TrajectorySummary evolve(InterfaceState state, Evolver& evolver, const StoppingRule& stopping);

}  // namespace depin
