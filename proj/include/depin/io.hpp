#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "depin/analytic_bounds.hpp"
#include "depin/depinning.hpp"
#include "depin/evolvers.hpp"
#include "depin/precipitate_field.hpp"

namespace depin {

/// Which equation a run uses. qewN is the Laplacian on T^N.
enum class Equation { twin, dislocation, qew1, qew2, qew3 };

std::string to_string(Equation e);
Equation parse_equation(const std::string& s);
DefectKind defect_kind(Equation e);
int qew_dim(Equation e);

/// Flat key = value run configuration shared by every subcommand.
struct RunConfig {
  // global
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 1;
  int verbosity = 1;

  // precipitate field
  double R = 0.1;
  double lambda = 1.0;
  double beta = 0.5;
  double phi_lower = 1.0;
  double phi_upper = 1.0;
  int count = 1;
  double y_window = 0.0;  // <= 0: 3 R + (count - 1) * spacing + 1
  int torus_dim = 0;      // <= 0: implied by the equation
  Layout layout = Layout::column;
  StrengthMode strength_mode = StrengthMode::upper;
  double epsilon = 0.0;   // <= 0: default for lambda

  // simulation
  Equation equation = Equation::twin;
  double alpha = 0.5;
  double force = 0.0;
  double dt = 0.0;
  int n_grid = 256;
  double t_max = 1.0;
  double sample_interval = 0.0;  // <= 0: t_max / 100
  double varpi = std::numeric_limits<double>::quiet_NaN();  // glide plane; NaN ("auto"): first center
  bool classify = true;
  std::string resume;            // state base path to continue from

  // classification
  double v_min_factor = 0.25;
  double v_pin_factor = 1e-4;
  double t_dwell = 0.0;
  int k_min = 3;
  bool extrapolate = true;

  // sweep
  std::vector<double> R_list{0.02, 0.04, 0.06, 0.08, 0.10};
  int n_seeds = 3;
  double tol_fraction = 0.02;
  double delta = 0.25;
  int budget = 40;
  int sweep_k_min = 1;

  // verify
  std::string fault = "none";  // none | alpha
  bool verify_full = false;

  /// Applies one setting; throws ValidationError naming the key when it is
  /// unknown or its value does not parse.
  void set(const std::string& key, const std::string& value);
  /// Library preconditions for every field.
  void validate() const;

  PrecipitateParams precipitate_params() const;
  EvolverSpec evolver_spec() const;
  Thresholds thresholds() const;
  SweepOptions sweep_options() const;
};

/// Parses key = value lines; '#' starts a comment. Unknown keys and
/// duplicate keys are rejected.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
/// Full snapshot of every key, reloadable by parse_config.
std::string to_text(const RunConfig& config);

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Round-trip decimal formatting of a double.
std::string format_double(double v);

std::string precipitates_csv(const PrecipitateConfig& config);
std::string trajectory_csv(std::span<const TrajectorySample> samples);
std::string fourier_csv(const FourierProfile& profile);
std::string sweep_csv(std::span<const SweepRow> rows);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const Classification& c);

/// Flat binary dump (row-major little-endian doubles) at base + ".bin" plus a
/// text header at base + ".hdr" holding n, N and t.
void write_state(const std::filesystem::path& base, const InterfaceState& state);
InterfaceState read_state(const std::filesystem::path& base);

}  // namespace depin
