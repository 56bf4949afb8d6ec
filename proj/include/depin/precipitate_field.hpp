#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace depin {

/// Wraps a coordinate difference on the torus [-1, 1) (period 2).
double wrap_torus(double dx);

/// C1 plateau bump along one axis: 1 for |offset| <= plateau, 0 for
/// |offset| >= outer, cubic smoothstep in between.
double plateau_profile(double offset, double plateau, double outer);

/// Inverse of the ramp: the largest |offset| at which plateau_profile is >= level.
double plateau_profile_inverse(double level, double plateau, double outer);

/// Max |d/ds| of the smoothstep ramp relative to 1/(outer - plateau).
inline constexpr double kRampMaxSlope = 1.5;

enum class Layout {
  random,  // i.i.d. uniform x per precipitate, gap-constrained uniform y
  column,  // one precipitate per period: shared random x, y at the minimal gap
};

enum class StrengthMode { upper, uniform };

struct Center {
  std::array<double, 3> x{};  // only the first torus_dim entries are used
  double y = 0.0;
  double strength = 0.0;
};

struct PrecipitateParams {
  double R = 0.1;
  double lambda = 1.0;
  double beta = 0.5;
  double phi_lower = 1.0;
  double phi_upper = 1.0;
  int count = 1;
  double y_window = 10.0;
  int torus_dim = 2;
  Layout layout = Layout::random;
  StrengthMode strength_mode = StrengthMode::upper;
  std::uint64_t seed = 0;

  /// Minimal admissible distance between two centers along y: 2 R^(1 - beta).
  double min_spacing() const;
  void validate() const;
};

struct PrecipitateConfig {
  PrecipitateParams params;
  std::vector<Center> centers;  // sorted by y
};

PrecipitateConfig sample_config(const PrecipitateParams& params);
PrecipitateConfig sample_config(std::uint64_t seed, double R, double lambda, double beta,
                                int count, double y_window);

/// Ramp width as a fraction of R: (1 - lambda)/2 for lambda < 1, else 0.25.
double default_epsilon(double lambda);

/// One bump of an obstacle field on T^n x R.
struct Inclusion {
  std::array<double, 3> x{};
  double y = 0.0;
  double amplitude = 0.0;
  double plateau = 0.0;  // half-width of the flat top, all axes
  double outer = 0.0;    // half-width of the support, all axes
};

/// Potential phi(x, y) on T^n x R built from separable plateau bumps.
/// This is what the evolvers consume, for any interface dimension.
class Obstacles {
 public:
  Obstacles() = default;
  Obstacles(int dim, std::vector<Inclusion> inclusions);

  int dim() const { return dim_; }
  bool empty() const { return inclusions_.empty(); }
  std::span<const Inclusion> inclusions() const { return inclusions_; }

  double operator()(std::span<const double> x, double y) const;

  /// sup |d phi / d y|; bounds the explicit potential step.
  double lipschitz_y() const;

 private:
  int dim_ = 1;
  std::vector<Inclusion> inclusions_;
};

class PinningField {
 public:
  /// epsilon <= 0 selects default_epsilon(lambda).
  explicit PinningField(PrecipitateConfig config, double epsilon = 0.0);

  const PrecipitateConfig& config() const { return config_; }
  int torus_dim() const { return config_.params.torus_dim; }
  double epsilon() const { return epsilon_; }
  double outer_half_width() const { return config_.params.R; }
  double plateau_half_width() const { return (1.0 - epsilon_) * config_.params.R; }
  /// Half-side of the cube on which every bump is guaranteed >= phi_lower.
  double inner_half_width() const;

  double operator()(double x1, double x2, double y) const;
  double value(std::span<const double> x, double y) const;

  /// Euclidean Lipschitz bound over all torus_dim + 1 coordinates.
  double lipschitz_bound() const;

  Obstacles obstacles() const;

 private:
  PrecipitateConfig config_;
  double epsilon_;
};

struct SliceInclusion {
  double x1 = 0.0;
  double y = 0.0;
  double inner_half_width = 0.0;  // largest centered square with value >= phi_lower
  double outer_half_width = 0.0;
  double plateau_half_width = 0.0;
  double amplitude = 0.0;  // strength times the x2 profile factor
  std::size_t source = 0;  // index into the config's centers
};

class GlideSlice {
 public:
  GlideSlice(double varpi, std::vector<SliceInclusion> inclusions)
      : varpi_(varpi), inclusions_(std::move(inclusions)) {}

  double varpi() const { return varpi_; }
  std::span<const SliceInclusion> inclusions() const { return inclusions_; }
  bool empty() const { return inclusions_.empty(); }

  double operator()(double x1, double y) const;
  Obstacles obstacles() const;

 private:
  double varpi_;
  std::vector<SliceInclusion> inclusions_;
};

GlideSlice slice_glide_plane(const PinningField& field, double varpi);

struct HitStatistics {
  int n_trials = 0;
  int hits = 0;
  double fraction = 0.0;
  double ci_low = 0.0;   // Wilson interval at z
  double ci_high = 0.0;
  double z = 3.0;
  double expected = 0.0;  // 1 - (1 - lambda R)^n
};

/// Monte Carlo: random plane x2 = varpi against n freshly sampled x2 centers
/// per trial; a hit is a plane passing through some inner cube (|varpi - x2| < lambda R).
HitStatistics plane_hit_statistics(double R, double lambda, int n_precipitates, int n_trials,
                                   std::uint64_t seed, double z = 3.0);

}  // namespace depin
