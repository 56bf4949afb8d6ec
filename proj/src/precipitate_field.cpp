#include "depin/precipitate_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "depin/errors.hpp"
#include "depin/rng.hpp"

namespace depin {

double wrap_torus(double dx) { return dx - 2.0 * std::floor((dx + 1.0) / 2.0); }

double plateau_profile(double offset, double plateau, double outer) {
  const double d = std::abs(offset);
  if (d <= plateau) return 1.0;
  if (d >= outer) return 0.0;
  const double t = (outer - d) / (outer - plateau);
  return t * t * (3.0 - 2.0 * t);
}

double plateau_profile_inverse(double level, double plateau, double outer) {
  if (level >= 1.0) return plateau;
  if (level <= 0.0) return outer;
  // Inverse of t^2 (3 - 2t) on [0, 1].
  const double t = 0.5 - std::sin(std::asin(1.0 - 2.0 * level) / 3.0);
  return outer - t * (outer - plateau);
}

double PrecipitateParams::min_spacing() const { return 2.0 * std::pow(R, 1.0 - beta); }

void PrecipitateParams::validate() const {
  require(std::isfinite(R) && R > 0.0 && R < 0.5, "R", "must lie in (0, 1/2)");
  require(std::isfinite(lambda) && lambda > 0.0 && lambda <= 1.0, "lambda", "must lie in (0, 1]");
  require(std::isfinite(beta) && beta > 0.0 && beta < 1.0, "beta", "must lie in (0, 1)");
  require(std::isfinite(phi_lower) && phi_lower > 0.0, "phi_lower", "must be positive");
  require(std::isfinite(phi_upper) && phi_upper >= phi_lower, "phi_upper",
          "must be finite and >= phi_lower");
  require(count >= 0, "count", "must be non-negative");
  require(std::isfinite(y_window), "y_window", "must be finite");
  require(torus_dim >= 1 && torus_dim <= 3, "torus_dim", "must be 1, 2 or 3");
}

double default_epsilon(double lambda) { return lambda < 1.0 ? 0.5 * (1.0 - lambda) : 0.25; }

namespace {

double draw_strength(const PrecipitateParams& p, std::size_t i) {
  if (p.strength_mode == StrengthMode::upper) return p.phi_upper;
  Rng rng(p.seed, Stream::strengths, i);
  return rng.uniform(p.phi_lower, p.phi_upper);
}

}  // namespace

PrecipitateConfig sample_config(const PrecipitateParams& params) {
  params.validate();
  require(params.count >= 1, "count", "must be at least 1");

  const double spacing = params.min_spacing();
  const double y_start = 2.0 * params.R;
  const double span_needed = (params.count - 1) * spacing;
  if (y_start + span_needed > params.y_window) {
    throw ValidationError("y_window", "too small to place " + std::to_string(params.count) +
                                          " centers with spacing " + std::to_string(spacing));
  }

  PrecipitateConfig config{params, {}};
  config.centers.resize(static_cast<std::size_t>(params.count));

  if (params.layout == Layout::column) {
    Rng rng(params.seed, Stream::centers, 0);
    std::array<double, 3> x{};
    for (int d = 0; d < params.torus_dim; ++d) x[d] = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < config.centers.size(); ++i) {
      config.centers[i].x = x;
      config.centers[i].y = y_start + static_cast<double>(i) * spacing;
    }
  } else {
    for (std::size_t i = 0; i < config.centers.size(); ++i) {
      Rng rng(params.seed, Stream::centers, i);
      for (int d = 0; d < params.torus_dim; ++d) config.centers[i].x[d] = rng.uniform(-1.0, 1.0);
    }
    // Uniform law on {y sorted, gaps >= spacing} in [y_start, y_window]:
    // sorted uniforms on the free length, then re-inflate the gaps.
    const double free_length = params.y_window - y_start - span_needed;
    Rng rng(params.seed, Stream::y_placement, 0);
    std::vector<double> u(config.centers.size());
    for (auto& v : u) v = rng.uniform(0.0, free_length);
    std::sort(u.begin(), u.end());
    for (std::size_t i = 0; i < u.size(); ++i) {
      config.centers[i].y = y_start + u[i] + static_cast<double>(i) * spacing;
    }
  }
  for (std::size_t i = 0; i < config.centers.size(); ++i) {
    config.centers[i].strength = draw_strength(params, i);
  }
  return config;
}

PrecipitateConfig sample_config(std::uint64_t seed, double R, double lambda, double beta,
                                int count, double y_window) {
  PrecipitateParams p;
  p.seed = seed;
  p.R = R;
  p.lambda = lambda;
  p.beta = beta;
  p.count = count;
  p.y_window = y_window;
  return sample_config(p);
}

// ---------------------------------------------------------------------------

Obstacles::Obstacles(int dim, std::vector<Inclusion> inclusions)
    : dim_(dim), inclusions_(std::move(inclusions)) {
  require(dim >= 1 && dim <= 3, "dim", "obstacle fields exist for n = 1, 2, 3");
  std::sort(inclusions_.begin(), inclusions_.end(),
            [](const Inclusion& a, const Inclusion& b) { return a.y < b.y; });
}

double Obstacles::operator()(std::span<const double> x, double y) const {
  double total = 0.0;
  for (const auto& inc : inclusions_) {
    const double dy = y - inc.y;
    if (std::abs(dy) >= inc.outer) continue;
    double value = inc.amplitude;
    for (int d = 0; d < dim_; ++d) {
      value *= plateau_profile(wrap_torus(x[d] - inc.x[d]), inc.plateau, inc.outer);
    }
    total += value * plateau_profile(dy, inc.plateau, inc.outer);
  }
  return total;
}

double Obstacles::lipschitz_y() const {
  double lip = 0.0;
  for (const auto& inc : inclusions_) {
    lip = std::max(lip, inc.amplitude * kRampMaxSlope / (inc.outer - inc.plateau));
  }
  return lip;
}

// ---------------------------------------------------------------------------

PinningField::PinningField(PrecipitateConfig config, double epsilon)
    : config_(std::move(config)),
      epsilon_(epsilon > 0.0 ? epsilon : default_epsilon(config_.params.lambda)) {
  config_.params.validate();
  require(epsilon_ > 0.0 && epsilon_ < 1.0, "epsilon", "must lie in (0, 1)");
  if (config_.params.lambda < 1.0) {
    require(epsilon_ <= 1.0 - config_.params.lambda + 1e-12, "epsilon",
            "ramp must stay outside the inner cube: epsilon <= 1 - lambda");
  }
  std::sort(config_.centers.begin(), config_.centers.end(),
            [](const Center& a, const Center& b) { return a.y < b.y; });
  for (const auto& c : config_.centers) {
    require(c.strength >= config_.params.phi_lower && c.strength <= config_.params.phi_upper,
            "strength", "must lie in [phi_lower, phi_upper]");
  }
}

double PinningField::inner_half_width() const {
  return std::min(config_.params.lambda * config_.params.R, plateau_half_width());
}

double PinningField::operator()(double x1, double x2, double y) const {
  const std::array<double, 2> x{x1, x2};
  return value(x, y);
}

double PinningField::value(std::span<const double> x, double y) const {
  const double R = config_.params.R;
  const double a = plateau_half_width();
  const int dim = torus_dim();
  const auto first = std::lower_bound(config_.centers.begin(), config_.centers.end(), y - R,
                                      [](const Center& c, double v) { return c.y < v; });
  double total = 0.0;
  for (auto it = first; it != config_.centers.end() && it->y < y + R; ++it) {
    const double dy = y - it->y;
    if (std::abs(dy) >= R) continue;
    // Same association order as GlideSlice so that slices match bit for bit.
    double amp = it->strength;
    for (int d = dim - 1; d >= 1; --d) amp *= plateau_profile(wrap_torus(x[d] - it->x[d]), a, R);
    total += amp * plateau_profile(wrap_torus(x[0] - it->x[0]), a, R) * plateau_profile(dy, a, R);
  }
  return total;
}

double PinningField::lipschitz_bound() const {
  const double axes = static_cast<double>(torus_dim() + 1);
  return config_.params.phi_upper * kRampMaxSlope * std::sqrt(axes) /
         (epsilon_ * config_.params.R);
}

Obstacles PinningField::obstacles() const {
  std::vector<Inclusion> out;
  out.reserve(config_.centers.size());
  for (const auto& c : config_.centers) {
    out.push_back({c.x, c.y, c.strength, plateau_half_width(), config_.params.R});
  }
  return Obstacles(torus_dim(), std::move(out));
}

// ---------------------------------------------------------------------------

double GlideSlice::operator()(double x1, double y) const {
  double total = 0.0;
  for (const auto& inc : inclusions_) {
    const double dy = y - inc.y;
    if (std::abs(dy) >= inc.outer_half_width) continue;
    total += inc.amplitude *
             plateau_profile(wrap_torus(x1 - inc.x1), inc.plateau_half_width,
                             inc.outer_half_width) *
             plateau_profile(dy, inc.plateau_half_width, inc.outer_half_width);
  }
  return total;
}

Obstacles GlideSlice::obstacles() const {
  std::vector<Inclusion> out;
  out.reserve(inclusions_.size());
  for (const auto& s : inclusions_) {
    out.push_back({{s.x1, 0.0, 0.0}, s.y, s.amplitude, s.plateau_half_width, s.outer_half_width});
  }
  return Obstacles(1, std::move(out));
}

GlideSlice slice_glide_plane(const PinningField& field, double varpi) {
  require(field.torus_dim() == 2, "torus_dim", "glide planes cut the 2-torus");
  require(varpi >= -1.0 && varpi <= 1.0, "varpi", "must lie in [-1, 1]");
  const auto& params = field.config().params;
  const double R = params.R;
  const double a = field.plateau_half_width();
  std::vector<SliceInclusion> out;
  for (std::size_t i = 0; i < field.config().centers.size(); ++i) {
    const auto& c = field.config().centers[i];
    const double d2 = wrap_torus(varpi - c.x[1]);
    if (std::abs(d2) >= R) continue;
    SliceInclusion s;
    s.x1 = c.x[0];
    s.y = c.y;
    s.outer_half_width = R;
    s.plateau_half_width = a;
    s.amplitude = c.strength * plateau_profile(d2, a, R);
    s.source = i;
    // Largest centered square where the slice stays >= phi_lower: the corner
    // value amplitude * p(s)^2 decides.
    if (s.amplitude >= params.phi_lower) {
      const double level = std::sqrt(params.phi_lower / s.amplitude);
      s.inner_half_width = std::min(params.lambda * R, plateau_profile_inverse(level, a, R));
    }
    out.push_back(s);
  }
  return GlideSlice(varpi, std::move(out));
}

// ---------------------------------------------------------------------------

HitStatistics plane_hit_statistics(double R, double lambda, int n_precipitates, int n_trials,
                                   std::uint64_t seed, double z) {
  require(n_trials >= 1, "n_trials", "must be at least 1");
  require(n_precipitates >= 0, "n_precipitates", "must be non-negative");
  require(R > 0.0 && R < 0.5, "R", "must lie in (0, 1/2)");
  require(lambda > 0.0 && lambda <= 1.0, "lambda", "must lie in (0, 1]");

  const double r = lambda * R;
  HitStatistics out;
  out.n_trials = n_trials;
  out.z = z;
  for (int t = 0; t < n_trials; ++t) {
    Rng rng(seed, Stream::plane_trials, static_cast<std::uint64_t>(t));
    const double varpi = rng.uniform(-1.0, 1.0);
    bool hit = false;
    for (int i = 0; i < n_precipitates; ++i) {
      const double x2 = rng.uniform(-1.0, 1.0);
      if (std::abs(wrap_torus(varpi - x2)) < r) hit = true;
    }
    out.hits += hit ? 1 : 0;
  }
  const double n = static_cast<double>(n_trials);
  const double p = out.hits / n;
  out.fraction = p;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  out.ci_low = std::max(0.0, centre - half);
  out.ci_high = std::min(1.0, centre + half);
  out.expected = 1.0 - std::pow(1.0 - r, n_precipitates);
  return out;
}

}  // namespace depin
