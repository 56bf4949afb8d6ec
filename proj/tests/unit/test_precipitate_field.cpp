#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "depin/errors.hpp"
#include "depin/precipitate_field.hpp"
#include "depin/rng.hpp"

using namespace depin;

namespace {

// Brute-force smoothstep ramp, written independently of the library.
double ramp_reference(double offset, double plateau, double outer) {
  const double a = std::abs(offset);
  if (a <= plateau) return 1.0;
  if (a >= outer) return 0.0;
  const double s = (outer - a) / (outer - plateau);
  return s * s * (3.0 - 2.0 * s);
}

PinningField single_center_field(double R, double lambda, double x1, double x2, double y,
                                 double strength = 1.0) {
  PrecipitateParams p;
  p.R = R;
  p.lambda = lambda;
  p.count = 1;
  p.torus_dim = 2;
  p.phi_upper = std::max(1.0, strength);
  PrecipitateConfig c{p, {Center{{x1, x2, 0.0}, y, strength}}};
  return PinningField(c);
}

}  // namespace

TEST_SUITE("precipitate_field") {
  TEST_CASE("torus wrap maps differences into [-1, 1)") {
    CHECK(wrap_torus(0.3) == doctest::Approx(0.3));
    CHECK(wrap_torus(1.5) == doctest::Approx(-0.5));
    CHECK(wrap_torus(-1.2) == doctest::Approx(0.8));
    CHECK(wrap_torus(2.0) == doctest::Approx(0.0));
  }

  TEST_CASE("plateau profile matches the ramp polynomial and inverts") {
    const double plateau = 0.075;
    const double outer = 0.1;
    for (int i = 0; i <= 200; ++i) {
      const double x = -0.12 + 0.24 * i / 200.0;
      CHECK(plateau_profile(x, plateau, outer) == doctest::Approx(ramp_reference(x, plateau, outer)));
    }
    CHECK(plateau_profile(0.5 * (plateau + outer), plateau, outer) == doctest::Approx(0.5));
    for (double level : {0.1, 0.5, 0.9}) {
      const double s = plateau_profile_inverse(level, plateau, outer);
      CHECK(plateau_profile(s, plateau, outer) == doctest::Approx(level).epsilon(1e-9));
    }
  }

  TEST_CASE("single precipitate sample lies in the admissible box") {
    const auto c = sample_config(7, 0.1, 1.0, 0.5, 1, 10.0);
    REQUIRE(c.centers.size() == 1);
    const auto& z = c.centers.front();
    CHECK(z.x[0] >= -1.0);
    CHECK(z.x[0] <= 1.0);
    CHECK(z.x[1] >= -1.0);
    CHECK(z.x[1] <= 1.0);
    CHECK(z.y >= 0.2);
    CHECK(z.y <= 10.0);
  }

  TEST_CASE("centers respect the minimal spacing 2 R^(1 - beta)") {
    const auto c = sample_config(7, 0.1, 1.0, 0.5, 5, 10.0);
    REQUIRE(c.centers.size() == 5);
    const double spacing = 2.0 * std::pow(0.1, 0.5);
    CHECK(c.params.min_spacing() == doctest::Approx(spacing));
    double min_gap = 1e300;
    for (std::size_t i = 0; i + 1 < c.centers.size(); ++i) {
      CHECK(c.centers[i].y <= c.centers[i + 1].y);
      min_gap = std::min(min_gap, c.centers[i + 1].y - c.centers[i].y);
    }
    CHECK(min_gap >= spacing - 1e-12);
    CHECK(c.centers.front().y >= 0.2);
  }

  TEST_CASE("sampling is deterministic for a fixed seed") {
    const auto a = sample_config(7, 0.1, 1.0, 0.5, 5, 10.0);
    const auto b = sample_config(7, 0.1, 1.0, 0.5, 5, 10.0);
    const auto c = sample_config(8, 0.1, 1.0, 0.5, 5, 10.0);
    REQUIRE(a.centers.size() == b.centers.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.centers.size(); ++i) {
      CHECK(a.centers[i].x == b.centers[i].x);
      CHECK(a.centers[i].y == b.centers[i].y);
      CHECK(a.centers[i].strength == b.centers[i].strength);
      differs = differs || a.centers[i].x != c.centers[i].x;
    }
    CHECK(differs);
  }

  TEST_CASE("x coordinates are uniform on [-1, 1] (Kolmogorov-Smirnov)") {
    std::vector<double> xs;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      xs.push_back(sample_config(derive_seed(3, Stream::test, s), 0.1, 1.0, 0.5, 1, 10.0)
                       .centers.front()
                       .x[0]);
    }
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    const auto n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double cdf = 0.5 * (xs[i] + 1.0);
      d = std::max({d, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
    }
    // 0.1% critical value of the KS statistic.
    CHECK(d < 1.95 / std::sqrt(n));
  }

  TEST_CASE("invalid parameters are rejected with the field name") {
    PrecipitateParams p;
    p.beta = 1.5;
    try {
      p.validate();
      FAIL("beta = 1.5 accepted");
    } catch (const ValidationError& e) {
      CHECK(e.field() == "beta");
    }
    p = PrecipitateParams{};
    p.R = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = PrecipitateParams{};
    p.phi_upper = 0.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CHECK_THROWS_AS(sample_config(1, 0.1, 1.0, 0.5, 20, 1.0), ValidationError);
  }

  TEST_CASE("potential: plateau value at the center, zero off the support") {
    const auto field = single_center_field(0.1, 1.0, 0.2, -0.3, 1.0, 1.7);
    CHECK(field(0.2, -0.3, 1.0) == doctest::Approx(1.7));
    CHECK(field(0.2, -0.3, 1.0 + 0.1001) == 0.0);
    CHECK(field(0.2, -0.3, 1.0 - 0.15) == 0.0);
    CHECK(field(0.2 + 2.0, -0.3 - 2.0, 1.0) == doctest::Approx(1.7));  // periodic images
    const double a = field.plateau_half_width();
    const double mid = 0.5 * (a + 0.1);
    const double v = field(0.2 + mid, -0.3, 1.0);
    CHECK(v > 0.0);
    CHECK(v < 1.7);
    CHECK(v == doctest::Approx(1.7 * ramp_reference(mid, a, 0.1)));
  }

  TEST_CASE("potential bounds and Lipschitz property on random pairs") {
    PrecipitateParams p;
    p.R = 0.1;
    p.lambda = 0.5;
    p.phi_lower = 0.5;
    p.phi_upper = 2.0;
    p.strength_mode = StrengthMode::uniform;
    p.count = 6;
    p.y_window = 6.0;
    p.seed = 11;
    const PinningField field(sample_config(p));
    const double L = field.lipschitz_bound();
    Rng rng(11, Stream::test, 0);
    for (int i = 0; i < 20000; ++i) {
      const double x1 = rng.uniform(-1, 1);
      const double x2 = rng.uniform(-1, 1);
      const double y = rng.uniform(0, 6);
      const double v = field(x1, x2, y);
      CHECK(v >= 0.0);
      CHECK(v <= p.phi_upper);
      const double d1 = rng.uniform(-0.02, 0.02);
      const double d2 = rng.uniform(-0.02, 0.02);
      const double d3 = rng.uniform(-0.02, 0.02);
      const double w = field(x1 + d1, x2 + d2, y + d3);
      CHECK(std::abs(v - w) <= L * std::sqrt(d1 * d1 + d2 * d2 + d3 * d3) + 1e-12);
    }
    // Inner cubes carry at least phi_lower.
    const double inner = field.inner_half_width();
    for (const auto& c : field.config().centers) {
      for (int k = 0; k < 50; ++k) {
        const double v = field(c.x[0] + rng.uniform(-inner, inner), c.x[1] + rng.uniform(-inner, inner),
                               c.y + rng.uniform(-inner, inner));
        CHECK(v >= p.phi_lower - 1e-12);
      }
    }
  }

  TEST_CASE("glide slice agrees with the field pointwise") {
    PrecipitateParams p;
    p.R = 0.1;
    p.count = 8;
    p.y_window = 8.0;
    p.seed = 5;
    const PinningField field(sample_config(p));
    Rng rng(5, Stream::test, 1);
    for (int trial = 0; trial < 50; ++trial) {
      const double varpi = rng.uniform(-1, 1);
      const GlideSlice slice = slice_glide_plane(field, varpi);
      for (const auto& inc : slice.inclusions()) {
        CHECK(std::abs(wrap_torus(varpi - field.config().centers[inc.source].x[1])) < p.R);
      }
      for (int k = 0; k < 200; ++k) {
        const double x1 = rng.uniform(-1, 1);
        const double y = rng.uniform(0, 8);
        CHECK(slice(x1, y) == doctest::Approx(field(x1, varpi, y)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("glide slice: central cut and empty cut") {
    const auto field = single_center_field(0.1, 1.0, 0.0, 0.4, 1.0);
    const GlideSlice central = slice_glide_plane(field, 0.4);
    REQUIRE(central.inclusions().size() == 1);
    CHECK(central.inclusions()[0].inner_half_width == doctest::Approx(0.1 * (1.0 - field.epsilon())));
    CHECK(central.inclusions()[0].outer_half_width == doctest::Approx(0.1));
    CHECK(central.inclusions()[0].amplitude == doctest::Approx(1.0));
    CHECK(slice_glide_plane(field, -0.4).empty());
  }

  TEST_CASE("plane hit statistics") {
    const auto none = plane_hit_statistics(0.1, 1.0, 0, 1000, 1);
    CHECK(none.hits == 0);
    CHECK(none.fraction == 0.0);

    const auto one = plane_hit_statistics(0.1, 1.0, 1, 10000, 2);
    CHECK(one.expected == doctest::Approx(0.1));
    const double sigma = std::sqrt(0.1 * 0.9 / 10000.0);
    CHECK(std::abs(one.fraction - 0.1) <= 3.0 * sigma);
    CHECK(one.ci_low <= 0.1);
    CHECK(one.ci_high >= 0.1);

    const auto many = plane_hit_statistics(0.1, 1.0, 200, 10000, 3);
    CHECK(many.fraction >= 0.999);
  }
}
