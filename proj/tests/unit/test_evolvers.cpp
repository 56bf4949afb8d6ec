#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "depin/analytic_bounds.hpp"
#include "depin/errors.hpp"
#include "depin/evolvers.hpp"
#include "depin/verify.hpp"

using namespace depin;
using std::numbers::pi;

namespace {

EvolverSpec make_spec(OperatorKind op, double force, int n, double dt = 0.0, double alpha = 0.5) {
  EvolverSpec s;
  s.op = op;
  s.alpha = alpha;
  s.force = force;
  s.n_grid = n;
  s.dt = dt;
  return s;
}

// u(x) = amp * prod_d cos(pi k_d x_d) on the grid.
InterfaceState mode_state(int dim, int n, std::array<int, 3> k, double amp) {
  InterfaceState s(dim, n);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = s.point(i);
    double v = amp;
    for (int d = 0; d < dim; ++d) v *= std::cos(pi * k[d] * x[d]);
    s[i] = v;
  }
  return s;
}

double max_abs(const InterfaceState& s) {
  return std::max(std::abs(s.min()), std::abs(s.max()));
}

void advance(Evolver& e, InterfaceState& s, double t) {
  while (s.t() < t - 1e-14) e.step(s, t - s.t());
}

Obstacles centered_block(int dim, double rho, double mu, double ramp) {
  Inclusion inc;
  inc.amplitude = mu;
  inc.plateau = rho - 0.5 * ramp;
  inc.outer = rho + 0.5 * ramp;
  return Obstacles(dim, {inc});
}

}  // namespace

TEST_SUITE("evolvers") {
  TEST_CASE("flat propagation at speed F for every operator") {
    for (auto [op, dim] : {std::pair{OperatorKind::fractional, 2}, std::pair{OperatorKind::mean_curvature, 1},
                           std::pair{OperatorKind::laplacian, 1}, std::pair{OperatorKind::laplacian, 2},
                           std::pair{OperatorKind::laplacian, 3}}) {
      CAPTURE(dim);
      CHECK(free_propagation_error(op, dim, 1.0, 1.0, dim == 3 ? 16 : 32) <= 1e-8);
    }
  }

  TEST_CASE("fractional eigenmode decays as exp(-pi t) at alpha = 1/2") {
    Evolver e(make_spec(OperatorKind::fractional, 0.0, 32, 1e-4), 2);
    auto s = mode_state(2, 32, {1, 0, 0}, 1.0);
    advance(e, s, 0.5);
    CHECK(max_abs(s) == doctest::Approx(std::exp(-pi * 0.5)).epsilon(1e-3));
  }

  TEST_CASE("one step applies the multiplier (1 + dt lambda^alpha)^-1") {
    const double dt = 0.005;
    for (double alpha : {0.5, 0.75}) {
      Evolver e(make_spec(OperatorKind::fractional, 0.0, 32, dt, alpha), 2);
      auto s = mode_state(2, 32, {1, 2, 0}, 1.0);
      const auto before = s;
      step_fractional(s, e);
      const double lam = std::pow(pi * pi * 5.0, alpha);
      const double m = 1.0 / (1.0 + dt * lam);
      double err = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(s[i] - m * before[i]));
      CHECK(err < 1e-13);
      CHECK(s.t() == doctest::Approx(dt));
    }
  }

  TEST_CASE("Laplacian eigenmodes decay at pi^2 |k|^2") {
    for (int dim : {1, 2, 3}) {
      const int n = dim == 3 ? 16 : 32;
      Evolver e(make_spec(OperatorKind::laplacian, 0.0, n, 1e-5), dim);
      auto s = mode_state(dim, n, {1, 1, 1}, 1.0);
      const double t = 0.02;
      advance(e, s, t);
      const double rate = -std::log(max_abs(s)) / t;
      CHECK(rate == doctest::Approx(pi * pi * dim).epsilon(1e-3));
    }
  }

  TEST_CASE("mean curvature flow linearisation decays at pi^2") {
    Evolver e(make_spec(OperatorKind::mean_curvature, 0.0, 128), 1);
    auto s = mode_state(1, 128, {1, 0, 0}, 1e-3);
    const double t = 0.05;
    advance(e, s, t);
    const double rate = -std::log(max_abs(s) / 1e-3) / t;
    CHECK(rate == doctest::Approx(pi * pi).epsilon(2e-3));
  }

  TEST_CASE("explicit mean curvature step rejects unstable dt") {
    CHECK_THROWS_AS(Evolver(make_spec(OperatorKind::mean_curvature, 0.0, 128, 1e-2), 1), ValidationError);
    CHECK(max_stable_dt(make_spec(OperatorKind::mean_curvature, 0.0, 128), 128, 0.0) <=
          0.4 * std::pow(2.0 / 128, 2) + 1e-15);
  }

  TEST_CASE("operator and dimension mismatches are rejected") {
    Evolver frac(make_spec(OperatorKind::fractional, 0.0, 16), 2);
    InterfaceState s(2, 16);
    CHECK_THROWS_AS(step_laplacian(s, frac), ValidationError);
    CHECK_THROWS_AS(Evolver(make_spec(OperatorKind::mean_curvature, 0.0, 16), 2), ValidationError);
    CHECK_THROWS_AS(Evolver(make_spec(OperatorKind::fractional, 0.0, 16, 0.0, 1.0), 2), ValidationError);
  }

  TEST_CASE("stationary arc stays put under mean curvature flow") {
    const double rho = 0.25, mu = 2.0, F0 = rho * mu;
    const int n = 256;
    const auto arc = arc_profile(rho, mu, F0, n);
    Evolver e(make_spec(OperatorKind::mean_curvature, F0, n), 1, centered_block(1, rho, mu, 2e-3));
    InterfaceState s(1, n, 0.0, arc.v);
    const auto start = s;
    for (int k = 0; k < 100; ++k) e.step(s);
    double mean_speed = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) mean_speed += std::abs(s[i] - start[i]);
    mean_speed /= static_cast<double>(s.size()) * s.t();
    // Only the nodes next to the kinks move, by O(mu h) each; free motion
    // would be F0.
    CHECK(mean_speed < 0.05 * F0);
  }

  TEST_CASE("stationary paraboloid stays put under the Laplacian flow") {
    const double rho = 0.25, mu = 2.0, F0 = mu * rho;
    const int n = 256;
    const auto p = paraboloid_profile(1, rho, mu, F0, n);
    Evolver e(make_spec(OperatorKind::laplacian, F0, n, 1e-5), 1, centered_block(1, rho, mu, 2e-3));
    InterfaceState s(1, n, 0.0, p.u);
    const auto start = s;
    for (int k = 0; k < 100; ++k) e.step(s);
    double mean_speed = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) mean_speed += std::abs(s[i] - start[i]);
    mean_speed /= static_cast<double>(s.size()) * s.t();
    CHECK(mean_speed < 0.05 * F0);
  }

  TEST_CASE("comparison: ordered initial data stay ordered") {
    const auto obstacles = centered_block(2, 0.2, 1.0, 0.05);
    Evolver e(make_spec(OperatorKind::fractional, 0.3, 32, 1e-3), 2, obstacles);
    auto low = mode_state(2, 32, {1, 1, 0}, 0.05);
    auto high = low;
    for (std::size_t i = 0; i < high.size(); ++i) high[i] += 0.02 * (1.0 + std::sin(0.1 * i));
    for (int k = 0; k < 300; ++k) {
      e.step(low);
      e.step(high);
    }
    for (std::size_t i = 0; i < low.size(); ++i) CHECK(low[i] <= high[i] + 1e-12);
  }

  TEST_CASE("translation equivariance without a potential") {
    Evolver e(make_spec(OperatorKind::laplacian, 0.2, 64, 1e-4), 1);
    auto a = mode_state(1, 64, {3, 0, 0}, 0.1);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += 0.05 * std::sin(pi * a.coordinate(static_cast<int>(i)));
    InterfaceState b(1, 64);
    for (std::size_t i = 0; i < a.size(); ++i) b[(i + 5) % 64] = a[i];
    for (int k = 0; k < 200; ++k) {
      e.step(a);
      e.step(b);
    }
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[(i + 5) % 64] == doctest::Approx(a[i]).epsilon(1e-12));
  }

  TEST_CASE("evolve: potential-free run stays flat and reaches F t") {
    Evolver e(make_spec(OperatorKind::fractional, 1.0, 32), 2);
    StoppingRule rule;
    rule.t_max = 2.0;
    rule.sample_interval = 0.25;
    const auto summary = evolve(InterfaceState(2, 32), e, rule);
    CHECK(summary.final_state.t() == doctest::Approx(2.0));
    CHECK(summary.final_state.mean() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(summary.final_state.max() - summary.final_state.min() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(summary.samples.front().t == 0.0);
    CHECK(summary.samples.size() == 9);
    CHECK(summary.samples.back().mean_velocity == doctest::Approx(1.0));
  }

  TEST_CASE("evolve: frozen flight matches plain stepping") {
    const auto obstacles = centered_block(2, 0.2, 1.0, 0.05);
    Obstacles lifted;
    {
      Inclusion inc = obstacles.inclusions()[0];
      inc.y = 0.6;
      lifted = Obstacles(2, {inc});
    }
    StoppingRule fast;
    fast.t_max = 0.3;
    fast.sample_interval = 0.1;
    StoppingRule slow = fast;
    slow.use_frozen_flight = false;
    Evolver a(make_spec(OperatorKind::fractional, 0.5, 32, 1e-4), 2, lifted);
    Evolver b(make_spec(OperatorKind::fractional, 0.5, 32, 1e-4), 2, lifted);
    const auto ra = evolve(InterfaceState(2, 32), a, fast);
    const auto rb = evolve(InterfaceState(2, 32), b, slow);
    for (std::size_t i = 0; i < ra.final_state.size(); ++i) {
      CHECK(ra.final_state[i] == doctest::Approx(rb.final_state[i]).epsilon(1e-6));
    }
  }

  TEST_CASE("no forward motion without force") {
    PrecipitateParams p;
    p.R = 0.1;
    p.count = 3;
    p.y_window = 3.0;
    p.seed = 4;
    const PinningField field(sample_config(p));
    Evolver e(make_spec(OperatorKind::fractional, 0.0, 32), 2, field.obstacles());
    StoppingRule rule;
    rule.t_max = 5.0;
    rule.sample_interval = 0.5;
    const auto summary = evolve(InterfaceState(2, 32), e, rule);
    CHECK(summary.final_state.max() <= 1e-12);
  }

  TEST_CASE("early stop from the sample callback") {
    Evolver e(make_spec(OperatorKind::laplacian, 1.0, 32), 1);
    StoppingRule rule;
    rule.t_max = 10.0;
    rule.sample_interval = 0.1;
    rule.on_sample = [](const InterfaceState& s, const TrajectorySample&) { return s.t() >= 0.5 - 1e-12; };
    const auto summary = evolve(InterfaceState(1, 32), e, rule);
    CHECK(summary.stopped_early);
    CHECK(summary.final_state.t() == doctest::Approx(0.5));
  }
}
