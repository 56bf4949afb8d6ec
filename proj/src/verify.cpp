#include "depin/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "depin/analytic_bounds.hpp"
#include "depin/depinning.hpp"
#include "depin/errors.hpp"
#include "depin/rng.hpp"
#include "depin/spectral.hpp"

namespace depin {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

/// sum_{n,m} a[n][m] cos(pi n x_i) cos(pi m x_j) on a G x G grid.
std::vector<double> synthesize_cosines(const std::vector<double>& a, int K, int G) {
  const auto k = static_cast<std::size_t>(K);
  const auto g = static_cast<std::size_t>(G);
  const double h = 2.0 / G;
  std::vector<double> c(k * g);
  for (std::size_t n = 0; n < k; ++n) {
    for (std::size_t j = 0; j < g; ++j) {
      c[n * g + j] = std::cos(kPi * static_cast<double>(n) * (-1.0 + static_cast<double>(j) * h));
    }
  }
  std::vector<double> partial(k * g, 0.0);
  for (std::size_t n = 0; n < k; ++n) {
    for (std::size_t m = 0; m < k; ++m) {
      const double coef = a[n * k + m];
      if (coef == 0.0) continue;
      for (std::size_t j = 0; j < g; ++j) partial[n * g + j] += coef * c[m * g + j];
    }
  }
  std::vector<double> out(g * g, 0.0);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t n = 0; n < k; ++n) {
      const double ci = c[n * g + i];
      for (std::size_t j = 0; j < g; ++j) out[i * g + j] += ci * partial[n * g + j];
    }
  }
  return out;
}

PrecipitateConfig field_config(const PrecipitateParams& p) {
  if (p.count > 0) return sample_config(p);
  p.validate();
  return PrecipitateConfig{p, {}};
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string VerifyReport::text() const {
  std::string out;
  for (const auto& c : checks) out += (c.passed ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
  return out;
}

double spectral_symbol_error(int dim, int n, double alpha, double alpha_applied) {
  require(dim >= 1 && dim <= 3, "dim", "must be 1, 2 or 3");
  SpectralOperator op(dim, n, alpha_applied);
  const std::vector<std::array<int, 3>> modes = {
      {1, 0, 0}, {0, 1, 2}, {3, 2, 1}, {n / 4, 1, 0}, {n / 2 - 1, n / 2 - 1, 1}};
  std::size_t size = 1;
  for (int d = 0; d < dim; ++d) size *= static_cast<std::size_t>(n);
  std::vector<double> u(size), out(size);
  const double h = 2.0 / n;
  double worst = 0.0;
  for (const auto& k : modes) {
    double k2 = 0.0;
    for (int d = 0; d < dim; ++d) k2 += static_cast<double>(k[d]) * k[d];
    if (k2 == 0.0) continue;
    for (std::size_t i = 0; i < size; ++i) {
      double v = 1.0;
      std::size_t rest = i;
      for (int d = dim - 1; d >= 0; --d) {
        const double x = -1.0 + static_cast<double>(rest % static_cast<std::size_t>(n)) * h;
        rest /= static_cast<std::size_t>(n);
        v *= std::cos(kPi * k[d] * x);
      }
      u[i] = v;
    }
    op.apply(u, out);
    const double lambda = std::pow(kPi * kPi * k2, alpha);
    double err = 0.0;
    for (std::size_t i = 0; i < size; ++i) err = std::max(err, std::abs(out[i] - lambda * u[i]));
    worst = std::max(worst, err / lambda);
  }
  return worst;
}

double fourier_roundtrip_error(double alpha, double rho, double mu, int n_max, int grid_n,
                               double alpha_applied) {
  require(2 * n_max < grid_n, "grid_N", "must exceed twice N_max so retained modes are resolved");
  const FourierProfile p = fourier_profile(alpha, rho, mu, n_max, grid_n);
  SpectralOperator op(2, grid_n, alpha_applied);
  std::vector<double> applied(p.u.size());
  op.apply(p.u, applied);

  // chi_[-rho, rho] = rho + sum_k 2 sin(pi k rho)/(pi k) cos(pi k x) on [-1, 1).
  const int K = n_max + 1;
  std::vector<double> a(static_cast<std::size_t>(K));
  a[0] = rho;
  for (int k = 1; k < K; ++k) a[static_cast<std::size_t>(k)] = 2.0 * std::sin(kPi * k * rho) / (kPi * k);
  std::vector<double> g(static_cast<std::size_t>(K * K));
  for (int n = 0; n < K; ++n) {
    for (int m = 0; m < K; ++m) {
      g[static_cast<std::size_t>(n * K + m)] =
          -(p.F1 + p.F2) * a[static_cast<std::size_t>(n)] * a[static_cast<std::size_t>(m)];
    }
  }
  g[0] += p.F2;
  const auto target = synthesize_cosines(g, K, grid_n);
  double err = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) err = std::max(err, std::abs(applied[i] - target[i]));
  return err;
}

double free_propagation_error(OperatorKind op, int dim, double force, double t, int n_grid) {
  EvolverSpec spec;
  spec.op = op;
  spec.force = force;
  spec.n_grid = n_grid;
  spec.t_max = t;
  Evolver evolver(spec, dim);
  StoppingRule rule;
  rule.t_max = t;
  rule.sample_interval = t;
  rule.use_frozen_flight = false;
  const auto summary = evolve(InterfaceState(dim, n_grid), evolver, rule);
  const double exact = force * t;
  double err = 0.0;
  for (double v : summary.final_state.values()) err = std::max(err, std::abs(v - exact));
  return err / exact;
}

ArcPropertyResult arc_property_test(int samples, std::uint64_t seed, int n_grid) {
  ArcPropertyResult res;
  Rng rng(seed, Stream::test, 8);
  for (int s = 0; s < samples; ++s) {
    double rho = 0.0, mu = 0.0, F0 = 0.0;
    ArcFlags flags;
    do {
      rho = rng.uniform(0.02, 0.45);
      mu = rng.uniform(0.1, 20.0);
      F0 = rng.uniform(0.0, mu);
      flags = arc_flags(rho, mu, F0);
    } while (!flags.well_defined);
    ++res.samples;
    const bool expected = F0 <= rho * mu;
    if (flags.supersolution != expected) ++res.flag_mismatches;

    const ArcProfile p = arc_profile(rho, mu, F0, n_grid);
    const double tol = 1e-2 * (1.0 + mu);
    const auto banded = verify_viscosity_inequality(1, n_grid, p.v, ResidualEquation::mean_curvature_1d,
                                                    0.0, mu, rho, F0, tol, 2.0);
    res.worst_relative_residual =
        std::max(res.worst_relative_residual,
                 std::max(banded.max_residual, -banded.min_residual) / (1.0 + mu));
    if (flags.supersolution) {
      ++res.flagged;
      if (!banded.supersolution_ok()) ++res.residual_violations;
    }
    // Away from the tie F0 = rho mu the corner at |x| = rho has a definite
    // orientation, visible as a large curvature of one sign on the grid.
    if (std::abs(F0 - rho * mu) >= 0.05 * rho * mu) {
      ++res.kink_tested;
      const auto raw = verify_viscosity_inequality(1, n_grid, p.v, ResidualEquation::mean_curvature_1d,
                                                   0.0, mu, rho, F0, tol, 0.0);
      if (raw.supersolution_ok() != flags.supersolution) ++res.kink_mismatches;
    }
  }
  return res;
}

VerifyReport run_verification(const VerifyOptions& o) {
  VerifyReport report;
  auto add = [&](std::string name, bool ok, std::string detail) {
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, const auto& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, std::string("threw: ") + e.what());
    }
  };
  const double applied = o.alpha + o.alpha_fault;

  guarded("spectral_consistency", [&] {
    const double frac = spectral_symbol_error(2, 32, o.alpha, applied);
    const double lap = spectral_symbol_error(1, 64, 1.0, 1.0 + o.alpha_fault);
    add("spectral_consistency", frac <= 1e-10 && lap <= 1e-10,
        "relative symbol error " + fmt(frac) + " (alpha = " + fmt(o.alpha) + "), " + fmt(lap) +
            " (Laplacian)");
  });

  guarded("fourier_roundtrip", [&] {
    double worst = 0.0;
    for (double rho : {0.1, 0.25}) {
      for (double mu : {0.5, 1.0, 2.0}) {
        worst = std::max(worst, fourier_roundtrip_error(o.alpha, rho, mu, 32, 128, applied));
      }
    }
    add("fourier_roundtrip", worst <= 1e-6, "max-norm error " + fmt(worst));
  });

  guarded("linf_domination", [&] {
    int failures = 0;
    double tightest = 1e300;
    for (double alpha : {0.5, 0.6, 0.7}) {
      for (double rho : {0.05, 0.1, 0.25}) {
        for (double mu : {0.5, 1.0, 2.0}) {
          const FourierProfile p = fourier_profile(alpha, rho, mu, 64, 256);
          const LinfBound b = linf_bound(alpha, rho, p.F1, p.F2);
          if (!(b.bound >= p.sup_norm)) ++failures;
          tightest = std::min(tightest, b.bound / p.sup_norm);
        }
      }
    }
    double worst_ratio = 0.0;
    for (double alpha : {0.5, 0.6, 0.7}) {
      const double r = linf_bound(alpha, 0.02, 0.5, 0.5).bound / linf_bound(alpha, 0.01, 0.5, 0.5).bound;
      worst_ratio = std::max(worst_ratio, std::abs(r / std::pow(2.0, 2.0 * alpha) - 1.0));
    }
    add("linf_domination", failures == 0 && worst_ratio <= 0.1,
        std::to_string(failures) + " domination failures, min bound/sup " + fmt(tightest) +
            ", worst halving ratio deviation " + fmt(worst_ratio));
  });

  guarded("arc_flags", [&] {
    const auto r = arc_property_test(o.full ? 1000 : 200, o.seed, 2048);
    add("arc_flags",
        r.flag_mismatches == 0 && r.residual_violations == 0 && r.kink_mismatches == 0,
        std::to_string(r.samples) + " samples, " + std::to_string(r.flagged) + " flagged, " +
            std::to_string(r.flag_mismatches) + " flag / " + std::to_string(r.residual_violations) +
            " residual / " + std::to_string(r.kink_mismatches) + " kink mismatches");
  });

  guarded("paraboloid_n1", [&] {
    const double rho = 0.2, mu = 2.0;
    const int n = 1000;
    const auto p = paraboloid_profile(1, rho, mu, mu * rho, n);
    const auto r = verify_viscosity_inequality(1, n, p.u, ResidualEquation::laplacian, 1.0, mu, rho,
                                               mu * rho, 1e-8, 1.0);
    add("paraboloid_n1", p.flags.weak_solution && r.supersolution_ok() && r.subsolution_ok(),
        "F0 = mu rho: weak_solution " + std::string(p.flags.weak_solution ? "set" : "unset") +
            ", residual range [" + fmt(r.min_residual) + ", " + fmt(r.max_residual) + "]");
  });

  guarded("free_propagation", [&] {
    const double a = free_propagation_error(OperatorKind::fractional, 2, 0.3, 1.0, 32);
    const double b = free_propagation_error(OperatorKind::mean_curvature, 1, 0.3, 1.0, 64);
    const double c = free_propagation_error(OperatorKind::laplacian, 2, 0.3, 1.0, 32);
    add("free_propagation", std::max({a, b, c}) <= 1e-8,
        "relative errors " + fmt(a) + " / " + fmt(b) + " / " + fmt(c));
  });

  guarded("plane_hit_monte_carlo", [&] {
    const int trials = o.full ? 100000 : 10000;
    const auto many = plane_hit_statistics(0.1, 1.0, 200, trials, o.seed);
    const auto one = plane_hit_statistics(0.1, 1.0, 1, trials, o.seed + 1);
    const bool ok = many.fraction >= 0.999 && one.ci_low <= one.expected && one.expected <= one.ci_high;
    add("plane_hit_monte_carlo", ok,
        "200 precipitates hit fraction " + fmt(many.fraction) + "; 1 precipitate " + fmt(one.fraction) +
            " vs " + fmt(one.expected) + " in [" + fmt(one.ci_low) + ", " + fmt(one.ci_high) + "]");
  });

  guarded("fit_self_test", [&] {
    const std::vector<double> R{0.02, 0.04, 0.06, 0.08, 0.10};
    double exact_err = 0.0;
    for (double p : {1.0, 2.0}) {
      std::vector<double> F;
      for (double r : R) F.push_back(0.7 * std::pow(r, p));
      exact_err = std::max(exact_err, std::abs(fit_exponent(R, F).slope - p));
    }
    Rng rng(o.seed, Stream::test, 9);
    std::vector<double> F;
    for (double r : R) F.push_back(0.7 * r * r * std::exp(0.05 * gaussian(rng)));
    const FitResult noisy = fit_exponent(R, F);
    bool rejects_two = false;
    try {
      fit_exponent(std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, 2.0});
    } catch (const ValidationError&) {
      rejects_two = true;
    }
    const bool ok = exact_err <= 1e-12 && std::abs(noisy.slope - 2.0) <= 4.0 * noisy.stderr_slope &&
                    rejects_two;
    add("fit_self_test", ok,
        "exact slope error " + fmt(exact_err) + ", noisy slope " + fmt(noisy.slope) + " +- " +
            fmt(noisy.stderr_slope) + ", two-point fit " + (rejects_two ? "rejected" : "accepted"));
  });

  guarded("field_potential", [&] {
    const PinningField field(field_config(o.field));
    const int dim = field.torus_dim();
    Rng rng(o.seed, Stream::test, 10);
    double lo = 1e300, hi = -1e300, worst_slope = 0.0;
    const double y_top = o.field.y_window + 2.0 * o.field.R;
    for (int s = 0; s < 4000; ++s) {
      std::array<double, 3> x{};
      for (int d = 0; d < dim; ++d) x[d] = rng.uniform(-1.0, 1.0);
      const double y = rng.uniform(-0.5, y_top);
      const double v = field.value(std::span<const double>(x.data(), 3), y);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      const double dy = 1e-6;
      const double v2 = field.value(std::span<const double>(x.data(), 3), y + dy);
      worst_slope = std::max(worst_slope, std::abs(v2 - v) / dy);
    }
    bool centers_ok = true;
    for (const auto& c : field.config().centers) {
      const double v = field.value(std::span<const double>(c.x.data(), 3), c.y);
      centers_ok = centers_ok && v >= o.field.phi_lower - 1e-12;
    }
    const bool empty = field.config().centers.empty();
    const bool ok = lo >= 0.0 && hi <= o.field.phi_upper * (1.0 + 1e-12) && centers_ok &&
                    worst_slope <= field.lipschitz_bound() * (1.0 + 1e-6) && (!empty || hi == 0.0);
    add("field_potential", ok,
        std::to_string(field.config().centers.size()) + " precipitates, phi in [" + fmt(lo) + ", " +
            fmt(hi) + "], max |dphi/dy| " + fmt(worst_slope) + " <= " + fmt(field.lipschitz_bound()));
  });

  guarded("zero_force_pinned", [&] {
    const PinningField field(field_config(o.field));
    ProbeSetup setup;
    setup.spec.op = OperatorKind::laplacian;
    setup.spec.n_grid = 32;
    setup.dim = field.torus_dim();
    setup.obstacles = field.obstacles();
    const auto rec = probe(setup, 0.0, Thresholds{});
    add("zero_force_pinned", rec.verdict == Verdict::pinned,
        "F = 0 on this field: " + to_string(rec.verdict) + ", max height " +
            fmt(rec.evidence.max_displacement));
  });

  return report;
}

}  // namespace depin
