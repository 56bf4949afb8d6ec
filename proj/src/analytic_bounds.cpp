#include "depin/analytic_bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "depin/errors.hpp"
#include "depin/spectral.hpp"

namespace depin {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t grid_size(int dim, int n) {
  std::size_t s = 1;
  for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
  return s;
}

}  // namespace

// --- arcs -------------------------------------------------------------------

ArcFlags arc_flags(double rho, double mu, double F0, double beta) {
  ArcFlags f;
  f.well_defined = mu - 1.0 / rho <= F0 && F0 <= 1.0 / (1.0 - rho);
  f.supersolution = F0 <= rho * mu;
  f.subsolution = F0 >= rho * mu;
  f.amplitude_ok = mu - 2.0 / rho <= F0 && F0 <= 2.0 * rho / ((1.0 - rho) * (1.0 - rho));
  const double denom = 1.0 - 2.0 * rho;
  f.oscillation_ok =
      denom > 0.0 &&
      F0 < (4.0 * std::pow(rho, 1.0 - beta) - 4.0 * rho - mu * rho * rho) / denom;
  return f;
}

double arc_value(double rho, double mu, double F0, double x) {
  const double k = mu - F0;
  const double b = 1.0 - rho;
  const double in_rad = 1.0 - k * k * rho * rho;
  const double out_rad = 1.0 - F0 * F0 * b * b;
  if (in_rad < 0.0) throw IllDefinedProfile("arc: inner radius 1/(mu - F0) is smaller than rho");
  if (out_rad < 0.0) throw IllDefinedProfile("arc: outer radius 1/F0 is smaller than 1 - rho");
  const double ax = std::abs(x);
  // Rationalised differences of square roots; no cancellation for small arcs.
  if (ax < rho) {
    return k * (x * x - rho * rho) / (std::sqrt(1.0 - k * k * x * x) + std::sqrt(in_rad));
  }
  const double s = 1.0 - ax;
  return F0 * (b * b - s * s) / (std::sqrt(1.0 - F0 * F0 * s * s) + std::sqrt(out_rad));
}

ArcProfile arc_profile(double rho, double mu, double F0, int n, double beta) {
  require(rho > 0.0 && rho < 1.0, "rho", "must lie in (0, 1)");
  require(F0 >= 0.0, "F0", "must be >= 0");
  require(mu > F0, "mu", "must exceed F0");
  require(n >= 4, "N", "grid must have at least 4 points");
  ArcProfile p;
  p.rho = rho;
  p.mu = mu;
  p.F0 = F0;
  p.beta = beta;
  p.n = n;
  p.flags = arc_flags(rho, mu, F0, beta);
  const double h = 2.0 / n;
  p.x.resize(static_cast<std::size_t>(n));
  p.v.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    p.x[static_cast<std::size_t>(j)] = -1.0 + j * h;
    p.v[static_cast<std::size_t>(j)] = arc_value(rho, mu, F0, p.x[static_cast<std::size_t>(j)]);
  }
  return p;
}

// --- Fourier series ---------------------------------------------------------

double fourier_coefficient(double alpha, double rho, double F1, double F2, int n, int m) {
  if (n < 0 || m < 0 || (n == 0 && m == 0)) return 0.0;
  const double total = F1 + F2;
  if (n == 0 || m == 0) {
    const double k = static_cast<double>(std::max(n, m));
    return -2.0 * total * rho * std::sin(kPi * k * rho) /
           (std::pow(kPi, 1.0 + 2.0 * alpha) * std::pow(k, 1.0 + 2.0 * alpha));
  }
  const double dn = n;
  const double dm = m;
  return -4.0 * total * std::sin(kPi * dn * rho) * std::sin(kPi * dm * rho) /
         (std::pow(kPi, 2.0 + 2.0 * alpha) * std::pow(dn * dn + dm * dm, alpha) * dn * dm);
}

double fourier_tail_bound(double alpha, double rho, double F1, double F2, int n_max) {
  const double total = F1 + F2;
  const double N = n_max;
  // Pairs with max(n, m) > N, using (n^2 + m^2)^alpha >= (2nm)^alpha.
  const double K = 4.0 * total / (std::pow(kPi, 2.0 + 2.0 * alpha) * std::pow(2.0, alpha));
  const double tail = std::pow(N, -alpha) / alpha;
  const double full = 1.0 + 1.0 / alpha;
  const double interior = K * 2.0 * tail * full;
  // Axis modes (n, 0) and (0, m).
  const double axis = 2.0 * (2.0 * total * rho / std::pow(kPi, 1.0 + 2.0 * alpha)) *
                      std::pow(N, -2.0 * alpha) / (2.0 * alpha);
  return interior + axis;
}

FourierProfile fourier_profile(double alpha, double rho, double mu, int n_max, int grid_n,
                               double tail_tolerance) {
  require(alpha >= 0.5 && alpha < 1.0, "alpha", "must lie in [1/2, 1)");
  require(rho > 0.0 && rho < 1.0, "rho", "must lie in (0, 1)");
  require(mu > 0.0, "mu", "must be positive");
  require(n_max >= 1, "N_max", "must be at least 1");
  require(grid_n >= 4 && grid_n % 2 == 0, "grid_N", "must be even and >= 4");

  FourierProfile p;
  p.alpha = alpha;
  p.rho = rho;
  p.mu = mu;
  p.F2 = mu * rho * rho;
  p.F1 = mu - p.F2;
  p.n_max = n_max;
  p.grid_n = grid_n;
  p.tail_bound = fourier_tail_bound(alpha, rho, p.F1, p.F2, n_max);
  if (!(p.tail_bound <= tail_tolerance)) {
    throw ValidationError("N_max", "truncation tail bound " + std::to_string(p.tail_bound) +
                                       " exceeds the tolerance");
  }

  const auto K = static_cast<std::size_t>(n_max + 1);
  const auto G = static_cast<std::size_t>(grid_n);
  p.coeff.assign(K * K, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    for (int m = 0; m <= n_max; ++m) {
      p.coeff[static_cast<std::size_t>(n) * K + static_cast<std::size_t>(m)] =
          fourier_coefficient(alpha, rho, p.F1, p.F2, n, m);
    }
  }

  // Separable synthesis: u = C^T A C with C[n][j] = cos(pi n x_j).
  const double h = 2.0 / grid_n;
  std::vector<double> cosines(K * G);
  for (std::size_t n = 0; n < K; ++n) {
    for (std::size_t j = 0; j < G; ++j) {
      cosines[n * G + j] = std::cos(kPi * static_cast<double>(n) * (-1.0 + static_cast<double>(j) * h));
    }
  }
  std::vector<double> partial(K * G, 0.0);
  for (std::size_t n = 0; n < K; ++n) {
    double* row = &partial[n * G];
    for (std::size_t m = 0; m < K; ++m) {
      const double a = p.coeff[n * K + m];
      if (a == 0.0) continue;
      const double* c = &cosines[m * G];
      for (std::size_t j = 0; j < G; ++j) row[j] += a * c[j];
    }
  }
  p.u.assign(G * G, 0.0);
  for (std::size_t i = 0; i < G; ++i) {
    double* out = &p.u[i * G];
    for (std::size_t n = 0; n < K; ++n) {
      const double c = cosines[n * G + i];
      const double* row = &partial[n * G];
      for (std::size_t j = 0; j < G; ++j) out[j] += c * row[j];
    }
  }
  double sum = 0.0;
  for (double v : p.u) {
    p.sup_norm = std::max(p.sup_norm, std::abs(v));
    sum += v;
  }
  p.mean = sum / static_cast<double>(p.u.size());
  return p;
}

double fourier_coefficient_sum(const FourierProfile& profile) {
  double s = 0.0;
  for (double a : profile.coeff) s += std::abs(a);
  return s;
}

LinfBound linf_bound(double alpha, double rho, double F1, double F2) {
  require(alpha > 0.0 && alpha < 1.0, "alpha", "the constant diverges at alpha = 0 and 1");
  require(rho > 0.0 && rho <= 0.5, "rho", "must lie in (0, 1/2]");
  require(F1 > 0.0 && F2 > 0.0, "F", "F1 and F2 must be positive");
  const double two_rho = 2.0 * rho;
  LinfBound b;
  b.S = kPi * rho + kPi * rho / (1.0 - alpha) * (std::pow(two_rho, alpha - 1.0) - 1.0) +
        std::pow(two_rho, alpha) / alpha;
  b.bound = 4.0 * (F1 + F2) / std::pow(kPi, 2.0 + 2.0 * alpha) * b.S * b.S;
  b.C_implied = b.bound / ((F1 + F2) * std::pow(rho, 2.0 * alpha));
  return b;
}

double linf_constant(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha", "the constant diverges at alpha = 0 and 1");
  // S / rho^alpha = pi 2^(alpha-1)/(1-alpha) + 2^alpha/alpha - pi alpha/(1-alpha) rho^(1-alpha),
  // largest as rho -> 0.
  const double s = kPi * std::pow(2.0, alpha - 1.0) / (1.0 - alpha) + std::pow(2.0, alpha) / alpha;
  return 4.0 * s * s / std::pow(kPi, 2.0 + 2.0 * alpha);
}

// --- paraboloids ------------------------------------------------------------

double paraboloid_value(int dim, double rho, double mu, double F0, std::span<const double> x) {
  double r2 = 0.0;
  bool inside = true;
  for (int d = 0; d < dim; ++d) {
    r2 += x[d] * x[d];
    inside = inside && std::abs(x[d]) <= rho;
  }
  const double n2 = 2.0 * dim;
  if (inside) return (mu - F0) / n2 * (r2 - rho * rho);
  const double s = 1.0 - std::sqrt(r2);
  return F0 / n2 * ((1.0 - rho) * (1.0 - rho) - s * s);
}

ParaboloidFlags paraboloid_flags(int dim, double rho, double mu, double F0, double beta) {
  const double n = dim;
  const double b2 = (1.0 - rho) * (1.0 - rho);
  ParaboloidFlags f;
  f.weak_solution = std::abs(F0 - mu * std::pow(rho, n)) <= 1e-12 * std::max(1.0, mu);
  f.amplitude_ok = mu - 2.0 * n / rho < F0 && F0 < 2.0 * n * rho / b2;
  f.amplitude_ok_as_printed = F0 < std::min(mu + 2.0 * n / rho, 2.0 * n * rho / b2);
  const double denom = 1.0 - 2.0 * rho;
  f.oscillation_ok =
      denom > 0.0 &&
      F0 < (4.0 * n * std::pow(rho, 1.0 - beta) - 4.0 * n * rho - mu * rho * rho) / denom;
  return f;
}

ParaboloidProfile paraboloid_profile(int dim, double rho, double mu, double F0, int n,
                                     double beta) {
  require(dim >= 1 && dim <= 3, "n", "dimension must be 1, 2 or 3");
  require(rho > 0.0 && rho < 1.0, "rho", "must lie in (0, 1)");
  require(F0 > 0.0, "F0", "must be positive");
  require(mu > F0, "mu", "must exceed F0");
  require(n >= 4, "N", "grid must have at least 4 points");
  ParaboloidProfile p;
  p.dim = dim;
  p.rho = rho;
  p.mu = mu;
  p.F0 = F0;
  p.n = n;
  p.flags = paraboloid_flags(dim, rho, mu, F0, beta);
  const double h = 2.0 / n;
  p.u.resize(grid_size(dim, n));
  std::array<double, 3> x{};
  for (std::size_t i = 0; i < p.u.size(); ++i) {
    std::size_t rest = i;
    for (int d = dim - 1; d >= 0; --d) {
      x[d] = -1.0 + static_cast<double>(rest % static_cast<std::size_t>(n)) * h;
      rest /= static_cast<std::size_t>(n);
    }
    p.u[i] = paraboloid_value(dim, rho, mu, F0, std::span<const double>(x.data(), 3));
  }
  return p;
}

// --- residuals --------------------------------------------------------------

ResidualReport verify_viscosity_inequality(int dim, int n, std::span<const double> u,
                                           ResidualEquation equation, double alpha, double mu,
                                           double rho, double F0, double tolerance,
                                           double band_cells) {
  require(dim >= 1 && dim <= 3, "dim", "must be 1, 2 or 3");
  require(n >= 4, "N", "grid must have at least 4 points");
  require(u.size() == grid_size(dim, n), "u", "size must be N^dim");
  if (equation == ResidualEquation::mean_curvature_1d) {
    require(dim == 1, "dim", "graph curvature is implemented in one dimension");
  }

  const double h = 2.0 / n;
  const std::size_t size = u.size();
  std::vector<double> operator_value(size, 0.0);
  std::array<std::size_t, 3> stride{};
  {
    std::size_t s = 1;
    for (int d = dim - 1; d >= 0; --d) {
      stride[d] = s;
      s *= static_cast<std::size_t>(n);
    }
  }
  auto coordinate_index = [&](std::size_t i, int d) {
    return static_cast<int>((i / stride[d]) % static_cast<std::size_t>(n));
  };
  auto neighbour = [&](std::size_t i, int d, int shift) {
    const int j = coordinate_index(i, d);
    const int w = ((j + shift) % n + n) % n;
    return i + static_cast<std::size_t>(w) * stride[d] - static_cast<std::size_t>(j) * stride[d];
  };

  switch (equation) {
    case ResidualEquation::mean_curvature_1d:
      for (std::size_t i = 0; i < size; ++i) {
        const double l = u[neighbour(i, 0, -1)];
        const double r = u[neighbour(i, 0, 1)];
        const double vx = (r - l) / (2.0 * h);
        const double vxx = (r - 2.0 * u[i] + l) / (h * h);
        operator_value[i] = vxx / std::pow(1.0 + vx * vx, 1.5);
      }
      break;
    case ResidualEquation::laplacian:
      for (std::size_t i = 0; i < size; ++i) {
        double lap = 0.0;
        for (int d = 0; d < dim; ++d) {
          lap += (u[neighbour(i, d, 1)] - 2.0 * u[i] + u[neighbour(i, d, -1)]) / (h * h);
        }
        operator_value[i] = lap;
      }
      break;
    case ResidualEquation::fractional: {
      SpectralOperator op(dim, n, alpha);
      op.apply(u, operator_value);
      for (double& v : operator_value) v = -v;
      break;
    }
  }

  ResidualReport report;
  report.tolerance = tolerance;
  report.max_residual = -std::numeric_limits<double>::infinity();
  report.min_residual = std::numeric_limits<double>::infinity();
  const double band = band_cells * h;
  for (std::size_t i = 0; i < size; ++i) {
    bool inside = true;
    bool near_glue = false;
    for (int d = 0; d < dim; ++d) {
      const double x = -1.0 + coordinate_index(i, d) * h;
      inside = inside && std::abs(x) < rho;
      near_glue = near_glue || std::abs(std::abs(x) - rho) <= band;
    }
    if (near_glue) {
      ++report.excluded;
      continue;
    }
    const double r = operator_value[i] - (inside ? mu : 0.0) + F0;
    ++report.checked;
    report.max_residual = std::max(report.max_residual, r);
    report.min_residual = std::min(report.min_residual, r);
    if (r > tolerance) ++report.super_violations;
    if (r < -tolerance) ++report.sub_violations;
  }
  if (report.checked == 0) report.max_residual = report.min_residual = 0.0;
  return report;
}

// --- bound formulas ---------------------------------------------------------

std::string to_string(DefectKind kind) {
  switch (kind) {
    case DefectKind::dislocation: return "dislocation";
    case DefectKind::twin: return "twin";
    case DefectKind::qew: return "qew";
  }
  return "unknown";
}

namespace {

void validate_bound_params(double R, double lambda, double phi_lower, double phi_upper,
                           double beta) {
  require(R > 0.0 && R < 0.5, "R", "must lie in (0, 1/2)");
  require(lambda > 0.0 && lambda <= 1.0, "lambda", "must lie in (0, 1]");
  require(phi_lower > 0.0, "phi_lower", "must be positive");
  require(phi_upper >= phi_lower && std::isfinite(phi_upper), "phi_upper",
          "must be finite and >= phi_lower");
  require(beta > 0.0 && beta < 1.0, "beta", "must lie in (0, 1)");
}

BoundReport base_report(DefectKind kind, int n, double R, double lambda, double phi_lower,
                        double phi_upper, double beta) {
  BoundReport r;
  r.kind = kind;
  r.n = n;
  r.R = R;
  r.lambda = lambda;
  r.phi_lower = phi_lower;
  r.phi_upper = phi_upper;
  r.beta = beta;
  return r;
}

}  // namespace

BoundReport disloc_bounds(double R, double lambda, double phi_lower, double phi_upper,
                          double beta) {
  validate_bound_params(R, lambda, phi_lower, phi_upper, beta);
  auto r = base_report(DefectKind::dislocation, 1, R, lambda, phi_lower, phi_upper, beta);
  const double rho = lambda * R;
  r.lower = std::min(phi_lower, 2.0 / ((1.0 - rho) * (1.0 - rho))) * rho;
  r.upper = phi_upper * R;

  // Pinning side: stationary arc supersolution with rho = lambda R, mu = phi_lower.
  const double lo_pin = phi_lower - 1.0 / rho;
  const double hi_pin =
      std::min({phi_lower * rho, 2.0 * rho / ((1.0 - rho) * (1.0 - rho)), 1.0 / (1.0 - rho)});
  r.feasible_lower = lo_pin <= hi_pin && r.lower <= hi_pin + 1e-15;
  r.amplitude_consistent = r.lower <= 2.0 * rho / ((1.0 - rho) * (1.0 - rho)) + 1e-15 &&
                           r.lower <= 1.0 / (1.0 - rho);

  // Propagation side: arc subsolution with rho = R, mu = phi_upper.
  const double lo_prop = std::max(phi_upper - 1.0 / R, phi_upper * R);
  const double hi_prop =
      std::min((4.0 * std::pow(R, 1.0 - beta) - 4.0 * R - phi_upper * R * R) / (1.0 - 2.0 * R),
               1.0 / (1.0 - R));
  r.feasible_upper = lo_prop <= hi_prop;
  return r;
}

BoundReport twin_bounds(double R, double lambda, double phi_lower, double phi_upper,
                        double beta) {
  validate_bound_params(R, lambda, phi_lower, phi_upper, beta);
  auto r = base_report(DefectKind::twin, 2, R, lambda, phi_lower, phi_upper, beta);
  constexpr double alpha = 0.5;
  const double C = linf_constant(alpha);
  r.C_alpha = C;
  const double rho = lambda * R;
  const double mu_pin = std::min(phi_lower, 1.0 / (2.0 * C));
  r.lower = mu_pin * rho * rho;
  r.upper = phi_upper * R * R;
  r.feasible_lower = rho <= 0.5 && mu_pin < std::pow(rho, 1.0 - 2.0 * alpha) / C;
  r.feasible_upper =
      phi_upper <= std::pow(R, 1.0 - 2.0 * alpha) * (std::pow(R, -beta) - 1.0) / C;
  return r;
}

BoundReport qew_bounds(int n, double R, double lambda, double phi_lower, double phi_upper,
                       double beta) {
  require(n >= 1 && n <= 3, "n", "dimension must be 1, 2 or 3");
  validate_bound_params(R, lambda, phi_lower, phi_upper, beta);
  auto r = base_report(DefectKind::qew, n, R, lambda, phi_lower, phi_upper, beta);
  const double dn = n;
  const double rho = lambda * R;
  const double mu_pin = std::min(phi_lower, std::pow(rho, 1.0 - dn));
  r.lower = mu_pin * std::pow(rho, dn);
  r.upper = phi_upper * std::pow(R, dn);
  r.feasible_lower = paraboloid_flags(n, rho, mu_pin, r.lower, beta).amplitude_ok;
  const double F_prop = phi_upper * std::pow(R, dn);
  r.feasible_upper = paraboloid_flags(n, R, phi_upper, F_prop, beta).oscillation_ok;
  return r;
}

}  // namespace depin
