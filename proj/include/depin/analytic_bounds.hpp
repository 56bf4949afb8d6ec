#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace depin {

/// A closed-form profile was requested where one of its square roots has a
/// negative radicand. Distinct from a validity flag evaluating to false.
class IllDefinedProfile : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// --- circular arcs (1-D mean curvature) -------------------------------------

struct ArcFlags {
  bool well_defined = false;    // mu - 1/rho <= F0 <= 1/(1 - rho)
  bool supersolution = false;   // F0 <= rho mu
  bool subsolution = false;     // F0 >= rho mu
  bool amplitude_ok = false;    // mu - 2/rho <= F0 <= 2 rho / (1 - rho)^2
  bool oscillation_ok = false;  // F0 < (4 rho^(1-beta) - 4 rho - mu rho^2) / (1 - 2 rho)
};

ArcFlags arc_flags(double rho, double mu, double F0, double beta = 0.5);

/// Arc profile at x in [-1, 1): an arc of curvature mu - F0 on (-rho, rho)
/// glued to arcs of curvature -F0 outside, both vanishing at |x| = rho.
/// Throws IllDefinedProfile outside the well-defined window.
double arc_value(double rho, double mu, double F0, double x);

struct ArcProfile {
  double rho = 0.0;
  double mu = 0.0;
  double F0 = 0.0;
  double beta = 0.5;
  int n = 0;
  std::vector<double> x;  // -1 + j h
  std::vector<double> v;
  ArcFlags flags;
};

ArcProfile arc_profile(double rho, double mu, double F0, int n, double beta = 0.5);

// --- fractional Poisson problem on T^2 --------------------------------------

/// Coefficient of cos(pi n x1) cos(pi m x2) in the zero-mean periodic
/// solution of (-Delta)^alpha u = F2 - (F1 + F2) chi_[-rho, rho]^2.
double fourier_coefficient(double alpha, double rho, double F1, double F2, int n, int m);

struct FourierProfile {
  double alpha = 0.5;
  double rho = 0.0;
  double mu = 0.0;
  double F1 = 0.0;
  double F2 = 0.0;
  int n_max = 0;
  int grid_n = 0;
  std::vector<double> coeff;  // (n_max + 1)^2, index n * (n_max + 1) + m
  std::vector<double> u;      // grid_n^2, index i1 * grid_n + i2
  double sup_norm = 0.0;
  double mean = 0.0;
  double tail_bound = 0.0;  // sup-norm bound on the discarded modes

  double coefficient(int n, int m) const {
    return coeff[static_cast<std::size_t>(n) * static_cast<std::size_t>(n_max + 1) +
                 static_cast<std::size_t>(m)];
  }
};

/// Truncated cosine series with F2 = mu rho^2, F1 = mu - F2, sampled on a
/// grid_n x grid_n periodic grid. Throws ValidationError when the tail bound
/// exceeds tail_tolerance.
FourierProfile fourier_profile(double alpha, double rho, double mu, int n_max = 512,
                               int grid_n = 1024,
                               double tail_tolerance = std::numeric_limits<double>::infinity());

/// Upper bound on the sup-norm of the modes with n > n_max or m > n_max.
double fourier_tail_bound(double alpha, double rho, double F1, double F2, int n_max);

/// sum |coeff| over retained modes: a sharper, purely numerical sup-norm bound.
double fourier_coefficient_sum(const FourierProfile& profile);

struct LinfBound {
  double bound = 0.0;
  double S = 0.0;          // the one-dimensional series estimate
  double C_implied = 0.0;  // bound / ((F1 + F2) rho^(2 alpha))
};

/// 4 (F1 + F2) / pi^(2 + 2 alpha) * S(alpha, rho)^2 with
/// S = pi rho + pi rho (1 - alpha)^-1 ((2 rho)^(alpha - 1) - 1) + alpha^-1 (2 rho)^alpha.
LinfBound linf_bound(double alpha, double rho, double F1, double F2);

/// sup over rho in (0, 1/2] of the implied constant; attained as rho -> 0.
double linf_constant(double alpha);

// --- paraboloids (Laplacian, n = 1, 2, 3) -----------------------------------

struct ParaboloidFlags {
  bool weak_solution = false;     // F0 == mu rho^n
  bool amplitude_ok = false;      // mu - 2n/rho < F0 < 2n rho / (1 - rho)^2
  bool amplitude_ok_as_printed = false;  // F0 < min{mu + 2n/rho, 2n rho / (1 - rho)^2}
  bool oscillation_ok = false;    // F0 < (4n rho^(1-beta) - 4n rho - mu rho^2) / (1 - 2 rho)
};

struct ParaboloidProfile {
  int dim = 1;
  double rho = 0.0;
  double mu = 0.0;
  double F0 = 0.0;
  int n = 0;
  std::vector<double> u;  // n^dim, row-major
  ParaboloidFlags flags;
};

double paraboloid_value(int dim, double rho, double mu, double F0, std::span<const double> x);
ParaboloidFlags paraboloid_flags(int dim, double rho, double mu, double F0, double beta = 0.5);
ParaboloidProfile paraboloid_profile(int dim, double rho, double mu, double F0, int n,
                                     double beta = 0.5);

// --- residual check ---------------------------------------------------------

enum class ResidualEquation { mean_curvature_1d, fractional, laplacian };

struct ResidualReport {
  std::size_t checked = 0;
  std::size_t excluded = 0;
  double max_residual = 0.0;
  double min_residual = 0.0;
  std::size_t super_violations = 0;  // residual > tol
  std::size_t sub_violations = 0;    // residual < -tol
  double tolerance = 0.0;

  bool supersolution_ok() const { return super_violations == 0; }
  bool subsolution_ok() const { return sub_violations == 0; }
};

/// Stationary residual A[u] - mu chi_[-rho, rho]^dim + F0 on the periodic
/// grid over [-1, 1)^dim, skipping nodes with some coordinate within
/// band_cells * h of |x_d| = rho. A is the graph curvature, -(-Delta)^alpha,
/// or the Laplacian.
ResidualReport verify_viscosity_inequality(int dim, int n, std::span<const double> u,
                                           ResidualEquation equation, double alpha, double mu,
                                           double rho, double F0, double tolerance,
                                           double band_cells = 2.0);

// --- bound formulas ---------------------------------------------------------

enum class DefectKind { dislocation, twin, qew };

std::string to_string(DefectKind kind);

struct BoundReport {
  DefectKind kind = DefectKind::dislocation;
  int n = 1;  // interface dimension (qew), 1 for dislocations, 2 for twins
  double R = 0.0;
  double lambda = 1.0;
  double phi_lower = 1.0;
  double phi_upper = 1.0;
  double beta = 0.5;
  double C_alpha = 0.0;  // twin only
  double lower = 0.0;
  double upper = 0.0;
  bool feasible_lower = false;  // the proof's force window for the pinning side is nonempty
  bool feasible_upper = false;  // same for the propagation side
  bool feasible() const { return feasible_lower && feasible_upper; }
  /// Dislocations only: whether the arc amplitude window admits the chosen
  /// lower-bound force (it may disagree with the min{} in the formula).
  bool amplitude_consistent = true;
};

BoundReport disloc_bounds(double R, double lambda, double phi_lower, double phi_upper,
                          double beta = 0.5);
BoundReport twin_bounds(double R, double lambda, double phi_lower, double phi_upper,
                        double beta = 0.5);
BoundReport qew_bounds(int n, double R, double lambda, double phi_lower, double phi_upper,
                       double beta = 0.5);

}  // namespace depin
