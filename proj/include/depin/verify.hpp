#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depin/evolvers.hpp"
#include "depin/precipitate_field.hpp"

namespace depin {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_passed() const;
  std::string text() const;  // one "PASS name: detail" line per check
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  PrecipitateParams field;     // count = 0 gives the empty field
  double alpha = 0.5;
  /// Fault injection: the spectral operator under test uses alpha + this.
  double alpha_fault = 0.0;
  bool full = false;           // larger samples in the statistical checks
};

/// max over modes |applied symbol - (pi^2 |k|^2)^alpha| relative to the
/// exact value, measured by applying the operator to single cosines.
double spectral_symbol_error(int dim, int n, double alpha, double alpha_applied);

/// Max-norm error between (-Delta)^alpha of the truncated Fourier profile and
/// the same truncation of g = F2 - (F1 + F2) chi, whose cosine coefficients
/// are computed independently of the profile's.
double fourier_roundtrip_error(double alpha, double rho, double mu, int n_max, int grid_n,
                               double alpha_applied);

/// Largest |u - F t| / (F t) over all nodes after evolving a flat interface
/// with phi = 0 up to time t.
double free_propagation_error(OperatorKind op, int dim, double force, double t, int n_grid);

struct ArcPropertyResult {
  int samples = 0;
  int flagged = 0;
  int flag_mismatches = 0;      // supersolution flag != (F0 <= rho mu)
  int residual_violations = 0;  // flagged profiles with a supersolution sign violation
  int kink_mismatches = 0;      // kink orientation disagrees with the flag
  int kink_tested = 0;
  double worst_relative_residual = 0.0;
};

/// Property test over random (rho, mu, F0) in the well-defined window.
ArcPropertyResult arc_property_test(int samples, std::uint64_t seed, int n_grid = 4096);

VerifyReport run_verification(const VerifyOptions& options);

}  // namespace depin
