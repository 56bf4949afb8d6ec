#include "depin/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "depin/errors.hpp"

namespace depin {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SpectralOperator::Plans {
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  Plans(int dim, int n, std::size_t real_size, std::size_t spectrum_size) {
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(real_size);
    cplx = fftw_alloc_complex(spectrum_size);
    int dims[3] = {n, n, n};
    r2c = fftw_plan_dft_r2c(dim, dims, real, cplx, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r(dim, dims, cplx, real, FFTW_ESTIMATE);
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(cplx);
  }
};

SpectralOperator::SpectralOperator(int dim, int n, double exponent)
    : dim_(dim), n_(n), exponent_(exponent) {
  require(dim >= 1 && dim <= 3, "dim", "spectral grids exist for n = 1, 2, 3");
  require(n >= 4 && n % 2 == 0, "N", "grid size must be even and >= 4");
  require(exponent > 0.0, "alpha", "operator exponent must be positive");

  const std::size_t half = static_cast<std::size_t>(n / 2 + 1);
  real_size_ = 1;
  spectrum_size_ = half;
  for (int d = 0; d < dim; ++d) real_size_ *= static_cast<std::size_t>(n);
  for (int d = 0; d + 1 < dim; ++d) spectrum_size_ *= static_cast<std::size_t>(n);

  auto wavenumber = [n](std::size_t j) {
    const auto jj = static_cast<long>(j);
    return static_cast<double>(jj <= n / 2 ? jj : jj - n);
  };
  symbol_.resize(spectrum_size_);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (std::size_t idx = 0; idx < spectrum_size_; ++idx) {
    std::size_t rest = idx;
    const double k_last = static_cast<double>(rest % half);
    rest /= half;
    double k2 = k_last * k_last;
    for (int d = 0; d + 1 < dim; ++d) {
      const double k = wavenumber(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
      k2 += k * k;
    }
    symbol_[idx] = k2 == 0.0 ? 0.0 : std::pow(pi2 * k2, exponent);
  }
  scratch_.resize(spectrum_size_);
  plans_ = std::make_unique<Plans>(dim, n, real_size_, spectrum_size_);
}

SpectralOperator::~SpectralOperator() = default;
SpectralOperator::SpectralOperator(SpectralOperator&&) noexcept = default;
SpectralOperator& SpectralOperator::operator=(SpectralOperator&&) noexcept = default;

void SpectralOperator::forward(std::span<const double> u, std::span<std::complex<double>> out) {
  std::memcpy(plans_->real, u.data(), real_size_ * sizeof(double));
  fftw_execute(plans_->r2c);
  std::memcpy(static_cast<void*>(out.data()), plans_->cplx,
              spectrum_size_ * sizeof(fftw_complex));
}

void SpectralOperator::inverse(std::span<const std::complex<double>> in, std::span<double> u) {
  std::memcpy(plans_->cplx, in.data(), spectrum_size_ * sizeof(fftw_complex));
  fftw_execute(plans_->c2r);
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < real_size_; ++i) u[i] = plans_->real[i] * scale;
}

void SpectralOperator::apply(std::span<const double> u, std::span<double> out) {
  forward(u, scratch_);
  for (std::size_t k = 0; k < spectrum_size_; ++k) scratch_[k] *= symbol_[k];
  inverse(scratch_, out);
}

void SpectralOperator::solve_shifted(std::span<double> u, double dt) {
  forward(u, scratch_);
  for (std::size_t k = 0; k < spectrum_size_; ++k) scratch_[k] /= 1.0 + dt * symbol_[k];
  inverse(scratch_, u);
}

}  // namespace depin
