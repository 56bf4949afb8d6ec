#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace depin {

/// (-Delta)^exponent on the periodic grid over [-1, 1)^dim with n points per
/// axis, diagonal in the Fourier basis with symbol (pi^2 |k|^2)^exponent.
/// exponent = 1 is the (negative) Laplacian.
///
/// Holds its own FFTW plans and buffers; not safe to share between threads,
/// but independent instances may run concurrently.
class SpectralOperator {
 public:
  SpectralOperator(int dim, int n, double exponent);
  ~SpectralOperator();
  SpectralOperator(SpectralOperator&&) noexcept;
  SpectralOperator& operator=(SpectralOperator&&) noexcept;
  SpectralOperator(const SpectralOperator&) = delete;
  SpectralOperator& operator=(const SpectralOperator&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }
  double exponent() const { return exponent_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t spectrum_size() const { return spectrum_size_; }

  /// Symbol over the r2c half-spectrum layout; entry 0 is the zero mode.
  std::span<const double> symbol() const { return symbol_; }

  /// Unnormalised forward transform into `out`.
  void forward(std::span<const double> u, std::span<std::complex<double>> out);
  /// Inverse transform including the 1/n^dim normalisation.
  void inverse(std::span<const std::complex<double>> in, std::span<double> u);

  /// out = (-Delta)^exponent u.
  void apply(std::span<const double> u, std::span<double> out);

  /// u <- (1 + dt (-Delta)^exponent)^{-1} u.
  void solve_shifted(std::span<double> u, double dt);

 private:
  struct Plans;
  int dim_;
  int n_;
  double exponent_;
  std::size_t real_size_;
  std::size_t spectrum_size_;
  std::vector<double> symbol_;
  std::vector<std::complex<double>> scratch_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace depin
