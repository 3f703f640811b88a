// Fourier representation of real 2π-periodic functions.
//
// Coefficients follow c_k = (1/2π) ∫ f(x) e^{-ikx} dx, truncated to |k| <= N.
// Only the nonnegative half of the spectrum is stored; c_{-k} = conj(c_k) is
// implied, so every SpectralField is real-valued by construction.
#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace mb {

using Complex = std::complex<double>;

/// Structural violation of a field invariant (e.g. non-Hermitian input).
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid discretization or run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kHermitianTolerance = 1e-10;

/// Discretization of the torus: resolved modes -N..N on an M-point grid.
struct GridSpec {
  int max_mode = 0;     // N
  int phys_points = 0;  // M

  /// Grid with M = 3N.
  static GridSpec dealiased(int max_mode) { return {max_mode, 3 * max_mode}; }
  /// Points used for quadratic products: at M = 3N the wavenumber -2N wraps
  /// onto N, so products are evaluated on max(M, 3N+1) points.
  int product_points() const { return std::max(phys_points, 3 * max_mode + 1); }
  GridSpec product_grid() const { return {max_mode, product_points()}; }

  /// Throws ConfigError unless N >= 1 and M >= 2N+1.
  void validate() const;
  /// Throws ConfigError unless additionally M >= 3N.
  void require_quadratic() const;
  bool supports_quadratic() const { return phys_points >= 3 * max_mode; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

class SpectralField {
 public:
  SpectralField() = default;
  /// Zero field on `grid`.
  explicit SpectralField(GridSpec grid);

  /// Builds a field from the full coefficient vector c_{-N..N} (index k+N).
  /// Throws StructuralError if Hermitian symmetry fails by more than `tol`.
  static SpectralField from_coefficients(GridSpec grid,
                                         std::span<const Complex> full,
                                         double tol = kHermitianTolerance);
  /// Builds a field from c_0..c_N. The imaginary part of c_0 must be below
  /// `tol` and is discarded.
  static SpectralField from_nonnegative(GridSpec grid,
                                        std::vector<Complex> half,
                                        double tol = kHermitianTolerance);

  const GridSpec& grid() const { return grid_; }
  int max_mode() const { return grid_.max_mode; }

  /// c_k for any integer k; zero outside the resolved band.
  Complex operator[](int k) const {
    if (k > grid_.max_mode || k < -grid_.max_mode) return {};
    return k >= 0 ? half_[static_cast<std::size_t>(k)]
                  : std::conj(half_[static_cast<std::size_t>(-k)]);
  }
  /// Sets c_k and c_{-k} = conj(c_k). For k = 0 only the real part is kept.
  void set(int k, Complex value);

  std::span<const Complex> nonnegative() const { return half_; }
  std::span<Complex> nonnegative() { return half_; }
  /// Full coefficient vector c_{-N..N}.
  std::vector<Complex> coefficients() const;

  double mean() const { return half_.empty() ? 0.0 : half_[0].real(); }
  bool is_mean_zero(double tol = 0.0) const { return std::abs(mean()) <= tol; }

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double scale);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  GridSpec grid_{};
  std::vector<Complex> half_;
};

/// Samples f(x_j), x_j = 2πj/M, j = 0..M-1.
std::vector<double> to_physical(const SpectralField& f);
/// Forward transform with 1/M normalization, truncated to |k| <= N.
SpectralField to_spectral(std::span<const double> samples, GridSpec grid);

/// (Σ_k ⟨k⟩^{2s} |c_k|²)^{1/2} with ⟨k⟩ = (1+k²)^{1/2}.
double sobolev_norm(const SpectralField& f, double s);
/// c_k ↦ (ik)^order c_k.
SpectralField derivative(const SpectralField& f, int order);
/// Spectral coefficients of the pointwise product, |k| <= N, alias-free.
SpectralField dealias_product(const SpectralField& f, const SpectralField& g);
/// Real part of Σ_k conj(f_k) g_k, i.e. (1/2π)∫ f g.
double l2_inner(const SpectralField& f, const SpectralField& g);

inline constexpr double kRandomSlopeExcess = 0.01;

/// Field with |c_k| = ⟨k⟩^{-s-1/2-excess} and uniform random phases.
SpectralField random_field(GridSpec grid, double s, std::uint64_t seed,
                           bool mean_zero, double excess = kRandomSlopeExcess);

/// Reusable transform buffers for repeated products on one grid. Operates on
/// nonnegative half spectra of length N+1. Not thread-safe; use one per
/// thread.
class PseudospectralWorkspace {
 public:
  explicit PseudospectralWorkspace(GridSpec grid);
  ~PseudospectralWorkspace();
  PseudospectralWorkspace(PseudospectralWorkspace&&) noexcept;
  PseudospectralWorkspace& operator=(PseudospectralWorkspace&&) noexcept;

  const GridSpec& grid() const { return grid_; }

  /// Zero-padded synthesis of a half spectrum onto the M-point grid.
  void to_grid(std::span<const Complex> half, std::span<double> samples);
  /// Forward transform of M samples; writes c_0..c_N.
  void from_grid(std::span<const double> samples, std::span<Complex> half);

 private:
  struct Impl;
  GridSpec grid_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mb
