#include "mb/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

namespace mb {

namespace {

// The FFTW planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_same_grid(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw ConfigError("fields live on different grids");
}

}  // namespace

void GridSpec::validate() const {
  if (max_mode < 1) throw ConfigError("grid: N must be >= 1, got " + std::to_string(max_mode));
  if (phys_points < 2 * max_mode + 1) {
    throw ConfigError("grid: M must be >= 2N+1 (N=" + std::to_string(max_mode) +
                      ", M=" + std::to_string(phys_points) + ")");
  }
}

void GridSpec::require_quadratic() const {
  validate();
  if (!supports_quadratic()) {
    throw ConfigError("grid: quadratic products need M >= 3N (N=" + std::to_string(max_mode) +
                      ", M=" + std::to_string(phys_points) + ")");
  }
}

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(GridSpec grid) : grid_(grid) {
  grid_.validate();
  half_.assign(static_cast<std::size_t>(grid_.max_mode) + 1, Complex{});
}

SpectralField SpectralField::from_coefficients(GridSpec grid, std::span<const Complex> full,
                                               double tol) {
  SpectralField f(grid);
  const int n = grid.max_mode;
  if (full.size() != static_cast<std::size_t>(2 * n + 1)) {
    throw ConfigError("coefficient vector has size " + std::to_string(full.size()) +
                      ", expected 2N+1 = " + std::to_string(2 * n + 1));
  }
  for (int k = 0; k <= n; ++k) {
    const Complex pos = full[static_cast<std::size_t>(n + k)];
    const Complex neg = full[static_cast<std::size_t>(n - k)];
    if (std::abs(pos - std::conj(neg)) > tol) {
      throw StructuralError("Hermitian symmetry violated at k=" + std::to_string(k) +
                            " (|c_k - conj(c_-k)| = " + std::to_string(std::abs(pos - std::conj(neg))) +
                            ")");
    }
    f.half_[static_cast<std::size_t>(k)] = 0.5 * (pos + std::conj(neg));
  }
  f.half_[0] = f.half_[0].real();
  return f;
}

SpectralField SpectralField::from_nonnegative(GridSpec grid, std::vector<Complex> half,
                                              double tol) {
  grid.validate();
  if (half.size() != static_cast<std::size_t>(grid.max_mode) + 1) {
    throw ConfigError("half spectrum has size " + std::to_string(half.size()) +
                      ", expected N+1 = " + std::to_string(grid.max_mode + 1));
  }
  if (std::abs(half[0].imag()) > tol) {
    throw StructuralError("mean coefficient has imaginary part " + std::to_string(half[0].imag()));
  }
  half[0] = half[0].real();
  SpectralField f;
  f.grid_ = grid;
  f.half_ = std::move(half);
  return f;
}

void SpectralField::set(int k, Complex value) {
  if (k > grid_.max_mode || k < -grid_.max_mode) {
    throw ConfigError("mode " + std::to_string(k) + " outside band |k| <= " +
                      std::to_string(grid_.max_mode));
  }
  if (k == 0) {
    half_[0] = value.real();
  } else if (k > 0) {
    half_[static_cast<std::size_t>(k)] = value;
  } else {
    half_[static_cast<std::size_t>(-k)] = std::conj(value);
  }
}

std::vector<Complex> SpectralField::coefficients() const {
  const int n = grid_.max_mode;
  std::vector<Complex> full(static_cast<std::size_t>(2 * n + 1));
  for (int k = -n; k <= n; ++k) full[static_cast<std::size_t>(k + n)] = (*this)[k];
  return full;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  check_same_grid(*this, other);
  for (std::size_t i = 0; i < half_.size(); ++i) half_[i] += other.half_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  check_same_grid(*this, other);
  for (std::size_t i = 0; i < half_.size(); ++i) half_[i] -= other.half_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double scale) {
  for (auto& c : half_) c *= scale;
  return *this;
}

// ---------------------------------------------------------------------------
// PseudospectralWorkspace

struct PseudospectralWorkspace::Impl {
  int m = 0;
  double* real_buf = nullptr;
  fftw_complex* spec_buf = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Impl(int points) : m(points) {
    real_buf = fftw_alloc_real(static_cast<std::size_t>(m));
    spec_buf = fftw_alloc_complex(static_cast<std::size_t>(m / 2 + 1));
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_r2c_1d(m, real_buf, spec_buf, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(m, spec_buf, real_buf, FFTW_ESTIMATE);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real_buf);
    fftw_free(spec_buf);
  }
  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;
};

PseudospectralWorkspace::PseudospectralWorkspace(GridSpec grid) : grid_(grid) {
  grid_.validate();
  impl_ = std::make_unique<Impl>(grid_.phys_points);
}

PseudospectralWorkspace::~PseudospectralWorkspace() = default;
PseudospectralWorkspace::PseudospectralWorkspace(PseudospectralWorkspace&&) noexcept = default;
PseudospectralWorkspace& PseudospectralWorkspace::operator=(PseudospectralWorkspace&&) noexcept =
    default;

void PseudospectralWorkspace::to_grid(std::span<const Complex> half, std::span<double> samples) {
  const int m = impl_->m;
  const int n = grid_.max_mode;
  fftw_complex* buf = impl_->spec_buf;
  for (int k = 0; k <= m / 2; ++k) {
    if (k <= n) {
      buf[k][0] = half[static_cast<std::size_t>(k)].real();
      buf[k][1] = half[static_cast<std::size_t>(k)].imag();
    } else {
      buf[k][0] = 0.0;
      buf[k][1] = 0.0;
    }
  }
  buf[0][1] = 0.0;
  fftw_execute(impl_->backward);
  std::copy_n(impl_->real_buf, m, samples.begin());
}

void PseudospectralWorkspace::from_grid(std::span<const double> samples, std::span<Complex> half) {
  const int m = impl_->m;
  const int n = grid_.max_mode;
  std::copy_n(samples.begin(), m, impl_->real_buf);
  fftw_execute(impl_->forward);
  const double inv_m = 1.0 / m;
  const fftw_complex* buf = impl_->spec_buf;
  for (int k = 0; k <= n; ++k) {
    half[static_cast<std::size_t>(k)] = Complex(buf[k][0] * inv_m, buf[k][1] * inv_m);
  }
  half[0] = half[0].real();
}

// ---------------------------------------------------------------------------
// Free operations

std::vector<double> to_physical(const SpectralField& f) {
  PseudospectralWorkspace ws(f.grid());
  std::vector<double> samples(static_cast<std::size_t>(f.grid().phys_points));
  ws.to_grid(f.nonnegative(), samples);
  return samples;
}

SpectralField to_spectral(std::span<const double> samples, GridSpec grid) {
  grid.validate();
  if (samples.size() != static_cast<std::size_t>(grid.phys_points)) {
    throw ConfigError("expected " + std::to_string(grid.phys_points) + " samples, got " +
                      std::to_string(samples.size()));
  }
  PseudospectralWorkspace ws(grid);
  SpectralField f(grid);
  ws.from_grid(samples, f.nonnegative());
  return f;
}

double sobolev_norm(const SpectralField& f, double s) {
  const auto half = f.nonnegative();
  double sum = std::norm(half.empty() ? Complex{} : half[0]);
  for (std::size_t k = 1; k < half.size(); ++k) {
    const double kk = static_cast<double>(k);
    sum += 2.0 * std::pow(1.0 + kk * kk, s) * std::norm(half[k]);
  }
  return std::sqrt(sum);
}

SpectralField derivative(const SpectralField& f, int order) {
  if (order < 1) throw DomainError("derivative order must be positive");
  SpectralField out = f;
  auto half = out.nonnegative();
  for (std::size_t k = 0; k < half.size(); ++k) {
    const Complex ik(0.0, static_cast<double>(k));
    Complex factor = 1.0;
    for (int j = 0; j < order; ++j) factor *= ik;
    half[k] *= factor;
  }
  half[0] = 0.0;
  return out;
}

SpectralField dealias_product(const SpectralField& f, const SpectralField& g) {
  check_same_grid(f, g);
  f.grid().require_quadratic();
  PseudospectralWorkspace ws(f.grid().product_grid());
  const auto m = static_cast<std::size_t>(f.grid().product_points());
  std::vector<double> a(m), b(m);
  ws.to_grid(f.nonnegative(), a);
  ws.to_grid(g.nonnegative(), b);
  for (std::size_t j = 0; j < m; ++j) a[j] *= b[j];
  SpectralField out(f.grid());
  ws.from_grid(a, out.nonnegative());
  return out;
}

double l2_inner(const SpectralField& f, const SpectralField& g) {
  check_same_grid(f, g);
  const auto a = f.nonnegative();
  const auto b = g.nonnegative();
  double sum = (std::conj(a[0]) * b[0]).real();
  for (std::size_t k = 1; k < a.size(); ++k) sum += 2.0 * (std::conj(a[k]) * b[k]).real();
  return sum;
}

SpectralField random_field(GridSpec grid, double s, std::uint64_t seed, bool mean_zero,
                           double excess) {
  SpectralField f(grid);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  auto half = f.nonnegative();
  for (std::size_t k = 0; k < half.size(); ++k) {
    const double kk = static_cast<double>(k);
    const double amplitude = std::pow(1.0 + kk * kk, -0.5 * (s + 0.5 + excess));
    const double theta = phase(rng);
    half[k] = std::polar(amplitude, theta);
  }
  // A real mean carries the amplitude with a random sign.
  half[0] = mean_zero ? 0.0 : (half[0].real() >= 0.0 ? 1.0 : -1.0);
  return f;
}

}  // namespace mb
