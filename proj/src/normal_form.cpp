#include "mb/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mb {

namespace {

constexpr Complex kI{0.0, 1.0};

// Full coefficient vector indexed k + N.
struct Dense {
  int n;
  std::vector<Complex> c;
  explicit Dense(const SpectralField& f) : n(f.max_mode()), c(f.coefficients()) {}
  Complex operator[](int k) const {
    return (k < -n || k > n) ? Complex{} : c[static_cast<std::size_t>(k + n)];
  }
};

SpectralField from_half(const GridSpec& grid, std::vector<Complex> half) {
  half[0] = 0.0;
  return SpectralField::from_nonnegative(grid, std::move(half));
}

// Exact index r·k when r·k is an integer, otherwise nullopt.
std::optional<int> scaled_index(const Rational& r, int k) {
  if (k % r.den != 0) return std::nullopt;
  return static_cast<int>(r.num * (k / r.den));
}

}  // namespace

NormalFormOps::NormalFormOps(AlphaClassification alpha_class, GridSpec grid)
    : cls_(std::move(alpha_class)), grid_(grid), n_(grid.max_mode) {
  grid_.validate();
  const std::size_t size = static_cast<std::size_t>(n_ + 1) * static_cast<std::size_t>(2 * n_ + 1);
  inv_phi_.assign(size, 0.0);
  inv_psi_.assign(size, 0.0);
  const bool exact = cls_.alpha.is_exact();
  const double a = cls_.value();
  const auto& r = cls_.roots;

  // Numeric α uses the factored forms, which keep small divisors accurate.
  const auto phi = [&](int k, int k1) {
    if (exact) return cls_.phi(k, k1);
    return -3.0 * a * k * (k1 - r.c1 * k) * (k1 - r.c2 * k);
  };
  const auto psi = [&](int k, int k1) {
    if (exact) return cls_.psi(k, k1);
    return -(1.0 - a) * k1 * (k1 - r.d1 * k) * (k1 - r.d2 * k);
  };

  min_divisor_ = std::numeric_limits<double>::infinity();
  for (int k = -n_; k <= n_; ++k) {
    for (int k1 = std::max(-n_, k - n_); k1 <= std::min(n_, k + n_); ++k1) {
      const bool phi_zero = cls_.phi_vanishes(k, k1);
      const bool psi_zero = cls_.psi_vanishes(k, k1);
      if (phi_zero && k != 0) excluded_phi_.push_back({k, k1});
      if (psi_zero && k1 != 0) excluded_psi_.push_back({k, k1});
      if (k < 0) continue;
      if (!phi_zero) {
        const double d = phi(k, k1);
        inv_phi_[index(k, k1)] = 1.0 / d;
        min_divisor_ = std::min(min_divisor_, std::abs(d));
      }
      if (!psi_zero) {
        const double d = psi(k, k1);
        inv_psi_[index(k, k1)] = 1.0 / d;
        if (k > 0) min_divisor_ = std::min(min_divisor_, std::abs(d));
      }
    }
  }
}

void NormalFormOps::check(const SpectralField& f) const {
  if (f.max_mode() != n_) {
    throw ConfigError("normal-form operator: field has N=" + std::to_string(f.max_mode()) +
                      ", expected N=" + std::to_string(n_));
  }
}

std::vector<Complex> NormalFormOps::weighted_convolution(const SpectralField& a,
                                                         const SpectralField& b) const {
  const Dense da(a), db(b);
  std::vector<Complex> out(static_cast<std::size_t>(2 * n_ + 1));
  for (int m = -n_; m <= n_; ++m) {
    Complex sum{};
    for (int k1 = std::max(-n_, m - n_); k1 <= std::min(n_, m + n_); ++k1) sum += da[k1] * db[m - k1];
    out[static_cast<std::size_t>(m + n_)] = static_cast<double>(m) * sum;
  }
  return out;
}

SpectralField NormalFormOps::b1(const SpectralField& v1, const SpectralField& v2) const {
  check(v1);
  check(v2);
  const Dense a(v1), b(v2);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  for (int k = 1; k <= n_; ++k) {
    Complex sum{};
    for (int k1 = k - n_; k1 <= n_; ++k1) sum += a[k1] * b[k - k1] * inv_phi(k, k1);
    half[static_cast<std::size_t>(k)] = -0.5 * k * sum;
  }
  return from_half(v1.grid(), std::move(half));
}

SpectralField NormalFormOps::b2(const SpectralField& u, const SpectralField& v) const {
  check(u);
  check(v);
  if (!u.is_mean_zero(1e-14)) throw DomainError("B2: u must be mean-zero");
  const Dense a(u), b(v);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  for (int k = 1; k <= n_; ++k) {
    Complex sum{};
    for (int k1 = k - n_; k1 <= n_; ++k1) sum += a[k1] * b[k - k1] * inv_psi(k, k1);
    half[static_cast<std::size_t>(k)] = -static_cast<double>(k) * sum;
  }
  return from_half(u.grid(), std::move(half));
}

SpectralField NormalFormOps::r1(const SpectralField& u, const SpectralField& v,
                                const SpectralField& w) const {
  check(w);
  const auto p = weighted_convolution(u, v);
  const Dense c(w);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  for (int k = 1; k <= n_; ++k) {
    Complex sum{};
    for (int m = k - n_; m <= n_; ++m) {
      sum += p[static_cast<std::size_t>(m + n_)] * c[k - m] * inv_phi(k, m);
    }
    half[static_cast<std::size_t>(k)] = kI * static_cast<double>(k) * sum;
  }
  return from_half(w.grid(), std::move(half));
}

SpectralField NormalFormOps::r2(const SpectralField& v1, const SpectralField& v2,
                                const SpectralField& v3) const {
  check(v3);
  const auto p = weighted_convolution(v1, v2);
  const Dense c(v3);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  for (int k = 1; k <= n_; ++k) {
    Complex sum{};
    for (int m = k - n_; m <= n_; ++m) {
      sum += p[static_cast<std::size_t>(m + n_)] * c[k - m] * inv_psi(k, m);
    }
    half[static_cast<std::size_t>(k)] = 0.5 * kI * static_cast<double>(k) * sum;
  }
  return from_half(v3.grid(), std::move(half));
}

SpectralField NormalFormOps::r3(const SpectralField& u1, const SpectralField& u2,
                                const SpectralField& v) const {
  check(u1);
  const auto q = weighted_convolution(u2, v);
  const Dense a(u1);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  for (int k = 1; k <= n_; ++k) {
    Complex sum{};
    for (int k1 = k - n_; k1 <= n_; ++k1) {
      sum += a[k1] * q[static_cast<std::size_t>(k - k1 + n_)] * inv_psi(k, k1);
    }
    half[static_cast<std::size_t>(k)] = kI * static_cast<double>(k) * sum;
  }
  return from_half(u1.grid(), std::move(half));
}

SpectralField NormalFormOps::r3_split(const SpectralField& u1, const SpectralField& u2,
                                      const SpectralField& v) const {
  check(u1);
  check(u2);
  check(v);
  const Dense a(u1), b(u2), c(v);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  for (int k = 1; k <= n_; ++k) {
    // k1 + k2 = 0 forces k3 = k.
    Complex paired{};
    for (int k1 = std::max(-n_, k - n_); k1 <= n_; ++k1) {
      paired += static_cast<double>(k - k1) * a[k1] * b[-k1] * c[k] * inv_psi(k, k1);
    }
    Complex rest{};
    for (int k1 = k - n_; k1 <= n_; ++k1) {
      const double w = inv_psi(k, k1);
      if (w == 0.0) continue;
      const int j = k - k1;
      Complex inner{};
      for (int k2 = std::max(-n_, j - n_); k2 <= std::min(n_, j + n_); ++k2) {
        if (k1 + k2 == 0) continue;
        inner += b[k2] * c[j - k2];
      }
      rest += a[k1] * static_cast<double>(j) * inner * w;
    }
    half[static_cast<std::size_t>(k)] = kI * static_cast<double>(k) * (paired + rest);
  }
  return from_half(u1.grid(), std::move(half));
}

SpectralField NormalFormOps::rho1(const SpectralField& v1, const SpectralField& v2) const {
  check(v1);
  check(v2);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  if (cls_.is_special()) {
    for (int k = 1; k <= n_; ++k) {
      const auto i1 = scaled_index(*cls_.c1_exact, k);
      const auto i2 = scaled_index(*cls_.c2_exact, k);
      if (!i1 || !i2) continue;
      half[static_cast<std::size_t>(k)] = -kI * static_cast<double>(k) * v1[*i1] * v2[*i2];
    }
  }
  return from_half(v1.grid(), std::move(half));
}

SpectralField NormalFormOps::rho2(const SpectralField& u, const SpectralField& v) const {
  check(u);
  check(v);
  std::vector<Complex> half(static_cast<std::size_t>(n_ + 1));
  if (cls_.is_special()) {
    for (int k = 1; k <= n_; ++k) {
      Complex sum{};
      for (const auto& d : {*cls_.d1_exact, *cls_.d2_exact}) {
        if (const auto i = scaled_index(d, k)) sum += u[*i] * v[k - *i];
      }
      half[static_cast<std::size_t>(k)] = -kI * static_cast<double>(k) * sum;
    }
  }
  return from_half(u.grid(), std::move(half));
}

// ---------------------------------------------------------------------------
// Integrated identities

std::string to_string(Quadrature q) {
  return q == Quadrature::simpson ? "simpson" : "trapezoid";
}

IdentityResidual identity_residual(const std::vector<MBState>& trajectory, const SimParams& params,
                                   bool include_rho) {
  if (params.damped() || params.forced()) {
    throw ConfigError("identity_residual: the identities hold for the conservative system only");
  }
  if (trajectory.size() < 2) throw ConfigError("identity_residual: need at least two snapshots");
  const double t0 = trajectory.front().t;
  if (std::abs(t0) > 1e-12) throw ConfigError("identity_residual: trajectory must start at t = 0");
  const double h = trajectory[1].t - t0;
  if (!(h > 0.0)) throw ConfigError("identity_residual: snapshot stride must be positive");
  for (std::size_t j = 1; j < trajectory.size(); ++j) {
    const double expected = static_cast<double>(j) * h;
    if (std::abs(trajectory[j].t - expected) > 1e-9 * std::max(1.0, expected)) {
      throw ConfigError("identity_residual: snapshot stride is not uniform");
    }
  }

  const NormalFormOps ops(params.alpha_class, params.grid);
  const double alpha = params.alpha();
  const std::size_t count = trajectory.size();
  const auto& s0 = trajectory[0];
  const SpectralField b1_0 = ops.b1(s0.v, s0.v);
  const SpectralField b2_0 = ops.b2(s0.u, s0.v);

  // Interaction-picture integrands e^{-ick³t}[R + ρ](t).
  const auto integrands = [&](std::size_t j) {
    const auto& s = trajectory[j];
    SpectralField ru = ops.r1(s.u, s.v, s.v);
    SpectralField rv = ops.r2(s.v, s.v, s.v) + ops.r3(s.u, s.u, s.v);
    if (include_rho) {
      ru += ops.rho1(s.v, s.v);
      rv += ops.rho2(s.u, s.v);
    }
    return std::pair{linear_flow(ru, 1.0, 0.0, -s.t), linear_flow(rv, alpha, 0.0, -s.t)};
  };

  IdentityResidual out;
  const auto evaluate = [&](std::size_t j, const SpectralField& iu, const SpectralField& iv) {
    const auto& s = trajectory[j];
    const SpectralField eu = s.u - linear_flow(s0.u, 1.0, 0.0, s.t) + ops.b1(s.v, s.v) -
                             linear_flow(b1_0 + iu, 1.0, 0.0, s.t);
    const SpectralField ev = s.v - linear_flow(s0.v, alpha, 0.0, s.t) + ops.b2(s.u, s.v) -
                             linear_flow(b2_0 + iv, alpha, 0.0, s.t);
    const double nu = sobolev_norm(s.u, 0.0);
    const double nv = sobolev_norm(s.v, 0.0);
    const double ru = sobolev_norm(eu, 0.0) / (nu > 0.0 ? nu : 1.0);
    const double rv = sobolev_norm(ev, 0.0) / (nv > 0.0 ? nv : 1.0);
    out.t.push_back(s.t);
    out.res_u.push_back(ru);
    out.res_v.push_back(rv);
    out.max_u = std::max(out.max_u, ru);
    out.max_v = std::max(out.max_v, rv);
  };

  SpectralField iu(params.grid), iv(params.grid);
  evaluate(0, iu, iv);
  auto g0 = integrands(0);
  std::size_t j = 0;
  for (; j + 2 < count; j += 2) {
    const auto g1 = integrands(j + 1);
    auto g2 = integrands(j + 2);
    iu += (h / 3.0) * (g0.first + 4.0 * g1.first + g2.first);
    iv += (h / 3.0) * (g0.second + 4.0 * g1.second + g2.second);
    evaluate(j + 2, iu, iv);
    g0 = std::move(g2);
  }
  if (j + 1 < count) {
    const auto g1 = integrands(j + 1);
    iu += (h / 2.0) * (g0.first + g1.first);
    iv += (h / 2.0) * (g0.second + g1.second);
    evaluate(j + 1, iu, iv);
    out.quadrature = Quadrature::trapezoid;
    out.annotation = "odd number of snapshot intervals; trapezoid rule used on the last interval";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resonant correction and nonlinear residual

RhoCorrection::RhoCorrection(const NormalFormOps& ops, double gamma, double delta)
    : ops_(&ops),
      gamma_(gamma),
      delta_(delta),
      last_u_(ops.grid()),
      last_v_(ops.grid()),
      int_u_(ops.grid()),
      int_v_(ops.grid()) {}

void RhoCorrection::accumulate(const MBState& state) {
  SpectralField ru = ops_->rho1(state.v, state.v);
  SpectralField rv = ops_->rho2(state.u, state.v);
  if (last_t_) {
    const double h = state.t - *last_t_;
    if (!(h > 0.0)) throw ConfigError("RhoCorrection: states must be offered in increasing time");
    // J(t+h) = e^{Lh} J(t) + (h/2)(e^{Lh} ρ(t) + ρ(t+h)).
    int_u_ = linear_flow(int_u_ + (0.5 * h) * last_u_, 1.0, gamma_, h) + (0.5 * h) * ru;
    int_v_ = linear_flow(int_v_ + (0.5 * h) * last_v_, ops_->alpha_class().value(), delta_, h) +
             (0.5 * h) * rv;
  }
  last_t_ = state.t;
  last_u_ = std::move(ru);
  last_v_ = std::move(rv);
}

std::pair<SpectralField, SpectralField> RhoCorrection::value() const { return {int_u_, int_v_}; }

std::pair<SpectralField, SpectralField> nonlinear_residual(
    const MBState& state, const SpectralField& u0, const SpectralField& v0, double alpha,
    double gamma, double delta,
    const std::optional<std::pair<SpectralField, SpectralField>>& rho_correction) {
  SpectralField ru = state.u - linear_flow(u0, 1.0, gamma, state.t);
  SpectralField rv = state.v - linear_flow(v0, alpha, delta, state.t);
  if (rho_correction) {
    ru -= rho_correction->first;
    rv -= rho_correction->second;
  }
  return {std::move(ru), std::move(rv)};
}

}  // namespace mb
