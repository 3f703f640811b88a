#include "mb/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<Complex> linear_symbol_exp(std::size_t n, double dispersion, double damping, double t) {
  std::vector<Complex> e(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    e[k] = std::exp(Complex(-damping * t, dispersion * kk * kk * kk * t));
  }
  return e;
}

std::vector<Complex> half_or_zero(const std::optional<SpectralField>& f, std::size_t n) {
  if (!f) return std::vector<Complex>(n + 1);
  const auto h = f->nonnegative();
  return {h.begin(), h.end()};
}

void check_finite(const std::vector<Complex>& u, const std::vector<Complex>& v, double threshold,
                  const MBState& last_good) {
  const auto bad = [threshold](const Complex& c) {
    return !std::isfinite(c.real()) || !std::isfinite(c.imag()) || std::abs(c) > threshold;
  };
  if (std::any_of(u.begin(), u.end(), bad) || std::any_of(v.begin(), v.end(), bad)) {
    throw BlowUpError("blow-up detected after t = " + std::to_string(last_good.t), last_good);
  }
}

}  // namespace

double default_time_step(int max_mode) { return std::min(1e-3, 0.5 / max_mode); }

void SimParams::validate() const {
  grid.require_quadratic();
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (t_end < 0.0) throw ConfigError("t_end must be nonnegative");
  if (gamma < 0.0) throw ConfigError("gamma must be nonnegative");
  if (delta < 0.0) throw ConfigError("delta must be nonnegative");
  const auto check_forcing = [&](const std::optional<SpectralField>& h, const char* name) {
    if (!h) return;
    if (!(h->grid() == grid)) throw ConfigError(std::string(name) + ": forcing grid mismatch");
    if (!h->is_mean_zero(1e-14)) throw ConfigError(std::string(name) + ": forcing must be mean-zero");
  };
  check_forcing(f, "f");
  check_forcing(g, "g");
}

NonlinearTerms rhs_nonlinear(const MBState& state, const SimParams& params) {
  params.grid.require_quadratic();
  const SpectralField vv = dealias_product(state.v, state.v);
  const SpectralField uv = dealias_product(state.u, state.v);
  NonlinearTerms out{SpectralField(params.grid), SpectralField(params.grid)};
  auto du = out.du.nonnegative();
  auto dv = out.dv.nonnegative();
  for (std::size_t k = 0; k < du.size(); ++k) {
    const Complex ik(0.0, static_cast<double>(k));
    du[k] = -0.5 * ik * vv.nonnegative()[k];
    dv[k] = -ik * uv.nonnegative()[k];
  }
  return out;
}

SpectralField linear_flow(const SpectralField& field, double dispersion, double damping, double t) {
  SpectralField out = field;
  auto h = out.nonnegative();
  const auto e = linear_symbol_exp(h.size() - 1, dispersion, damping, t);
  for (std::size_t k = 0; k < h.size(); ++k) h[k] *= e[k];
  return out;
}

// ---------------------------------------------------------------------------
// IFRK4

IfRk4Stepper::IfRk4Stepper(const SimParams& params)
    : params_(params), ws_(params.grid.product_grid()), n_(static_cast<std::size_t>(params.grid.max_mode)) {
  params_.validate();
  const double h = params_.dt;
  eu_full_ = linear_symbol_exp(n_, 1.0, params_.gamma, h);
  eu_half_ = linear_symbol_exp(n_, 1.0, params_.gamma, 0.5 * h);
  ev_full_ = linear_symbol_exp(n_, params_.alpha(), params_.delta, h);
  ev_half_ = linear_symbol_exp(n_, params_.alpha(), params_.delta, 0.5 * h);
  f_ = half_or_zero(params_.f, n_);
  g_ = half_or_zero(params_.g, n_);
  const auto m = static_cast<std::size_t>(params_.grid.product_points());
  phys_u_.resize(m);
  phys_v_.resize(m);
  phys_w_.resize(m);
  for (auto* buf : {&ka_u_, &ka_v_, &kb_u_, &kb_v_, &kc_u_, &kc_v_, &kd_u_, &kd_v_, &su_, &sv_,
                    &prod_}) {
    buf->assign(n_ + 1, Complex{});
  }
}

void IfRk4Stepper::nonlinear(const std::vector<Complex>& u, const std::vector<Complex>& v,
                             std::vector<Complex>& du, std::vector<Complex>& dv) {
  if (!params_.nonlinear) {
    du = f_;
    dv = g_;
    return;
  }
  ws_.to_grid(u, phys_u_);
  ws_.to_grid(v, phys_v_);
  const std::size_t m = phys_u_.size();

  for (std::size_t j = 0; j < m; ++j) phys_w_[j] = phys_v_[j] * phys_v_[j];
  ws_.from_grid(phys_w_, prod_);
  for (std::size_t k = 0; k <= n_; ++k) {
    du[k] = Complex(0.0, -0.5 * static_cast<double>(k)) * prod_[k] + f_[k];
  }

  for (std::size_t j = 0; j < m; ++j) phys_w_[j] = phys_u_[j] * phys_v_[j];
  ws_.from_grid(phys_w_, prod_);
  for (std::size_t k = 0; k <= n_; ++k) {
    dv[k] = Complex(0.0, -static_cast<double>(k)) * prod_[k] + g_[k];
  }
}

void IfRk4Stepper::step_in_place(std::vector<Complex>& u, std::vector<Complex>& v) {
  const double h = params_.dt;
  const std::size_t n = n_;

  nonlinear(u, v, ka_u_, ka_v_);
  for (std::size_t k = 0; k <= n; ++k) {
    su_[k] = eu_half_[k] * (u[k] + 0.5 * h * ka_u_[k]);
    sv_[k] = ev_half_[k] * (v[k] + 0.5 * h * ka_v_[k]);
  }
  nonlinear(su_, sv_, kb_u_, kb_v_);
  for (std::size_t k = 0; k <= n; ++k) {
    su_[k] = eu_half_[k] * u[k] + 0.5 * h * kb_u_[k];
    sv_[k] = ev_half_[k] * v[k] + 0.5 * h * kb_v_[k];
  }
  nonlinear(su_, sv_, kc_u_, kc_v_);
  for (std::size_t k = 0; k <= n; ++k) {
    su_[k] = eu_full_[k] * u[k] + h * eu_half_[k] * kc_u_[k];
    sv_[k] = ev_full_[k] * v[k] + h * ev_half_[k] * kc_v_[k];
  }
  nonlinear(su_, sv_, kd_u_, kd_v_);
  const double w = h / 6.0;
  for (std::size_t k = 0; k <= n; ++k) {
    u[k] = eu_full_[k] * u[k] +
           w * (eu_full_[k] * ka_u_[k] + 2.0 * eu_half_[k] * (kb_u_[k] + kc_u_[k]) + kd_u_[k]);
    v[k] = ev_full_[k] * v[k] +
           w * (ev_full_[k] * ka_v_[k] + 2.0 * ev_half_[k] * (kb_v_[k] + kc_v_[k]) + kd_v_[k]);
  }
  u[0] = u[0].real();
  v[0] = v[0].real();
}

MBState IfRk4Stepper::step(const MBState& state) {
  std::vector<Complex> u(state.u.nonnegative().begin(), state.u.nonnegative().end());
  std::vector<Complex> v(state.v.nonnegative().begin(), state.v.nonnegative().end());
  step_in_place(u, v);
  check_finite(u, v, params_.blow_up_threshold, state);
  return {SpectralField::from_nonnegative(params_.grid, std::move(u)),
          SpectralField::from_nonnegative(params_.grid, std::move(v)), state.t + params_.dt};
}

MBState step_ifrk4(const MBState& state, const SimParams& params) {
  IfRk4Stepper stepper(params);
  return stepper.step(state);
}

// ---------------------------------------------------------------------------
// Diagnostics

double cubic_integral(const SpectralField& a, const SpectralField& b, const SpectralField& c) {
  if (!(a.grid() == b.grid()) || !(a.grid() == c.grid())) {
    throw ConfigError("cubic_integral: fields live on different grids");
  }
  // The integrand has degree 3N; M >= 4N samples integrate it exactly.
  const int n = a.max_mode();
  const GridSpec padded{n, std::max(4 * n, a.grid().phys_points)};
  PseudospectralWorkspace ws(padded);
  const auto m = static_cast<std::size_t>(padded.phys_points);
  std::vector<double> pa(m), pb(m), pc(m);
  ws.to_grid(a.nonnegative(), pa);
  ws.to_grid(b.nonnegative(), pb);
  ws.to_grid(c.nonnegative(), pc);
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) sum += pa[j] * pb[j] * pc[j];
  return sum * kTwoPi / static_cast<double>(m);
}

ConservedQuantities conserved_quantities(const MBState& state, double alpha) {
  ConservedQuantities q;
  q.e1 = kTwoPi * state.u.mean();
  q.e2 = kTwoPi * state.v.mean();
  const double l2u = sobolev_norm(state.u, 0.0);
  const double l2v = sobolev_norm(state.v, 0.0);
  q.e3 = kTwoPi * (l2u * l2u + l2v * l2v);

  const auto hu = state.u.nonnegative();
  const auto hv = state.v.nonnegative();
  double gradient = 0.0;
  for (std::size_t k = 1; k < hu.size(); ++k) {
    const double k2 = static_cast<double>(k * k);
    gradient += 2.0 * k2 * (std::norm(hu[k]) + alpha * std::norm(hv[k]));
  }

  const double cubic = cubic_integral(state.u, state.v, state.v);
  q.e4 = kTwoPi * gradient - cubic;
  return q;
}

DiagnosticsRow diagnose(const MBState& state, const SimParams& params,
                        const std::vector<double>& sobolev_indices) {
  DiagnosticsRow row;
  row.t = state.t;
  row.e = conserved_quantities(state, params.alpha());
  const double l2u = sobolev_norm(state.u, 0.0);
  const double l2v = sobolev_norm(state.v, 0.0);
  row.l2sq_u = kTwoPi * l2u * l2u;
  row.l2sq_v = kTwoPi * l2v * l2v;
  if (params.f) row.forcing_work += kTwoPi * l2_inner(*params.f, state.u);
  if (params.g) row.forcing_work += kTwoPi * l2_inner(*params.g, state.v);
  for (double s : sobolev_indices) {
    row.norms_u.push_back(sobolev_norm(state.u, s));
    row.norms_v.push_back(sobolev_norm(state.v, s));
  }
  return row;
}

RunRecord evolve(const SimParams& params, const SpectralField& u0, const SpectralField& v0,
                 const EvolveOptions& options) {
  params.validate();
  if (!(u0.grid() == params.grid) || !(v0.grid() == params.grid)) {
    throw ConfigError("initial data grid does not match params.grid");
  }
  const auto steps = static_cast<std::size_t>(std::llround(params.t_end / params.dt));
  RunRecord record;
  record.steps = steps;
  record.diagnostic_interval =
      static_cast<double>(options.diagnostic_stride) * params.dt;
  record.snapshot_interval = static_cast<double>(options.snapshot_stride) * params.dt;

  IfRk4Stepper stepper(params);
  std::vector<Complex> u(u0.nonnegative().begin(), u0.nonnegative().end());
  std::vector<Complex> v(v0.nonnegative().begin(), v0.nonnegative().end());

  const auto make_state = [&](std::size_t n) {
    return MBState{SpectralField::from_nonnegative(params.grid, u),
                   SpectralField::from_nonnegative(params.grid, v),
                   static_cast<double>(n) * params.dt};
  };
  const auto visit = [&](std::size_t n) {
    const bool last = n == steps;
    const bool want_diag = n == 0 || last ||
                           (options.diagnostic_stride > 0 && n % options.diagnostic_stride == 0);
    const bool want_snap = options.snapshot_stride > 0 && n % options.snapshot_stride == 0;
    const bool want_obs = !options.observers.empty() && options.observer_stride > 0 &&
                          n % options.observer_stride == 0;
    if (!(want_diag || want_snap || want_obs || last)) return;
    MBState state = make_state(n);
    if (want_diag) record.diagnostics.push_back(diagnose(state, params, options.sobolev_indices));
    if (want_obs) {
      for (const auto& obs : options.observers) obs(state, n);
    }
    if (want_snap) record.snapshots.push_back(state);
    if (last) record.final_state = std::move(state);
  };

  visit(0);
  MBState last_good = make_state(0);
  for (std::size_t n = 1; n <= steps; ++n) {
    stepper.step_in_place(u, v);
    const double t = static_cast<double>(n) * params.dt;
    const auto bad = [&](const Complex& c) {
      return !std::isfinite(c.real()) || !std::isfinite(c.imag()) ||
             std::abs(c) > params.blow_up_threshold;
    };
    if (std::any_of(u.begin(), u.end(), bad) || std::any_of(v.begin(), v.end(), bad)) {
      throw BlowUpError("blow-up detected at t = " + std::to_string(t), last_good);
    }
    if (n % 256 == 0) last_good = make_state(n);
    visit(n);
  }
  return record;
}

EnergyResidual damped_energy_residual(const RunRecord& record, const SimParams& params) {
  EnergyResidual out;
  const auto& rows = record.diagnostics;
  if (rows.size() < 3) {
    out.warning = "fewer than three diagnostics rows; residual undefined";
    return out;
  }
  const double h = rows[1].t - rows[0].t;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const double hi = rows[i + 1].t - rows[i].t;
    if (std::abs(hi - h) > 1e-9 * std::max(1.0, h)) {
      throw ConfigError("damped_energy_residual: diagnostics stride is not uniform");
    }
  }
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const double de3 = (rows[i + 1].e.e3 - rows[i - 1].e.e3) / (2.0 * h);
    out.t.push_back(rows[i].t);
    out.residual.push_back(de3 + 2.0 * params.gamma * rows[i].l2sq_u +
                           2.0 * params.delta * rows[i].l2sq_v - 2.0 * rows[i].forcing_work);
  }
  const double rate = std::max({2.0 * params.gamma, 2.0 * params.delta, 1.0});
  if (h * rate > 0.05) {
    out.warning = "diagnostic stride " + std::to_string(h) +
                  " is coarse relative to the damping time scale; centered differences are "
                  "inaccurate";
  }
  return out;
}

}  // namespace mb
