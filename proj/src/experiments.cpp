#include "mb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <thread>

namespace mb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Runs fn(0..count-1) in batches of hardware_concurrency tasks.
template <class T, class F>
std::vector<T> parallel_map(std::size_t count, F fn) {
  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  std::vector<T> out(count);
  for (std::size_t start = 0; start < count; start += width) {
    const std::size_t stop = std::min(count, start + width);
    std::vector<std::future<T>> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (std::size_t i = start; i < stop; ++i) out[i] = batch[i - start].get();
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::size_t steps_for(double interval, double dt, const char* what) {
  const double ratio = interval / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-6 * ratio) {
    throw ConfigError(std::string(what) + " must be a positive multiple of dt");
  }
  return steps;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double h1_pair(const SpectralField& u, const SpectralField& v) {
  return sobolev_norm(u, 1.0) + sobolev_norm(v, 1.0);
}

SpectralField multiplier(const SpectralField& w, double damping, double dispersion) {
  SpectralField out(w.grid());
  for (int k = 0; k <= w.max_mode(); ++k) {
    const double k3 = static_cast<double>(k) * k * k;
    out.set(k, w[k] / Complex(damping, -dispersion * k3));
  }
  return out;
}

}  // namespace

std::optional<LineFit> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return std::nullopt;
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = x.size();
  return fit;
}

std::optional<LineFit> fit_spectral_slope(std::span<const double> power, int k_min, int k_max) {
  if (k_min < 1 || k_max < k_min || static_cast<std::size_t>(k_max) >= power.size()) {
    throw ConfigError("fit_spectral_slope: window [" + std::to_string(k_min) + ", " +
                      std::to_string(k_max) + "] is outside the spectrum");
  }
  std::vector<double> x, y;
  for (int k = k_min; k <= k_max; ++k) {
    const double pk = power[static_cast<std::size_t>(k)];
    if (!(pk > 0.0)) return std::nullopt;
    x.push_back(0.5 * std::log1p(static_cast<double>(k) * k));
    y.push_back(0.5 * std::log(pk));
  }
  return fit_line(x, y);
}

std::vector<double> pair_power(const SpectralField& u, const SpectralField& v) {
  std::vector<double> out(static_cast<std::size_t>(u.max_mode() + 1));
  for (int k = 0; k <= u.max_mode(); ++k) {
    out[static_cast<std::size_t>(k)] = std::norm(u[k]) + std::norm(v[k]);
  }
  return out;
}

std::pair<SpectralField, SpectralField> random_initial_data(GridSpec grid, double s,
                                                            std::uint64_t seed, double excess) {
  return {random_field(grid, s, splitmix64(2 * seed), true, excess),
          random_field(grid, s, splitmix64(2 * seed + 1), false, excess)};
}

void rescale_pair(SpectralField& u, SpectralField& v, double s, double target) {
  const double current = sobolev_norm(u, s) + sobolev_norm(v, s);
  if (!(current > 0.0)) throw DomainError("rescale_pair: both fields vanish");
  u *= target / current;
  v *= target / current;
}

double measure_embedding_constant(int max_mode, int random_trials, std::uint64_t seed) {
  const GridSpec fine{max_mode, std::max(16 * max_mode, 64)};
  const auto ratio = [](const SpectralField& w) {
    const auto samples = to_physical(w);
    double sup = 0.0;
    for (double x : samples) sup = std::max(sup, std::abs(x));
    return sup / sobolev_norm(w, 1.0);
  };
  SpectralField extremal(fine);
  for (int k = 0; k <= max_mode; ++k) extremal.set(k, 1.0 / (1.0 + static_cast<double>(k) * k));
  double best = ratio(extremal);
  for (int i = 0; i < random_trials; ++i) {
    best = std::max(best, ratio(random_field(fine, 1.0, splitmix64(seed + i), false)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Smoothing

namespace {

SmoothingSeedResult smoothing_member(const SmoothingConfig& cfg, std::uint64_t seed) {
  SimParams params;
  params.alpha_class = cfg.alpha_class;
  params.grid = GridSpec::dealiased(cfg.max_mode);
  params.dt = cfg.dt;
  params.t_end = cfg.t_end;
  params.nonlinear = cfg.nonlinear;
  params.validate();

  const int n = cfg.max_mode;
  const int k_min = std::max(1, static_cast<int>(std::lround(cfg.window_low * n)));
  const int k_max = std::min(n, static_cast<int>(std::lround(cfg.window_high * n)));
  const std::size_t sample_steps = steps_for(cfg.sample_interval, cfg.dt, "sample_interval");
  const bool rho = cfg.subtract_rho && cfg.nonlinear && cfg.alpha_class.is_special();
  if (rho && (cfg.rho_stride == 0 || sample_steps % cfg.rho_stride != 0)) {
    throw ConfigError("rho_stride must divide the sample interval in steps");
  }

  auto [u0, v0] = random_initial_data(params.grid, cfg.s, seed, cfg.random_excess);
  SmoothingSeedResult out;
  out.seed = seed;
  out.residual_norm.resize(cfg.s1_grid.size());
  std::vector<double> sol_power(static_cast<std::size_t>(n + 1));
  std::vector<double> res_power(sol_power.size());

  const NormalFormOps ops(cfg.alpha_class, params.grid);
  RhoCorrection correction(ops, 0.0, 0.0);

  const auto sample = [&](const MBState& state) {
    std::optional<std::pair<SpectralField, SpectralField>> rho_value;
    if (rho) rho_value = correction.value();
    const auto [ru, rv] = nonlinear_residual(state, u0, v0, params.alpha(), 0.0, 0.0, rho_value);
    out.t.push_back(state.t);
    out.solution_norm.push_back(sobolev_norm(state.u, cfg.s) + sobolev_norm(state.v, cfg.s));
    for (std::size_t i = 0; i < cfg.s1_grid.size(); ++i) {
      out.residual_norm[i].push_back(sobolev_norm(ru, cfg.s1_grid[i]) +
                                     sobolev_norm(rv, cfg.s1_grid[i]));
    }
    const auto sp = pair_power(state.u, state.v);
    const auto rp = pair_power(ru, rv);
    for (std::size_t k = 0; k < sp.size(); ++k) {
      sol_power[k] += sp[k];
      res_power[k] += rp[k];
    }
    out.solution_fit_t.push_back(fit_spectral_slope(sp, k_min, k_max));
    out.residual_fit_t.push_back(fit_spectral_slope(rp, k_min, k_max));
  };
  const auto sampled = [&](double t, std::size_t step) {
    return step % sample_steps == 0 && t >= cfg.sample_start - 1e-9;
  };

  if (!cfg.nonlinear) {
    // The solution is the linear flow itself.
    const std::size_t total = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
    for (std::size_t step = 0; step <= total; step += sample_steps) {
      const double t = static_cast<double>(step) * cfg.dt;
      if (!sampled(t, step)) continue;
      sample({linear_flow(u0, 1.0, 0.0, t), linear_flow(v0, params.alpha(), 0.0, t), t});
    }
  } else {
    EvolveOptions options;
    options.observer_stride = rho ? cfg.rho_stride : sample_steps;
    options.observers.push_back([&](const MBState& state, std::size_t step) {
      if (rho) correction.accumulate(state);
      if (sampled(state.t, step)) sample(state);
    });
    try {
      evolve(params, u0, v0, options);
    } catch (const BlowUpError& e) {
      out.annotation = std::string("blow-up: ") + e.what();
    }
  }

  if (!out.t.empty()) {
    out.solution_fit = fit_spectral_slope(sol_power, k_min, k_max);
    out.residual_fit = fit_spectral_slope(res_power, k_min, k_max);
  }
  if (out.annotation) return out;
  if (!out.solution_fit || !out.residual_fit) {
    out.annotation = "spectrum vanishes in the fit window; gap undefined";
  } else if (out.solution_fit->r_squared < cfg.min_r_squared ||
             out.residual_fit->r_squared < cfg.min_r_squared) {
    out.annotation = "fit R² below gate; gap undefined";
  } else {
    out.slope_gap = out.solution_fit->slope - out.residual_fit->slope;
  }
  return out;
}

}  // namespace

SmoothingReport smoothing_experiment(const SmoothingConfig& config) {
  if (!(config.s > 0.5)) throw ConfigError("s: smoothing requires s > 1/2");
  if (config.seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (!(config.window_low > 0.0 && config.window_low < config.window_high &&
        config.window_high <= 1.0)) {
    throw ConfigError("slope window: need 0 < low < high <= 1");
  }
  SmoothingReport report;
  report.config = config;
  report.seeds = parallel_map<SmoothingSeedResult>(
      config.seeds.size(), [&](std::size_t i) { return smoothing_member(config, config.seeds[i]); });

  std::vector<double> gaps, sol, res;
  report.min_r_squared = std::numeric_limits<double>::infinity();
  for (const auto& r : report.seeds) {
    if (!r.slope_gap) continue;
    gaps.push_back(*r.slope_gap);
    sol.push_back(r.solution_fit->slope);
    res.push_back(r.residual_fit->slope);
    report.min_r_squared = std::min(
        {report.min_r_squared, r.solution_fit->r_squared, r.residual_fit->r_squared});
  }
  report.gaps_defined = gaps.size();
  if (gaps.empty()) {
    report.min_r_squared = 0.0;
  } else {
    report.median_slope_gap = median(gaps);
    report.median_solution_slope = median(sol);
    report.median_residual_slope = median(res);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Growth

GrowthReport growth_tracking(const GrowthConfig& config) {
  if (!(config.s >= 1.0)) throw ConfigError("s: growth tracking requires s >= 1");
  SimParams params;
  params.alpha_class = config.alpha_class;
  params.grid = GridSpec::dealiased(config.max_mode);
  params.dt = config.dt > 0.0 ? config.dt : default_time_step(config.max_mode);
  params.t_end = config.t_end;
  params.nonlinear = config.nonlinear;
  params.validate();
  const std::size_t sample_steps = steps_for(config.sample_interval, params.dt, "sample_interval");

  auto [u0, v0] = random_initial_data(params.grid, config.s, config.seed, config.random_excess);
  GrowthReport report;
  report.config = config;
  report.config.dt = params.dt;
  EvolveOptions options;
  options.observer_stride = sample_steps;
  options.observers.push_back([&](const MBState& state, std::size_t) {
    const auto e = conserved_quantities(state, params.alpha());
    report.t.push_back(state.t);
    report.norm.push_back(sobolev_norm(state.u, config.s) + sobolev_norm(state.v, config.s));
    report.e3.push_back(e.e3);
    report.e4.push_back(e.e4);
  });
  evolve(params, u0, v0, options);

  std::vector<double> log_t, log_n;
  for (std::size_t i = 0; i < report.t.size(); ++i) {
    log_t.push_back(std::log1p(report.t[i]));
    log_n.push_back(std::log(report.norm[i]));
  }
  report.polynomial_fit = fit_line(log_t, log_n);
  report.exponential_fit = fit_line(report.t, log_n);
  const double peak = *std::max_element(report.norm.begin(), report.norm.end());
  report.max_over_initial = peak / report.norm.front();
  for (std::size_t i = 0; i < report.t.size(); ++i) {
    report.e3_drift = std::max(report.e3_drift, std::abs(report.e3[i] - report.e3.front()) /
                                                    std::max(std::abs(report.e3.front()), 1e-300));
    report.e4_drift = std::max(report.e4_drift, std::abs(report.e4[i] - report.e4.front()) /
                                                    (std::abs(report.e4.front()) + 1.0));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Absorbing set

SpectralField forcing_field(GridSpec grid, std::span<const ForcingMode> modes) {
  SpectralField out(grid);
  for (const auto& m : modes) {
    if (m.k <= 0 || m.k > grid.max_mode) {
      throw ConfigError("forcing: mode " + std::to_string(m.k) + " must lie in [1, N]");
    }
    out.set(m.k, out[m.k] + m.amplitude);
  }
  return out;
}

AbsorbingReport absorbing_set_experiment(const AbsorbingConfig& config) {
  const SimParams& base = config.params;
  if (!(base.gamma > 0.0 && base.delta > 0.0)) {
    throw ConfigError("gamma, delta: the absorbing-set experiment needs positive damping");
  }
  if (config.seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (!(config.norm_min > 0.0 && config.norm_max >= config.norm_min)) {
    throw ConfigError("norm range: need 0 < norm_min <= norm_max");
  }
  base.validate();
  const double t_end = base.t_end;
  SimParams params = base;
  if (config.double_horizon) params.t_end = 2.0 * t_end;
  const std::size_t stride =
      config.sample_stride > 0
          ? config.sample_stride
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 / params.dt)));
  const std::size_t count = config.seeds.size();

  const auto member = [&](std::size_t i) {
    AbsorbingTrajectory tr;
    tr.seed = config.seeds[i];
    const double frac = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    tr.initial_norm = config.norm_min * std::pow(config.norm_max / config.norm_min, frac);
    auto [u0, v0] = random_initial_data(params.grid, config.s, tr.seed, config.random_excess);
    rescale_pair(u0, v0, 1.0, tr.initial_norm);
    EvolveOptions options;
    options.observer_stride = stride;
    options.observers.push_back([&](const MBState& state, std::size_t) {
      const double h1 = h1_pair(state.u, state.v);
      tr.t.push_back(state.t);
      tr.h1.push_back(h1);
      if (state.t >= 0.5 * t_end - 1e-9 && state.t <= t_end + 1e-9) {
        tr.late_sup = std::max(tr.late_sup, h1);
      }
      if (state.t >= t_end - 1e-9) tr.late_sup_doubled = std::max(tr.late_sup_doubled, h1);
    });
    try {
      evolve(params, u0, v0, options);
    } catch (const BlowUpError& e) {
      tr.annotation = std::string("blow-up: ") + e.what();
      tr.late_sup = tr.late_sup_doubled = std::numeric_limits<double>::infinity();
    }
    return tr;
  };

  AbsorbingReport report;
  report.t_end = t_end;
  report.trajectories = parallel_map<AbsorbingTrajectory>(count, member);
  report.bound_min = std::numeric_limits<double>::infinity();
  double small_group = 0.0;
  for (const auto& tr : report.trajectories) {
    report.bound_min = std::min(report.bound_min, tr.late_sup);
    report.bound_max = std::max(report.bound_max, tr.late_sup);
    report.bound_max_doubled = std::max(report.bound_max_doubled, tr.late_sup_doubled);
    if (tr.initial_norm <= config.norm_max / 10.0 * (1.0 + 1e-12)) {
      small_group = std::max(small_group, tr.late_sup);
    }
    if (config.double_horizon && tr.late_sup > 0.0) {
      report.max_trajectory_change =
          std::max(report.max_trajectory_change, std::abs(tr.late_sup_doubled / tr.late_sup - 1.0));
    }
  }
  report.spread = report.bound_max / report.bound_min;
  if (config.double_horizon && report.bound_max > 0.0) {
    report.horizon_change = std::abs(report.bound_max_doubled / report.bound_max - 1.0);
  }
  report.ball_radius = 2.0 * (small_group > 0.0 ? small_group : report.bound_min);
  report.large_data_enters_ball = true;
  for (const auto& tr : report.trajectories) {
    const double final_norm = tr.h1.empty() ? std::numeric_limits<double>::infinity() : tr.h1.back();
    if (tr.initial_norm > config.norm_max / 10.0 && !(final_norm <= report.ball_radius)) {
      report.large_data_enters_ball = false;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Stationary solution

StationaryPair stationary_solve(const SpectralField& f, const SpectralField& g, double gamma,
                                double delta, double alpha, const StationaryOptions& options) {
  if (!(gamma > 0.0 && delta > 0.0)) throw ConfigError("gamma, delta: must be positive");
  if (!(f.grid() == g.grid())) throw ConfigError("forcing: f and g live on different grids");
  if (!f.is_mean_zero(1e-14) || !g.is_mean_zero(1e-14)) {
    throw DomainError("forcing: f and g must be mean-zero");
  }
  if (options.max_iter < 1) throw ConfigError("max_iter: must be at least 1");

  const auto p_of = [&](const SpectralField& q) {
    return multiplier(f - dealias_product(q, derivative(q, 1)), gamma, 1.0);
  };
  const auto step = [&](const SpectralField& q) {
    return multiplier(g - derivative(dealias_product(p_of(q), q), 1), delta, alpha);
  };

  StationaryPair out;
  SpectralField q = multiplier(g, delta, alpha);
  out.iterate_norms.push_back(sobolev_norm(q, 2.0));
  for (int it = 1; it <= options.max_iter; ++it) {
    SpectralField next = step(q);
    const double diff = sobolev_norm(next - q, 2.0);
    q = std::move(next);
    out.iterations = it;
    out.differences.push_back(diff);
    out.iterate_norms.push_back(sobolev_norm(q, 2.0));
    if (!std::isfinite(diff) || !std::isfinite(out.iterate_norms.back())) break;
    if (diff < options.tol) {
      out.converged = true;
      break;
    }
  }
  out.p = p_of(q);
  out.q = std::move(q);
  out.residual = std::isfinite(out.iterate_norms.back())
                     ? stationary_residual(out.p, out.q, f, g, gamma, delta, alpha)
                     : std::numeric_limits<double>::infinity();

  auto& m = out.margins;
  m.gamma_eff = std::min(gamma, delta);
  const double g43 = std::pow(m.gamma_eff, 4.0 / 3.0);
  const double nf = sobolev_norm(f, 1.0);
  const double ng = sobolev_norm(g, 1.0);
  m.f_ratio = nf / g43;
  m.g_ratio = ng / g43;
  m.embedding_constant = measure_embedding_constant(f.max_mode());
  const double c = m.embedding_constant;
  m.f_limit = std::cbrt(alpha) * g43 / (4.0 * c);
  m.g_limit = std::sqrt(alpha) * g43 / (4.0 * std::pow(c, 1.5));
  m.f_condition = nf < m.f_limit;
  m.g_condition = ng <= m.g_limit;
  return out;
}

double stationary_residual(const SpectralField& p, const SpectralField& q, const SpectralField& f,
                           const SpectralField& g, double gamma, double delta, double alpha) {
  const SpectralField ep = derivative(p, 3) + gamma * p + dealias_product(q, derivative(q, 1)) - f;
  const SpectralField eq =
      alpha * derivative(q, 3) + delta * q + derivative(dealias_product(p, q), 1) - g;
  const double l2 = std::sqrt(kTwoPi);
  return l2 * std::max(sobolev_norm(ep, 0.0), sobolev_norm(eq, 0.0));
}

// ---------------------------------------------------------------------------
// Trivial attractor

double modified_hamiltonian(const SpectralField& y, const SpectralField& z, const SpectralField& p,
                            const SpectralField& q, double alpha) {
  const double gradient =
      kTwoPi * (std::pow(sobolev_norm(derivative(y, 1), 0.0), 2) +
                alpha * std::pow(sobolev_norm(derivative(z, 1), 0.0), 2));
  return gradient - cubic_integral(y, z, z) - 2.0 * cubic_integral(q, y, z) -
         cubic_integral(p, z, z);
}

double fixed_point_drift(const SimParams& params, const StationaryPair& stationary,
                         std::size_t sample_stride) {
  double drift = 0.0;
  EvolveOptions options;
  options.observer_stride = std::max<std::size_t>(1, sample_stride);
  options.observers.push_back([&](const MBState& state, std::size_t) {
    drift = std::max(drift, h1_pair(state.u - stationary.p, state.v - stationary.q));
  });
  const RunRecord record = evolve(params, stationary.p, stationary.q, options);
  const auto& last = record.final_state;
  return std::max(drift, h1_pair(last.u - stationary.p, last.v - stationary.q));
}

AttractorReport trivial_attractor_experiment(const AttractorConfig& config,
                                             const StationaryPair& stationary) {
  const SimParams& params = config.params;
  params.validate();
  if (!(params.gamma > 0.0 && params.delta > 0.0)) {
    throw ConfigError("gamma, delta: the attractor experiment needs positive damping");
  }
  if (!(stationary.p.grid() == params.grid)) {
    throw ConfigError("stationary pair: grid differs from the run grid");
  }
  const double gamma = params.gamma;
  const double alpha = params.alpha();
  const std::size_t stride =
      config.sample_stride > 0
          ? config.sample_stride
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.01 / params.dt)));
  const double h = static_cast<double>(stride) * params.dt;
  const SpectralField& p = stationary.p;
  const SpectralField& q = stationary.q;

  AttractorReport report;
  report.stationary = stationary;
  report.embedding_constant = measure_embedding_constant(params.grid.max_mode);
  report.rate_bound = -2.0 * gamma + report.embedding_constant *
                                         (sobolev_norm(p, 2.0) + sobolev_norm(q, 2.0));

  const auto member = [&](std::size_t i) {
    AttractorTrajectory tr;
    tr.seed = config.seeds[i];
    auto [u0, v0] = random_initial_data(params.grid, config.s, tr.seed, config.random_excess);
    rescale_pair(u0, v0, 1.0, config.data_norm);
    double integral = 0.0;  // ∫0^t e^{-2γ(t-r)} |∫yz²| dr
    double last_cubic = 0.0;
    EvolveOptions options;
    options.observer_stride = stride;
    options.observers.push_back([&](const MBState& state, std::size_t) {
      const SpectralField y = state.u - p;
      const SpectralField z = state.v - q;
      const double cubic = std::abs(cubic_integral(y, z, z));
      if (!tr.t.empty()) {
        integral = std::exp(-2.0 * gamma * h) * (integral + 0.5 * h * last_cubic) + 0.5 * h * cubic;
      }
      last_cubic = cubic;
      const double h4 = modified_hamiltonian(y, z, p, q, alpha);
      tr.t.push_back(state.t);
      tr.distance.push_back(h1_pair(y, z));
      tr.e3.push_back(kTwoPi * (std::pow(sobolev_norm(y, 0.0), 2) + std::pow(sobolev_norm(z, 0.0), 2)));
      tr.h4.push_back(h4);
      const double h4_0 = tr.h4.front();
      tr.h4_envelope.push_back(h4_0 * std::exp(-2.0 * gamma * state.t) + gamma * integral);
    });
    try {
      evolve(params, u0, v0, options);
    } catch (const BlowUpError& e) {
      tr.annotation = std::string("blow-up: ") + e.what();
      return tr;
    }

    std::vector<double> ts, log_e3;
    tr.e3_monotone = true;
    for (std::size_t j = 0; j < tr.t.size(); ++j) {
      tr.h4_excess = std::max(tr.h4_excess, tr.h4[j] - tr.h4_envelope[j]);
      if (tr.t[j] < config.transient || tr.e3[j] <= config.e3_floor) continue;
      ts.push_back(tr.t[j]);
      log_e3.push_back(std::log(tr.e3[j]));
      if (j > 0 && tr.e3[j] > tr.e3[j - 1] * (1.0 + 1e-9)) tr.e3_monotone = false;
    }
    tr.e3_rate_fit = fit_line(ts, log_e3);
    tr.e3_rate = tr.e3_rate_fit ? -tr.e3_rate_fit->slope : 0.0;
    tr.converged = !tr.distance.empty() && tr.distance.back() < config.distance_tol;
    if (!tr.converged) {
      tr.annotation = "no convergence by the horizon; measured E3 decay rate " +
                      std::to_string(tr.e3_rate);
    }
    return tr;
  };

  report.trajectories = parallel_map<AttractorTrajectory>(config.seeds.size(), member);
  report.min_rate = std::numeric_limits<double>::infinity();
  report.all_converged = report.all_monotone = !report.trajectories.empty();
  for (const auto& tr : report.trajectories) {
    report.min_rate = std::min(report.min_rate, tr.e3_rate);
    const double final_distance =
        tr.distance.empty() ? std::numeric_limits<double>::infinity() : tr.distance.back();
    report.max_final_distance = std::max(report.max_final_distance, final_distance);
    report.all_converged = report.all_converged && tr.converged;
    report.all_monotone = report.all_monotone && tr.e3_monotone;
  }
  return report;
}

}  // namespace mb
