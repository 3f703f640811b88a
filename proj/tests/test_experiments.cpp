#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mb/experiments.hpp"
#include "oracles.hpp"

using namespace mb;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

AlphaClassification cls_of(const char* alpha) { return classify_alpha(Coupling::parse(alpha)); }

SpectralField modes(GridSpec grid, std::initializer_list<ForcingMode> list) {
  return forcing_field(grid, std::vector<ForcingMode>(list));
}

// ‖p_xxx + γp + qq_x - f‖ and ‖αq_xxx + δq + (pq)_x - g‖ in L²(0,2π), with
// products taken as untruncated direct convolutions restricted to |k| <= N.
double substituted_residual(const SpectralField& p, const SpectralField& q, const SpectralField& f,
                            const SpectralField& g, double gamma, double delta, double alpha) {
  const int n = p.max_mode();
  SpectralField qx(p.grid());
  for (int k = 0; k <= n; ++k) qx.set(k, Complex(0.0, k) * q[k]);
  const auto qqx = oracle::convolution(q, qx);
  const auto pq = oracle::convolution(p, q);
  double s1 = 0.0, s2 = 0.0;
  for (int k = -n; k <= n; ++k) {
    const double k3 = static_cast<double>(k) * k * k;
    const Complex e1 = Complex(gamma, -k3) * p[k] + qqx[k + n] - f[k];
    const Complex e2 = Complex(delta, -alpha * k3) * q[k] + Complex(0.0, k) * pq[k + n] - g[k];
    s1 += std::norm(e1);
    s2 += std::norm(e2);
  }
  return std::sqrt(kTwoPi * std::max(s1, s2));
}

}  // namespace

TEST_CASE("line fits") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto fit = fit_line(x, y);
  REQUIRE(fit);
  CHECK(fit->slope == doctest::Approx(2.0));
  CHECK(fit->intercept == doctest::Approx(1.0));
  CHECK(fit->r_squared == doctest::Approx(1.0));
  CHECK(fit->points == 4);
  CHECK_FALSE(fit_line(std::vector<double>{1.0}, std::vector<double>{2.0}));
  CHECK_FALSE(fit_line(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}));
  const std::vector<double> noisy{1, 2.5, 5.5, 6};
  CHECK(fit_line(x, noisy)->r_squared < 1.0);
  CHECK(fit_line(x, std::vector<double>{2, 2, 2, 2})->r_squared == 1.0);
}

TEST_CASE("spectral slope") {
  std::vector<double> power(65);
  for (int k = 0; k <= 64; ++k) power[k] = std::pow(1.0 + k * k, -3.0);
  const auto fit = fit_spectral_slope(power, 8, 32);
  REQUIRE(fit);
  CHECK(fit->slope == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(fit->r_squared == doctest::Approx(1.0));
  CHECK(fit->points == 25);
  power[10] = 0.0;
  CHECK_FALSE(fit_spectral_slope(power, 8, 32));
}

TEST_CASE("random initial data and rescaling") {
  const GridSpec grid = GridSpec::dealiased(32);
  auto [u, v] = random_initial_data(grid, 1.0, 5);
  auto [u2, v2] = random_initial_data(grid, 1.0, 5);
  CHECK(oracle::max_diff(u, u2) == 0.0);
  CHECK(oracle::max_diff(v, v2) == 0.0);
  CHECK(u.is_mean_zero());
  CHECK_FALSE(v.is_mean_zero());
  CHECK(oracle::max_diff(u, v) > 0.0);
  rescale_pair(u, v, 1.0, 3.0);
  CHECK(sobolev_norm(u, 1.0) + sobolev_norm(v, 1.0) == doctest::Approx(3.0).epsilon(1e-14));
  const auto power = pair_power(u, v);
  CHECK(power.size() == 33);
  CHECK(power[4] == doctest::Approx(std::norm(u[4]) + std::norm(v[4])));
}

TEST_CASE("embedding constant is the extremal value") {
  for (int n : {8, 32, 64}) {
    double sum = 0.0;
    for (int k = -n; k <= n; ++k) sum += 1.0 / (1.0 + k * k);
    CHECK(measure_embedding_constant(n) == doctest::Approx(std::sqrt(sum)).epsilon(1e-12));
  }
  CHECK(measure_embedding_constant(32) == doctest::Approx(1.758).epsilon(1e-3));
}

TEST_CASE("forcing fields") {
  const GridSpec grid = GridSpec::dealiased(8);
  const auto f = modes(grid, {{1, {0.5, 0.0}}, {3, {0.0, 0.2}}});
  CHECK(f[1] == Complex(0.5));
  CHECK(f[-3] == Complex(0.0, -0.2));
  CHECK(f.is_mean_zero());
  CHECK_THROWS_AS(modes(grid, {{0, {1.0, 0.0}}}), ConfigError);
  CHECK_THROWS_AS(modes(grid, {{9, {1.0, 0.0}}}), ConfigError);
}

TEST_CASE("smoothing with the nonlinearity off has a vanishing residual") {
  SmoothingConfig c;
  c.alpha_class = cls_of("1/2");
  c.max_mode = 32;
  c.dt = 1e-3;
  c.t_end = 2.0;
  c.seeds = {1, 2};
  c.nonlinear = false;
  const auto r = smoothing_experiment(c);
  for (const auto& seed : r.seeds) {
    for (const auto& series : seed.residual_norm) {
      for (double x : series) CHECK(x == 0.0);
    }
    CHECK_FALSE(seed.slope_gap.has_value());
    CHECK(seed.annotation.has_value());
  }
  CHECK_FALSE(r.median_slope_gap.has_value());
  CHECK(r.gaps_defined == 0);
}

TEST_CASE("smoothing report structure") {
  SmoothingConfig c;
  c.alpha_class = cls_of("1/2");
  c.max_mode = 64;
  c.dt = 5e-5;
  c.t_end = 1.0;
  c.sample_start = 0.5;
  c.sample_interval = 0.25;
  c.seeds = {1, 2, 3};
  const auto r = smoothing_experiment(c);
  REQUIRE(r.seeds.size() == 3);
  for (const auto& seed : r.seeds) {
    CHECK(seed.t.size() == 3);
    CHECK(seed.residual_norm.size() == c.s1_grid.size());
    CHECK(seed.solution_fit.has_value());
    CHECK(seed.residual_fit.has_value());
    for (const auto& series : seed.residual_norm) {
      for (double x : series) CHECK(x > 0.0);
    }
    if (seed.slope_gap) {
      CHECK(*seed.slope_gap == doctest::Approx(seed.solution_fit->slope - seed.residual_fit->slope));
    }
  }
  // Reproducible regardless of scheduling.
  const auto again = smoothing_experiment(c);
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    CHECK(again.seeds[i].solution_fit->slope == r.seeds[i].solution_fit->slope);
  }
  c.s = 0.5;
  CHECK_THROWS_AS(smoothing_experiment(c), ConfigError);
}

TEST_CASE("growth tracking") {
  GrowthConfig c;
  c.alpha_class = cls_of("1/2");
  c.max_mode = 32;
  c.t_end = 5.0;
  c.nonlinear = false;
  auto r = growth_tracking(c);
  CHECK(r.t.size() == 11);
  for (double n : r.norm) CHECK(n == doctest::Approx(r.norm.front()).epsilon(1e-12));
  CHECK(r.e3_drift < 1e-12);
  c.nonlinear = true;
  c.dt = 1e-4;
  r = growth_tracking(c);
  CHECK(r.max_over_initial < 3.0);
  CHECK(r.e3_drift < 1e-5);
  CHECK(r.e4_drift < 1e-3);
  REQUIRE(r.polynomial_fit);
  REQUIRE(r.exponential_fit);
  CHECK(std::abs(r.exponential_fit->slope) < 0.2);
  c.s = 0.5;
  CHECK_THROWS_AS(growth_tracking(c), ConfigError);
}

TEST_CASE("absorbing set without forcing decays") {
  AbsorbingConfig c;
  c.params.alpha_class = cls_of("1/2");
  c.params.grid = GridSpec::dealiased(16);
  c.params.dt = 1e-3;
  c.params.t_end = 4.0;
  c.params.gamma = c.params.delta = 1.0;
  c.seeds = {1, 2, 3, 4};
  c.norm_max = 2.0;
  const auto r = absorbing_set_experiment(c);
  REQUIRE(r.trajectories.size() == 4);
  CHECK(r.trajectories.front().initial_norm == doctest::Approx(0.1));
  CHECK(r.trajectories.back().initial_norm == doctest::Approx(2.0));
  for (const auto& t : r.trajectories) {
    CHECK(t.h1.front() == doctest::Approx(t.initial_norm).epsilon(1e-12));
    CHECK(t.h1.back() < 0.05 * t.initial_norm);
    CHECK(t.late_sup_doubled < t.late_sup);
  }
  c.params.gamma = 0.0;
  CHECK_THROWS_AS(absorbing_set_experiment(c), ConfigError);
}

TEST_CASE("stationary solve") {
  const GridSpec grid = GridSpec::dealiased(32);
  const SpectralField zero(grid);
  const auto f = modes(grid, {{1, {0.3, 0.1}}, {2, {0.0, -0.2}}});

  auto pair = stationary_solve(f, zero, 5.0, 5.0, 0.5);
  CHECK(pair.converged);
  CHECK(pair.iterations == 1);
  CHECK(oracle::max_abs(pair.q) == 0.0);
  for (int k = -32; k <= 32; ++k) {
    const Complex m1 = f[k] / Complex(5.0, -1.0 * k * k * k);
    CHECK(std::abs(pair.p[k] - m1) < 1e-15);
  }

  pair = stationary_solve(zero, zero, 5.0, 5.0, 0.5);
  CHECK(oracle::max_abs(pair.p) == 0.0);
  CHECK(oracle::max_abs(pair.q) == 0.0);

  const auto small = modes(grid, {{1, {0.2, 0.0}}});
  pair = stationary_solve(small, small, 5.0, 5.0, 0.5);
  CHECK(pair.converged);
  CHECK(pair.residual < 1e-10);
  CHECK(substituted_residual(pair.p, pair.q, small, small, 5.0, 5.0, 0.5) < 1e-10);
  CHECK(stationary_residual(pair.p, pair.q, small, small, 5.0, 5.0, 0.5) < 1e-10);
  CHECK(pair.margins.f_condition);
  CHECK(pair.margins.g_condition);
  REQUIRE(pair.differences.size() >= 4);
  std::vector<double> ratios;
  for (std::size_t i = 1; i + 1 < pair.differences.size() && pair.differences[i] > 1e-15; ++i) {
    ratios.push_back(pair.differences[i] / pair.differences[i - 1]);
  }
  REQUIRE(ratios.size() >= 2);
  for (double r : ratios) CHECK(r < 0.5);

  const auto big = modes(grid, {{1, {400.0, 0.0}}, {2, {0.0, 300.0}}});
  pair = stationary_solve(big, big, 0.1, 0.1, 0.5, {.tol = 1e-13, .max_iter = 30});
  CHECK_FALSE(pair.converged);
  CHECK_FALSE(pair.margins.f_condition);
  CHECK(pair.iterate_norms.size() >= 2);

  SpectralField mean(grid);
  mean.set(0, 1.0);
  CHECK_THROWS_AS(stationary_solve(mean, zero, 1.0, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(stationary_solve(f, zero, 0.0, 1.0, 0.5), ConfigError);
}

TEST_CASE("trivial attractor on a small grid") {
  SimParams p;
  p.alpha_class = cls_of("1/2");
  p.grid = GridSpec::dealiased(16);
  p.dt = 1e-3;
  p.t_end = 3.0;
  p.gamma = p.delta = 5.0;
  p.f = modes(p.grid, {{1, {0.2, 0.0}}, {2, {0.0, 0.1}}});
  p.g = modes(p.grid, {{1, {0.0, 0.2}}, {3, {0.06, 0.0}}});
  const auto st = stationary_solve(*p.f, *p.g, 5.0, 5.0, 0.5);
  REQUIRE(st.converged);
  CHECK(fixed_point_drift(p, st) < 1e-8);

  AttractorConfig c;
  c.params = p;
  c.seeds = {1, 2};
  const auto r = trivial_attractor_experiment(c, st);
  CHECK(r.all_converged);
  CHECK(r.all_monotone);
  CHECK(r.min_rate >= 5.0);
  CHECK(r.rate_bound < 0.0);
  for (const auto& t : r.trajectories) {
    CHECK(t.distance.back() < 1e-6);
    CHECK(t.h4_excess < 1e-2 * std::abs(t.h4.front()) + 1e-12);
  }
}

TEST_CASE("modified Hamiltonian") {
  const GridSpec grid = GridSpec::dealiased(8);
  const SpectralField zero(grid);
  SpectralField y(grid);
  y.set(1, 1.0);
  CHECK(modified_hamiltonian(zero, zero, y, y, 0.5) == 0.0);
  CHECK(modified_hamiltonian(y, zero, zero, zero, 0.5) == doctest::Approx(2.0 * kTwoPi));
  CHECK(modified_hamiltonian(zero, y, zero, zero, 0.5) == doctest::Approx(0.5 * 2.0 * kTwoPi));
  // A constant p = 1/2 adds -∫pz² = -(1/2)∫z², cancelling α∫z_x² at α = 1/2.
  SpectralField p(grid);
  p.set(0, 0.5);
  CHECK(modified_hamiltonian(zero, y, p, zero, 0.5) ==
        doctest::Approx(0.5 * 2.0 * kTwoPi - 0.5 * 2.0 * kTwoPi));
}
