#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mb/dynamics.hpp"
#include "mb/experiments.hpp"
#include "oracles.hpp"

using namespace mb;

namespace {

constexpr double kPi = std::numbers::pi;

SimParams params_for(const char* alpha, int n, double dt, double t_end) {
  SimParams p;
  p.alpha_class = classify_alpha(Coupling::parse(alpha));
  p.grid = GridSpec::dealiased(n);
  p.dt = dt;
  p.t_end = t_end;
  return p;
}

SpectralField mode(GridSpec grid, int k, Complex c = 1.0) {
  SpectralField f(grid);
  f.set(k, c);
  return f;
}

double pair_distance(const MBState& a, const MBState& b) {
  return sobolev_norm(a.u - b.u, 0.0) + sobolev_norm(a.v - b.v, 0.0);
}

}  // namespace

TEST_CASE("default time step") {
  CHECK(default_time_step(64) == 1e-3);
  CHECK(default_time_step(1024) == doctest::Approx(0.5 / 1024));
}

TEST_CASE("parameter validation") {
  auto p = params_for("1/2", 8, 1e-3, 1.0);
  CHECK_NOTHROW(p.validate());
  p.dt = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params_for("1/2", 8, 1e-3, 1.0);
  p.gamma = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params_for("1/2", 8, 1e-3, 1.0);
  p.f = mode(p.grid, 0, 1.0);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params_for("1/2", 8, 1e-3, 1.0);
  p.grid = GridSpec(8, 20);
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("rhs_nonlinear examples and oracle") {
  auto p = params_for("1/2", 8, 1e-3, 0.0);
  MBState s{SpectralField(p.grid), mode(p.grid, 1), 0.0};
  auto rhs = rhs_nonlinear(s, p);
  CHECK(std::abs(rhs.du[2] - Complex(0.0, -1.0)) < 1e-14);
  CHECK(std::abs(rhs.du[0]) == 0.0);
  CHECK(oracle::max_abs(rhs.dv) == 0.0);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    s.u = oracle::gaussian_field(p.grid, rng, true);
    s.v = oracle::gaussian_field(p.grid, rng, false);
    rhs = rhs_nonlinear(s, p);
    const auto vv = oracle::convolution(s.v, s.v);
    const auto uv = oracle::convolution(s.u, s.v);
    for (int k = -8; k <= 8; ++k) {
      CHECK(std::abs(rhs.du[k] - Complex(0.0, -0.5 * k) * vv[k + 8]) < 1e-12);
      CHECK(std::abs(rhs.dv[k] - Complex(0.0, -1.0 * k) * uv[k + 8]) < 1e-12);
    }
  }
}

TEST_CASE("linear flow") {
  const GridSpec grid = GridSpec::dealiased(4);
  CHECK(std::abs(linear_flow(mode(grid, 1), 1.0, 0.0, kPi)[1] - Complex(-1.0)) < 1e-15);
  CHECK(oracle::max_abs(linear_flow(mode(grid, 3), 1.0, 0.5, 200.0)) < 1e-40);
  const double a = 0.5;
  const auto w = linear_flow(mode(grid, 2), a, 0.1, 0.3);
  CHECK(std::arg(w[2]) == doctest::Approx(8 * a * 0.3).epsilon(1e-14));
  CHECK(std::abs(w[2]) == doctest::Approx(std::exp(-0.03)).epsilon(1e-14));
}

TEST_CASE("integrator without nonlinearity reproduces the multiplier flow") {
  for (double damping : {0.0, 0.7}) {
    auto p = params_for("1/2", 16, 1e-3, 1.0);
    p.nonlinear = false;
    p.gamma = damping;
    p.delta = 2 * damping;
    const auto [u0, v0] = random_initial_data(p.grid, 1.0, 4);
    const auto one = step_ifrk4({u0, v0, 0.0}, p);
    CHECK(oracle::max_diff(one.u, linear_flow(u0, 1.0, p.gamma, p.dt)) < 1e-13);
    CHECK(oracle::max_diff(one.v, linear_flow(v0, 0.5, p.delta, p.dt)) < 1e-13);
    const auto rec = evolve(p, u0, v0);
    CHECK(oracle::max_diff(rec.final_state.u, linear_flow(u0, 1.0, p.gamma, 1.0)) < 1e-10);
    CHECK(oracle::max_diff(rec.final_state.v, linear_flow(v0, 0.5, p.delta, 1.0)) < 1e-10);
  }
}

TEST_CASE("zero data stays zero") {
  auto p = params_for("1/3", 16, 1e-3, 0.5);
  p.gamma = p.delta = 1.0;
  const auto rec = evolve(p, SpectralField(p.grid), SpectralField(p.grid), {.diagnostic_stride = 50});
  CHECK(oracle::max_abs(rec.final_state.u) == 0.0);
  CHECK(oracle::max_abs(rec.final_state.v) == 0.0);
  for (const auto& row : rec.diagnostics) CHECK(row.e.e3 == 0.0);
}

TEST_CASE("evolve bookkeeping") {
  auto p = params_for("1/2", 8, 1e-2, 0.0);
  const auto [u0, v0] = random_initial_data(p.grid, 1.0, 1);
  auto rec = evolve(p, u0, v0);
  CHECK(rec.diagnostics.size() == 1);
  CHECK(rec.steps == 0);
  CHECK(oracle::max_diff(rec.final_state.u, u0) == 0.0);

  p.t_end = 1.0;
  rec = evolve(p, u0, v0, {.diagnostic_stride = 10, .snapshot_stride = 25});
  CHECK(rec.steps == 100);
  CHECK(rec.diagnostics.size() == 11);
  CHECK(rec.snapshots.size() == 5);
  CHECK(rec.snapshots[2].t == doctest::Approx(0.5));
  CHECK(rec.final_state.t == doctest::Approx(1.0));

  std::size_t calls = 0;
  EvolveOptions o;
  o.observer_stride = 20;
  o.observers.push_back([&](const MBState&, std::size_t n) { CHECK(n % 20 == 0); ++calls; });
  evolve(p, u0, v0, o);
  CHECK(calls == 6);

  // Deterministic.
  const auto again = evolve(p, u0, v0, {.diagnostic_stride = 10, .snapshot_stride = 25});
  CHECK(oracle::max_diff(again.final_state.v, rec.final_state.v) == 0.0);
}

TEST_CASE("blow-up is reported with the last good state") {
  auto p = params_for("1/2", 16, 1e-3, 1.0);
  p.blow_up_threshold = 2.0;
  auto [u0, v0] = random_initial_data(p.grid, 1.0, 3);
  u0 *= 1.5;
  SpectralField f(p.grid);
  f.set(1, 100.0);
  p.f = f;
  try {
    evolve(p, u0, v0);
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.last_good().t < 1.0);
    CHECK(std::string(e.what()).find("blow-up") != std::string::npos);
  }
}

TEST_CASE("conserved quantities by hand") {
  const GridSpec grid = GridSpec::dealiased(8);
  auto q = conserved_quantities({mode(grid, 1), SpectralField(grid), 0.0}, 0.5);
  CHECK(q.e3 == doctest::Approx(4 * kPi).epsilon(1e-14));
  CHECK(q.e4 == doctest::Approx(4 * kPi).epsilon(1e-14));
  q = conserved_quantities({SpectralField(grid), mode(grid, 1), 0.0}, 0.3);
  CHECK(q.e4 == doctest::Approx(4 * kPi * 0.3).epsilon(1e-14));
  q = conserved_quantities({SpectralField(grid), SpectralField(grid), 0.0}, 0.3);
  CHECK(q.e1 == 0.0);
  CHECK(q.e2 == 0.0);
  CHECK(q.e3 == 0.0);
  CHECK(q.e4 == 0.0);
  SpectralField v(grid);
  v.set(0, 0.75);
  CHECK(conserved_quantities({SpectralField(grid), v, 0.0}, 0.5).e2 == doctest::Approx(1.5 * kPi));
}

TEST_CASE("cubic integral is exact for band-limited fields") {
  std::mt19937_64 rng(23);
  for (int n : {4, 8, 13}) {
    const GridSpec grid = GridSpec::dealiased(n);
    const auto a = oracle::gaussian_field(grid, rng, false);
    const auto b = oracle::gaussian_field(grid, rng, false);
    const auto c = oracle::gaussian_field(grid, rng, false);
    // (1/2π)∫abc = Σ_k (a*b)_k c_{-k}; the convolution is taken untruncated.
    Complex s{};
    for (int k1 = -n; k1 <= n; ++k1) {
      for (int k2 = -n; k2 <= n; ++k2) s += a[k1] * b[k2] * c[-k1 - k2];
    }
    CHECK(cubic_integral(a, b, c) == doctest::Approx(2 * kPi * s.real()).epsilon(1e-12));
  }
}

TEST_CASE("E3 via Parseval and structural invariants along a run") {
  // dt = 1e-4: at 1e-3 the phase k³dt at k = 32 is about 33 and drift is pre-asymptotic.
  auto p = params_for("1/2", 32, 1e-4, 1.0);
  const auto [u0, v0] = random_initial_data(p.grid, 2.0, 6);
  const auto rec = evolve(p, u0, v0, {.diagnostic_stride = 1000, .snapshot_stride = 2500});
  for (const auto& s : rec.snapshots) {
    CHECK(s.u.mean() == 0.0);
    CHECK(oracle::hermitian_defect(s.u.coefficients()) <= 1e-10);
    CHECK(oracle::hermitian_defect(s.v.coefficients()) <= 1e-10);
    const auto q = conserved_quantities(s, p.alpha());
    double parseval = 0.0;
    for (int k = -32; k <= 32; ++k) parseval += std::norm(s.u[k]) + std::norm(s.v[k]);
    CHECK(q.e3 == doctest::Approx(2 * kPi * parseval).epsilon(1e-14));
    CHECK(q.e2 == doctest::Approx(2 * kPi * v0.mean()).epsilon(1e-12));
  }
  const auto& first = rec.diagnostics.front().e;
  for (const auto& row : rec.diagnostics) {
    CHECK(std::abs(row.e.e3 / first.e3 - 1.0) < 1e-8);
    CHECK(std::abs(row.e.e4 - first.e4) / (std::abs(first.e4) + 1.0) < 1e-5);
    CHECK(row.norms_u.size() == 2);
  }
}

TEST_CASE("fourth-order convergence on a smooth trajectory") {
  auto p = params_for("1/2", 16, 2.5e-5, 0.5);
  const auto [u0, v0] = random_initial_data(p.grid, 3.0, 2);
  const auto ref = evolve(p, u0, v0).final_state;
  std::vector<double> err;
  for (double dt : {2e-4, 1e-4}) {
    p.dt = dt;
    err.push_back(pair_distance(evolve(p, u0, v0).final_state, ref));
  }
  const double ratio = err[0] / err[1];
  MESSAGE("error ratio dt -> dt/2: " << ratio);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("damped energy balance") {
  auto p = params_for("1/2", 32, 1e-3, 2.0);
  p.gamma = p.delta = 0.5;
  const auto [u0, v0] = random_initial_data(p.grid, 2.0, 3);
  auto rec = evolve(p, u0, v0, {.diagnostic_stride = 10});
  const double e0 = rec.diagnostics.front().e.e3;
  for (const auto& row : rec.diagnostics) {
    CHECK(std::abs(row.e.e3 - std::exp(-2 * 0.5 * row.t) * e0) / e0 < 1e-6);
  }

  // Undamped, unforced: the residual is just dE3/dt.
  auto c = params_for("1/2", 32, 1e-4, 0.5);
  const auto cons = damped_energy_residual(evolve(c, u0, v0, {.diagnostic_stride = 100}), c);
  for (double r : cons.residual) CHECK(std::abs(r) < 1e-8);

  const std::vector<ForcingMode> fm{{1, {0.5, 0}}, {2, {0, 0.3}}}, gm{{1, {0, 0.4}}, {3, {0.2, 0}}};
  p.f = forcing_field(p.grid, fm);
  p.g = forcing_field(p.grid, gm);
  p.delta = 0.3;
  std::vector<double> worst;
  for (std::size_t stride : {40, 20, 10}) {
    const auto res = damped_energy_residual(evolve(p, u0, v0, {.diagnostic_stride = stride}), p);
    double m = 0.0;
    for (double r : res.residual) m = std::max(m, std::abs(r));
    worst.push_back(m);
  }
  CHECK(worst[0] / worst[1] > 3.5);
  CHECK(worst[1] / worst[2] > 3.5);

  rec = evolve(p, u0, v0, {.diagnostic_stride = 200});
  CHECK(damped_energy_residual(rec, p).warning.has_value());
  rec = evolve(p, u0, v0);
  CHECK(damped_energy_residual(rec, p).residual.empty());
}
