// mbsim: command-line front end for the solver and experiments.
//
//   mbsim <command> [--config FILE] [--out DIR] [--seed N] [--override key=value]...
//
// Every command writes manifest.json (before any series), CSV series and
// report.json into the output directory and prints a short summary.
// Exit status: 0 success, 1 failed check, 2 blow-up, 3 configuration error.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mb/config.hpp"
#include "mb/dynamics.hpp"
#include "mb/experiments.hpp"
#include "mb/normal_form.hpp"
#include "mb/run_io.hpp"

namespace {

using namespace mb;

struct CommonArgs {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

struct Outcome {
  int status = 0;
  std::string state = "complete";
  Json report;
  std::vector<std::pair<std::string, std::string>> summary;
};

RunConfig load_config(const CommonArgs& args, bool quadratic) {
  RunConfig config;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("--config: cannot read " + args.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    config = parse_config(buf.str());
  }
  for (const auto& o : args.overrides) apply_override(config, o);
  if (args.seed) config.seed = *args.seed;
  if (!args.out.empty()) config.output_dir = args.out;
  config.validate(quadratic);
  return config;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : "undefined"; }

std::vector<std::string> norm_columns(const std::string& prefix, const std::vector<double>& indices) {
  std::vector<std::string> out;
  for (double s : indices) out.push_back(prefix + format_double(s));
  return out;
}

// ---------------------------------------------------------------------------

Outcome classify_command(const RunConfig& config, const RunWriter&) {
  const auto cls = classify_alpha(config.coupling(), config.classify_options());
  Outcome o;
  o.report = to_json(cls);
  std::cout << o.report.dump(2) << '\n';
  return o;
}

Outcome simulate_command(const RunConfig& config, const RunWriter& out) {
  const SimParams params = make_sim_params(config);
  auto [u0, v0] = make_initial_data(config, config.seed);
  const auto steps = static_cast<std::size_t>(std::llround(params.t_end / params.dt));
  const std::size_t diag = config.diagnostic_stride > 0
                               ? config.diagnostic_stride
                               : std::max<std::size_t>(1, steps / 100);

  RunRecord record;
  record.diagnostic_interval = static_cast<double>(diag) * params.dt;
  std::vector<MBState> snapshots;
  EvolveOptions options;
  options.observer_stride = 1;
  options.observers.push_back([&](const MBState& state, std::size_t step) {
    if (step % diag == 0 || step == steps) {
      record.diagnostics.push_back(diagnose(state, params, config.sobolev_indices));
    }
    if (config.snapshot_stride > 0 && step % config.snapshot_stride == 0) snapshots.push_back(state);
  });

  Outcome o;
  std::optional<MBState> final_state;
  try {
    final_state = evolve(params, u0, v0, options).final_state;
  } catch (const BlowUpError& e) {
    o.status = 2;
    o.state = "blow_up";
    o.report["blow_up"] = {{"message", e.what()}, {"last_good_t", e.last_good().t}};
    final_state = e.last_good();
  }

  std::vector<std::string> cols{"t", "E1", "E2", "E3", "E4", "l2sq_u", "l2sq_v", "forcing_work"};
  for (auto& c : norm_columns("Hs_u_", config.sobolev_indices)) cols.push_back(c);
  for (auto& c : norm_columns("Hs_v_", config.sobolev_indices)) cols.push_back(c);
  std::vector<std::vector<double>> rows;
  for (const auto& r : record.diagnostics) {
    std::vector<double> row{r.t, r.e.e1, r.e.e2, r.e.e3, r.e.e4, r.l2sq_u, r.l2sq_v, r.forcing_work};
    row.insert(row.end(), r.norms_u.begin(), r.norms_u.end());
    row.insert(row.end(), r.norms_v.begin(), r.norms_v.end());
    rows.push_back(std::move(row));
  }
  out.write_csv("diagnostics.csv", cols, rows);

  std::vector<std::vector<double>> spec;
  for (const auto& s : snapshots) {
    for (int k = 0; k <= s.u.max_mode(); ++k) {
      spec.push_back({s.t, double(k), s.u[k].real(), s.u[k].imag(), s.v[k].real(), s.v[k].imag()});
    }
  }
  if (!snapshots.empty()) {
    out.write_csv("snapshots.csv", {"t", "k", "u_re", "u_im", "v_re", "v_im"}, spec);
  }
  std::vector<std::vector<double>> fin;
  for (int k = 0; k <= final_state->u.max_mode(); ++k) {
    fin.push_back({double(k), final_state->u[k].real(), final_state->u[k].imag(),
                   final_state->v[k].real(), final_state->v[k].imag()});
  }
  out.write_csv("final_state.csv", {"k", "u_re", "u_im", "v_re", "v_im"}, fin);

  if ((params.damped() || params.forced()) && record.diagnostics.size() >= 3) {
    try {
      const auto res = damped_energy_residual(record, params);
      std::vector<std::vector<double>> rr;
      double worst = 0.0;
      for (std::size_t i = 0; i < res.t.size(); ++i) {
        rr.push_back({res.t[i], res.residual[i]});
        worst = std::max(worst, std::abs(res.residual[i]));
      }
      out.write_csv("energy_residual.csv", {"t", "residual"}, rr);
      o.report["energy_residual_max"] = worst;
      if (res.warning) o.report["energy_residual_warning"] = *res.warning;
      o.summary.push_back({"max |E3 balance residual|", fmt(worst)});
    } catch (const ConfigError& e) {
      o.report["energy_residual_warning"] = e.what();
    }
  }

  const auto& first = record.diagnostics.front();
  const auto& last = record.diagnostics.back();
  o.report["steps"] = steps;
  o.report["final_t"] = last.t;
  o.report["E3"] = {first.e.e3, last.e.e3};
  o.report["E4"] = {first.e.e4, last.e.e4};
  o.summary.push_back({"final t", fmt(last.t)});
  o.summary.push_back({"E3 start/end", fmt(first.e.e3) + " / " + fmt(last.e.e3)});
  o.summary.push_back({"E4 start/end", fmt(first.e.e4) + " / " + fmt(last.e.e4)});
  return o;
}

Outcome identities_command(const RunConfig& config, const RunWriter& out) {
  const SimParams params = make_sim_params(config);
  auto strides = config.identity_strides;
  std::sort(strides.begin(), strides.end(), std::greater<>());
  const std::size_t finest = strides.back();
  for (auto s : strides) {
    if (s % finest != 0) throw ConfigError("identity_strides: each stride must be a multiple of the finest");
  }
  auto [u0, v0] = make_initial_data(config, config.seed);
  EvolveOptions options;
  options.snapshot_stride = finest;
  const RunRecord record = evolve(params, u0, v0, options);

  Outcome o;
  Json rows = Json::array();
  std::vector<double> hs, maxima;
  for (auto stride : strides) {
    std::vector<MBState> traj;
    for (std::size_t j = 0; j < record.snapshots.size(); j += stride / finest) traj.push_back(record.snapshots[j]);
    const auto res = identity_residual(traj, params, true);
    std::vector<std::vector<double>> series;
    for (std::size_t i = 0; i < res.t.size(); ++i) series.push_back({res.t[i], res.res_u[i], res.res_v[i]});
    out.write_csv("identity_stride" + std::to_string(stride) + ".csv", {"t", "res_u", "res_v"}, series);
    Json row = to_json(res);
    row["stride_steps"] = stride;
    row["stride"] = static_cast<double>(stride) * params.dt;
    const double worst = std::max(res.max_u, res.max_v);
    if (config.include_rho && params.alpha_class.is_special()) {
      const auto bare = identity_residual(traj, params, false);
      row["without_rho_max"] = std::max(bare.max_u, bare.max_v);
    }
    hs.push_back(static_cast<double>(stride) * params.dt);
    maxima.push_back(worst);
    rows.push_back(row);
    o.summary.push_back({"stride " + fmt(hs.back()) + " max residual", fmt(worst)});
  }
  Json orders = Json::array();
  for (std::size_t i = 1; i < hs.size(); ++i) {
    orders.push_back(std::log(maxima[i - 1] / maxima[i]) / std::log(hs[i - 1] / hs[i]));
  }
  std::vector<double> lh, lr;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    lh.push_back(std::log(hs[i]));
    lr.push_back(std::log(maxima[i]));
  }
  const auto fit = fit_line(lh, lr);
  o.report["strides"] = rows;
  o.report["observed_orders"] = orders;
  o.report["fitted_order"] = fit ? Json(fit->slope) : Json(nullptr);
  o.summary.push_back({"fitted order", fit ? fmt(fit->slope) : "undefined"});
  return o;
}

SmoothingConfig smoothing_config(const RunConfig& config) {
  SmoothingConfig c;
  c.alpha_class = classify_alpha(config.coupling(), config.classify_options());
  c.s = config.s;
  c.s1_grid = config.s1_grid;
  c.max_mode = config.max_mode;
  if (config.dt > 0.0) c.dt = config.dt;
  c.t_end = config.t_end;
  c.sample_start = config.sample_start;
  c.sample_interval = config.sample_interval;
  c.seeds = config.seeds;
  c.nonlinear = config.nonlinear;
  c.subtract_rho = config.subtract_rho;
  c.rho_stride = config.rho_stride;
  c.window_low = config.slope_window_low;
  c.window_high = config.slope_window_high;
  c.min_r_squared = config.slope_min_r2;
  c.random_excess = config.random_excess;
  return c;
}

Outcome smoothing_command(const RunConfig& config, const RunWriter& out) {
  const auto report = smoothing_experiment(smoothing_config(config));
  for (const auto& r : report.seeds) {
    std::vector<std::string> cols{"t", "solution_norm"};
    for (auto& c : norm_columns("residual_H", config.s1_grid)) cols.push_back(c);
    cols.push_back("solution_slope");
    cols.push_back("residual_slope");
    std::vector<std::vector<double>> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < r.t.size(); ++i) {
      std::vector<double> row{r.t[i], r.solution_norm[i]};
      for (const auto& s : r.residual_norm) row.push_back(s[i]);
      row.push_back(r.solution_fit_t[i] ? r.solution_fit_t[i]->slope : nan);
      row.push_back(r.residual_fit_t[i] ? r.residual_fit_t[i]->slope : nan);
      rows.push_back(std::move(row));
    }
    out.write_csv("smoothing_seed" + std::to_string(r.seed) + ".csv", cols, rows);
  }
  Outcome o;
  o.report = to_json(report);
  o.summary.push_back({"median slope gap", fmt(report.median_slope_gap)});
  o.summary.push_back({"median solution slope", fmt(report.median_solution_slope)});
  o.summary.push_back({"median residual slope", fmt(report.median_residual_slope)});
  o.summary.push_back({"seeds with defined gap", std::to_string(report.gaps_defined)});
  return o;
}

Outcome growth_command(const RunConfig& config, const RunWriter& out) {
  GrowthConfig c;
  c.alpha_class = classify_alpha(config.coupling(), config.classify_options());
  c.s = config.s;
  c.max_mode = config.max_mode;
  c.dt = config.dt;
  c.t_end = config.t_end;
  c.sample_interval = config.sample_interval;
  c.seed = config.seed;
  c.nonlinear = config.nonlinear;
  c.random_excess = config.random_excess;
  const auto report = growth_tracking(c);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < report.t.size(); ++i) {
    rows.push_back({report.t[i], report.norm[i], report.e3[i], report.e4[i]});
  }
  out.write_csv("growth.csv", {"t", "norm", "E3", "E4"}, rows);
  Outcome o;
  o.report = to_json(report);
  o.summary.push_back({"polynomial exponent",
                       report.polynomial_fit ? fmt(report.polynomial_fit->slope) : "undefined"});
  o.summary.push_back({"exponential rate",
                       report.exponential_fit ? fmt(report.exponential_fit->slope) : "undefined"});
  o.summary.push_back({"sup norm / initial", fmt(report.max_over_initial)});
  o.summary.push_back({"E3 / E4 drift", fmt(report.e3_drift) + " / " + fmt(report.e4_drift)});
  if (report.e4_drift > 1e-2) {
    std::cerr << "warning: E4 drift " << fmt(report.e4_drift)
              << " exceeds 1e-2; growth is dominated by time-stepping error, reduce dt\n";
  }
  return o;
}

StationaryPair solve_stationary(const RunConfig& config, const SimParams& params) {
  const SpectralField zero(params.grid);
  return stationary_solve(params.f.value_or(zero), params.g.value_or(zero), params.gamma,
                          params.delta, params.alpha(), {config.stationary_tol, config.max_iter});
}

void write_pair(const RunWriter& out, const StationaryPair& pair) {
  std::vector<std::vector<double>> rows;
  for (int k = 0; k <= pair.p.max_mode(); ++k) {
    rows.push_back({double(k), pair.p[k].real(), pair.p[k].imag(), pair.q[k].real(), pair.q[k].imag()});
  }
  out.write_csv("stationary_pair.csv", {"k", "p_re", "p_im", "q_re", "q_im"}, rows);
}

Outcome stationary_command(const RunConfig& config, const RunWriter& out) {
  const SimParams params = make_sim_params(config);
  const auto pair = solve_stationary(config, params);
  write_pair(out, pair);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < pair.differences.size(); ++i) {
    rows.push_back({double(i + 1), pair.differences[i], pair.iterate_norms[i + 1]});
  }
  out.write_csv("picard.csv", {"iteration", "difference_h2", "iterate_h2"}, rows);
  Outcome o;
  o.report = to_json(pair);
  if (!pair.converged) {
    o.status = 1;
    o.state = "failed";
    o.report["divergence"] = "max_iter reached without meeting stationary_tol";
  }
  o.summary.push_back({"converged", pair.converged ? "yes" : "no"});
  o.summary.push_back({"iterations", std::to_string(pair.iterations)});
  o.summary.push_back({"residual", fmt(pair.residual)});
  o.summary.push_back({"f margin / g margin", fmt(pair.margins.f_ratio) + " / " + fmt(pair.margins.g_ratio)});
  return o;
}

Outcome attractor_command(const RunConfig& config, const RunWriter& out, const std::string& mode) {
  const SimParams params = make_sim_params(config);
  Outcome o;
  if (mode == "absorbing") {
    AbsorbingConfig c;
    c.params = params;
    c.s = config.s;
    c.norm_min = config.norm_min;
    c.norm_max = config.norm_max;
    c.seeds = config.seeds;
    c.double_horizon = config.double_horizon;
    c.random_excess = config.random_excess;
    const auto report = absorbing_set_experiment(c);
    for (const auto& t : report.trajectories) {
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < t.t.size(); ++i) rows.push_back({t.t[i], t.h1[i]});
      out.write_csv("absorbing_seed" + std::to_string(t.seed) + ".csv", {"t", "h1"}, rows);
    }
    o.report = to_json(report);
    o.summary.push_back({"late bound min / max", fmt(report.bound_min) + " / " + fmt(report.bound_max)});
    o.summary.push_back({"spread", fmt(report.spread)});
    o.summary.push_back({"horizon change", fmt(report.horizon_change)});
    o.summary.push_back({"large data enters ball", report.large_data_enters_ball ? "yes" : "no"});
    return o;
  }
  const auto pair = solve_stationary(config, params);
  write_pair(out, pair);
  if (!pair.converged) {
    o.status = 1;
    o.state = "failed";
    o.report["stationary"] = to_json(pair);
    o.summary.push_back({"stationary solve", "did not converge"});
    return o;
  }
  AttractorConfig c;
  c.params = params;
  c.s = config.s;
  c.data_norm = config.data_norm > 0.0 ? config.data_norm : 1.0;
  c.seeds = config.seeds;
  c.transient = config.transient;
  c.e3_floor = config.e3_floor;
  c.distance_tol = config.distance_tol;
  c.random_excess = config.random_excess;
  const auto report = trivial_attractor_experiment(c, pair);
  for (const auto& t : report.trajectories) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < t.t.size(); ++i) {
      rows.push_back({t.t[i], t.distance[i], t.e3[i], t.h4[i], t.h4_envelope[i]});
    }
    out.write_csv("attractor_seed" + std::to_string(t.seed) + ".csv",
                  {"t", "distance_h1", "E3", "H4", "H4_envelope"}, rows);
  }
  o.report = to_json(report);
  o.report["fixed_point_drift"] = fixed_point_drift(params, pair);
  if (!report.all_converged) {
    o.status = 1;
    o.state = "failed";
  }
  o.summary.push_back({"max final H1 distance", fmt(report.max_final_distance)});
  o.summary.push_back({"min E3 decay rate", fmt(report.min_rate)});
  o.summary.push_back({"rate bound -2γ + C(|p|+|q|)", fmt(report.rate_bound)});
  o.summary.push_back({"fixed-point drift", fmt(o.report["fixed_point_drift"].get<double>())});
  return o;
}

int run(const std::string& command, const CommonArgs& args,
        const std::function<Outcome(const RunConfig&, const RunWriter&)>& body) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig config;
  try {
    config = load_config(args, command != "classify-alpha");
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 3;
  }
  const RunWriter out(config.output_dir);
  Json manifest = make_manifest(config, command);
  out.write_json("manifest.json", manifest);
  Outcome outcome;
  try {
    outcome = body(config, out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    outcome.status = 3;
    outcome.state = "failed";
    outcome.report["error"] = e.what();
  } catch (const BlowUpError& e) {
    std::cerr << "blow-up: " << e.what() << '\n';
    outcome.status = 2;
    outcome.state = "blow_up";
    outcome.report["error"] = e.what();
  }
  out.write_json("report.json", outcome.report);
  manifest["status"] = outcome.state;
  manifest["partial"] = outcome.state != "complete";
  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.write_json("manifest.json", manifest);

  if (command != "classify-alpha") {
    std::size_t width = 0;
    for (const auto& [k, v] : outcome.summary) width = std::max(width, k.size());
    std::printf("%s [%s] -> %s\n", command.c_str(), outcome.state.c_str(), config.output_dir.c_str());
    for (const auto& [k, v] : outcome.summary) {
      std::printf("  %-*s  %s\n", static_cast<int>(width), k.c_str(), v.c_str());
    }
  }
  return outcome.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled KdV pseudospectral simulation lab"};
  app.require_subcommand(1);
  CommonArgs args;
  std::string mode = "trivial";
  std::string alpha_arg;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "key = value configuration file");
    sub->add_option("--out", args.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", args.seed, "seed for single-trajectory commands");
    sub->add_option("--override", args.overrides, "key=value, repeatable");
  };
  auto* classify = app.add_subcommand("classify-alpha", "arithmetic classification of alpha");
  classify->add_option("alpha", alpha_arg, "coupling, e.g. 1/7 or 0.3819660112501051");
  auto* simulate = app.add_subcommand("simulate", "evolve one trajectory");
  auto* identities = app.add_subcommand("check-identities", "integrated normal-form identities");
  auto* smoothing = app.add_subcommand("smoothing", "nonlinear smoothing slope gap");
  auto* attractor = app.add_subcommand("attractor", "forced-damped long-time behaviour");
  attractor->add_option("mode", mode, "trivial | absorbing")->check(CLI::IsMember({"trivial", "absorbing"}));
  auto* stationary = app.add_subcommand("stationary", "stationary forced solution by Picard iteration");
  auto* growth = app.add_subcommand("growth", "Sobolev norm growth");
  for (auto* sub : {classify, simulate, identities, smoothing, attractor, stationary, growth}) common(sub);

  CLI11_PARSE(app, argc, argv);
  if (!alpha_arg.empty()) args.overrides.push_back("alpha=" + alpha_arg);

  if (*classify) return run("classify-alpha", args, classify_command);
  if (*simulate) return run("simulate", args, simulate_command);
  if (*identities) return run("check-identities", args, identities_command);
  if (*smoothing) return run("smoothing", args, smoothing_command);
  if (*stationary) return run("stationary", args, stationary_command);
  if (*growth) return run("growth", args, growth_command);
  return run("attractor", args, [&](const RunConfig& c, const RunWriter& w) {
    return attractor_command(c, w, mode);
  });
}
