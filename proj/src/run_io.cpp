#include "mb/run_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mb {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json optional_number(const std::optional<double>& x) { return x ? number(*x) : Json(nullptr); }

Json series(const std::vector<double>& xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

Json rational(const std::optional<Rational>& r) {
  return r ? Json(r->to_string()) : Json(nullptr);
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

RunWriter::RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void RunWriter::write_json(const std::string& name, const Json& value) const {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
  out << value.dump(2) << '\n';
}

void RunWriter::write_csv(const std::string& name, const std::vector<std::string>& columns,
                          const std::vector<std::vector<double>>& rows) const {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) {
      throw std::logic_error(name + ": row width " + std::to_string(row.size()) + " != " +
                             std::to_string(columns.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

Json make_manifest(const RunConfig& config, std::string_view command) {
  Json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["status"] = "incomplete";
  m["config"] = config_echo(config);
  m["embedding_constant"] = measure_embedding_constant(config.max_mode);
  const auto cls = classify_alpha(config.coupling(), config.classify_options());
  m["alpha"] = config.coupling().to_string();
  m["min_divisor"] = number(NormalFormOps(cls, config.grid()).min_divisor());
  return m;
}

Json to_json(const TypeIndex& nu) {
  return nu.infinite ? Json("infinite") : number(nu.value);
}

Json to_json(const AlphaClassification& cls) {
  Json j;
  j["alpha"] = cls.alpha.to_string();
  j["value"] = cls.value();
  j["kind"] = to_string(cls.kind);
  j["roots"] = {{"c1", cls.roots.c1}, {"c2", cls.roots.c2}, {"d1", cls.roots.d1}, {"d2", cls.roots.d2}};
  if (cls.p) j["witness"] = {{"p", *cls.p}, {"q", *cls.q}};
  if (cls.is_special()) {
    j["exact_roots"] = {{"c1", rational(cls.c1_exact)}, {"c2", rational(cls.c2_exact)},
                        {"d1", rational(cls.d1_exact)}, {"d2", rational(cls.d2_exact)}};
  }
  j["nu"] = {{"c1", to_json(cls.nu_c1)}, {"c2", to_json(cls.nu_c2)}, {"d1", to_json(cls.nu_d1)},
             {"d2", to_json(cls.nu_d2)}, {"c", to_json(cls.nu_c())}, {"d", to_json(cls.nu_d())}};
  if (cls.nearest_special) {
    const auto& n = *cls.nearest_special;
    j["nearest_special"] = {{"p", n.p}, {"q", n.q}, {"value", n.value}, {"distance", n.distance}};
  }
  return j;
}

Json to_json(const std::optional<LineFit>& fit) {
  if (!fit) return nullptr;
  return {{"slope", number(fit->slope)}, {"intercept", number(fit->intercept)},
          {"r_squared", number(fit->r_squared)}, {"points", fit->points}};
}

Json to_json(const SmoothingReport& report) {
  const auto& c = report.config;
  Json j;
  j["alpha_class"] = to_json(c.alpha_class);
  j["s"] = c.s;
  j["s1_grid"] = series(c.s1_grid);
  j["N"] = c.max_mode;
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["nonlinear"] = c.nonlinear;
  j["subtract_rho"] = c.subtract_rho;
  j["fit_window"] = {c.window_low, c.window_high};
  j["min_r_squared_gate"] = c.min_r_squared;
  j["slope_gap"] = optional_number(report.median_slope_gap);
  j["median_solution_slope"] = optional_number(report.median_solution_slope);
  j["median_residual_slope"] = optional_number(report.median_residual_slope);
  j["min_r_squared"] = number(report.min_r_squared);
  j["gaps_defined"] = report.gaps_defined;
  Json seeds = Json::array();
  for (const auto& r : report.seeds) {
    Json s;
    s["seed"] = r.seed;
    s["solution_fit"] = to_json(r.solution_fit);
    s["residual_fit"] = to_json(r.residual_fit);
    s["slope_gap"] = optional_number(r.slope_gap);
    s["annotation"] = r.annotation ? Json(*r.annotation) : Json(nullptr);
    seeds.push_back(s);
  }
  j["seeds"] = seeds;
  return j;
}

Json to_json(const GrowthReport& report) {
  Json j;
  j["alpha"] = report.config.alpha_class.alpha.to_string();
  j["s"] = report.config.s;
  j["N"] = report.config.max_mode;
  j["dt"] = report.config.dt;
  j["t_end"] = report.config.t_end;
  j["polynomial_exponent"] = report.polynomial_fit ? number(report.polynomial_fit->slope) : Json(nullptr);
  j["polynomial_fit"] = to_json(report.polynomial_fit);
  j["exponential_rate"] = report.exponential_fit ? number(report.exponential_fit->slope) : Json(nullptr);
  j["exponential_fit"] = to_json(report.exponential_fit);
  j["max_over_initial"] = number(report.max_over_initial);
  j["e3_drift"] = number(report.e3_drift);
  j["e4_drift"] = number(report.e4_drift);
  return j;
}

Json to_json(const AbsorbingReport& report) {
  Json j;
  j["t_end"] = report.t_end;
  j["bound_min"] = number(report.bound_min);
  j["bound_max"] = number(report.bound_max);
  j["spread"] = number(report.spread);
  j["bound_max_doubled"] = number(report.bound_max_doubled);
  j["horizon_change"] = number(report.horizon_change);
  j["max_trajectory_change"] = number(report.max_trajectory_change);
  j["ball_radius"] = number(report.ball_radius);
  j["large_data_enters_ball"] = report.large_data_enters_ball;
  Json traj = Json::array();
  for (const auto& t : report.trajectories) {
    traj.push_back({{"seed", t.seed},
                    {"initial_norm", t.initial_norm},
                    {"late_sup", number(t.late_sup)},
                    {"late_sup_doubled", number(t.late_sup_doubled)},
                    {"annotation", t.annotation ? Json(*t.annotation) : Json(nullptr)}});
  }
  j["trajectories"] = traj;
  return j;
}

Json to_json(const StationaryPair& pair) {
  const auto& m = pair.margins;
  Json j;
  j["converged"] = pair.converged;
  j["iterations"] = pair.iterations;
  j["residual"] = number(pair.residual);
  j["p_h2"] = number(sobolev_norm(pair.p, 2.0));
  j["q_h2"] = number(sobolev_norm(pair.q, 2.0));
  j["differences"] = series(pair.differences);
  j["iterate_norms"] = series(pair.iterate_norms);
  j["contraction_margin"] = {{"gamma_eff", m.gamma_eff},
                             {"f_ratio", number(m.f_ratio)},
                             {"g_ratio", number(m.g_ratio)},
                             {"embedding_constant", m.embedding_constant},
                             {"f_limit", number(m.f_limit)},
                             {"g_limit", number(m.g_limit)},
                             {"f_condition", m.f_condition},
                             {"g_condition", m.g_condition}};
  return j;
}

Json to_json(const AttractorReport& report) {
  Json j;
  j["stationary"] = to_json(report.stationary);
  j["embedding_constant"] = report.embedding_constant;
  j["rate_bound"] = number(report.rate_bound);
  j["min_rate"] = number(report.min_rate);
  j["max_final_distance"] = number(report.max_final_distance);
  j["all_converged"] = report.all_converged;
  j["all_monotone"] = report.all_monotone;
  Json traj = Json::array();
  for (const auto& t : report.trajectories) {
    traj.push_back({{"seed", t.seed},
                    {"e3_rate", number(t.e3_rate)},
                    {"e3_rate_fit", to_json(t.e3_rate_fit)},
                    {"e3_monotone", t.e3_monotone},
                    {"h4_excess", number(t.h4_excess)},
                    {"final_distance", t.distance.empty() ? Json(nullptr) : number(t.distance.back())},
                    {"converged", t.converged},
                    {"annotation", t.annotation ? Json(*t.annotation) : Json(nullptr)}});
  }
  j["trajectories"] = traj;
  return j;
}

Json to_json(const IdentityResidual& residual) {
  Json j;
  j["max_u"] = number(residual.max_u);
  j["max_v"] = number(residual.max_v);
  j["quadrature"] = to_string(residual.quadrature);
  j["annotation"] = residual.annotation ? Json(*residual.annotation) : Json(nullptr);
  return j;
}

}  // namespace mb
