#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mb/config.hpp"
#include "mb/run_io.hpp"

using namespace mb;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mb_cli_io_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("defaults") {
  const auto c = parse_config("");
  CHECK(c.alpha == "1/2");
  CHECK(c.max_mode == 64);
  CHECK(c.grid() == GridSpec(64, 192));
  CHECK(c.time_step() == 1e-3);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(c.type_index_K == kHurwitzConstant);
}

TEST_CASE("parsing values, comments and sections") {
  const auto c = parse_config(R"(# experiment
[grid]
N = 32
M = 100
dt = 2.5e-4
[physics]
alpha = "1/7"
gamma = 0.5
forcing_f = 1:0.2:0, 3:0:-0.1
seeds = 3..6
s1_grid = 1, 1.5
nonlinear = false
; trailing comment
)");
  CHECK(c.max_mode == 32);
  CHECK(c.phys_points == 100);
  CHECK(c.dt == 2.5e-4);
  CHECK(c.gamma == 0.5);
  REQUIRE(c.forcing_f.size() == 2);
  CHECK(c.forcing_f[1].k == 3);
  CHECK(c.forcing_f[1].amplitude == Complex(0.0, -0.1));
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4, 5, 6});
  CHECK(c.s1_grid == std::vector<double>{1.0, 1.5});
  CHECK_FALSE(c.nonlinear);
  const auto cls = classify_alpha(c.coupling());
  CHECK(c.coupling().is_exact());
  CHECK(*c.coupling().rational() == Rational{1, 7});
  CHECK(cls.kind == AlphaKind::special_rational);
  CHECK(*cls.p == 2);
  CHECK(*cls.q == 1);
}

TEST_CASE("errors name the field") {
  CHECK(error_of("N = 64\nM = 128\n").find("M:") == 0);
  CHECK(error_of("N = 64\nM = 128\n").find("3N") != std::string::npos);
  CHECK(error_of("bogus = 1").find("bogus: unknown key") == 0);
  CHECK(error_of("N = sixty").find("N: cannot parse") == 0);
  CHECK(error_of("N = 8\nN = 9").find("N: duplicate key on line 2") == 0);
  CHECK(error_of("dt = 1e-3\n\ngamma = -1").find("gamma:") == 0);
  CHECK(error_of("alpha = 3/2").find("alpha:") == 0);
  CHECK(error_of("alpha = one half").find("alpha:") == 0);
  CHECK(error_of("N = 8\nforcing_f = 9:1:0").find("forcing_f:") == 0);
  CHECK(error_of("forcing_g = 1:x:0").find("forcing_g:") == 0);
  CHECK(error_of("just words").find("line 1") != std::string::npos);
  CHECK(error_of("nonlinear = maybe").find("nonlinear:") == 0);
  CHECK(error_of("seeds = ").find("seeds:") == 0);
  CHECK(error_of("data = noise").find("data:") == 0);
  CHECK(error_of("t_end = nan").find("t_end:") == 0);
}

TEST_CASE("overrides and echo") {
  auto c = parse_config("alpha = 2/3\nN = 16");
  apply_override(c, "t_end=2.5");
  apply_override(c, " gamma = 1 ");
  CHECK(c.t_end == 2.5);
  CHECK(c.gamma == 1.0);
  CHECK_THROWS_AS(apply_override(c, "t_end"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "nope=1"), ConfigError);
  const auto echo = config_echo(c);
  CHECK(echo["alpha"] == "2/3");
  CHECK(echo["N"] == 16);
  CHECK(echo["M"] == 48);
  CHECK(echo["dt"] == 1e-3);
  CHECK(echo["t_end"] == 2.5);
  for (const char* key : {"s", "s1_grid", "gamma", "delta", "forcing_f", "seeds", "snapshot_stride",
                          "slope_window_low", "slope_min_r2", "random_excess", "q_max",
                          "type_index_K", "stationary_tol", "norm_max", "transient", "output_dir"}) {
    CHECK_MESSAGE(echo.contains(key), key);
  }
  // Echoed values parse back to the same configuration.
  std::string text;
  for (const auto& [k, v] : echo.items()) {
    if (v.is_string()) {
      text += k + " = " + v.get<std::string>() + "\n";
    } else if (v.is_array()) {
      std::string list;
      for (const auto& x : v) list += (list.empty() ? "" : ",") + x.dump();
      text += k + " = " + list + "\n";
    } else {
      text += k + " = " + v.dump() + "\n";
    }
  }
  CHECK(config_echo(parse_config(text)) == echo);
}

TEST_CASE("forcing and initial data from config") {
  auto c = parse_config("N = 16\nforcing_f = 2:0.5:0\nforcing_seed = 7\nforcing_modes = 3");
  auto [f, g] = make_forcing(c);
  REQUIRE(f);
  REQUIRE(g);
  CHECK(f->is_mean_zero());
  CHECK(std::abs((*f)[2]) > 0.4);
  CHECK(std::abs((*g)[3]) == doctest::Approx(0.1 / 10.0));
  CHECK(std::abs((*g)[4]) == 0.0);
  const auto [f2, g2] = make_forcing(c);
  CHECK((*f2)[1] == (*f)[1]);

  c = parse_config("N = 16");
  std::tie(f, g) = make_forcing(c);
  CHECK_FALSE(f);
  CHECK_FALSE(g);

  c = parse_config("N = 16\ndata = zero");
  auto [u, v] = make_initial_data(c, 1);
  CHECK(sobolev_norm(u, 0.0) == 0.0);
  c = parse_config("N = 16\ndata_norm = 2");
  std::tie(u, v) = make_initial_data(c, 1);
  CHECK(sobolev_norm(u, 1.0) + sobolev_norm(v, 1.0) == doctest::Approx(2.0));

  const auto params = make_sim_params(parse_config("alpha = 1/7\nN = 16\ngamma = 1\ndelta = 2\nt_end = 3"));
  CHECK(params.alpha_class.is_special());
  CHECK(params.delta == 2.0);
  CHECK(params.t_end == 3.0);
}

TEST_CASE("run writer") {
  const auto dir = scratch("writer");
  const RunWriter w(dir);
  w.write_csv("a.csv", {"t", "x"}, {{0.0, 0.1}, {1.0, 1.0 / 3.0}});
  CHECK(slurp(dir / "a.csv") == "t,x\n0,0.10000000000000001\n1,0.33333333333333331\n");
  CHECK_THROWS(w.write_csv("b.csv", {"t"}, {{1.0, 2.0}}));
  w.write_json("r.json", Json{{"x", 1}});
  CHECK(slurp(dir / "r.json") == "{\n  \"x\": 1\n}\n");
  CHECK(format_double(0.1) == "0.10000000000000001");
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest") {
  const auto c = parse_config("alpha = 1/7\nN = 16");
  const auto m = make_manifest(c, "simulate");
  CHECK(m["command"] == "simulate");
  CHECK(m["version"] == std::string(kVersion));
  CHECK(m["status"] == "incomplete");
  CHECK(m["alpha"] == "1/7");
  CHECK(m["config"]["alpha"] == "1/7");
  CHECK(m["embedding_constant"].get<double>() > 1.5);
  CHECK(m["min_divisor"].get<double>() > 0.0);
}

TEST_CASE("report serialization") {
  const auto j = to_json(classify_alpha(Coupling::parse("1/3")));
  CHECK(j["alpha"] == "1/3");
  CHECK(j["kind"] == "rational_nonspecial");
  CHECK(j["roots"]["c1"].get<double>() > 1.0);
  CHECK(j["nu"]["c"].is_number());
  const auto s = to_json(classify_alpha(Coupling::parse("1/7")));
  CHECK(s["kind"] == "special_rational");
  CHECK(s["witness"]["p"] == 2);
  CHECK(s["exact_roots"]["d1"] == "1/2");
  CHECK(s["nu"]["c"] == "infinite");

  SmoothingReport report;
  report.config.alpha_class = classify_alpha(Coupling::parse("1/2"));
  const auto sj = to_json(report);
  CHECK(sj.contains("slope_gap"));
  CHECK(sj["slope_gap"].is_null());
  CHECK(to_json(std::optional<LineFit>{}).is_null());
  CHECK(to_json(TypeIndex{0.25, false}) == 0.25);
}
