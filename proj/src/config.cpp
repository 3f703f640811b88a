#include "mb/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <set>

namespace mb {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError(std::string(key) + ": cannot parse '" + std::string(value) + "' as " +
                    std::string(expected));
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    bad(key, text, std::is_floating_point_v<T> ? "a number" : "an integer");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) bad(key, text, "a finite number");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad(key, text, "a boolean");
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (auto item : split(text, ',')) out.push_back(parse_number<T>(key, item));
  return out;
}

std::vector<std::uint64_t> parse_seeds(std::string_view key, std::string_view text) {
  text = trim(text);
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto lo = parse_number<std::uint64_t>(key, text.substr(0, dots));
    const auto hi = parse_number<std::uint64_t>(key, text.substr(dots + 2));
    if (hi < lo) bad(key, text, "a range a..b with a <= b");
    std::vector<std::uint64_t> out;
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  return parse_list<std::uint64_t>(key, text);
}

std::vector<ForcingMode> parse_modes(std::string_view key, std::string_view text) {
  std::vector<ForcingMode> out;
  for (auto item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) bad(key, item, "k:re:im");
    out.push_back({parse_number<int>(key, parts[0]),
                   {parse_number<double>(key, parts[1]), parse_number<double>(key, parts[2])}});
  }
  return out;
}

template <class T>
Json list_json(const std::vector<T>& xs) {
  Json out = Json::array();
  for (const auto& x : xs) out.push_back(x);
  return out;
}

Json modes_json(const std::vector<ForcingMode>& modes) {
  Json out = Json::array();
  for (const auto& m : modes) out.push_back({{"k", m.k}, {"re", m.amplitude.real()}, {"im", m.amplitude.imag()}});
  return out;
}

struct Key {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<Json(const RunConfig&)> echo;
};

template <class T>
Key number(T RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_number<T>(k, v); },
          [field](const RunConfig& c) { return Json(c.*field); }};
}

Key boolean(bool RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_bool(k, v); },
          [field](const RunConfig& c) { return Json(c.*field); }};
}

Key text(std::string RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view, std::string_view v) { c.*field = std::string(trim(v)); },
          [field](const RunConfig& c) { return Json(c.*field); }};
}

template <class T>
Key list(std::vector<T> RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_list<T>(k, v); },
          [field](const RunConfig& c) { return list_json(c.*field); }};
}

Key modes(std::vector<ForcingMode> RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_modes(k, v); },
          [field](const RunConfig& c) { return modes_json(c.*field); }};
}

const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = {
      {"alpha", text(&RunConfig::alpha)},
      {"N", number(&RunConfig::max_mode)},
      {"M", number(&RunConfig::phys_points)},
      {"dt", number(&RunConfig::dt)},
      {"t_end", number(&RunConfig::t_end)},
      {"s", number(&RunConfig::s)},
      {"s1_grid", list(&RunConfig::s1_grid)},
      {"gamma", number(&RunConfig::gamma)},
      {"delta", number(&RunConfig::delta)},
      {"forcing_f", modes(&RunConfig::forcing_f)},
      {"forcing_g", modes(&RunConfig::forcing_g)},
      {"forcing_seed", number(&RunConfig::forcing_seed)},
      {"forcing_amplitude", number(&RunConfig::forcing_amplitude)},
      {"forcing_modes", number(&RunConfig::forcing_modes)},
      {"data", text(&RunConfig::data)},
      {"data_norm", number(&RunConfig::data_norm)},
      {"seeds",
       {[](RunConfig& c, std::string_view k, std::string_view v) { c.seeds = parse_seeds(k, v); },
        [](const RunConfig& c) { return list_json(c.seeds); }}},
      {"seed", number(&RunConfig::seed)},
      {"nonlinear", boolean(&RunConfig::nonlinear)},
      {"snapshot_stride", number(&RunConfig::snapshot_stride)},
      {"diagnostic_stride", number(&RunConfig::diagnostic_stride)},
      {"sobolev_indices", list(&RunConfig::sobolev_indices)},
      {"blow_up_threshold", number(&RunConfig::blow_up_threshold)},
      {"identity_strides", list(&RunConfig::identity_strides)},
      {"include_rho", boolean(&RunConfig::include_rho)},
      {"sample_start", number(&RunConfig::sample_start)},
      {"sample_interval", number(&RunConfig::sample_interval)},
      {"subtract_rho", boolean(&RunConfig::subtract_rho)},
      {"rho_stride", number(&RunConfig::rho_stride)},
      {"slope_window_low", number(&RunConfig::slope_window_low)},
      {"slope_window_high", number(&RunConfig::slope_window_high)},
      {"slope_min_r2", number(&RunConfig::slope_min_r2)},
      {"random_excess", number(&RunConfig::random_excess)},
      {"q_max", number(&RunConfig::q_max)},
      {"type_index_K", number(&RunConfig::type_index_K)},
      {"nearest_special_p_max", number(&RunConfig::nearest_special_p_max)},
      {"stationary_tol", number(&RunConfig::stationary_tol)},
      {"max_iter", number(&RunConfig::max_iter)},
      {"norm_min", number(&RunConfig::norm_min)},
      {"norm_max", number(&RunConfig::norm_max)},
      {"double_horizon", boolean(&RunConfig::double_horizon)},
      {"transient", number(&RunConfig::transient)},
      {"e3_floor", number(&RunConfig::e3_floor)},
      {"distance_tol", number(&RunConfig::distance_tol)},
      {"output_dir", text(&RunConfig::output_dir)},
  };
  return table;
}

const Key& find_key(std::string_view name) {
  for (const auto& [k, key] : keys()) {
    if (k == name) return key;
  }
  throw ConfigError(std::string(name) + ": unknown key");
}

}  // namespace

void RunConfig::validate(bool quadratic) const {
  const auto require = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  Coupling c = Coupling::numeric(0.5);
  try {
    c = coupling();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("alpha: ") + e.what());
  }
  require(c.value() > 0.0 && c.value() < 1.0, "alpha: must lie strictly between 0 and 1");
  require(max_mode >= 1, "N: must be at least 1");
  require(phys_points >= 0, "M: must be nonnegative (0 selects 3N)");
  const GridSpec g = grid();
  if (quadratic) {
    require(g.supports_quadratic(), "M: " + std::to_string(g.phys_points) + " < 3N = " +
                                        std::to_string(3 * max_mode) +
                                        "; quadratic products would alias");
  }
  require(g.phys_points >= 2 * max_mode + 1,
          "M: " + std::to_string(g.phys_points) + " < 2N+1 = " + std::to_string(2 * max_mode + 1));
  require(dt >= 0.0, "dt: must be nonnegative (0 selects the default)");
  require(t_end >= 0.0, "t_end: must be nonnegative");
  require(gamma >= 0.0, "gamma: must be nonnegative");
  require(delta >= 0.0, "delta: must be nonnegative");
  require(!s1_grid.empty(), "s1_grid: must not be empty");
  require(!seeds.empty(), "seeds: must not be empty");
  require(data == "random" || data == "zero", "data: expected 'random' or 'zero'");
  require(data_norm >= 0.0, "data_norm: must be nonnegative");
  for (const auto* list : {&forcing_f, &forcing_g}) {
    for (const auto& m : *list) {
      require(m.k >= 1 && m.k <= max_mode,
              std::string(list == &forcing_f ? "forcing_f" : "forcing_g") + ": mode " +
                  std::to_string(m.k) + " outside [1, N]");
    }
  }
  require(forcing_modes >= 1 && forcing_modes <= max_mode, "forcing_modes: must lie in [1, N]");
  require(forcing_amplitude >= 0.0, "forcing_amplitude: must be nonnegative");
  require(blow_up_threshold > 0.0, "blow_up_threshold: must be positive");
  require(!identity_strides.empty(), "identity_strides: must not be empty");
  for (auto st : identity_strides) require(st > 0, "identity_strides: strides must be positive");
  require(sample_interval > 0.0, "sample_interval: must be positive");
  require(rho_stride > 0, "rho_stride: must be positive");
  require(slope_window_low > 0.0 && slope_window_low < slope_window_high && slope_window_high <= 1.0,
          "slope_window_low/high: need 0 < low < high <= 1");
  require(slope_min_r2 >= 0.0 && slope_min_r2 <= 1.0, "slope_min_r2: must lie in [0, 1]");
  require(q_max > 1.0, "q_max: must exceed 1");
  require(type_index_K > 0.0, "type_index_K: must be positive");
  require(nearest_special_p_max >= 1, "nearest_special_p_max: must be at least 1");
  require(stationary_tol > 0.0, "stationary_tol: must be positive");
  require(max_iter >= 1, "max_iter: must be at least 1");
  require(norm_min > 0.0 && norm_max >= norm_min, "norm_min/norm_max: need 0 < min <= max");
  require(distance_tol > 0.0, "distance_tol: must be positive");
  require(!output_dir.empty(), "output_dir: must not be empty");
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[' && line.back() == ']') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(std::string(key) + ": duplicate key on line " + std::to_string(line_no));
    }
    try {
      find_key(key).set(config, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
  }
  config.validate();
  return config;
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
  }
  const auto key = trim(assignment.substr(0, eq));
  find_key(key).set(config, key, assignment.substr(eq + 1));
}

nlohmann::ordered_json config_echo(const RunConfig& config) {
  Json out = Json::object();
  for (const auto& [name, key] : keys()) out[name] = key.echo(config);
  out["M"] = config.grid().phys_points;
  out["dt"] = config.time_step();
  return out;
}

std::pair<std::optional<SpectralField>, std::optional<SpectralField>> make_forcing(
    const RunConfig& config) {
  const GridSpec grid = config.grid();
  std::optional<SpectralField> f, g;
  if (!config.forcing_f.empty()) f = forcing_field(grid, config.forcing_f);
  if (!config.forcing_g.empty()) g = forcing_field(grid, config.forcing_g);
  if (config.forcing_seed != 0) {
    std::mt19937_64 rng(config.forcing_seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (auto* field : {&f, &g}) {
      if (!*field) *field = SpectralField(grid);
      for (int k = 1; k <= config.forcing_modes; ++k) {
        const double a = config.forcing_amplitude / (1.0 + static_cast<double>(k) * k);
        (**field).set(k, (**field)[k] + std::polar(a, phase(rng)));
      }
    }
  }
  return {std::move(f), std::move(g)};
}

SimParams make_sim_params(const RunConfig& config) {
  SimParams params;
  params.alpha_class = classify_alpha(config.coupling(), config.classify_options());
  params.grid = config.grid();
  params.gamma = config.gamma;
  params.delta = config.delta;
  std::tie(params.f, params.g) = make_forcing(config);
  params.dt = config.time_step();
  params.t_end = config.t_end;
  params.nonlinear = config.nonlinear;
  params.blow_up_threshold = config.blow_up_threshold;
  params.validate();
  return params;
}

std::pair<SpectralField, SpectralField> make_initial_data(const RunConfig& config,
                                                          std::uint64_t seed) {
  const GridSpec grid = config.grid();
  if (config.data == "zero") return {SpectralField(grid), SpectralField(grid)};
  auto data = random_initial_data(grid, config.s, seed, config.random_excess);
  if (config.data_norm > 0.0) rescale_pair(data.first, data.second, 1.0, config.data_norm);
  return data;
}

}  // namespace mb
