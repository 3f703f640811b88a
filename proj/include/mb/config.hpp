// Run configuration: flat key = value text. Lines starting with '#' or ';'
// are comments and "[section]" headers are accepted but carry no meaning, so
// every key is global. Lists are comma-separated.
//
// Keys and defaults:
//   alpha = 1/2                 "p/q" stays exact; decimals are numeric
//   N = 64                      resolved modes
//   M = 0                       grid points; 0 means 3N
//   dt = 0                      0 means min(1e-3, 0.5/N)
//   t_end = 1
//   s = 1                       data regularity
//   s1_grid = 1,1.25,1.4,1.5    residual Sobolev indices (smoothing)
//   gamma = 0, delta = 0        damping
//   forcing_f, forcing_g =      modes "k:re:im, ..." (empty = none)
//   forcing_seed = 0            nonzero: random smooth forcing on modes 1..forcing_modes
//   forcing_amplitude = 0.1     for random forcing, per-mode scale ⟨k⟩^{-2}
//   forcing_modes = 4
//   data = random               random | zero
//   data_norm = 0               > 0 rescales ‖u0‖_{H¹} + ‖v0‖_{H¹}
//   seeds = 1,2,3,4,5           also "a..b"
//   seed = 1                    single-run seed
//   nonlinear = true
//   snapshot_stride = 0         steps; 0 = none
//   diagnostic_stride = 0       steps; 0 = about 100 rows per run
//   sobolev_indices = 0,1       diagnostic norms
//   blow_up_threshold = 1e12
//   identity_strides = 32,16,8,4    snapshot strides in steps (check-identities)
//   include_rho = true          check-identities also reports the ρ-free residual
//   sample_start = 1, sample_interval = 1      smoothing / growth sampling
//   subtract_rho = false, rho_stride = 20
//   slope_window_low = 0.125, slope_window_high = 0.5, slope_min_r2 = 0.9
//   random_excess = 0.01        extra spectral decay of random data
//   q_max = 1e6, type_index_K = 1/√5, nearest_special_p_max = 200
//   stationary_tol = 1e-13, max_iter = 500
//   norm_min = 0.1, norm_max = 10, double_horizon = true    (absorbing)
//   transient = 0.5, e3_floor = 1e-26, distance_tol = 1e-6  (trivial attractor)
//   output_dir = out
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mb/diophantine.hpp"
#include "mb/experiments.hpp"

namespace mb {

struct RunConfig {
  std::string alpha = "1/2";
  int max_mode = 64;
  int phys_points = 0;
  double dt = 0.0;
  double t_end = 1.0;
  double s = 1.0;
  std::vector<double> s1_grid{1.0, 1.25, 1.4, 1.5};
  double gamma = 0.0;
  double delta = 0.0;
  std::vector<ForcingMode> forcing_f, forcing_g;
  std::uint64_t forcing_seed = 0;
  double forcing_amplitude = 0.1;
  int forcing_modes = 4;
  std::string data = "random";
  double data_norm = 0.0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::uint64_t seed = 1;
  bool nonlinear = true;
  std::size_t snapshot_stride = 0;
  std::size_t diagnostic_stride = 0;
  std::vector<double> sobolev_indices{0.0, 1.0};
  double blow_up_threshold = kBlowUpThreshold;
  std::vector<std::size_t> identity_strides{32, 16, 8, 4};
  bool include_rho = true;
  double sample_start = 1.0;
  double sample_interval = 1.0;
  bool subtract_rho = false;
  std::size_t rho_stride = 20;
  double slope_window_low = kSlopeWindowLow;
  double slope_window_high = kSlopeWindowHigh;
  double slope_min_r2 = kSlopeMinRSquared;
  double random_excess = kRandomSlopeExcess;
  double q_max = 1e6;
  double type_index_K = kHurwitzConstant;
  std::int64_t nearest_special_p_max = 200;
  double stationary_tol = 1e-13;
  int max_iter = 500;
  double norm_min = 0.1;
  double norm_max = 10.0;
  bool double_horizon = true;
  double transient = 0.5;
  double e3_floor = 1e-26;
  double distance_tol = 1e-6;
  std::string output_dir = "out";

  GridSpec grid() const { return {max_mode, phys_points > 0 ? phys_points : 3 * max_mode}; }
  double time_step() const { return dt > 0.0 ? dt : default_time_step(max_mode); }
  Coupling coupling() const { return Coupling::parse(alpha); }
  ClassifyOptions classify_options() const {
    return {q_max, type_index_K, nearest_special_p_max};
  }
  /// Throws ConfigError naming the first violated field. `quadratic` requires
  /// M >= 3N.
  void validate(bool quadratic = true) const;
};

/// Parses configuration text. Unknown keys, malformed values and violated
/// invariants raise ConfigError naming the key and line.
RunConfig parse_config(std::string_view text);
/// Applies one "key=value" override.
void apply_override(RunConfig& config, std::string_view assignment);
/// Every key with its resolved value; exact α stays a "p/q" string.
nlohmann::ordered_json config_echo(const RunConfig& config);

/// f and g from the explicit mode lists plus, when forcing_seed is nonzero,
/// random modes 1..forcing_modes with |c_k| = forcing_amplitude·⟨k⟩^{-2}.
/// A field with no modes is nullopt.
std::pair<std::optional<SpectralField>, std::optional<SpectralField>> make_forcing(
    const RunConfig& config);

/// Simulation parameters with α classified under the configured options.
SimParams make_sim_params(const RunConfig& config);

/// Initial data for one seed: random (optionally rescaled to data_norm in
/// H¹) or zero.
std::pair<SpectralField, SpectralField> make_initial_data(const RunConfig& config,
                                                          std::uint64_t seed);

}  // namespace mb
