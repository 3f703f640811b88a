// Numerical studies built on the solver: nonlinear smoothing, norm growth,
// absorbing balls, the stationary forced solution and convergence to it.
//
// Ensemble members run concurrently, one member per task; every member owns
// its state and seeds are fixed per member, so reports are reproducible
// regardless of scheduling.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mb/diophantine.hpp"
#include "mb/dynamics.hpp"
#include "mb/normal_form.hpp"
#include "mb/spectral.hpp"

namespace mb {

// ---------------------------------------------------------------------------
// Fitting

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y ≈ slope·x + intercept. Returns nullopt with
/// fewer than two points, constant x, or non-finite input.
std::optional<LineFit> fit_line(std::span<const double> x, std::span<const double> y);

inline constexpr double kSlopeWindowLow = 1.0 / 8.0;
inline constexpr double kSlopeWindowHigh = 1.0 / 2.0;
inline constexpr double kSlopeMinRSquared = 0.9;

/// Decay exponent of a spectrum: fits log sqrt(power_k) against log⟨k⟩ over
/// k in [k_min, k_max], where power_k is indexed by k >= 0. Returns nullopt if
/// any power in the window is zero.
std::optional<LineFit> fit_spectral_slope(std::span<const double> power, int k_min, int k_max);

/// |u_k|² + |v_k|² for k = 0..N.
std::vector<double> pair_power(const SpectralField& u, const SpectralField& v);

/// (u0, v0) from a seed: random_field with u mean-zero and v not, using
/// independent streams derived from the seed.
std::pair<SpectralField, SpectralField> random_initial_data(GridSpec grid, double s,
                                                            std::uint64_t seed,
                                                            double excess = kRandomSlopeExcess);

/// Rescales (u, v) so that ‖u‖_{H^s} + ‖v‖_{H^s} equals `target`.
void rescale_pair(SpectralField& u, SpectralField& v, double s, double target);

/// sup ‖w‖_{L∞} / ‖w‖_{H¹} over the extremal field c_k = ⟨k⟩^{-2} and
/// `random_trials` random fields, evaluated on an oversampled grid. The
/// extremal field attains sqrt(Σ_{|k|<=N} ⟨k⟩^{-2}).
double measure_embedding_constant(int max_mode, int random_trials = 32, std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Smoothing

struct SmoothingConfig {
  AlphaClassification alpha_class;
  double s = 1.0;
  std::vector<double> s1_grid{1.0, 1.25, 1.4, 1.5};
  int max_mode = 256;
  double dt = 5e-6;
  double t_end = 10.0;
  double sample_start = 1.0;     // first sampled time
  double sample_interval = 1.0;  // time between samples
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool nonlinear = true;
  bool subtract_rho = false;        // subtract the accumulated resonant terms
  std::size_t rho_stride = 20;      // steps between resonant-integral updates
  double window_low = kSlopeWindowLow;    // fit window [low·N, high·N]
  double window_high = kSlopeWindowHigh;
  double min_r_squared = kSlopeMinRSquared;
  double random_excess = kRandomSlopeExcess;
};

struct SmoothingSeedResult {
  std::uint64_t seed = 0;
  std::vector<double> t;
  std::vector<double> solution_norm;               // ‖u‖_{H^s} + ‖v‖_{H^s}
  std::vector<std::vector<double>> residual_norm;  // [s1 index][sample]
  // Per-sample fits; nullopt where a spectrum vanishes in the window.
  std::vector<std::optional<LineFit>> solution_fit_t, residual_fit_t;
  // Fits of the time-averaged power spectra over all samples.
  std::optional<LineFit> solution_fit, residual_fit;
  // Solution slope minus residual slope (a positive gap means the residual
  // decays faster). Defined only when both R² pass the gate.
  std::optional<double> slope_gap;
  std::optional<std::string> annotation;  // blow-up or undefined gap
};

struct SmoothingReport {
  SmoothingConfig config;
  std::vector<SmoothingSeedResult> seeds;
  std::optional<double> median_slope_gap;  // over seeds with a defined gap
  std::optional<double> median_solution_slope;
  std::optional<double> median_residual_slope;
  double min_r_squared = 0.0;  // smallest R² among the fits entering the median
  std::size_t gaps_defined = 0;
};

SmoothingReport smoothing_experiment(const SmoothingConfig& config);

// ---------------------------------------------------------------------------
// Norm growth

struct GrowthConfig {
  AlphaClassification alpha_class;
  double s = 1.0;
  int max_mode = 64;
  double dt = 0.0;  // 0 selects default_time_step
  double t_end = 50.0;
  double sample_interval = 0.5;
  std::uint64_t seed = 1;
  bool nonlinear = true;
  double random_excess = kRandomSlopeExcess;
};

struct GrowthReport {
  GrowthConfig config;
  std::vector<double> t;
  std::vector<double> norm;  // ‖u‖_{H^s} + ‖v‖_{H^s}
  std::vector<double> e3, e4;
  // log norm ≈ exponent·log(1+t) + c, and log norm ≈ rate·t + c.
  std::optional<LineFit> polynomial_fit, exponential_fit;
  double max_over_initial = 0.0;  // sup_t norm / norm(0)
  // Conserved-quantity drift: max |ΔE3|/E3 and max |ΔE4|/(|E4|+1). Growth
  // with large drift is an integration artifact; reduce dt.
  double e3_drift = 0.0, e4_drift = 0.0;
};

GrowthReport growth_tracking(const GrowthConfig& config);

// ---------------------------------------------------------------------------
// Forced-damped runs

/// Forcing f, g from explicit modes: each entry sets c_k (and c_{-k}).
struct ForcingMode {
  int k = 1;
  Complex amplitude;
};
SpectralField forcing_field(GridSpec grid, std::span<const ForcingMode> modes);

struct AbsorbingConfig {
  SimParams params;                 // γ, δ > 0; t_end is the base horizon
  double s = 1.0;                   // regularity of the data shape
  double norm_min = 0.1;            // initial ‖u‖_{H¹} + ‖v‖_{H¹} range,
  double norm_max = 10.0;           // log-spaced over the ensemble
  std::vector<std::uint64_t> seeds;  // one trajectory per seed
  std::size_t sample_stride = 0;    // steps between norm samples; 0 = 1/dt/10
  bool double_horizon = true;       // also run to 2 t_end
  double random_excess = kRandomSlopeExcess;
};

struct AbsorbingTrajectory {
  std::uint64_t seed = 0;
  double initial_norm = 0.0;
  std::vector<double> t;
  std::vector<double> h1;  // ‖u‖_{H¹} + ‖v‖_{H¹}
  double late_sup = 0.0;          // sup over [t_end/2, t_end]
  double late_sup_doubled = 0.0;  // sup over [t_end, 2 t_end]
  std::optional<std::string> annotation;
};

struct AbsorbingReport {
  double t_end = 0.0;
  std::vector<AbsorbingTrajectory> trajectories;
  double bound_min = 0.0, bound_max = 0.0;  // over late_sup
  double spread = 0.0;                      // bound_max / bound_min
  double bound_max_doubled = 0.0;           // over late_sup_doubled
  double horizon_change = 0.0;              // |bound_max_doubled / bound_max - 1|
  double max_trajectory_change = 0.0;       // same, per trajectory
  // Twice the largest late bound among data of norm <= norm_max/10; every
  // trajectory with larger data must end up inside it.
  double ball_radius = 0.0;
  bool large_data_enters_ball = false;
};

AbsorbingReport absorbing_set_experiment(const AbsorbingConfig& config);

// ---------------------------------------------------------------------------
// Stationary solution

struct StationaryOptions {
  double tol = 1e-13;   // on successive H² differences
  int max_iter = 500;
};

struct ContractionMargins {
  double gamma_eff = 0.0;        // min(γ, δ)
  double f_ratio = 0.0;          // ‖f‖_{H¹} / γ^{4/3}
  double g_ratio = 0.0;          // ‖g‖_{H¹} / γ^{4/3}
  double embedding_constant = 0.0;
  double f_limit = 0.0;          // α^{1/3} γ^{4/3} / (4C)
  double g_limit = 0.0;          // α^{1/2} γ^{4/3} / (4C^{3/2})
  bool f_condition = false;      // ‖f‖_{H¹} < f_limit
  bool g_condition = false;      // ‖g‖_{H¹} <= g_limit
};

struct StationaryPair {
  SpectralField p, q;
  double residual = 0.0;  // see stationary_residual
  int iterations = 0;
  bool converged = false;
  std::vector<double> differences;  // ‖q_{n+1} - q_n‖_{H²}
  std::vector<double> iterate_norms;  // ‖q_n‖_{H²}
  ContractionMargins margins;
};

/// Picard iteration q ← 𝓜₂(g - (𝓜₁(f - qq_x)q)_x) from q₀ = 𝓜₂(g), with
/// 𝓜₁ = 1/(γ - ik³) and 𝓜₂ = 1/(δ - iαk³); then p = 𝓜₁(f - qq_x). Does not
/// throw on divergence; check `converged`.
StationaryPair stationary_solve(const SpectralField& f, const SpectralField& g, double gamma,
                                double delta, double alpha, const StationaryOptions& options = {});

/// max(‖p_xxx + γp + qq_x - f‖_{L²}, ‖αq_xxx + δq + (pq)_x - g‖_{L²}) with
/// L² over [0, 2π].
double stationary_residual(const SpectralField& p, const SpectralField& q, const SpectralField& f,
                           const SpectralField& g, double gamma, double delta, double alpha);

// ---------------------------------------------------------------------------
// Trivial attractor

struct AttractorConfig {
  SimParams params;  // forced and damped
  double s = 1.0;
  double data_norm = 1.0;  // initial ‖u‖_{H¹} + ‖v‖_{H¹}
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t sample_stride = 0;  // 0 = about 100 samples per unit time
  double transient = 0.5;         // start of monotonicity and rate windows
  double e3_floor = 1e-26;        // E3 values below this are excluded from the rate fit
  double distance_tol = 1e-6;
  double random_excess = kRandomSlopeExcess;
};

struct AttractorTrajectory {
  std::uint64_t seed = 0;
  std::vector<double> t;
  std::vector<double> distance;  // ‖u-p‖_{H¹} + ‖v-q‖_{H¹}
  std::vector<double> e3;        // ∫ y² + z²
  std::vector<double> h4;        // ∫ y_x² + αz_x² - yz² - 2qyz - pz²
  std::vector<double> h4_envelope;  // H4(0)e^{-2γt} + γ∫0^t e^{-2γ(t-r)}|∫yz²| dr
  std::optional<LineFit> e3_rate_fit;  // log E3 against t
  double e3_rate = 0.0;                // -slope
  bool e3_monotone = false;            // non-increasing after the transient
  double h4_excess = 0.0;              // max(H4 - envelope, 0)
  bool converged = false;
  std::optional<std::string> annotation;
};

struct AttractorReport {
  StationaryPair stationary;
  double embedding_constant = 0.0;
  double rate_bound = 0.0;  // -2γ + C‖p‖_{H²} + C‖q‖_{H²}
  std::vector<AttractorTrajectory> trajectories;
  double min_rate = 0.0;
  double max_final_distance = 0.0;
  bool all_converged = false;
  bool all_monotone = false;
};

AttractorReport trivial_attractor_experiment(const AttractorConfig& config,
                                             const StationaryPair& stationary);

/// Evolves from (p, q) and returns sup_t (‖u-p‖_{H¹} + ‖v-q‖_{H¹}) over
/// samples every `sample_stride` steps.
double fixed_point_drift(const SimParams& params, const StationaryPair& stationary,
                         std::size_t sample_stride = 100);

/// H4(y, z) with y = u - p, z = v - q.
double modified_hamiltonian(const SpectralField& y, const SpectralField& z, const SpectralField& p,
                            const SpectralField& q, double alpha);

}  // namespace mb
