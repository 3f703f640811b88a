// Time evolution of the coupled system
//   u_t + u_xxx + γu + ½(v²)_x = f
//   v_t + αv_xxx + δv + (uv)_x = g
// by integrating-factor RK4 in Fourier space. γ = δ = 0 and f = g = 0 give the
// conservative system.
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mb/diophantine.hpp"
#include "mb/spectral.hpp"

namespace mb {

struct MBState {
  SpectralField u;  // mean-zero
  SpectralField v;
  double t = 0.0;
};

inline constexpr double kBlowUpThreshold = 1e12;

/// dt = min(1e-3, 0.5/N). Rough data at large N needs a smaller step.
double default_time_step(int max_mode);

struct SimParams {
  AlphaClassification alpha_class;
  GridSpec grid;
  double gamma = 0.0;
  double delta = 0.0;
  std::optional<SpectralField> f;  // time-independent, mean-zero
  std::optional<SpectralField> g;
  double dt = 1e-3;
  double t_end = 0.0;
  bool nonlinear = true;
  double blow_up_threshold = kBlowUpThreshold;

  double alpha() const { return alpha_class.value(); }
  bool damped() const { return gamma > 0.0 || delta > 0.0; }
  bool forced() const { return f.has_value() || g.has_value(); }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Raised when a coefficient becomes non-finite or exceeds the threshold.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, MBState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const MBState& last_good() const { return last_good_; }

 private:
  MBState last_good_;
};

struct NonlinearTerms {
  SpectralField du;
  SpectralField dv;
};

/// du_k = -(ik/2)(v*v)_k, dv_k = -ik(u*v)_k. Excludes linear, damping and
/// forcing parts.
NonlinearTerms rhs_nonlinear(const MBState& state, const SimParams& params);

/// Exact flow of w_t + c w_xxx + damping·w = 0: w_k ↦ e^{(ick³ - damping)t} w_k.
SpectralField linear_flow(const SpectralField& field, double dispersion, double damping, double t);

/// Lawson (integrating-factor) RK4 stepper with preallocated buffers.
class IfRk4Stepper {
 public:
  explicit IfRk4Stepper(const SimParams& params);

  /// Advances by params.dt. Throws BlowUpError.
  MBState step(const MBState& state);
  /// In-place variant on half spectra, used by the driver.
  void step_in_place(std::vector<Complex>& u, std::vector<Complex>& v);

 private:
  void nonlinear(const std::vector<Complex>& u, const std::vector<Complex>& v,
                 std::vector<Complex>& du, std::vector<Complex>& dv);

  SimParams params_;
  PseudospectralWorkspace ws_;
  std::size_t n_;
  std::vector<Complex> eu_full_, eu_half_, ev_full_, ev_half_;
  std::vector<Complex> f_, g_;
  std::vector<double> phys_u_, phys_v_, phys_w_;
  std::vector<Complex> ka_u_, ka_v_, kb_u_, kb_v_, kc_u_, kc_v_, kd_u_, kd_v_;
  std::vector<Complex> su_, sv_, prod_;
};

/// One IFRK4 step.
MBState step_ifrk4(const MBState& state, const SimParams& params);

struct ConservedQuantities {
  double e1 = 0, e2 = 0, e3 = 0, e4 = 0;
};

/// ∫ a·b·c over [0,2π], exact for band-limited fields (zero-padded to M >= 4N).
double cubic_integral(const SpectralField& a, const SpectralField& b, const SpectralField& c);

/// E1 = ∫u, E2 = ∫v, E3 = ∫u²+v², E4 = ∫u_x²+αv_x²-uv² over [0,2π].
ConservedQuantities conserved_quantities(const MBState& state, double alpha);

struct DiagnosticsRow {
  double t = 0.0;
  ConservedQuantities e;
  double l2sq_u = 0.0;          // ∫u²
  double l2sq_v = 0.0;          // ∫v²
  double forcing_work = 0.0;    // ∫ fu + gv
  std::vector<double> norms_u;  // ‖u‖_{H^s} for each configured s
  std::vector<double> norms_v;
};

using Observer = std::function<void(const MBState&, std::size_t step)>;

struct EvolveOptions {
  std::size_t diagnostic_stride = 0;  // steps between diagnostics; 0 = ends only
  std::size_t snapshot_stride = 0;    // steps between stored states; 0 = none
  std::vector<double> sobolev_indices{0.0, 1.0};
  std::vector<Observer> observers;
  std::size_t observer_stride = 1;
};

struct RunRecord {
  std::vector<DiagnosticsRow> diagnostics;
  std::vector<MBState> snapshots;
  MBState final_state;
  std::size_t steps = 0;
  double diagnostic_interval = 0.0;  // time between diagnostics rows
  double snapshot_interval = 0.0;
};

DiagnosticsRow diagnose(const MBState& state, const SimParams& params,
                        const std::vector<double>& sobolev_indices);

/// Steps from t = 0 to t_end (rounded to a whole number of steps). Throws
/// BlowUpError.
RunRecord evolve(const SimParams& params, const SpectralField& u0, const SpectralField& v0,
                 const EvolveOptions& options = {});

struct EnergyResidual {
  std::vector<double> t;
  std::vector<double> residual;  // dE3/dt + 2γ∫u² + 2δ∫v² - 2∫(fu+gv)
  std::optional<std::string> warning;
};

/// Centered-difference residual of the E3 balance law over the interior
/// diagnostics rows (uniform stride required).
EnergyResidual damped_energy_residual(const RunRecord& record, const SimParams& params);

}  // namespace mb
