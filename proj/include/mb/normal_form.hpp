// Differentiation-by-parts operators for the conservative system and the
// integrated identities they satisfy:
//
//   ∂t[e^{-ik³t}(u_k + B1(v,v)_k)]   = e^{-ik³t}(ρ1(v,v)_k + R1(u,v,v)_k)
//   ∂t[e^{-iαk³t}(v_k + B2(u,v)_k)]  = e^{-iαk³t}(ρ2(u,v)_k + R2(v,v,v)_k + R3(u,u,v)_k)
//
// Every sum runs over the Galerkin band |k_i| <= N and skips index
// combinations whose denominator Φ or Ψ vanishes exactly (the Σ* rule).
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mb/diophantine.hpp"
#include "mb/dynamics.hpp"
#include "mb/spectral.hpp"

namespace mb {

/// A pair (k, k1) whose resonance function vanishes exactly.
struct IndexPair {
  int k = 0;
  int k1 = 0;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

class NormalFormOps {
 public:
  NormalFormOps(AlphaClassification alpha_class, GridSpec grid);

  const AlphaClassification& alpha_class() const { return cls_; }
  const GridSpec& grid() const { return grid_; }

  /// Non-structural exact zeros of Φ(k,k1) (k != 0) and Ψ(k,k1) (k1 != 0)
  /// with |k|, |k1|, |k-k1| <= N. Empty unless α is a special rational.
  const std::vector<IndexPair>& excluded_phi() const { return excluded_phi_; }
  const std::vector<IndexPair>& excluded_psi() const { return excluded_psi_; }
  /// Smallest |Φ| and |Ψ| among the retained in-band denominators.
  double min_divisor() const { return min_divisor_; }

  /// B1(v1,v2)_k = -(k/2) Σ* v1_{k1} v2_{k2} / Φ(k,k1).
  SpectralField b1(const SpectralField& v1, const SpectralField& v2) const;
  /// B2(u,v)_k = -k Σ* u_{k1} v_{k2} / Ψ(k,k1). Throws DomainError unless u is mean-zero.
  SpectralField b2(const SpectralField& u, const SpectralField& v) const;
  /// R1(u,v,w)_k = ik Σ*_m m (u*v)_m w_{k-m} / Φ(k,m)
  ///            = -(i/3α) Σ*_m m (u*v)_m w_{k-m} / ((m - c1 k)(m - c2 k)).
  SpectralField r1(const SpectralField& u, const SpectralField& v, const SpectralField& w) const;
  /// R2(v1,v2,v3)_k = (ik/2) Σ*_m m (v1*v2)_m v3_{k-m} / Ψ(k,m).
  SpectralField r2(const SpectralField& v1, const SpectralField& v2, const SpectralField& v3) const;
  /// R3(u1,u2,v)_k = ik Σ*_{k1} u1_{k1} j (u2*v)_j / Ψ(k,k1), j = k - k1.
  SpectralField r3(const SpectralField& u1, const SpectralField& u2, const SpectralField& v) const;
  /// ρ1(v1,v2)_k = -ik v1_{c1 k} v2_{c2 k}; zero unless α is special.
  SpectralField rho1(const SpectralField& v1, const SpectralField& v2) const;
  /// ρ2(u,v)_k = -ik (u_{d1 k} v_{(1-d1)k} + u_{d2 k} v_{(1-d2)k}); zero unless α is special.
  SpectralField rho2(const SpectralField& u, const SpectralField& v) const;

  /// R3 evaluated by splitting on whether k1 + k2 vanishes; equals r3.
  SpectralField r3_split(const SpectralField& u1, const SpectralField& u2,
                         const SpectralField& v) const;

 private:
  void check(const SpectralField& f) const;
  // 1/Φ(k,k1) and 1/Ψ(k,k1) for k in [0,N], k1 in [-N,N]; 0 where excluded.
  double inv_phi(int k, int k1) const { return inv_phi_[index(k, k1)]; }
  double inv_psi(int k, int k1) const { return inv_psi_[index(k, k1)]; }
  std::size_t index(int k, int k1) const {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(2 * n_ + 1) +
           static_cast<std::size_t>(k1 + n_);
  }
  // Band-limited convolution (a*b)_m for m in [-N, N], multiplied by m.
  std::vector<Complex> weighted_convolution(const SpectralField& a, const SpectralField& b) const;

  AlphaClassification cls_;
  GridSpec grid_;
  int n_;
  std::vector<double> inv_phi_, inv_psi_;
  std::vector<IndexPair> excluded_phi_, excluded_psi_;
  double min_divisor_ = 0.0;
};

enum class Quadrature { simpson, trapezoid };
std::string to_string(Quadrature q);

struct IdentityResidual {
  std::vector<double> t;
  std::vector<double> res_u;  // ‖residual_u(t)‖ / ‖u(t)‖ (absolute when u(t) = 0)
  std::vector<double> res_v;
  double max_u = 0.0;
  double max_v = 0.0;
  Quadrature quadrature = Quadrature::simpson;
  std::optional<std::string> annotation;
};

/// Residuals of the integrated identities
///   u_k(t) - e^{ik³t}u_k(0) + B1(t) - e^{ik³t}B1(0) - ∫0^t e^{ik³(t-r)}[R1 + ρ1](r) dr
/// and its v counterpart, at every stored snapshot. Snapshots must start at
/// t = 0 with uniform spacing. Composite Simpson is used where the number of
/// intervals is even; at odd interval counts the last interval uses the
/// trapezoid rule and the result is annotated. Conservative runs only.
IdentityResidual identity_residual(const std::vector<MBState>& trajectory, const SimParams& params,
                                   bool include_rho = true);

/// Running integrals ∫0^t e^{(ick³-γ)(t-r)} ρ(r) dr accumulated by the
/// trapezoid rule from states offered at a fixed stride.
class RhoCorrection {
 public:
  RhoCorrection(const NormalFormOps& ops, double gamma, double delta);
  void accumulate(const MBState& state);
  /// Current integrals propagated to the time of the last accumulated state.
  std::pair<SpectralField, SpectralField> value() const;

 private:
  const NormalFormOps* ops_;
  double gamma_, delta_;
  std::optional<double> last_t_;
  SpectralField last_u_, last_v_;  // ρ1, ρ2 at last_t_
  SpectralField int_u_, int_v_;
};

/// u(t) - e^{(-∂³-γ)t}u0 and v(t) - e^{(-α∂³-δ)t}v0, optionally minus the
/// accumulated resonant correction.
std::pair<SpectralField, SpectralField> nonlinear_residual(
    const MBState& state, const SpectralField& u0, const SpectralField& v0, double alpha,
    double gamma = 0.0, double delta = 0.0,
    const std::optional<std::pair<SpectralField, SpectralField>>& rho_correction = std::nullopt);

}  // namespace mb
