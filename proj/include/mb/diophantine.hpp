// Resonance algebra and arithmetic classification of the coupling α.
//
// The resonance functions of the system are
//   Φ(k, k1) = k³ - α k1³ - α (k-k1)³ = -3αk (k1 - c1 k)(k1 - c2 k)
//   Ψ(k, k1) = α k³ - k1³ - α (k-k1)³ = -(1-α) k1 (k1 - d1 k)(k1 - d2 k)
// with c1,c2 the roots of 3αx² - 3αx + α - 1 and d_i = 1/c_i. Exact zeros of
// Φ and Ψ are decided in integer arithmetic, never by float comparison.
#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mb {

using HighPrecision = boost::multiprecision::cpp_bin_float_50;

/// Reduced fraction num/den with den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  /// Reduces and normalizes the sign; throws DomainError on den == 0.
  static Rational make(std::int64_t num, std::int64_t den);
  /// Parses "a/b" or an integer. Returns nullopt for anything else.
  static std::optional<Rational> parse(std::string_view text);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// The coupling parameter: an exact rational or a floating-point value.
class Coupling {
 public:
  static Coupling exact(Rational r);
  static Coupling numeric(double value);
  /// "a/b" parses as exact; decimals parse as numeric. Throws ConfigError.
  static Coupling parse(std::string_view text);

  double value() const { return value_; }
  const std::optional<Rational>& rational() const { return rational_; }
  bool is_exact() const { return rational_.has_value(); }
  /// "a/b" when exact, otherwise shortest round-trip decimal.
  std::string to_string() const;

 private:
  double value_ = 0.0;
  std::optional<Rational> rational_;
};

struct ResonanceRoots {
  double c1 = 0, c2 = 0, d1 = 0, d2 = 0;
};

/// c1,2 = 1/2 ± √(-3+12/α)/6, d_i = 1/c_i. Throws DomainError unless 0 < α < 1.
ResonanceRoots resonance_roots(double alpha);

/// Hurwitz constant 1/√5, the default K in the type-index proxy.
inline constexpr double kHurwitzConstant = 0.44721359549995793928;

struct TypeIndex {
  double value = 0.0;
  bool infinite = false;  // rational input
};

struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
  double error = 0.0;  // |ρ - p/q| at working precision
};

struct ContinuedFraction {
  double value = 0.0;
  std::vector<std::int64_t> partial_quotients;
  std::vector<Convergent> convergents;
  bool terminated = false;  // ρ detected as rational
};

/// Standard expansion of a double. Stops when the fractional remainder falls
/// below `rational_tol` (relative), after `depth` quotients, or when the next
/// denominator would exceed 2^53.
ContinuedFraction continued_fraction_expand(double rho, int depth, double rational_tol = 1e-14);
/// Same algorithm at 50 significant digits.
ContinuedFraction continued_fraction_expand(const HighPrecision& rho, int depth,
                                            double rational_tol = 1e-40);

/// Empirical type-index proxy: the smallest ν for which
/// |ρ - p/q| >= K / q^{2+ν} holds over all convergents with 2 <= q <= q_max.
/// Returns the infinite flag when the expansion terminates inside the window.
TypeIndex type_index_estimate(const ContinuedFraction& cf, double q_max,
                              double K = kHurwitzConstant);
TypeIndex type_index_estimate(double rho, double q_max, double K = kHurwitzConstant);
TypeIndex type_index_estimate(const HighPrecision& rho, double q_max,
                              double K = kHurwitzConstant);

enum class AlphaKind { special_rational, rational_nonspecial, irrational_numeric };
std::string to_string(AlphaKind kind);

struct NearestSpecial {
  std::int64_t p = 0, q = 0;
  double value = 0.0;
  double distance = 0.0;
};

struct AlphaClassification {
  Coupling alpha = Coupling::numeric(0.5);
  ResonanceRoots roots;
  AlphaKind kind = AlphaKind::irrational_numeric;
  // Witness α = q²/(3p(p-q)+q²) for special rationals.
  std::optional<std::int64_t> p, q;
  // Exact roots for special rationals.
  std::optional<Rational> c1_exact, c2_exact, d1_exact, d2_exact;
  TypeIndex nu_c1, nu_c2, nu_d1, nu_d2;
  std::optional<NearestSpecial> nearest_special;  // numeric inputs only

  TypeIndex nu_c() const;
  TypeIndex nu_d() const;
  double value() const { return alpha.value(); }
  bool is_special() const { return kind == AlphaKind::special_rational; }

  /// Φ(k, k1) and Ψ(k, k1) in double precision (exact integer numerator for
  /// rational α).
  double phi(int k, int k1) const;
  double psi(int k, int k1) const;
  /// Exact vanishing of Φ / Ψ. For numeric α only the structural zeros
  /// (k = 0 for Φ, k1 = 0 for Ψ) count.
  bool phi_vanishes(int k, int k1) const;
  bool psi_vanishes(int k, int k1) const;
};

struct ClassifyOptions {
  double q_max = 1e6;
  double type_index_K = kHurwitzConstant;
  std::int64_t nearest_special_p_max = 200;
};

/// Throws DomainError unless 0 < α < 1.
AlphaClassification classify_alpha(const Coupling& alpha, const ClassifyOptions& opts = {});

enum class ResonanceFamily { rho1, rho2_d1, rho2_d2 };
std::string to_string(ResonanceFamily family);

/// Exact resonance: k1 = c1 k, k2 = c2 k (rho1) or k1 = d_i k, k2 = (1-d_i) k.
struct ResonantMode {
  ResonanceFamily family;
  int k = 0;
  int k1 = 0;
  int k2 = 0;
};

/// All exact resonances with 0 < |k| <= K; empty unless α is special.
std::vector<ResonantMode> resonant_modes(const AlphaClassification& cls, int K);

enum class Root { c1, c2, d1, d2 };
std::string to_string(Root root);

struct NearResonance {
  int k = 0;
  int n = 0;
  double distance = 0.0;  // |n - r k|
  Root root = Root::c1;
};

/// Integer pairs 1 <= k <= K, |n| <= K with |n - r k| < eps for each root r,
/// sorted by distance (ties by k, n, root).
std::vector<NearResonance> near_resonance_scan(const AlphaClassification& cls, int K, double eps);

}  // namespace mb
