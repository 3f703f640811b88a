#include "mb/diophantine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "mb/spectral.hpp"

namespace mb {

namespace {

using i128 = __int128;

i128 cube(i128 x) { return x * x * x; }

std::int64_t isqrt(i128 n) {
  if (n < 0) return -1;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (static_cast<i128>(r) * r > n) --r;
  while (static_cast<i128>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

void require_unit_interval(double alpha) {
  if (alpha == 1.0) {
    throw DomainError(
        "alpha = 1 is the KdV-like coupling handled by separate theory; this module covers "
        "0 < alpha < 1 only");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0,1), got " + std::to_string(alpha));
  }
}

template <class Real>
ContinuedFraction expand_impl(const Real& rho, int depth, double rational_tol) {
  using std::abs;
  using std::floor;
  using std::round;

  constexpr i128 kMaxDenominator = i128{1} << 53;

  ContinuedFraction cf;
  cf.value = static_cast<double>(rho);
  i128 p_prev = 1, p_prev2 = 0;
  i128 q_prev = 0, q_prev2 = 1;
  Real x = rho;
  for (int i = 0; i < depth; ++i) {
    const Real nearest = round(x);
    const Real scale = abs(x) > Real(1) ? abs(x) : Real(1);
    const bool rational = abs(x - nearest) < Real(rational_tol) * scale;
    const Real a_real = rational ? nearest : Real(floor(x));
    const auto a = static_cast<std::int64_t>(a_real);

    const i128 p = i128{a} * p_prev + p_prev2;
    const i128 q = i128{a} * q_prev + q_prev2;
    if (q > kMaxDenominator || p > kMaxDenominator * 64 || p < -kMaxDenominator * 64) break;

    Convergent c;
    c.p = static_cast<std::int64_t>(p);
    c.q = static_cast<std::int64_t>(q);
    c.error = rational ? 0.0
                       : static_cast<double>(abs(rho * Real(c.q) - Real(c.p)) / Real(c.q));
    cf.partial_quotients.push_back(a);
    cf.convergents.push_back(c);
    if (rational) {
      cf.terminated = true;
      break;
    }
    p_prev2 = p_prev;
    p_prev = p;
    q_prev2 = q_prev;
    q_prev = q;
    x = Real(1) / (x - a_real);
  }
  return cf;
}

void reduce_into(std::int64_t& num, std::int64_t& den) {
  const std::int64_t g = std::gcd(num, den);
  if (g != 0) {
    num /= g;
    den /= g;
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Rational / Coupling

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  reduce_into(num, den);
  return {num, den};
}

std::optional<Rational> Rational::parse(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    auto n = parse_int(text);
    if (!n) return std::nullopt;
    return Rational{*n, 1};
  }
  auto n = parse_int(text.substr(0, slash));
  auto d = parse_int(text.substr(slash + 1));
  if (!n || !d || *d == 0) return std::nullopt;
  return make(*n, *d);
}

std::string Rational::to_string() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

Coupling Coupling::exact(Rational r) {
  Coupling c;
  c.rational_ = Rational::make(r.num, r.den);
  c.value_ = c.rational_->value();
  return c;
}

Coupling Coupling::numeric(double value) {
  Coupling c;
  c.value_ = value;
  return c;
}

Coupling Coupling::parse(std::string_view text) {
  const auto t = trim(text);
  if (auto r = Rational::parse(t)) return exact(*r);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("alpha: cannot parse '" + std::string(text) + "' as a/b or decimal");
  }
  return numeric(v);
}

std::string Coupling::to_string() const {
  if (rational_) return rational_->to_string();
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value_);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Roots and continued fractions

ResonanceRoots resonance_roots(double alpha) {
  require_unit_interval(alpha);
  const double root = std::sqrt(-3.0 + 12.0 / alpha) / 6.0;
  ResonanceRoots r;
  r.c1 = 0.5 + root;
  r.c2 = 0.5 - root;
  r.d1 = 1.0 / r.c1;
  r.d2 = 1.0 / r.c2;
  return r;
}

ContinuedFraction continued_fraction_expand(double rho, int depth, double rational_tol) {
  if (depth < 1) throw DomainError("continued fraction depth must be >= 1");
  return expand_impl<long double>(static_cast<long double>(rho), depth, rational_tol);
}

ContinuedFraction continued_fraction_expand(const HighPrecision& rho, int depth,
                                            double rational_tol) {
  if (depth < 1) throw DomainError("continued fraction depth must be >= 1");
  return expand_impl<HighPrecision>(rho, depth, rational_tol);
}

TypeIndex type_index_estimate(const ContinuedFraction& cf, double q_max, double K) {
  TypeIndex out;
  if (cf.terminated && !cf.convergents.empty() &&
      static_cast<double>(cf.convergents.back().q) <= q_max) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  for (const auto& c : cf.convergents) {
    const auto q = static_cast<double>(c.q);
    if (q < 2.0 || q > q_max || c.error <= 0.0) continue;
    const double nu = std::log(K / (q * q * c.error)) / std::log(q);
    out.value = std::max(out.value, nu);
  }
  return out;
}

TypeIndex type_index_estimate(double rho, double q_max, double K) {
  return type_index_estimate(continued_fraction_expand(rho, 200), q_max, K);
}

TypeIndex type_index_estimate(const HighPrecision& rho, double q_max, double K) {
  return type_index_estimate(continued_fraction_expand(rho, 400), q_max, K);
}

// ---------------------------------------------------------------------------
// Classification

std::string to_string(AlphaKind kind) {
  switch (kind) {
    case AlphaKind::special_rational: return "special_rational";
    case AlphaKind::rational_nonspecial: return "rational_nonspecial";
    case AlphaKind::irrational_numeric: return "irrational_numeric";
  }
  return "unknown";
}

TypeIndex AlphaClassification::nu_c() const {
  if (nu_c1.infinite || nu_c2.infinite) return {std::numeric_limits<double>::infinity(), true};
  return {std::max(nu_c1.value, nu_c2.value), false};
}

TypeIndex AlphaClassification::nu_d() const {
  if (nu_d1.infinite || nu_d2.infinite) return {std::numeric_limits<double>::infinity(), true};
  return {std::max(nu_d1.value, nu_d2.value), false};
}

double AlphaClassification::phi(int k, int k1) const {
  const int k2 = k - k1;
  if (const auto& r = alpha.rational()) {
    const i128 scaled = r->den * cube(k) - r->num * (cube(k1) + cube(k2));
    return static_cast<double>(scaled) / static_cast<double>(r->den);
  }
  const double a = alpha.value();
  return std::pow(k, 3) - a * (std::pow(k1, 3) + std::pow(k2, 3));
}

double AlphaClassification::psi(int k, int k1) const {
  const int k2 = k - k1;
  if (const auto& r = alpha.rational()) {
    const i128 scaled = r->num * (cube(k) - cube(k2)) - r->den * cube(k1);
    return static_cast<double>(scaled) / static_cast<double>(r->den);
  }
  const double a = alpha.value();
  return a * (std::pow(k, 3) - std::pow(k2, 3)) - std::pow(k1, 3);
}

bool AlphaClassification::phi_vanishes(int k, int k1) const {
  if (const auto& r = alpha.rational()) {
    const int k2 = k - k1;
    return r->den * cube(k) - r->num * (cube(k1) + cube(k2)) == 0;
  }
  return k == 0;
}

bool AlphaClassification::psi_vanishes(int k, int k1) const {
  if (const auto& r = alpha.rational()) {
    const int k2 = k - k1;
    return r->num * (cube(k) - cube(k2)) - r->den * cube(k1) == 0;
  }
  return k1 == 0;
}

AlphaClassification classify_alpha(const Coupling& alpha, const ClassifyOptions& opts) {
  AlphaClassification cls;
  cls.alpha = alpha;
  cls.roots = resonance_roots(alpha.value());

  if (const auto& r = alpha.rational()) {
    const i128 a = r->num;
    const i128 b = r->den;
    // 3α(4-α) = 3a(4b-a)/b² is a rational square iff 3a(4b-a) is a square.
    const i128 disc = 3 * a * (4 * b - a);
    const std::int64_t s = isqrt(disc);
    if (static_cast<i128>(s) * s == disc) {
      cls.kind = AlphaKind::special_rational;
      // c1 = 1/2 + s/(6a) = (3a + s) / (6a) = p/q.
      const Rational c1 = Rational::make(static_cast<std::int64_t>(3 * a + s),
                                         static_cast<std::int64_t>(6 * a));
      const std::int64_t p = c1.num;
      const std::int64_t q = c1.den;
      const i128 lhs = i128{q} * q * b;
      const i128 rhs = a * (3 * i128{p} * (p - q) + i128{q} * q);
      if (!(p > q && q >= 1 && lhs == rhs)) {
        throw std::logic_error("special-rational witness failed verification for " +
                               r->to_string());
      }
      cls.p = p;
      cls.q = q;
      cls.c1_exact = c1;
      cls.c2_exact = Rational::make(q - p, q);
      cls.d1_exact = Rational::make(q, p);
      cls.d2_exact = Rational::make(q, q - p);
      const TypeIndex inf{std::numeric_limits<double>::infinity(), true};
      cls.nu_c1 = cls.nu_c2 = cls.nu_d1 = cls.nu_d2 = inf;
      return cls;
    }
    cls.kind = AlphaKind::rational_nonspecial;
    const HighPrecision alpha_hp = HighPrecision(r->num) / HighPrecision(r->den);
    const HighPrecision root = sqrt(HighPrecision(-3) + HighPrecision(12) / alpha_hp) / 6;
    const HighPrecision c1 = HighPrecision(0.5) + root;
    const HighPrecision c2 = HighPrecision(0.5) - root;
    cls.nu_c1 = type_index_estimate(c1, opts.q_max, opts.type_index_K);
    cls.nu_c2 = type_index_estimate(c2, opts.q_max, opts.type_index_K);
    cls.nu_d1 = type_index_estimate(HighPrecision(1) / c1, opts.q_max, opts.type_index_K);
    cls.nu_d2 = type_index_estimate(HighPrecision(1) / c2, opts.q_max, opts.type_index_K);
    return cls;
  }

  cls.kind = AlphaKind::irrational_numeric;
  cls.nu_c1 = type_index_estimate(cls.roots.c1, opts.q_max, opts.type_index_K);
  cls.nu_c2 = type_index_estimate(cls.roots.c2, opts.q_max, opts.type_index_K);
  cls.nu_d1 = type_index_estimate(cls.roots.d1, opts.q_max, opts.type_index_K);
  cls.nu_d2 = type_index_estimate(cls.roots.d2, opts.q_max, opts.type_index_K);

  NearestSpecial best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::int64_t p = 2; p <= opts.nearest_special_p_max; ++p) {
    for (std::int64_t q = 1; q < p; ++q) {
      if (std::gcd(p, q) != 1) continue;
      const double v = static_cast<double>(q * q) / static_cast<double>(3 * p * (p - q) + q * q);
      const double d = std::abs(v - alpha.value());
      if (d < best.distance) best = {p, q, v, d};
    }
  }
  cls.nearest_special = best;
  return cls;
}

// ---------------------------------------------------------------------------
// Resonance enumeration

std::string to_string(ResonanceFamily family) {
  switch (family) {
    case ResonanceFamily::rho1: return "rho1";
    case ResonanceFamily::rho2_d1: return "rho2_d1";
    case ResonanceFamily::rho2_d2: return "rho2_d2";
  }
  return "unknown";
}

std::string to_string(Root root) {
  switch (root) {
    case Root::c1: return "c1";
    case Root::c2: return "c2";
    case Root::d1: return "d1";
    case Root::d2: return "d2";
  }
  return "unknown";
}

std::vector<ResonantMode> resonant_modes(const AlphaClassification& cls, int K) {
  std::vector<ResonantMode> out;
  if (!cls.is_special()) return out;
  const auto add_family = [&](ResonanceFamily family, const Rational& root) {
    for (int k = -K; k <= K; ++k) {
      if (k == 0 || k % root.den != 0) continue;
      const auto k1 = static_cast<int>(root.num * (k / root.den));
      out.push_back({family, k, k1, k - k1});
    }
  };
  add_family(ResonanceFamily::rho1, *cls.c1_exact);
  add_family(ResonanceFamily::rho2_d1, *cls.d1_exact);
  add_family(ResonanceFamily::rho2_d2, *cls.d2_exact);
  return out;
}

std::vector<NearResonance> near_resonance_scan(const AlphaClassification& cls, int K, double eps) {
  if (!(eps > 0.0)) throw DomainError("near_resonance_scan: eps must be positive");
  std::vector<NearResonance> out;
  struct RootValue {
    Root id;
    double value;
    std::optional<Rational> exact;
  };
  const RootValue roots[] = {{Root::c1, cls.roots.c1, cls.c1_exact},
                             {Root::c2, cls.roots.c2, cls.c2_exact},
                             {Root::d1, cls.roots.d1, cls.d1_exact},
                             {Root::d2, cls.roots.d2, cls.d2_exact}};
  for (const auto& r : roots) {
    for (int k = 1; k <= K; ++k) {
      const double center = r.value * k;
      const int lo = std::max(-K, static_cast<int>(std::floor(center - eps)));
      const int hi = std::min(K, static_cast<int>(std::ceil(center + eps)));
      for (int n = lo; n <= hi; ++n) {
        double dist = 0.0;
        if (r.exact) {
          const i128 num = i128{n} * r.exact->den - i128{r.exact->num} * k;
          dist = std::abs(static_cast<double>(num)) / static_cast<double>(r.exact->den);
        } else {
          dist = std::abs(n - center);
        }
        if (dist < eps) out.push_back({k, n, dist, r.id});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const NearResonance& a, const NearResonance& b) {
    return std::tie(a.distance, a.k, a.n, a.root) < std::tie(b.distance, b.k, b.n, b.root);
  });
  return out;
}

}  // namespace mb
