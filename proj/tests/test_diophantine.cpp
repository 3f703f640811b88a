#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "mb/diophantine.hpp"
#include "mb/spectral.hpp"
#include "oracles.hpp"

using namespace mb;

namespace {

AlphaClassification classify(std::int64_t a, std::int64_t b) {
  return classify_alpha(Coupling::exact(Rational::make(a, b)));
}

HighPrecision golden() { return (1 + boost::multiprecision::sqrt(HighPrecision(5))) / 2; }

HighPrecision liouville(int terms) {
  HighPrecision x = 0;
  int fact = 1;
  for (int n = 1; n <= terms; ++n) {
    fact *= n;
    x += boost::multiprecision::pow(HighPrecision(10), -fact);
  }
  return x;
}

}  // namespace

TEST_CASE("rational parsing and reduction") {
  CHECK(Rational::make(2, 14) == Rational{1, 7});
  CHECK(Rational::make(3, -6) == Rational{-1, 2});
  CHECK_THROWS_AS(Rational::make(1, 0), DomainError);
  CHECK(Rational::parse("4/6") == Rational{2, 3});
  CHECK(Rational::parse("5") == Rational{5, 1});
  CHECK_FALSE(Rational::parse("0.5").has_value());
  CHECK_FALSE(Rational::parse("1/").has_value());
  CHECK(Coupling::parse("1/7").is_exact());
  CHECK(Coupling::parse("1/7").to_string() == "1/7");
  CHECK_FALSE(Coupling::parse("0.25").is_exact());
  CHECK(Coupling::parse("0.25").value() == 0.25);
  CHECK_THROWS_AS(Coupling::parse("abc"), ConfigError);
}

TEST_CASE("resonance roots") {
  auto r = resonance_roots(1.0 / 7.0);
  CHECK(r.c1 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r.c2 == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r.d1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.d2 == doctest::Approx(-1.0).epsilon(1e-14));
  r = resonance_roots(0.5);
  CHECK(r.c1 == doctest::Approx(0.5 + std::sqrt(21.0) / 6.0).epsilon(1e-15));
  CHECK(r.c1 == doctest::Approx(1.26376).epsilon(1e-5));
  CHECK(std::abs(1.5 * r.c1 * r.c1 - 1.5 * r.c1 - 0.5) < 1e-14);
  CHECK_THROWS_AS(resonance_roots(1.0), DomainError);
  CHECK_THROWS_AS(resonance_roots(0.0), DomainError);
  CHECK_THROWS_AS(resonance_roots(2.0), DomainError);
  // Near the excluded endpoint the roots approach 1 and 0.
  r = resonance_roots(1.0 - 1e-9);
  CHECK(r.c1 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(r.c2) < 1e-8);
}

TEST_CASE("root identities hold across (0,1)") {
  for (int i = 1; i < 200; ++i) {
    const double a = i / 200.0;
    const auto r = resonance_roots(a);
    CHECK(std::abs(r.c1 + r.c2 - 1.0) < 1e-12);
    CHECK(std::abs(r.c1 * r.c2 - (a - 1.0) / (3.0 * a)) < 1e-12);
    CHECK(std::abs(r.d1 * r.c1 - 1.0) < 1e-12);
    CHECK(std::abs(r.d2 * r.c2 - 1.0) < 1e-12);
    for (double c : {r.c1, r.c2}) CHECK(std::abs(3 * a * c * c - 3 * a * c + a - 1) < 1e-12);
    for (double d : {r.d1, r.d2}) CHECK(std::abs((1 - a) * d * d + 3 * a * d - 3 * a) < 1e-12 * std::max(1.0, d * d));
    CHECK(r.c1 > 1.0);
    CHECK(r.d1 < 1.0);
    CHECK(r.d1 > 0.0);
    CHECK(r.c2 < 0.0);
    CHECK(r.d2 < 0.0);
  }
}

TEST_CASE("classification examples") {
  const auto a7 = classify(1, 7);
  CHECK(a7.kind == AlphaKind::special_rational);
  CHECK(*a7.p == 2);
  CHECK(*a7.q == 1);
  CHECK(*a7.c1_exact == Rational{2, 1});
  CHECK(*a7.c2_exact == Rational{-1, 1});
  CHECK(*a7.d1_exact == Rational{1, 2});
  CHECK(*a7.d2_exact == Rational{-1, 1});
  CHECK(a7.nu_c1.infinite);
  CHECK(classify(1, 3).kind == AlphaKind::rational_nonspecial);
  CHECK(classify(2, 3).kind == AlphaKind::rational_nonspecial);
  CHECK(classify(1, 2).kind == AlphaKind::rational_nonspecial);
  const auto numeric = classify_alpha(Coupling::numeric(0.5));
  CHECK(numeric.kind == AlphaKind::irrational_numeric);
  REQUIRE(numeric.nearest_special.has_value());
  const auto& ns = *numeric.nearest_special;
  CHECK(ns.value == doctest::Approx(double(ns.q * ns.q) / double(3 * ns.p * (ns.p - ns.q) + ns.q * ns.q)));
  CHECK(ns.distance == doctest::Approx(std::abs(ns.value - 0.5)));
  CHECK_THROWS_AS(classify_alpha(Coupling::numeric(1.0)), DomainError);
  CHECK_THROWS_AS(classify(3, 2), DomainError);
}

TEST_CASE("no rational l/3^k is special") {
  for (std::int64_t den = 3; den <= 3 * 3 * 3 * 3 * 3 * 3; den *= 3) {
    for (std::int64_t num = 1; num < den; ++num) {
      if (std::gcd(num, den) != 1) continue;
      CHECK(classify(num, den).kind == AlphaKind::rational_nonspecial);
    }
  }
}

TEST_CASE("classification agrees with brute force on denominators up to 200") {
  const auto enumerated = oracle::special_by_enumeration(500, 200);
  const std::set<std::pair<std::int64_t, std::int64_t>> special(enumerated.begin(), enumerated.end());
  int mismatches = 0, witness_failures = 0, count = 0;
  for (std::int64_t b = 2; b <= 200; ++b) {
    for (std::int64_t a = 1; a < b; ++a) {
      if (std::gcd(a, b) != 1) continue;
      ++count;
      const auto cls = classify(a, b);
      const bool by_enum = special.count({a, b}) > 0;
      const bool by_disc = oracle::special_by_discriminant(a, b);
      if (cls.is_special() != by_enum || by_enum != by_disc) ++mismatches;
      if (cls.is_special()) {
        const std::int64_t p = *cls.p, q = *cls.q;
        // α = q²/(3p(p-q)+q²) with p > q >= 1, checked by cross-multiplication.
        if (!(p > q && q >= 1 && a * (3 * p * (p - q) + q * q) == b * q * q)) ++witness_failures;
        // Exact roots satisfy the defining quadratics.
        const auto& c1 = *cls.c1_exact;
        const auto& d1 = *cls.d1_exact;
        if (3 * a * c1.num * c1.num - 3 * a * c1.num * c1.den + (a - b) * c1.den * c1.den != 0) ++witness_failures;
        if ((b - a) * d1.num * d1.num + 3 * a * d1.num * d1.den - 3 * a * d1.den * d1.den != 0) ++witness_failures;
      }
    }
  }
  CHECK(count > 12000);
  CHECK(mismatches == 0);
  CHECK(witness_failures == 0);
  CHECK(special.size() > 10);
}

TEST_CASE("continued fractions") {
  const auto g = continued_fraction_expand(golden(), 30);
  for (auto a : g.partial_quotients) CHECK(a == 1);
  CHECK(g.partial_quotients.size() == 30);

  const auto seventh = continued_fraction_expand(1.0 / 7.0, 20);
  CHECK(seventh.terminated);
  CHECK(seventh.partial_quotients == std::vector<std::int64_t>{0, 7});

  const auto r2 = continued_fraction_expand(HighPrecision(boost::multiprecision::sqrt(HighPrecision(2))), 25);
  CHECK(r2.partial_quotients.front() == 1);
  for (std::size_t i = 1; i < r2.partial_quotients.size(); ++i) CHECK(r2.partial_quotients[i] == 2);

  for (const auto& cf : {g, r2, continued_fraction_expand(std::numbers::pi, 12)}) {
    for (std::size_t i = 0; i + 1 < cf.convergents.size(); ++i) {
      const auto& c = cf.convergents[i];
      const auto& next = cf.convergents[i + 1];
      CHECK((next.q > c.q || (i == 0 && next.q == c.q)));
      CHECK(c.error < 1.0 / (static_cast<double>(c.q) * static_cast<double>(next.q)));
    }
  }
}

TEST_CASE("type index proxy") {
  CHECK(type_index_estimate(golden(), 1e6).value < 0.05);
  CHECK(type_index_estimate((1.0 + std::sqrt(5.0)) / 2.0, 1e6).value < 0.05);
  const auto l = type_index_estimate(liouville(4), 1e6);
  CHECK_FALSE(l.infinite);
  CHECK(l.value > 1.0);
  CHECK(type_index_estimate(0.375, 1e6).infinite);
  CHECK(type_index_estimate(HighPrecision(3) / 7, 1e6).infinite);
  CHECK(type_index_estimate(golden(), 1e6).value >= 0.0);
}

TEST_CASE("type index is monotone in q_max") {
  const std::vector<HighPrecision> inputs{golden(), liouville(4),
                                          boost::multiprecision::sqrt(HighPrecision(2)),
                                          HighPrecision(resonance_roots(0.5).c1),
                                          HighPrecision(std::numbers::e)};
  for (const auto& x : inputs) {
    double prev = 0.0;
    for (double q_max : {2.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6}) {
      const auto nu = type_index_estimate(x, q_max);
      CHECK(nu.value >= prev);
      prev = nu.value;
    }
  }
}

TEST_CASE("resonant modes") {
  const auto a7 = classify(1, 7);
  const auto modes = resonant_modes(a7, 5);
  int rho1 = 0, d1 = 0, d2 = 0;
  for (const auto& m : modes) {
    CHECK(m.k != 0);
    CHECK(std::abs(m.k) <= 5);
    CHECK(m.k1 + m.k2 == m.k);
    switch (m.family) {
      case ResonanceFamily::rho1:
        ++rho1;
        CHECK(m.k1 == 2 * m.k);
        CHECK(m.k2 == -m.k);
        CHECK(a7.phi_vanishes(m.k, m.k1));
        break;
      case ResonanceFamily::rho2_d1:
        ++d1;
        CHECK(m.k % 2 == 0);
        CHECK(2 * m.k1 == m.k);
        CHECK(a7.psi_vanishes(m.k, m.k1));
        break;
      case ResonanceFamily::rho2_d2:
        ++d2;
        CHECK(m.k1 == -m.k);
        CHECK(a7.psi_vanishes(m.k, m.k1));
        break;
    }
  }
  CHECK(rho1 == 10);
  CHECK(d1 == 4);
  CHECK(d2 == 10);
  CHECK(resonant_modes(classify_alpha(Coupling::numeric(0.3)), 20).empty());
  CHECK(resonant_modes(classify(1, 2), 20).empty());
}

TEST_CASE("exact vanishing matches integer oracle") {
  for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 7}, {1, 2}, {4, 13}, {1, 3}, {9, 61}}) {
    const auto cls = classify(a, b);
    const auto alpha = oracle::Alpha::of(cls);
    for (int k = -12; k <= 12; ++k) {
      for (int k1 = -30; k1 <= 30; ++k1) {
        CHECK(cls.phi_vanishes(k, k1) == oracle::phi_zero(alpha, k, k1));
        CHECK(cls.psi_vanishes(k, k1) == oracle::psi_zero(alpha, k, k1));
        CHECK(cls.phi(k, k1) == doctest::Approx(static_cast<double>(oracle::phi(alpha, k, k1))));
        CHECK(cls.psi(k, k1) == doctest::Approx(static_cast<double>(oracle::psi(alpha, k, k1))));
      }
    }
  }
}

TEST_CASE("near resonance scan") {
  for (const auto& r : near_resonance_scan(classify(1, 7), 30, 1e-9)) CHECK(r.distance == 0.0);
  CHECK_FALSE(near_resonance_scan(classify(1, 7), 30, 1e-9).empty());

  const auto half = classify_alpha(Coupling::numeric(0.5));
  const auto scan = near_resonance_scan(half, 50, 0.05);
  CHECK_FALSE(scan.empty());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const auto& r = scan[i];
    const double root = r.root == Root::c1   ? half.roots.c1
                        : r.root == Root::c2 ? half.roots.c2
                        : r.root == Root::d1 ? half.roots.d1
                                             : half.roots.d2;
    CHECK(std::abs(r.n - root * r.k) == doctest::Approx(r.distance).epsilon(1e-12));
    CHECK(r.distance < 0.05);
    if (i > 0) CHECK(scan[i - 1].distance <= r.distance);
  }
  CHECK(near_resonance_scan(half, 6, 1e9).size() == 4u * 6u * 13u);
}
