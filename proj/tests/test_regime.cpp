#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "arpersist/regime.hpp"
#include "oracles.hpp"

using namespace arp;

namespace {

Regime from_zeros(std::vector<ZeroEntry> e) { return classify(spectral_summary(make_zero_set(std::move(e)))); }

}  // namespace

TEST_CASE("six worked polynomials") {
  const auto t0 = std::chrono::steady_clock::now();
  auto rw = classify(GeneratingPolynomial({1.0}));
  CHECK(rw.tag == RegimeTag::ApproxIRW);
  CHECK(regime_letter(rw.tag) == 'e');
  CHECK_FALSE(rw.alpha);

  auto st = classify(GeneratingPolynomial({-1.0, 1.0, 1.0}));
  CHECK(st.tag == RegimeTag::StretchedExponential);
  REQUIRE(st.alpha);
  CHECK(*st.alpha == doctest::Approx(0.5));

  auto po = classify(GeneratingPolynomial(oracle::coeffs_from_roots({2.0, -2.0, -2.0})));
  CHECK(po.tag == RegimeTag::PolynomialOscillatory);
  REQUIRE(po.alpha);
  CHECK(*po.alpha == doctest::Approx(1.0));

  CHECK(classify(GeneratingPolynomial({0.5})).tag == RegimeTag::Exponential);
  CHECK(classify(GeneratingPolynomial({-1.0})).tag == RegimeTag::Exponential);
  CHECK(classify(GeneratingPolynomial({2.0})).tag == RegimeTag::Constant);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 1.0);
}

TEST_CASE("regime letters, names and decay models") {
  CHECK(regime_letter(RegimeTag::Constant) == 'a');
  CHECK(regime_letter(RegimeTag::Exponential) == 'b');
  CHECK(regime_letter(RegimeTag::StretchedExponential) == 'c');
  CHECK(regime_letter(RegimeTag::PolynomialOscillatory) == 'd');
  CHECK(regime_letter(RegimeTag::ApproxIRW) == 'e');

  CHECK(decay_model(classify(GeneratingPolynomial({2.0}))) == DecayModel::BoundedBelow);
  CHECK(decay_model(classify(GeneratingPolynomial({0.5}))) == DecayModel::Exponential);
  CHECK(decay_model(classify(GeneratingPolynomial({-1.0}))) == DecayModel::Exponential);
  CHECK(decay_model(classify(GeneratingPolynomial({-1.0, 1.0, 1.0}))) == DecayModel::Stretched);
  CHECK(decay_model(classify(GeneratingPolynomial(oracle::coeffs_from_roots({2.0, -2.0, -2.0})))) ==
        DecayModel::PowerLaw);
  CHECK(decay_model(classify(GeneratingPolynomial({1.0}))) == DecayModel::PowerLaw);

  for (auto m : {DecayModel::PowerLaw, DecayModel::Exponential, DecayModel::Stretched, DecayModel::BoundedBelow})
    CHECK(parse_decay_model(to_string(m)) == m);
  CHECK_FALSE(parse_decay_model("quadratic"));
  CHECK(to_string(RegimeTag::ApproxIRW) == "ApproxIRW");
}

TEST_CASE("exact zero sets classify without root finding") {
  auto r = from_zeros({{1.0, 2}, {-1.0, 3}});
  CHECK(r.tag == RegimeTag::StretchedExponential);
  CHECK(*r.alpha == doctest::Approx(1.0 / 3.0));
  auto d = from_zeros({{3.0, 1}, {cplx(0, 3), 3}});
  CHECK(d.tag == RegimeTag::PolynomialOscillatory);
  // (3-1)(3-1+1)/2 for each of the conjugate pair
  CHECK(*d.alpha == doctest::Approx(6.0));
  CHECK(from_zeros({{1.0, 2}, {-1.0, 2}}).tag == RegimeTag::ApproxIRW);
  CHECK(from_zeros({{2.0, 2}, {cplx(0, 2), 1}}).tag == RegimeTag::Constant);
  CHECK(from_zeros({{cplx(0, 2), 1}, {0.5, 1}}).tag == RegimeTag::Exponential);
}

TEST_CASE("near-critical band") {
  auto inside = classify(spectral_summary(make_zero_set({{1.0 + 1e-10, 1}})));
  CHECK(inside.tag == RegimeTag::ApproxIRW);
  CHECK(inside.near_critical);
  CHECK_FALSE(inside.warnings.empty());

  auto outside = classify(spectral_summary(make_zero_set({{1.0 + 1e-7, 1}})));
  CHECK(outside.tag == RegimeTag::Constant);
  CHECK_FALSE(outside.near_critical);

  // root-found sets get the wider band
  auto found = classify(GeneratingPolynomial({1.0 + 1e-7}));
  CHECK(found.tag == RegimeTag::ApproxIRW);
  CHECK(found.near_critical);

  ClassifyOptions tight;
  tight.critical_band = 0.0;
  CHECK(classify(GeneratingPolynomial({1.0 + 1e-7}), tight).tag == RegimeTag::Constant);
  CHECK(classify(GeneratingPolynomial({1.0}), tight).tag == RegimeTag::ApproxIRW);
}

TEST_CASE("property: the five predicates partition random zero sets") {
  std::mt19937_64 g(2718);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double moduli[] = {0.5, 1.0, 2.0};
  int seen[5] = {0, 0, 0, 0, 0};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ZeroEntry> e;
    const int k = 1 + static_cast<int>(g() % 4);
    for (int i = 0; i < k; ++i) {
      const double r = moduli[g() % 3];
      const int m = 1 + static_cast<int>(g() % 3);
      const double u = U(g);
      cplx z = u < 0.3 ? cplx(r) : u < 0.5 ? cplx(-r) : std::polar(r, 0.2 + 2.7 * U(g));
      bool dup = false;
      for (const auto& x : e) dup = dup || std::abs(x.root - z) < 1e-3 || std::abs(std::conj(x.root) - z) < 1e-3;
      if (!dup) e.push_back({z, m});
    }
    auto s = spectral_summary(make_zero_set(e));
    // predicates evaluated from the raw entries
    double rs = 0.0;
    for (const auto& x : make_zero_set(e).entries) rs = std::max(rs, std::abs(x.root));
    int mstar = 0, mr = 0;
    for (const auto& x : make_zero_set(e).entries)
      if (std::abs(std::abs(x.root) - rs) < 1e-12) {
        mstar = std::max(mstar, x.mult);
        if (std::abs(x.root.imag()) < 1e-12 && x.root.real() > 0) mr = x.mult;
      }
    const bool crit = std::abs(rs - 1.0) <= 1e-9, big = rs > 1.0 + 1e-9, small = rs < 1.0 - 1e-9;
    const bool pa = big && mr == mstar;
    const bool pb = small || mr == 0;
    const bool pc = crit && mr >= 1 && mr < mstar;
    const bool pd = big && mr >= 1 && mr < mstar;
    const bool pe = crit && mr == mstar;
    CHECK(pa + pb + pc + pd + pe == 1);
    auto r = classify(s);
    RegimeTag expect = pa ? RegimeTag::Constant
                       : pb ? RegimeTag::Exponential
                       : pc ? RegimeTag::StretchedExponential
                       : pd ? RegimeTag::PolynomialOscillatory
                            : RegimeTag::ApproxIRW;
    CHECK(r.tag == expect);
    seen[static_cast<int>(r.tag)]++;
    if (r.tag == RegimeTag::StretchedExponential) {
      REQUIRE(r.alpha);
      CHECK(*r.alpha > 0.0);
      CHECK(*r.alpha < 1.0);
      CHECK(*r.alpha == doctest::Approx(1.0 - static_cast<double>(mr) / mstar));
    } else if (r.tag == RegimeTag::PolynomialOscillatory) {
      REQUIRE(r.alpha);
      double a = 0.0;
      for (const auto& x : make_zero_set(e).entries)
        if (std::abs(std::abs(x.root) - rs) < 1e-12 && x.mult > mr) a += 0.5 * (x.mult - mr) * (x.mult - mr + 1);
      CHECK(*r.alpha > 0.0);
      CHECK(*r.alpha == doctest::Approx(a));
    } else {
      CHECK_FALSE(r.alpha);
    }
    // relabelling: reversing entry order changes nothing
    std::vector<ZeroEntry> rev(e.rbegin(), e.rend());
    auto r2 = classify(spectral_summary(make_zero_set(rev)));
    CHECK(r2.tag == r.tag);
    CHECK(r2.alpha.value_or(-1) == doctest::Approx(r.alpha.value_or(-1)));
  }
  for (int t = 0; t < 5; ++t) CHECK(seen[t] > 0);
}

TEST_CASE("ar3_angle") {
  auto th = ar3_angle(find_roots(GeneratingPolynomial({1.0, -1.0, 1.0})));
  REQUIRE(th);
  CHECK(*th == doctest::Approx(oracle::pi / 2));
  auto th2 = ar3_angle(make_zero_set({{1.0, 1}, {std::polar(1.0, 2.0), 1}}));
  REQUIRE(th2);
  CHECK(*th2 == doctest::Approx(2.0));
  CHECK_FALSE(ar3_angle(find_roots(GeneratingPolynomial({1.0}))));
  CHECK_FALSE(ar3_angle(find_roots(GeneratingPolynomial({-1.0, 1.0, 1.0}))));
  CHECK_FALSE(ar3_angle(make_zero_set({{1.0, 1}, {std::polar(1.1, 2.0), 1}})));
  CHECK_FALSE(ar3_angle(make_zero_set({{0.9, 1}, {std::polar(1.0, 2.0), 1}})));
}
