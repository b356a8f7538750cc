#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "carleman/wetzel.hpp"
#include "oracles.hpp"

using namespace carleman;

namespace {
const WeightSequence& gevrey2() {
    static const WeightSequence seq = WeightSequence::gevrey(2.0, 60);
    return seq;
}
} // namespace

TEST_CASE("middle-thirds bookkeeping", "[wetzel]") {
    const CantorApprox c3 = cantor_approx(3);
    REQUIRE(c3.gaps.size() == 7);          // 2^3 - 1
    REQUIRE(c3.endpoints.size() == 16);    // 2^4
    for (std::size_t t = 0; t + 1 < c3.gaps.size(); ++t)
        REQUIRE(c3.gaps[t].hi() <= c3.gaps[t + 1].lo());   // disjoint, sorted
    REQUIRE(c3.gaps.front().lo() > 0.0);
    REQUIRE(c3.gaps.back().hi() < 1.0);
    REQUIRE(std::is_sorted(c3.endpoints.begin(), c3.endpoints.end()));
    REQUIRE_THROWS_AS(cantor_approx(0), Error);
    REQUIRE_THROWS_AS(cantor_approx(13), Error);
}

TEST_CASE("flat-on-cantor vanishing and positivity", "[wetzel]") {
    const FlatOnCantorFunction g = build_flat_on_cantor(gevrey2(), 4, 6);
    REQUIRE(g.eval(0.0) == 0.0);
    REQUIRE(g.eval(2.0) == 0.0);
    REQUIRE(g.eval(-1.0) == 0.0);
    REQUIRE(g.eval(0.5) > 0.0);            // center of the first removed gap
    for (const CantorGap& gap : g.cantor().gaps) REQUIRE(g.eval(gap.mid()) > 0.0);
    for (double e : g.cantor().endpoints) REQUIRE(g.eval(e) == 0.0);
    REQUIRE_THROWS_AS(build_flat_on_cantor(WeightSequence::factorial(30), 3, 4), SynthesisError);
}

TEST_CASE("family-wide envelope beta = 1, B = 1/3", "[wetzel]") {
    const FlatOnCantorFunction g = build_flat_on_cantor(gevrey2(), 4, 6);
    const WeightSequence& m = gevrey2();
    for (int k = 0; k <= 6; ++k) {
        double smax = 0.0;
        for (int t = 0; t <= 20000; ++t) {
            const double x = t / 20000.0;
            smax = std::max(smax, std::abs(g.eval(x, k)));
        }
        REQUIRE(smax <= std::pow(g.big_b(), k) * m.value(k) * (1.0 + 1e-9));
    }
}

TEST_CASE("flatness at level endpoints", "[wetzel]") {
    const FlatOnCantorFunction g = build_flat_on_cantor(gevrey2(), 4, 6);
    const WeightSequence& m = gevrey2();
    const double h = std::pow(3.0, -4) / 64.0;
    for (std::size_t t = 0; t < g.cantor().endpoints.size(); t += 3) {
        const double e = g.cantor().endpoints[t];
        for (int k = 1; k <= 4; ++k) {
            const double bound = std::pow(1.0 / 3.0, k) * m.value(k);
            const double fdr = oracles::forward_diff([&](double z) { return g.eval(z); }, e, k, h);
            const double fdl = oracles::forward_diff([&](double z) { return g.eval(z); }, e, k, -h);
            REQUIRE(std::abs(fdr) <= 1e-6 * bound);
            REQUIRE(std::abs(fdl) <= 1e-6 * bound);
        }
    }
}

TEST_CASE("family members window the shared profile", "[wetzel]") {
    const FlatOnCantorFunction g = build_flat_on_cantor(gevrey2(), 4, 6);
    const auto& eps = g.cantor().endpoints;

    SECTION("windowing semantics") {
        const TwoValuedMember f = family_member(g, eps[2], eps[9]);
        REQUIRE(f.eval(g, eps[2] - 0.25) == 0.0);                  // x < a
        REQUIRE(f.eval(g, eps[9] + 0.25) == 0.0);                  // x > b
        const double inside_gap = g.cantor().gaps[2].mid();
        if (inside_gap > eps[2] && inside_gap < eps[9])
            REQUIRE(f.eval(g, inside_gap) == g.eval(inside_gap));  // equals g inside
    }
    SECTION("full window reproduces g") {
        const TwoValuedMember f = family_member(g, 0.0, 1.0);
        for (int t = 0; t <= 500; ++t) {
            const double x = t / 500.0;
            REQUIRE(f.eval(g, x) == g.eval(x));
        }
    }
    SECTION("non-endpoints are rejected") {
        REQUIRE_THROWS_AS(family_member(g, 0.1234, 0.9), Error);
        REQUIRE_THROWS_AS(family_member(g, 0.5, 0.25), Error);
    }
}

TEST_CASE("two-valued property over the full level-4 family", "[wetzel]") {
    const FlatOnCantorFunction g = build_flat_on_cantor(gevrey2(), 4, 6);
    const auto& eps = g.cantor().endpoints;
    std::vector<TwoValuedMember> family;
    for (std::size_t i = 0; i < eps.size(); ++i)
        for (std::size_t j = i + 1; j < eps.size(); ++j)
            if (eps[i] < eps[j]) family.push_back(family_member(g, eps[i], eps[j]));
    REQUIRE(family.size() >= 100);

    const TwoValueCheck chk = two_value_check(g, family, -0.1, 1.1, 10000);
    REQUIRE(chk.pass);
    REQUIRE(chk.worst_deviation <= 1e-12);

    // a singleton family is trivially two-valued
    const TwoValueCheck solo = two_value_check(g, {family.front()}, 0.0, 1.0, 100);
    REQUIRE(solo.pass);
}

TEST_CASE("distinct gap ranges are separated somewhere", "[wetzel]") {
    const FlatOnCantorFunction g = build_flat_on_cantor(gevrey2(), 5, 6);
    const auto& eps = g.cantor().endpoints;
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<std::size_t> pick(0, eps.size() - 1);
    std::vector<TwoValuedMember> family;
    std::set<std::pair<long long, long long>> keys;
    while (family.size() < 60) {
        std::size_t i = pick(rng), j = pick(rng);
        if (eps[i] >= eps[j]) continue;
        TwoValuedMember f = family_member(g, eps[i], eps[j]);
        if (f.first_gap < 0) continue;
        if (!keys.insert({f.first_gap, f.last_gap}).second) continue;
        family.push_back(f);
    }
    std::uniform_int_distribution<std::size_t> pair_pick(0, family.size() - 1);
    for (int t = 0; t < 100; ++t) {
        std::size_t i = pair_pick(rng), j = pair_pick(rng);
        if (i == j) continue;
        const auto x = separating_point(g, family[i], family[j]);
        REQUIRE(x.has_value());
        const double vi = family[i].eval(g, *x), vj = family[j].eval(g, *x);
        REQUIRE(std::abs(vi - vj) > 0.0);
    }
}

TEST_CASE("equalizer demo isolates coincidence points", "[wetzel][equalizer]") {
    SECTION("sin vs cos on a full period") {
        const auto far = constant_fn(10.0);   // third function never interferes
        const EqualizerReport rep = equalizer_demo(
            sinusoid(1, 1, 0), sinusoid(1, 1, 0.5 * std::numbers::pi_v<double>), far,
            0.0, 2.0 * std::numbers::pi_v<double>, 4096);
        REQUIRE(rep.points.size() == 2);
        REQUIRE(rep.points[0].x == Catch::Approx(std::numbers::pi_v<double> / 4).margin(1e-9));
        REQUIRE(rep.points[1].x == Catch::Approx(5 * std::numbers::pi_v<double> / 4).margin(1e-9));
        REQUIRE(rep.min_separation == Catch::Approx(std::numbers::pi_v<double>).margin(1e-9));
        REQUIRE(!rep.degenerate);
        // oracle: the roots of sin - cos by direct bisection
        const auto diff = [](double x) { return std::sin(x) - std::cos(x); };
        REQUIRE(rep.points[0].x ==
                Catch::Approx(oracles::bisect_root(diff, 0.0, 2.0)).margin(1e-9));
    }
    SECTION("identical pair flags the degenerate case") {
        const AnalyticTriple tri = analytic_triple("degenerate");
        const EqualizerReport rep = equalizer_demo(tri.f1, tri.f2, tri.f3, 0.0, 6.0, 2048);
        REQUIRE(rep.degenerate);
        REQUIRE(rep.degenerate_pairs == std::vector<std::pair<int, int>>{{1, 2}});
    }
    SECTION("three distinct sinusoids give a union of discrete sets") {
        const AnalyticTriple tri = analytic_triple("sinusoids");
        const EqualizerReport rep =
            equalizer_demo(tri.f1, tri.f2, tri.f3, 0.0, 2.0 * std::numbers::pi_v<double>, 8192);
        REQUIRE(!rep.degenerate);
        REQUIRE(rep.points.size() >= 6);
        REQUIRE(rep.min_separation > 1e-3);
        std::set<std::pair<int, int>> pairs;
        for (const auto& p : rep.points) pairs.insert({p.pair_first, p.pair_second});
        REQUIRE(pairs.size() == 3);   // every pair contributes its own discrete set
    }
}
