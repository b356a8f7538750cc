#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "carleman/transition.hpp"
#include "oracles.hpp"

using namespace carleman;

namespace {
const WeightSequence& gevrey2() {
    static const WeightSequence seq = WeightSequence::gevrey(2.0, 60);
    return seq;
}
} // namespace

TEST_CASE("transition endpoint behavior", "[transition]") {
    const TransitionFunction s = make_transition(1.0, 1, gevrey2(), 8);
    REQUIRE(s.value(0.0) == 0.0);                       // exactly
    REQUIRE(s.value(1.0) == s.end_value());
    REQUIRE(s.end_value() > 0.0);
    REQUIRE(s.derivative(0.0, 1) == 0.0);               // s' = b vanishes at both ends
    REQUIRE(s.derivative(1.0, 1) == 0.0);
    REQUIRE(s.tail(0.0) == s.end_value());
    REQUIRE(s.tail(1.0) == 0.0);
}

TEST_CASE("flatness onset index", "[transition]") {
    // gevrey(2) ratios are 1/k^2: first k with 1/k^2 < 1/i
    REQUIRE(make_transition(1.0, 1, gevrey2(), 6).flat_index() == 2);
    REQUIRE(make_transition(1.0, 5, gevrey2(), 6).flat_index() == 3);
    REQUIRE(make_transition(1.0, 17, gevrey2(), 6).flat_index() == 5);
}

TEST_CASE("rescale stays at one when the low orders already fit", "[transition]") {
    const TransitionFunction s = make_transition(1.0, 1, gevrey2(), 8);
    REQUIRE(s.rescale() == 1.0);
    REQUIRE(s.end_value() == s.profile().mass());
}

TEST_CASE("rescale divides out an A > 1 low-order excess", "[transition]") {
    // On a wide interval the widths are uncapped, the raw profile integrates
    // to a mass far above M_0, and A is the order-0 ratio mass / M_0. The
    // rescaled transition then tops out at M_0 exactly.
    const TransitionFunction s = make_transition(32.0, 2, gevrey2(), 8);
    REQUIRE(s.profile().mass() > 10.0);
    REQUIRE(s.rescale() == Catch::Approx(s.profile().mass()).epsilon(1e-9));
    REQUIRE(s.end_value() == Catch::Approx(1.0).epsilon(1e-9));      // M_0 = 1
    // and the rescaled profile meets the low-order bounds
    for (int k = 1; k <= 2; ++k) {
        double smax = 0.0;
        for (int t = 0; t <= 4000; ++t)
            smax = std::max(smax, std::abs(s.derivative(32.0 * t / 4000.0, k)));
        REQUIRE(smax <= std::pow(0.5, k) * gevrey2().value(k) * (1.0 + 1e-9));
    }
}

TEST_CASE("rescaled derivative bounds across flatness indices", "[transition]") {
    const WeightSequence m = gevrey2();
    for (long long i : {1LL, 2LL, 5LL}) {
        const TransitionFunction s = make_transition(1.0, i, m, 8);
        for (int k = 1; k <= 8; ++k) {
            const double bound = std::pow(1.0 / i, k) * m.value(k);
            double smax = 0.0;
            for (int t = 0; t <= 4000; ++t)
                smax = std::max(smax, std::abs(s.derivative(t / 4000.0, k)));
            REQUIRE(smax <= bound * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("strict monotonicity decided on the folded profile", "[transition]") {
    const TransitionFunction s = make_transition(1.0, 2, gevrey2(), 8);
    const std::size_t n = 10000;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const double x1 = static_cast<double>(t) / (n - 1);
        const double x2 = static_cast<double>(t + 1) / (n - 1);
        REQUIRE(s.compare_values(x1, x2) < 0);
    }
    REQUIRE(s.compare_values(0.5, 0.5) == 0);
    REQUIRE(s.compare_values(0.9, 0.1) > 0);
}

TEST_CASE("end value obeys the mean-value bound and the quadrature oracle", "[transition]") {
    for (long long i : {1LL, 3LL}) {
        const TransitionFunction s = make_transition(2.0, i, gevrey2(), 6);
        REQUIRE(end_value(s) <= 2.0 * (1.0 / i) * gevrey2().value(1) * (1.0 + 1e-12));
        const double q = oracles::simpson([&](double x) { return s.derivative(x, 1); }, 0.0, 2.0, 100000);
        REQUIRE(q == Catch::Approx(s.end_value()).epsilon(1e-8));
    }
}

TEST_CASE("endpoint flatness of the transition", "[transition]") {
    const WeightSequence m = gevrey2();
    for (long long i : {1LL, 2LL, 5LL}) {
        const TransitionFunction s = make_transition(1.0, i, m, 8);
        const double h = std::ldexp(1.0, -20);
        for (int k = 1; k <= 4; ++k) {
            const double bound = std::pow(1.0 / i, k) * m.value(k);
            const double left =
                oracles::forward_diff([&](double z) { return s.value(z); }, 0.0, k, h);
            // right endpoint estimated on the tail so the flat values resolve
            const double right =
                oracles::forward_diff([&](double z) { return -s.tail(z); }, 1.0, k, -h);
            REQUIRE(std::abs(left) <= 1e-6 * bound);
            REQUIRE(std::abs(right) <= 1e-6 * bound);
        }
    }
}

TEST_CASE("transition input validation", "[transition]") {
    REQUIRE_THROWS_AS(make_transition(0.0, 1, gevrey2(), 4), SynthesisError);
    REQUIRE_THROWS_AS(make_transition(1.0, 0, gevrey2(), 4), SynthesisError);
    REQUIRE_THROWS_AS(make_transition(1.0, 1, WeightSequence::factorial(30), 4), SynthesisError);
}
