#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "carleman/weights.hpp"
#include "oracles.hpp"

using namespace carleman;

TEST_CASE("log_convexify pins the stated examples", "[weights]") {
    SECTION("spike collapses to the chord") {
        const auto conv = log_convexify(WeightSequence::custom_prefix({1.0, 10.0, 1.0}));
        REQUIRE(conv.minorant(0) == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(conv.minorant(1) == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(conv.minorant(2) == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(conv.hull_vertices == std::vector<std::size_t>{0, 2});
    }
    SECTION("factorial is already log-convex") {
        const auto seq = WeightSequence::factorial(10);
        const auto conv = log_convexify(seq);
        for (std::size_t k = 0; k <= 10; ++k)
            REQUIRE(conv.minorant_log(k) == Catch::Approx(seq.log_value(k)).margin(1e-12));
        REQUIRE(conv.hull_vertices.size() == 11);  // strictly convex: every point a vertex
    }
    SECTION("constant sequence: interior collinear points are not vertices") {
        const auto conv = log_convexify(WeightSequence::custom_prefix({1.0, 1.0, 1.0}));
        REQUIRE(conv.hull_vertices == std::vector<std::size_t>{0, 2});
        REQUIRE(conv.minorant(1) == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("weight sequence validation", "[weights]") {
    REQUIRE_THROWS_AS(WeightSequence::custom_prefix({1.0, -2.0, 1.0}), InvalidSequenceError);
    REQUIRE_THROWS_AS(WeightSequence::custom_prefix({1.0, 0.0, 1.0}), InvalidSequenceError);
    REQUIRE_THROWS_AS(WeightSequence::custom_prefix({1.0, 2.0}), InvalidSequenceError);
    REQUIRE_THROWS_AS(WeightSequence::gevrey(-1.0, 10), InvalidSequenceError);
    // closed forms materialize on demand; customs cannot grow
    REQUIRE(WeightSequence::factorial(5).materialized_to(20).max_index() == 20);
    REQUIRE_THROWS_AS(WeightSequence::custom_prefix({1.0, 1.0, 1.0}).materialized_to(9),
                      InvalidSequenceError);
}

TEST_CASE("carleman partial sums match independent series oracles", "[weights]") {
    SECTION("factorial: harmonic numbers") {
        const auto conv = log_convexify(WeightSequence::factorial(100));
        const double h100 = oracles::p_series_sum(100, 1.0);
        REQUIRE(carleman_partial_sum(conv, 100) == Catch::Approx(h100).margin(1e-9));
        REQUIRE(carleman_partial_sum(conv, 100) == Catch::Approx(5.187377517639621).margin(1e-9));
        REQUIRE(carleman_partial_sum(conv, 0) == 0.0);
        REQUIRE_THROWS_AS(carleman_partial_sum(conv, 101), InvalidSequenceError);
    }
    SECTION("gevrey(2): p-series with p = 2") {
        const auto conv = log_convexify(WeightSequence::gevrey(2.0, 20000));
        REQUIRE(carleman_partial_sum(conv, 20000) ==
                Catch::Approx(oracles::p_series_sum(20000, 2.0)).margin(1e-9));
    }
    SECTION("monotone in K") {
        const auto conv = log_convexify(WeightSequence::gevrey(2.0, 200));
        double prev = 0.0;
        for (std::size_t K = 0; K <= 200; K += 20) {
            const double s = carleman_partial_sum(conv, K);
            REQUIRE(s >= prev);
            prev = s;
        }
    }
}

TEST_CASE("classification verdicts", "[weights]") {
    SECTION("closed forms use the exact convergence rule") {
        const auto vf = classify(WeightSequence::factorial(50));
        REQUIRE(vf.verdict == QAVerdict::QuasiAnalytic);
        REQUIRE(vf.basis == VerdictBasis::ExactRule);

        const auto vg = classify(WeightSequence::gevrey(2.0, 50));
        REQUIRE(vg.verdict == QAVerdict::NonQuasiAnalytic);
        REQUIRE(vg.basis == VerdictBasis::ExactRule);

        REQUIRE(classify(WeightSequence::gevrey(1.0, 50)).verdict == QAVerdict::QuasiAnalytic);
        REQUIRE(classify(WeightSequence::power(3.0, 50)).verdict == QAVerdict::QuasiAnalytic);
    }
    SECTION("short custom prefix is undetermined") {
        const auto v = classify(WeightSequence::custom_prefix({1.0, 2.0, 5.0}));
        REQUIRE(v.verdict == QAVerdict::Undetermined);
        REQUIRE(v.basis == VerdictBasis::HeuristicTail);
    }
    SECTION("custom prefixes get a tail heuristic, never an exact rule") {
        std::vector<double> fac, gev;
        for (int k = 0; k <= 60; ++k) {
            fac.push_back(std::exp(std::lgamma(k + 1.0)));
            gev.push_back(std::exp(2.0 * std::lgamma(k + 1.0)));
        }
        const auto vf = classify(WeightSequence::custom_prefix(fac));
        REQUIRE(vf.verdict == QAVerdict::QuasiAnalytic);
        REQUIRE(vf.basis == VerdictBasis::HeuristicTail);
        const auto vg = classify(WeightSequence::custom_prefix(gev));
        REQUIRE(vg.verdict == QAVerdict::NonQuasiAnalytic);
        REQUIRE(vg.basis == VerdictBasis::HeuristicTail);
    }
}

TEST_CASE("hull properties on random sequences against the chord oracle", "[weights][property]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> logval(-10.0, 10.0);
    std::uniform_int_distribution<std::size_t> len(3, 21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> vals;
        const std::size_t n = len(rng);
        for (std::size_t k = 0; k < n; ++k) vals.push_back(std::exp(logval(rng)));
        const auto seq = WeightSequence::custom_prefix(vals);
        const auto conv = log_convexify(seq);

        // minorant dominance and log-convexity
        for (std::size_t k = 0; k < n; ++k)
            REQUIRE(conv.minorant_log(k) <= seq.log_value(k) + 1e-12);
        for (std::size_t k = 1; k + 1 < n; ++k)
            REQUIRE(2.0 * conv.minorant_log(k) <=
                    conv.minorant_log(k - 1) + conv.minorant_log(k + 1) + 1e-10);

        // vertices touch the data exactly
        for (std::size_t v : conv.hull_vertices)
            REQUIRE(conv.minorant_log(v) == seq.log_value(v));

        // oracle agreement
        const auto oracle_v = oracles::chord_hull_vertices(seq.log_values());
        REQUIRE(conv.hull_vertices == oracle_v);
        const auto oracle_h = oracles::chord_lower_hull(seq.log_values());
        for (std::size_t k = 0; k < n; ++k)
            REQUIRE(conv.minorant_log(k) == Catch::Approx(oracle_h[k]).margin(1e-9));

        // idempotence
        std::vector<double> minorant_vals;
        for (std::size_t k = 0; k < n; ++k) minorant_vals.push_back(conv.minorant(k));
        const auto conv2 = log_convexify(WeightSequence::custom_prefix(minorant_vals));
        for (std::size_t k = 0; k < n; ++k)
            REQUIRE(conv2.minorant_log(k) == Catch::Approx(conv.minorant_log(k)).margin(1e-12));
    }
}
