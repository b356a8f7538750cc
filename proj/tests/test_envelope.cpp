#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include "carleman/envelope.hpp"
#include "carleman/flat.hpp"
#include "carleman/sparse.hpp"

using namespace carleman;

namespace {
const WeightSequence& gevrey2() {
    static const WeightSequence seq = WeightSequence::gevrey(2.0, 60);
    return seq;
}

DerivativeNormProfile profile_of(std::vector<double> norms) {
    DerivativeNormProfile p;
    p.norms = std::move(norms);
    return p;
}
} // namespace

TEST_CASE("membership check against exact envelopes", "[envelope]") {
    const WeightSequence m = WeightSequence::factorial(12);
    SECTION("d_k = M_k with beta = B = 1 sits exactly on the envelope") {
        std::vector<double> d;
        for (std::size_t k = 0; k <= 12; ++k) d.push_back(m.value(k));
        const EnvelopeFit fit = check_membership(profile_of(d), m, 1.0, 1.0);
        REQUIRE(fit.feasible);
        REQUIRE(std::abs(fit.slack) <= 1e-12);
    }
    SECTION("d_k = 3 * 2^k * M_k") {
        std::vector<double> d;
        for (std::size_t k = 0; k <= 12; ++k) d.push_back(3.0 * std::ldexp(m.value(k), k));
        REQUIRE(check_membership(profile_of(d), m, 3.0, 2.0).feasible);
        const EnvelopeFit bad = check_membership(profile_of(d), m, 3.0, 1.9);
        REQUIRE(!bad.feasible);
        REQUIRE(bad.argmin_k == 12);   // first failure shows at the largest order
    }
}

TEST_CASE("minimal beta", "[envelope]") {
    const WeightSequence ones = WeightSequence::custom_prefix({1.0, 1.0, 1.0});
    SECTION("examples") {
        const WeightSequence m = WeightSequence::factorial(6);
        std::vector<double> d;
        for (std::size_t k = 0; k <= 6; ++k) d.push_back(m.value(k));
        REQUIRE(minimal_beta(profile_of(d), m, 1.0) == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(minimal_beta(profile_of({1.0, 10.0, 1.0}), ones, 1.0) ==
                Catch::Approx(10.0).epsilon(1e-12));
    }
    SECTION("nonincreasing in B on random profiles") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ud(0.0, 5.0);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> d;
            for (int k = 0; k <= 8; ++k) d.push_back(std::exp(ud(rng)) - 1.0);
            const DerivativeNormProfile p = profile_of(d);
            const double b1 = minimal_beta(p, gevrey2(), 1.3);
            const double b2 = minimal_beta(p, gevrey2(), 2.6);
            REQUIRE(b2 <= b1 * (1.0 + 1e-12));
        }
    }
    SECTION("round trip has slack zero at the arg max") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> ud(-3.0, 6.0);
        for (int t = 0; t < 1000; ++t) {
            std::vector<double> d;
            for (int k = 0; k <= 10; ++k) d.push_back(std::exp(ud(rng)));
            const DerivativeNormProfile p = profile_of(d);
            const double B = std::exp(ud(rng) * 0.2);
            const EnvelopeFit fit = check_membership(p, gevrey2(), minimal_beta(p, gevrey2(), B), B);
            REQUIRE(fit.feasible);
            REQUIRE(std::abs(fit.slack) <= 1e-12);
        }
    }
}

TEST_CASE("low-order extension", "[envelope]") {
    const WeightSequence m = gevrey2();
    SECTION("N = 0 and already-feasible low orders leave beta unchanged") {
        std::vector<double> d;
        for (std::size_t k = 0; k <= 8; ++k) d.push_back(0.5 * m.value(k));
        const DerivativeNormProfile p = profile_of(d);
        REQUIRE(extend_low_orders(p, m, 0, 2.0, 1.0) == 2.0);
        REQUIRE(extend_low_orders(p, m, 4, 2.0, 1.0) == 2.0);
    }
    SECTION("an oversized low order raises beta and restores feasibility") {
        std::vector<double> d;
        for (std::size_t k = 0; k <= 8; ++k) d.push_back(m.value(k));
        d[0] = 5.0 * m.value(0);
        const DerivativeNormProfile p = profile_of(d);
        const double bt = extend_low_orders(p, m, 1, 1.0, 1.0);
        REQUIRE(bt == Catch::Approx(5.0).epsilon(1e-12));
        REQUIRE(check_membership(p, m, bt, 1.0).feasible);
    }
    SECTION("randomized full-range feasibility") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ud(-2.0, 4.0);
        std::uniform_int_distribution<std::size_t> un(0, 9);
        for (int t = 0; t < 1000; ++t) {
            std::vector<double> d;
            for (int k = 0; k <= 10; ++k) d.push_back(std::exp(ud(rng)));
            const DerivativeNormProfile p = profile_of(d);
            const std::size_t N = un(rng);
            const double B = std::exp(0.3 * ud(rng));
            // beta feasible for the tail k >= N
            double beta_tail = std::numeric_limits<double>::min();
            for (std::size_t k = N; k < d.size(); ++k)
                beta_tail = std::max(beta_tail, d[k] / (std::pow(B, k) * m.value(k)));
            const double bt = extend_low_orders(p, m, N, beta_tail, B);
            REQUIRE(check_membership(p, m, bt, B).feasible);
        }
    }
    SECTION("feasibility is monotone in beta and B") {
        std::vector<double> d;
        for (std::size_t k = 0; k <= 8; ++k) d.push_back(m.value(k) * 0.9);
        const DerivativeNormProfile p = profile_of(d);
        REQUIRE(check_membership(p, m, 1.0, 1.0).feasible);
        REQUIRE(check_membership(p, m, 2.5, 1.0).feasible);
        REQUIRE(check_membership(p, m, 1.0, 3.0).feasible);
    }
}

TEST_CASE("measured norms of library objects", "[envelope]") {
    SECTION("constant function") {
        const DerivativeNormProfile p = measure_norms(constant_fn(-2.5), 0.0, 1.0, 4, 64);
        REQUIRE(p.norms[0] == 2.5);
        for (std::size_t k = 1; k <= 4; ++k) REQUIRE(p.norms[k] == 0.0);
        REQUIRE(p.refinement_gap <= 1e-3);
    }
    SECTION("bump never exceeds its own certificate") {
        const FlatSpline b = make_bump(0.0, 2.0, 0.5, gevrey2(), 6);
        const DerivativeNormProfile p = measure_norms(b.derivative_fn(), 0.0, 2.0, 6, 4096);
        for (int k = 0; k <= 6; ++k) {
            REQUIRE(p.norms[k] <= b.bound_table()[k] * (1.0 + 1e-9));
            REQUIRE(p.norms[k] <= b.cascade_bounds()[k] * (1.0 + 1e-9));
        }
        REQUIRE(p.refinement_gap <= 1e-3);
    }
    SECTION("glued map meets the weight bounds") {
        auto reg = std::make_shared<AtomRegistry>(gevrey2(), 6);
        SparsePiecewiseMap h = build_core(reg, 0.25, 1.5, 8);
        extend_infinite(h);
        const DerivativeNormProfile p = measure_norms(h.derivative_fn(), -1.5, 2.0, 6, 4096);
        for (std::size_t k = 1; k <= 6; ++k)
            REQUIRE(p.norms[k] <= gevrey2().value(k) * (1.0 + 1e-9));
    }
    SECTION("unsupported orders and bad intervals are rejected") {
        REQUIRE_THROWS_AS(measure_norms(constant_fn(1.0), 1.0, 0.0, 2), Error);
        const FlatSpline b = make_bump(0.0, 1.0, 1.0, gevrey2(), 4);
        REQUIRE_THROWS_AS(measure_norms(b.derivative_fn(), 0.0, 1.0, 12, 64), Error);
    }
}
