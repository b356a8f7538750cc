#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "carleman/flat.hpp"
#include "carleman/weights.hpp"

namespace carleman {

/** Strictly increasing transition s on [0, delta]: s(0) = 0, s(delta) = end
 *  value, all endpoint derivatives zero at the checked orders, and
 *  ||s^(k)|| <= eps^k M_k for 1 <= k <= certified order (eps = 1/i).
 *
 *  s is the antiderivative of a synthesized bump divided by the rescale
 *  factor max(1, A), where A maxes ||s_0^(k)|| / (eps^k M_k) over the low
 *  orders the ratio chain does not yet cover.
 */
class TransitionFunction {
public:
    const FlatSpline& profile() const { return bump_; }
    double delta() const { return bump_.length(); }
    double epsilon() const { return bump_.epsilon(); }
    double rescale() const { return rescale_; }
    double end_value() const { return end_value_; }
    /// First index N with M'_{k-1}/M'_k < eps for all materialized k >= N
    /// (0 when the drop is beyond the materialized range).
    std::size_t flat_index() const { return flat_index_; }
    int certified_order() const { return certified_order_; }
    /// Certified ||s^(k)|| <= eps^k M_k, k = 0..certified_order.
    const std::vector<double>& bound_table() const { return bound_table_; }

    /// s(x); 0 for x <= 0, end value for x >= delta.
    double value(double x) const {
        return bump_.integral_from_left(x) / rescale_;
    }
    /// end_value - s(x), accurate near the right endpoint.
    double tail(double x) const {
        return bump_.integral_tail(x) / rescale_;
    }
    /// s^(k)(x) for k >= 1 (= b^(k-1)/rescale); k = 0 gives s itself.
    double derivative(double x, int k) const {
        if (k == 0) return value(x);
        return bump_.eval_local(x, k - 1) / rescale_;
    }

    /// Strict order of s(x1) vs s(x2), decided at full relative accuracy by
    /// folding both sides onto the rising half. Returns -1 / 0 / +1.
    int compare_values(double x1, double x2) const {
        const double L = bump_.length(), half = 0.5 * L;
        const double a = std::clamp(x1, 0.0, L), b = std::clamp(x2, 0.0, L);
        if (a == b) return 0;
        if (a <= half && b <= half) return three_way(bump_.integral_from_left(a), bump_.integral_from_left(b));
        if (a >= half && b >= half) return three_way(bump_.integral_tail(b), bump_.integral_tail(a));
        // straddling: s(a) < s(b)  <=>  s(a) + tail(b) < mass
        const double lhs = (a < b) ? bump_.integral_from_left(a) + bump_.integral_tail(b)
                                   : bump_.integral_from_left(b) + bump_.integral_tail(a);
        const int ord = three_way(lhs, bump_.mass());
        return (a < b) ? ord : -ord;
    }

    std::function<double(double, int)> derivative_fn() const {
        TransitionFunction copy = *this;
        return [copy](double x, int k) { return copy.derivative(x, k); };
    }

    friend TransitionFunction make_transition(double delta, long long i, const WeightSequence& seq, int k_max);

private:
    static int three_way(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }

    FlatSpline bump_;
    double rescale_ = 1.0;
    double end_value_ = 0.0;
    std::size_t flat_index_ = 0;
    int certified_order_ = 0;
    std::vector<double> bound_table_;
};

/// First N such that every materialized minorant ratio at or past N is < eps;
/// 0 if the ratios never drop below eps in the materialized range.
inline std::size_t flatness_onset(const WeightSequence& seq, double eps, std::size_t search_limit = 4096) {
    WeightSequence m = seq;
    if (seq.is_closed_form()) {
        std::size_t K = m.max_index();
        ConvexifiedSequence conv = log_convexify(m);
        std::size_t k = 1;
        while (true) {
            if (conv.ratio(k) < eps) return k;
            ++k;
            if (k > conv.max_index()) {
                if (K >= search_limit) return 0;
                K = std::min(search_limit, 2 * K);
                m = m.materialized_to(K);
                conv = log_convexify(m);
            }
        }
    }
    const ConvexifiedSequence conv = log_convexify(m);
    for (std::size_t k = 1; k <= conv.max_index(); ++k)
        if (conv.ratio(k) < eps) return k;   // minorant ratios are nonincreasing
    return 0;
}

/** Build s_{delta,i} on [0, delta] with eps = 1/i, certified to order k_max. */
inline TransitionFunction make_transition(double delta, long long i, const WeightSequence& seq, int k_max = 8) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw SynthesisError("make_transition: delta must be positive");
    if (i < 1) throw SynthesisError("make_transition: flatness index i must be >= 1");
    if (k_max < 1) throw SynthesisError("make_transition: k_max must be >= 1");

    const double eps = 1.0 / static_cast<double>(i);
    TransitionFunction t;
    t.certified_order_ = k_max;
    t.bump_ = make_bump(0.0, delta, eps, seq, std::max(1, k_max - 1));
    t.flat_index_ = flatness_onset(seq, eps);

    const int J = t.bump_.cascade_depth();
    const WeightSequence mseq = seq.materialized_to(static_cast<std::size_t>(J) + 1);
    const double log_eps = std::log(eps);
    const auto target = [&](std::size_t k) {
        return std::exp(static_cast<double>(k) * log_eps + mseq.log_value(k));
    };

    // A over the low orders the ratio chain does not cover: k = 0 uses the
    // mass, k >= 1 the cascade bound of b^(k-1) (valid for every k - 1 <= J).
    // The range also spans the full certified window, so the bound table
    // holds even when the raw sequence is not log-convex; for log-convex
    // inputs the extra terms never move the max. Orders past J stay
    // unchecked (finite-cascade truncation).
    const std::size_t base_upper = (t.flat_index_ == 0)
        ? static_cast<std::size_t>(J)
        : std::min<std::size_t>(t.flat_index_ - 1, static_cast<std::size_t>(J));
    const std::size_t upper = std::max(base_upper, static_cast<std::size_t>(k_max));
    double A = t.bump_.mass() / target(0);
    for (std::size_t k = 1; k <= upper; ++k)
        A = std::max(A, t.bump_.cascade_bounds()[k - 1] / target(k));

    t.rescale_ = std::max(1.0, A);
    t.end_value_ = t.bump_.mass() / t.rescale_;

    t.bound_table_.resize(static_cast<std::size_t>(k_max) + 1);
    t.bound_table_[0] = t.end_value_;
    for (int k = 1; k <= k_max; ++k)
        t.bound_table_[static_cast<std::size_t>(k)] = target(static_cast<std::size_t>(k));
    return t;
}

/// end value y(delta, i) = s_{delta,i}(delta).
inline double end_value(const TransitionFunction& t) { return t.end_value(); }

} // namespace carleman
