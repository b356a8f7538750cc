#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "carleman/errors.hpp"
#include "carleman/piecewise.hpp"
#include "carleman/weights.hpp"

namespace carleman {

/** Smooth bump synthesized as a cascade of centered box convolutions.
 *
 *  b = c * (chi_{w0} * u_{a_1} * ... * u_{a_J}) translated onto [left, left+length]:
 *  chi_{w0} is a box of height 1 and width w0, each u_a a unit-mass box of
 *  width a. The cascade is positive inside its support, identically zero
 *  outside, and C^{J-2} at the checked orders. Differentiating through one
 *  box kernel replaces it by a centered difference, so
 *
 *      b^(k)(x) = c * D_{a_1} ... D_{a_k} [cascade without kernels 1..k](x),
 *      D_a g(x) = (g(x + a/2) - g(x - a/2)) / a,
 *
 *  which gives the certified bound  ||b^(k)|| <= c * 2^k / (a_1...a_k).
 *  The amplitude is chosen maximal (with a tiny safety shave) subject to
 *  c * 2^k / (a_1...a_k) <= eps^k M_k for all k up to the certified order,
 *  so every checked derivative obeys the target envelope analytically.
 *
 *  Widths are exact multiples of a power-of-two grid unit; all breakpoint
 *  arithmetic is integer-exact. Evaluation folds onto the left half of the
 *  (symmetric) support so the extremely flat tails keep full relative
 *  accuracy near both endpoints.
 */
class FlatSpline {
public:
    double left() const { return left_; }
    double length() const { return length_; }
    double right() const { return left_ + length_; }   // display only; local arithmetic is exact
    double epsilon() const { return epsilon_; }
    const std::vector<double>& widths() const { return widths_; }
    double base_width() const { return base_width_; }
    double amplitude() const { return amplitude_; }
    int cascade_depth() const { return static_cast<int>(widths_.size()); }
    int certified_order() const { return certified_order_; }

    /// Target bounds eps^k M_k, k = 0..certified_order.
    const std::vector<double>& bound_table() const { return bound_table_; }
    /// Sharper constructive bounds c 2^k / (a_1..a_k), k = 0..cascade_depth.
    const std::vector<double>& cascade_bounds() const { return cascade_bounds_; }
    /// Ideal (uncapped) width schedule (2/eps) M'_{j-1}/M'_j, for diagnostics.
    const std::vector<double>& ideal_widths() const { return ideal_widths_; }

    /// Integral of b over the support (exact: amplitude * w0, accumulated).
    double mass() const { return mass_; }

    /// k-th derivative at x; exactly zero outside the open support.
    double eval(double x, int k = 0) const {
        if (k < 0 || k > cascade_depth() - 2)
            throw Error("FlatSpline::eval: derivative order " + std::to_string(k) +
                        " exceeds cascade smoothness C^" + std::to_string(cascade_depth() - 2));
        const double xl = x - left_;
        if (!(xl > 0.0) || !(xl < length_)) return 0.0;
        return eval_local(xl, k);
    }

    /// Same, with x already relative to the left endpoint.
    double eval_local(double xl, int k = 0) const {
        if (!(xl > 0.0) || !(xl < length_)) return 0.0;
        if (k == 0) return eval_folded(snapshots_[0], xl);
        double sum = 0.0;
        const std::uint32_t n = 1u << k;
        for (std::uint32_t bits = 0; bits < n; ++bits) {
            double off = 0.0;
            int parity = 0;
            for (int j = 0; j < k; ++j) {
                if (bits & (1u << j)) { off += half_widths_[static_cast<std::size_t>(j)]; }
                else { off -= half_widths_[static_cast<std::size_t>(j)]; ++parity; }
            }
            const double term = eval_folded(snapshots_[static_cast<std::size_t>(k)], xl + off);
            sum += (parity & 1) ? -term : term;
        }
        return sum / width_products_[static_cast<std::size_t>(k)];
    }

    /// Antiderivative from the left endpoint, evaluated accurately at small
    /// values: integral_{left}^{left+xl} b. Clamps to [0, mass].
    double integral_from_left(double xl) const {
        if (!(xl > 0.0)) return 0.0;
        if (xl >= length_) return mass_;
        if (xl <= 0.5 * length_) return integral_.eval(xl);
        return mass_ - integral_.eval(length_ - xl);
    }

    /// mass - integral_from_left, accurate when xl is near the right end.
    double integral_tail(double xl) const {
        if (xl >= length_) return 0.0;
        if (!(xl > 0.0)) return mass_;
        if (xl <= 0.5 * length_) return mass_ - integral_.eval(xl);
        return integral_.eval(length_ - xl);
    }

    /// Evaluator handle for generic derivative-norm measurement.
    std::function<double(double, int)> derivative_fn() const {
        FlatSpline copy = *this;
        return [copy](double x, int k) { return copy.eval(x, k); };
    }

    friend FlatSpline make_bump(double lo, double hi, double epsilon, const WeightSequence& seq,
                                int k_max, double amplitude_scale);

private:
    double eval_folded(const PiecewisePoly& pp, double t) const {
        if (t > half_length_) t = length_ - t;   // exact: t, length_ within a factor of 2
        return pp.eval(t);
    }

    double left_ = 0.0;
    double length_ = 0.0;
    double half_length_ = 0.0;
    double epsilon_ = 1.0;
    double base_width_ = 0.0;
    double amplitude_ = 0.0;
    double mass_ = 0.0;
    int certified_order_ = 0;
    std::vector<double> widths_;
    std::vector<double> half_widths_;
    std::vector<double> width_products_;   // prod_{j<=k} a_j, k = 0..J
    std::vector<double> ideal_widths_;
    std::vector<double> bound_table_;
    std::vector<double> cascade_bounds_;
    std::vector<PiecewisePoly> snapshots_; // pp_k = cascade without kernels 1..k, k = 0..certified_order
    PiecewiseIntegral integral_;           // antiderivative of the full bump
};

/** Synthesize a bump on (lo, hi) with ||b^(k)|| <= eps^k M_k certified for
 *  k = 0..k_max.
 *
 *  Width schedule: a_j = min((2/eps) M'_{j-1}/M'_j, (hi-lo) 2^{-j-1}),
 *  rounded down to the grid and forced nonincreasing. The geometric cap
 *  keeps the base box at least half the interval; the ratio term makes the
 *  schedule follow the sequence whenever it fits, so that for log-convex
 *  sequences the uncapped amplitude would be eps-independent.
 */
inline FlatSpline make_bump(double lo, double hi, double epsilon, const WeightSequence& seq,
                            int k_max, double amplitude_scale = 1.0) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw SynthesisError("make_bump: degenerate interval");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw SynthesisError("make_bump: epsilon must be positive");
    if (k_max < 1) throw SynthesisError("make_bump: k_max must be >= 1");
    if (!(amplitude_scale > 0.0) || amplitude_scale > 1.0)
        throw SynthesisError("make_bump: amplitude scale must be in (0, 1]");
    {
        const CarlemanVerdict v = classify(seq);
        if (v.verdict != QAVerdict::NonQuasiAnalytic)
            throw SynthesisError(std::string("make_bump: sequence classified ") + to_string(v.verdict) +
                                 "; bump synthesis requires a non-quasi-analytic sequence");
    }

    const int J = k_max + 2;
    const WeightSequence mseq = seq.materialized_to(static_cast<std::size_t>(J) + 1);
    const ConvexifiedSequence conv = log_convexify(mseq);

    const double L_ideal = hi - lo;
    const int eL = std::ilogb(L_ideal);
    const std::int64_t unit_exp_w = static_cast<std::int64_t>(eL) - 40; // width grid
    const double uw = std::ldexp(1.0, static_cast<int>(unit_exp_w));
    const auto lunits = static_cast<std::int64_t>(std::floor(std::ldexp(L_ideal, -static_cast<int>(unit_exp_w))));

    FlatSpline b;
    b.left_ = lo;
    b.length_ = static_cast<double>(lunits) * uw;
    b.half_length_ = 0.5 * b.length_;
    b.epsilon_ = epsilon;
    b.certified_order_ = k_max;

    std::vector<std::int64_t> awidth(static_cast<std::size_t>(J));
    std::int64_t prev = lunits;
    for (int j = 1; j <= J; ++j) {
        const double ideal = (2.0 / epsilon) * conv.ratio(static_cast<std::size_t>(j));
        b.ideal_widths_.push_back(ideal);
        const double cap = std::ldexp(b.length_, -j - 1);
        auto units = static_cast<std::int64_t>(std::floor(std::min(ideal, cap) / uw));
        units = std::min(units, prev);
        if (units < 1)
            throw SynthesisError("make_bump: width schedule underflows the grid at kernel " +
                                 std::to_string(j) + " (interval too narrow for requested k_max at this epsilon)");
        awidth[static_cast<std::size_t>(j - 1)] = units;
        prev = units;
    }
    std::int64_t wsum = 0;
    for (std::int64_t a : awidth) wsum += a;
    const std::int64_t w0units = lunits - wsum;
    if (w0units <= 0) throw SynthesisError("make_bump: widths exhaust the interval");

    b.base_width_ = static_cast<double>(w0units) * uw;
    b.widths_.resize(static_cast<std::size_t>(J));
    b.half_widths_.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        b.widths_[static_cast<std::size_t>(j)] = static_cast<double>(awidth[static_cast<std::size_t>(j)]) * uw;
        b.half_widths_[static_cast<std::size_t>(j)] = 0.5 * b.widths_[static_cast<std::size_t>(j)];
    }

    // amplitude: maximal (minus a safety shave) under the certificate system
    double log_eps = std::log(epsilon);
    double log_prod = 0.0, log_c = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= k_max; ++k) {
        if (k >= 1) log_prod += std::log(b.widths_[static_cast<std::size_t>(k - 1)]);
        const double cand = k * log_eps + mseq.log_value(static_cast<std::size_t>(k)) +
                            log_prod - k * std::numbers::ln2_v<double>;
        log_c = std::min(log_c, cand);
    }
    log_c += std::log(amplitude_scale) + std::log1p(-1e-10);
    if (log_c < std::log(1e-260))
        throw SynthesisError("make_bump: amplitude underflows (interval too narrow for requested k_max at this epsilon)");
    b.amplitude_ = std::exp(log_c);

    b.width_products_.assign(static_cast<std::size_t>(J) + 1, 1.0);
    for (int k = 1; k <= J; ++k)
        b.width_products_[static_cast<std::size_t>(k)] =
            b.width_products_[static_cast<std::size_t>(k - 1)] * b.widths_[static_cast<std::size_t>(k - 1)];

    b.bound_table_.resize(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k)
        b.bound_table_[static_cast<std::size_t>(k)] =
            std::exp(k * log_eps + mseq.log_value(static_cast<std::size_t>(k)));
    b.cascade_bounds_.resize(static_cast<std::size_t>(J) + 1);
    for (int k = 0; k <= J; ++k)
        b.cascade_bounds_[static_cast<std::size_t>(k)] =
            b.amplitude_ * std::ldexp(1.0, k) / b.width_products_[static_cast<std::size_t>(k)];

    // build the cascade on the half-unit grid; snapshot partial cascades
    const std::int64_t unit_exp_p = unit_exp_w - 1;
    PiecewisePoly state = PiecewisePoly::box(unit_exp_p, lunits - w0units, lunits + w0units, b.amplitude_);
    b.snapshots_.resize(static_cast<std::size_t>(k_max) + 1);
    for (int j = J; j >= 1; --j) {
        state = state.convolve_box(awidth[static_cast<std::size_t>(j - 1)]);
        if (j - 1 <= k_max) b.snapshots_[static_cast<std::size_t>(j - 1)] = state;
    }
    b.integral_ = b.snapshots_[0].antiderivative();
    b.mass_ = b.integral_.total;
    return b;
}

/// Reference constants of the auxiliary-sequence construction:
/// L_1 = 8 M_0 / eps, L_n = M_n otherwise;
/// D = sum_{n=2}^{T} (L_{n-1}/L_n) (sum_{k=n}^{T} L_{k-1}/L_k)^{-1/2};
/// rho = eps / (8 D);  lambda = L_0/L_1 + rho D  (= eps/4).
struct HughesConstants {
    double D = 0.0;
    double rho = 0.0;
    double lambda = 0.0;
};

inline HughesConstants hughes_lambda(const WeightSequence& seq, double epsilon, std::size_t tail_depth) {
    if (!(epsilon > 0.0)) throw Error("hughes_lambda: epsilon must be positive");
    if (tail_depth < 2) throw Error("hughes_lambda: tail depth must be >= 2");
    {
        const CarlemanVerdict v = classify(seq);
        if (v.verdict != QAVerdict::NonQuasiAnalytic)
            throw Error("hughes_lambda: requires a non-quasi-analytic sequence");
    }
    const WeightSequence m = seq.materialized_to(tail_depth);
    const auto logL = [&](std::size_t n) {
        if (n == 1) return std::log(8.0) + m.log_value(0) - std::log(epsilon);
        return m.log_value(n);
    };
    std::vector<double> ratio(tail_depth + 1, 0.0); // L_{n-1}/L_n
    for (std::size_t n = 1; n <= tail_depth; ++n) ratio[n] = std::exp(logL(n - 1) - logL(n));

    std::vector<double> suffix(tail_depth + 2, 0.0);
    for (std::size_t n = tail_depth; n >= 2; --n) suffix[n] = suffix[n + 1] + ratio[n];

    HughesConstants out;
    for (std::size_t n = 2; n <= tail_depth; ++n) {
        if (!(suffix[n] > 0.0)) throw Error("hughes_lambda: tail ratio sum vanishes");
        out.D += ratio[n] / std::sqrt(suffix[n]);
    }
    out.rho = epsilon / (8.0 * out.D);
    out.lambda = ratio[1] + out.rho * out.D;
    return out;
}

} // namespace carleman
