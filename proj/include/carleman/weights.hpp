#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carleman/errors.hpp"

namespace carleman {

/// Closed-form families of weight sequences, plus finite custom prefixes.
enum class WeightKind { Factorial, Gevrey, Power, CustomPrefix };

inline const char* to_string(WeightKind k) {
    switch (k) {
        case WeightKind::Factorial: return "factorial";
        case WeightKind::Gevrey: return "gevrey";
        case WeightKind::Power: return "power";
        case WeightKind::CustomPrefix: return "custom-prefix";
    }
    return "?";
}

/** A positive weight sequence M_0..M_K.
 *
 *  Values are held in log space throughout: factorial-type sequences
 *  overflow double near k = 171, and all downstream work (hulls, ratio
 *  sums, width schedules) only ever needs logs and log differences.
 */
class WeightSequence {
public:
    static WeightSequence factorial(std::size_t K) {
        return closed_form(WeightKind::Factorial, 0.0, K);
    }
    static WeightSequence gevrey(double s, std::size_t K) {
        if (!(s > 0.0)) throw InvalidSequenceError("gevrey order must be positive");
        return closed_form(WeightKind::Gevrey, s, K);
    }
    static WeightSequence power(double c, std::size_t K) {
        if (!(c > 0.0) || !std::isfinite(c)) throw InvalidSequenceError("power base must be positive and finite");
        return closed_form(WeightKind::Power, c, K);
    }
    static WeightSequence custom_prefix(const std::vector<double>& values) {
        if (values.size() < 3) throw InvalidSequenceError("custom prefix needs K >= 2 (at least 3 values)");
        std::vector<double> logs;
        logs.reserve(values.size());
        for (double v : values) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw InvalidSequenceError("weight sequence entries must be positive and finite");
            logs.push_back(std::log(v));
        }
        WeightSequence w;
        w.kind_ = WeightKind::CustomPrefix;
        w.param_ = 0.0;
        w.log_values_ = std::move(logs);
        return w;
    }

    WeightKind kind() const { return kind_; }
    double param() const { return param_; }
    std::size_t max_index() const { return log_values_.size() - 1; }

    double log_value(std::size_t k) const {
        if (k >= log_values_.size()) throw InvalidSequenceError("weight index out of materialized range");
        return log_values_[k];
    }
    /// M_k as a double; +inf past the overflow point.
    double value(std::size_t k) const { return std::exp(log_value(k)); }
    const std::vector<double>& log_values() const { return log_values_; }

    bool is_closed_form() const { return kind_ != WeightKind::CustomPrefix; }

    /// Same family materialized out to at least index K. Custom prefixes
    /// cannot be extended beyond their given data.
    WeightSequence materialized_to(std::size_t K) const {
        if (K <= max_index()) return *this;
        if (!is_closed_form())
            throw InvalidSequenceError("custom prefix too short: index " + std::to_string(K) +
                                       " requested, only " + std::to_string(max_index()) + " materialized");
        return closed_form(kind_, param_, K);
    }

private:
    static double closed_form_log(WeightKind kind, double param, std::size_t k) {
        switch (kind) {
            case WeightKind::Factorial: return std::lgamma(static_cast<double>(k) + 1.0);
            case WeightKind::Gevrey: return param * std::lgamma(static_cast<double>(k) + 1.0);
            case WeightKind::Power: return static_cast<double>(k) * std::log(param);
            case WeightKind::CustomPrefix: break;
        }
        throw InvalidSequenceError("no closed form");
    }

    static WeightSequence closed_form(WeightKind kind, double param, std::size_t K) {
        if (K < 2) K = 2;
        WeightSequence w;
        w.kind_ = kind;
        w.param_ = param;
        w.log_values_.resize(K + 1);
        for (std::size_t k = 0; k <= K; ++k) w.log_values_[k] = closed_form_log(kind, param, k);
        return w;
    }

    WeightKind kind_ = WeightKind::CustomPrefix;
    double param_ = 0.0;
    std::vector<double> log_values_;
};

/** Log-convex minorant of a weight sequence: exp of the lower convex hull
 *  of the points (k, ln M_k). */
struct ConvexifiedSequence {
    WeightSequence source;
    std::vector<double> log_minorant;    ///< ln M'_k, k = 0..K
    std::vector<std::size_t> hull_vertices; ///< indices where M'_k = M_k (hull support)

    std::size_t max_index() const { return log_minorant.size() - 1; }
    double minorant_log(std::size_t k) const { return log_minorant.at(k); }
    double minorant(std::size_t k) const { return std::exp(log_minorant.at(k)); }
    /// M'_{k-1} / M'_k for k >= 1; nonincreasing in k by convexity.
    double ratio(std::size_t k) const {
        if (k == 0 || k > max_index()) throw InvalidSequenceError("ratio index out of range");
        return std::exp(log_minorant[k - 1] - log_minorant[k]);
    }
};

/** Lower convex hull of (k, ln M_k) by monotone chain. Collinear interior
 *  points are dropped, so vertices are exactly the strict corners plus the
 *  two endpoints. */
inline ConvexifiedSequence log_convexify(const WeightSequence& seq) {
    const std::vector<double>& y = seq.log_values();
    const std::size_t n = y.size();
    std::vector<std::size_t> hull;
    hull.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // pop while the new point makes the previous vertex non-strictly convex
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
            // cross product of (b-a) x (i-a) in (k, y) coordinates
            const double cross = (static_cast<double>(b - a)) * (y[i] - y[a]) -
                                 (static_cast<double>(i - a)) * (y[b] - y[a]);
            if (cross <= 0.0) hull.pop_back();
            else break;
        }
        hull.push_back(i);
    }
    ConvexifiedSequence conv;
    conv.source = seq;
    conv.hull_vertices = hull;
    conv.log_minorant.resize(n);
    for (std::size_t v = 0; v + 1 < hull.size(); ++v) {
        const std::size_t a = hull[v], b = hull[v + 1];
        conv.log_minorant[a] = y[a];
        const double slope = (y[b] - y[a]) / static_cast<double>(b - a);
        for (std::size_t k = a + 1; k < b; ++k)
            conv.log_minorant[k] = y[a] + slope * static_cast<double>(k - a);
    }
    conv.log_minorant[hull.back()] = y[hull.back()];
    return conv;
}

/// Sum_{k=1}^{K} M'_{k-1}/M'_k with compensated accumulation.
inline double carleman_partial_sum(const ConvexifiedSequence& conv, std::size_t K) {
    if (K > conv.max_index())
        throw InvalidSequenceError("carleman_partial_sum: K exceeds materialized length");
    double sum = 0.0, comp = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        const double term = conv.ratio(k) - comp;
        const double next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    return sum;
}

enum class QAVerdict { QuasiAnalytic, NonQuasiAnalytic, Undetermined };
enum class VerdictBasis { ExactRule, HeuristicTail };

inline const char* to_string(QAVerdict v) {
    switch (v) {
        case QAVerdict::QuasiAnalytic: return "quasi-analytic";
        case QAVerdict::NonQuasiAnalytic: return "non-quasi-analytic";
        case QAVerdict::Undetermined: return "undetermined";
    }
    return "?";
}
inline const char* to_string(VerdictBasis b) {
    return b == VerdictBasis::ExactRule ? "exact-rule" : "heuristic-tail";
}

/** Quasi-analyticity verdict. The verdict covers the compact-interval class
 *  and the whole-line local class simultaneously: convexification leaves the
 *  divergence of the ratio series unchanged between the two readings. */
struct CarlemanVerdict {
    QAVerdict verdict = QAVerdict::Undetermined;
    double partial_sum = 0.0;     ///< Sum M'_{k-1}/M'_k over the materialized range
    VerdictBasis basis = VerdictBasis::HeuristicTail;
    double tail_exponent = std::numeric_limits<double>::quiet_NaN(); ///< fitted s in r_k ~ k^-s (heuristic only)
};

namespace detail {

/// Least-squares slope of ln r_k against ln k over the tail quartile.
inline std::optional<double> tail_ratio_exponent(const ConvexifiedSequence& conv) {
    const std::size_t K = conv.max_index();
    const std::size_t start = std::max<std::size_t>(1, (3 * K) / 4);
    if (K < start || K - start + 1 < 5) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t k = start; k <= K; ++k) {
        const double x = std::log(static_cast<double>(k));
        const double yv = conv.minorant_log(k - 1) - conv.minorant_log(k); // ln r_k
        sx += x; sy += yv; sxx += x * x; sxy += x * yv;
        ++n;
    }
    const double denom = n * sxx - sx * sx;
    if (denom <= 0.0) return std::nullopt;
    const double slope = (n * sxy - sx * sy) / denom;   // ln r_k ~ slope * ln k
    return -slope;                                      // r_k ~ k^{-s}: return s
}

} // namespace detail

/** Classify a weight sequence: exact convergence rule of Sum M'_{k-1}/M'_k
 *  for closed forms, ratio-trend heuristic on the tail quartile otherwise. */
inline CarlemanVerdict classify(const WeightSequence& seq) {
    ConvexifiedSequence conv = log_convexify(seq);
    CarlemanVerdict out;
    out.partial_sum = carleman_partial_sum(conv, conv.max_index());
    switch (seq.kind()) {
        case WeightKind::Factorial:
            // ratios 1/k: harmonic, divergent
            out.verdict = QAVerdict::QuasiAnalytic;
            out.basis = VerdictBasis::ExactRule;
            return out;
        case WeightKind::Gevrey:
            // ratios k^{-s}: convergent iff s > 1
            out.verdict = seq.param() > 1.0 ? QAVerdict::NonQuasiAnalytic : QAVerdict::QuasiAnalytic;
            out.basis = VerdictBasis::ExactRule;
            return out;
        case WeightKind::Power:
            // constant ratios 1/c: divergent
            out.verdict = QAVerdict::QuasiAnalytic;
            out.basis = VerdictBasis::ExactRule;
            return out;
        case WeightKind::CustomPrefix:
            break;
    }
    out.basis = VerdictBasis::HeuristicTail;
    const auto s = detail::tail_ratio_exponent(conv);
    if (!s) {
        out.verdict = QAVerdict::Undetermined;
        return out;
    }
    out.tail_exponent = *s;
    // r_k ~ c k^{-s}: divergence-like up to s = 1 (the harmonic boundary
    // counts as divergent), summable past it; a band around the boundary
    // stays undetermined
    if (*s <= 1.02) out.verdict = QAVerdict::QuasiAnalytic;
    else if (*s >= 1.08) out.verdict = QAVerdict::NonQuasiAnalytic;
    else out.verdict = QAVerdict::Undetermined;
    return out;
}

} // namespace carleman
