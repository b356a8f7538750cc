#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "carleman/analytic.hpp"
#include "carleman/errors.hpp"
#include "carleman/weights.hpp"

namespace carleman {

/// Measured sup-norms ||f^(k)|| over a compact interval, k = 0..K.
struct DerivativeNormProfile {
    std::vector<double> norms;
    double lo = 0.0, hi = 1.0;
    std::string source = "sampled grid";       // or "analytic formula"
    double refinement_gap = 0.0;               ///< rel. change between the two grids

    std::size_t max_order() const { return norms.empty() ? 0 : norms.size() - 1; }
};

/// Witness pair (beta, B) for the derivative envelope.
struct EnvelopeFit {
    double beta = 1.0;
    double big_b = 1.0;
    double slack = 0.0;        ///< min_k [ln(beta B^k M_k) - ln d_k]
    bool feasible = false;
    std::size_t argmin_k = 0;  ///< order attaining the slack
};

/// Does d_k <= beta B^k M_k hold for all k (within 1e-12 relative)?
inline EnvelopeFit check_membership(const DerivativeNormProfile& profile, const WeightSequence& seq,
                                    double beta, double big_b) {
    if (!(beta > 0.0) || !(big_b > 0.0)) throw Error("check_membership: beta and B must be positive");
    const WeightSequence m = seq.materialized_to(profile.max_order());
    EnvelopeFit fit;
    fit.beta = beta;
    fit.big_b = big_b;
    fit.slack = std::numeric_limits<double>::infinity();
    const double lb = std::log(beta), lB = std::log(big_b);
    for (std::size_t k = 0; k < profile.norms.size(); ++k) {
        const double d = profile.norms[k];
        if (!(d >= 0.0) || !std::isfinite(d)) throw Error("check_membership: invalid norm entry");
        if (d == 0.0) continue;
        const double s = lb + static_cast<double>(k) * lB + m.log_value(k) - std::log(d);
        if (s < fit.slack) {
            fit.slack = s;
            fit.argmin_k = k;
        }
    }
    fit.feasible = fit.slack >= -1e-12;
    return fit;
}

/// Smallest beta making the envelope feasible at this B:
/// beta = max_k d_k / (B^k M_k).
inline double minimal_beta(const DerivativeNormProfile& profile, const WeightSequence& seq,
                           double big_b) {
    if (!(big_b > 0.0)) throw Error("minimal_beta: B must be positive");
    const WeightSequence m = seq.materialized_to(profile.max_order());
    const double lB = std::log(big_b);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < profile.norms.size(); ++k) {
        const double d = profile.norms[k];
        if (d == 0.0) continue;
        best = std::max(best, std::log(d) - static_cast<double>(k) * lB - m.log_value(k));
    }
    if (best == -std::numeric_limits<double>::infinity())
        return std::numeric_limits<double>::min();   // all-zero profile: any beta works
    return std::exp(best);
}

/** Low-order extension: given that the envelope holds for k >= N with
 *  (beta, B), beta2 = max_{0 <= k < N} d_k / (B^k M_k) and
 *  beta~ = max(beta, beta2) makes it hold on the full range. */
inline double extend_low_orders(const DerivativeNormProfile& profile, const WeightSequence& seq,
                                std::size_t N, double beta, double big_b) {
    if (!(beta > 0.0) || !(big_b > 0.0)) throw Error("extend_low_orders: beta and B must be positive");
    if (N == 0) return beta;
    const WeightSequence m = seq.materialized_to(std::min(N - 1, profile.max_order()));
    const double lB = std::log(big_b);
    double beta2 = 0.0;
    for (std::size_t k = 0; k < N && k < profile.norms.size(); ++k) {
        const double d = profile.norms[k];
        if (d == 0.0) continue;
        beta2 = std::max(beta2, std::exp(std::log(d) - static_cast<double>(k) * lB - m.log_value(k)));
    }
    return std::max(beta, beta2);
}

/** Sampled sup-norms of f^(k), k = 0..K, on [lo, hi], with a grid-refinement
 *  convergence report (coarse grid n, fine grid 2n+1). */
inline DerivativeNormProfile measure_norms(const DerivativeFn& f, double lo, double hi,
                                           std::size_t K, std::size_t grid = 2048) {
    if (!(hi > lo)) throw Error("measure_norms: degenerate interval");
    if (grid < 8) grid = 8;
    DerivativeNormProfile out;
    out.lo = lo;
    out.hi = hi;
    out.norms.assign(K + 1, 0.0);
    std::vector<double> coarse(K + 1, 0.0);
    const auto sweep = [&](std::size_t n, std::vector<double>& dest) {
        for (std::size_t t = 0; t <= n; ++t) {
            const double x = lo + (hi - lo) * (static_cast<double>(t) / static_cast<double>(n));
            for (std::size_t k = 0; k <= K; ++k)
                dest[k] = std::max(dest[k], std::abs(f(x, static_cast<int>(k))));
        }
    };
    sweep(grid, coarse);
    sweep(2 * grid + 1, out.norms);
    for (std::size_t k = 0; k <= K; ++k) {
        out.norms[k] = std::max(out.norms[k], coarse[k]);
        const double scale = std::max(out.norms[k], std::numeric_limits<double>::min());
        out.refinement_gap = std::max(out.refinement_gap, (out.norms[k] - coarse[k]) / scale);
    }
    return out;
}

} // namespace carleman
