#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carleman/analytic.hpp"
#include "carleman/errors.hpp"
#include "carleman/flat.hpp"
#include "carleman/weights.hpp"

namespace carleman {

/// One removed middle-third interval (lo/3^level, hi/3^level).
struct CantorGap {
    long long lo_num = 0, hi_num = 0;
    int level = 1;
    double lo() const { return static_cast<double>(lo_num) / std::pow(3.0, level); }
    double hi() const { return static_cast<double>(hi_num) / std::pow(3.0, level); }
    double mid() const { return 0.5 * (lo() + hi()); }
};

/** Level-m approximation of the middle-thirds set on [0, 1]: the 2^m - 1
 *  removed gaps (exact triadic coordinates) and the 2^{m+1} endpoints of the
 *  surviving intervals. */
struct CantorApprox {
    int level = 0;
    std::vector<CantorGap> gaps;        ///< sorted left to right
    std::vector<double> endpoints;      ///< sorted; endpoints[2t], [2t+1] bound interval t
    std::vector<std::pair<long long, int>> endpoint_coords; ///< (num, pow): value num/3^pow
};

inline CantorApprox cantor_approx(int m) {
    if (m < 1 || m > 12) throw Error("cantor_approx: level must be in [1, 12]");
    CantorApprox out;
    out.level = m;
    struct Iv { long long lo, hi; };   // scaled by 3^level at each stage
    std::vector<Iv> ivs{{0, 1}};
    for (int lev = 1; lev <= m; ++lev) {
        std::vector<Iv> next;
        next.reserve(2 * ivs.size());
        for (const Iv& iv : ivs) {
            const long long lo = 3 * iv.lo, hi = 3 * iv.hi;
            next.push_back({lo, lo + 1});
            next.push_back({hi - 1, hi});
            out.gaps.push_back({lo + 1, lo + 2, lev});
        }
        ivs = std::move(next);
    }
    std::sort(out.gaps.begin(), out.gaps.end(),
              [](const CantorGap& a, const CantorGap& b) { return a.lo() < b.lo(); });
    const double scale = std::pow(3.0, m);
    for (const Iv& iv : ivs) {
        out.endpoints.push_back(static_cast<double>(iv.lo) / scale);
        out.endpoint_coords.emplace_back(iv.lo, m);
        out.endpoints.push_back(static_cast<double>(iv.hi) / scale);
        out.endpoint_coords.emplace_back(iv.hi, m);
    }
    return out;
}

/** g_m: a bump per removed gap, flat to the certified order at every gap
 *  boundary (hence at all level-m endpoints), zero outside the gaps.
 *  Per-gap flatness eps_j = 3^{-level(j)} makes the family-wide envelope
 *  ||g_m^(k)|| <= beta B^k M_k hold with beta = 1, B = 1/3. */
class FlatOnCantorFunction {
public:
    int level() const { return level_; }
    int certified_order() const { return k_max_; }
    double beta() const { return 1.0; }
    double big_b() const { return 1.0 / 3.0; }
    const CantorApprox& cantor() const { return cantor_; }
    const std::vector<FlatSpline>& gap_bumps() const { return bumps_; }

    double eval(double x, int k = 0) const {
        const auto g = gap_index(x);
        if (!g) return 0.0;
        return bumps_[*g].eval(x, k);
    }

    /// Index of the gap whose open interval contains x, if any.
    std::optional<std::size_t> gap_index(double x) const {
        auto it = std::upper_bound(gap_los_.begin(), gap_los_.end(), x);
        if (it == gap_los_.begin()) return std::nullopt;
        const std::size_t j = static_cast<std::size_t>(it - gap_los_.begin()) - 1;
        if (x > cantor_.gaps[j].lo() && x < cantor_.gaps[j].hi()) return j;
        return std::nullopt;
    }

    DerivativeFn derivative_fn() const {
        const FlatOnCantorFunction* self = this;
        return [self](double x, int k) { return self->eval(x, k); };
    }

    friend FlatOnCantorFunction build_flat_on_cantor(const WeightSequence& seq, int m, int k_max);

private:
    int level_ = 0;
    int k_max_ = 0;
    CantorApprox cantor_;
    std::vector<FlatSpline> bumps_;
    std::vector<double> gap_los_;
};

inline FlatOnCantorFunction build_flat_on_cantor(const WeightSequence& seq, int m, int k_max = 8) {
    {
        const CarlemanVerdict v = classify(seq);
        if (v.verdict != QAVerdict::NonQuasiAnalytic)
            throw SynthesisError("build_flat_on_cantor: requires a non-quasi-analytic sequence");
    }
    FlatOnCantorFunction g;
    g.level_ = m;
    g.k_max_ = k_max;
    g.cantor_ = cantor_approx(m);
    g.bumps_.reserve(g.cantor_.gaps.size());
    for (const CantorGap& gap : g.cantor_.gaps) {
        const double eps = std::pow(3.0, -gap.level);
        g.bumps_.push_back(make_bump(gap.lo(), gap.hi(), eps, seq, k_max));
        g.gap_los_.push_back(gap.lo());
    }
    return g;
}

/** f_{ab}: equals g on [a, b] (a, b level-m endpoints), zero elsewhere.
 *  Distinct windows give the same function iff they contain the same gaps,
 *  so function identity is the contained gap range. */
struct TwoValuedMember {
    double a = 0.0, b = 0.0;
    std::size_t endpoint_a = 0, endpoint_b = 0;   ///< endpoint indices
    long long first_gap = -1, last_gap = -1;      ///< contained gap range; -1 if none

    double eval(const FlatOnCantorFunction& g, double x) const {
        if (x < a || x > b) return 0.0;
        return g.eval(x);
    }
};

inline TwoValuedMember family_member(const FlatOnCantorFunction& g, double a, double b) {
    const auto& eps = g.cantor().endpoints;
    const auto find_ep = [&](double v) -> std::size_t {
        auto it = std::lower_bound(eps.begin(), eps.end(), v - 1e-12);
        if (it == eps.end() || std::abs(*it - v) > 1e-9)
            throw Error("family_member: " + std::to_string(v) + " is not a level-" +
                        std::to_string(g.level()) + " endpoint");
        return static_cast<std::size_t>(it - eps.begin());
    };
    if (!(a < b)) throw Error("family_member: requires a < b");
    TwoValuedMember f;
    f.a = a;
    f.b = b;
    f.endpoint_a = find_ep(a);
    f.endpoint_b = find_ep(b);
    const auto& gaps = g.cantor().gaps;
    for (std::size_t j = 0; j < gaps.size(); ++j) {
        if (gaps[j].lo() >= a - 1e-12 && gaps[j].hi() <= b + 1e-12) {
            if (f.first_gap < 0) f.first_gap = static_cast<long long>(j);
            f.last_gap = static_cast<long long>(j);
        }
    }
    return f;
}

struct TwoValueCheck {
    bool pass = true;
    double worst_x = 0.0;
    double worst_deviation = 0.0;   ///< largest distance of any value from {0, g(x)}
    std::size_t grid_size = 0;
};

/** At every grid x the member values must lie in {0, g(x)} (so the value set
 *  has size at most 2). Reports the worst deviation found. */
inline TwoValueCheck two_value_check(const FlatOnCantorFunction& g,
                                     const std::vector<TwoValuedMember>& family,
                                     double lo, double hi, std::size_t grid,
                                     double tol = 1e-12) {
    TwoValueCheck out;
    out.grid_size = grid;
    for (std::size_t t = 0; t < grid; ++t) {
        const double x = lo + (hi - lo) * (static_cast<double>(t) / static_cast<double>(grid - 1));
        const double gx = g.eval(x);
        for (const TwoValuedMember& f : family) {
            const double v = f.eval(g, x);
            const double dev = std::min(std::abs(v), std::abs(v - gx));
            if (dev > out.worst_deviation) {
                out.worst_deviation = dev;
                out.worst_x = x;
            }
        }
    }
    out.pass = out.worst_deviation <= tol;
    return out;
}

/// Some x with f(x) != f'(x) for two members, if one exists: search the gap
/// midpoints of the symmetric difference of the windows.
inline std::optional<double> separating_point(const FlatOnCantorFunction& g,
                                              const TwoValuedMember& f1,
                                              const TwoValuedMember& f2) {
    const auto& gaps = g.cantor().gaps;
    const auto inside = [](const TwoValuedMember& f, long long j) {
        return f.first_gap >= 0 && j >= f.first_gap && j <= f.last_gap;
    };
    for (long long j = 0; j < static_cast<long long>(gaps.size()); ++j) {
        if (inside(f1, j) != inside(f2, j)) {
            const double x = gaps[static_cast<std::size_t>(j)].mid();
            if (g.eval(x) > 0.0) return x;
        }
    }
    return std::nullopt;
}

/// One isolated coincidence point of a pair of functions.
struct EqualizerPoint {
    double x = 0.0;
    int pair_first = 0, pair_second = 0;   ///< 1-based function indices
};

struct EqualizerReport {
    std::vector<EqualizerPoint> points;    ///< sorted by x
    double min_separation = 0.0;           ///< smallest spacing between points
    bool degenerate = false;               ///< some pair coincides on the whole grid
    std::vector<std::pair<int, int>> degenerate_pairs;
};

/** Numerically isolate the points where any two of three analytic functions
 *  agree: sign changes of the differences on the grid, refined by bisection.
 *  A demonstration of equalizer discreteness, not a proof. */
inline EqualizerReport equalizer_demo(const DerivativeFn& f1, const DerivativeFn& f2,
                                      const DerivativeFn& f3, double lo, double hi,
                                      std::size_t grid) {
    EqualizerReport rep;
    const DerivativeFn* fs[3] = {&f1, &f2, &f3};
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const auto diff = [&](double x) { return (*fs[i])(x, 0) - (*fs[j])(x, 0); };
            std::size_t zero_count = 0;
            double prev_x = lo, prev_v = diff(lo);
            for (std::size_t t = 1; t < grid; ++t) {
                const double x = lo + (hi - lo) * (static_cast<double>(t) / static_cast<double>(grid - 1));
                const double v = diff(x);
                if (std::abs(v) <= 1e-14) ++zero_count;
                if ((prev_v < 0 && v > 0) || (prev_v > 0 && v < 0)) {
                    double a = prev_x, c = x, va = prev_v;
                    for (int it = 0; it < 80; ++it) {
                        const double mMid = 0.5 * (a + c);
                        const double vm = diff(mMid);
                        if ((va < 0) == (vm < 0)) { a = mMid; va = vm; } else { c = mMid; }
                    }
                    rep.points.push_back({0.5 * (a + c), i + 1, j + 1});
                } else if (prev_v == 0.0 && t == 1) {
                    rep.points.push_back({prev_x, i + 1, j + 1});
                } else if (v == 0.0) {
                    rep.points.push_back({x, i + 1, j + 1});
                }
                prev_x = x;
                prev_v = v;
            }
            if (zero_count > grid / 2) {
                rep.degenerate = true;
                rep.degenerate_pairs.emplace_back(i + 1, j + 1);
            }
        }
    }
    std::sort(rep.points.begin(), rep.points.end(),
              [](const EqualizerPoint& a, const EqualizerPoint& b) { return a.x < b.x; });
    // merge bisection duplicates of the same root
    std::vector<EqualizerPoint> merged;
    for (const auto& p : rep.points) {
        if (!merged.empty() && std::abs(p.x - merged.back().x) < 1e-9 &&
            p.pair_first == merged.back().pair_first && p.pair_second == merged.back().pair_second)
            continue;
        merged.push_back(p);
    }
    rep.points = std::move(merged);
    rep.min_separation = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < rep.points.size(); ++t)
        rep.min_separation = std::min(rep.min_separation, rep.points[t + 1].x - rep.points[t].x);
    if (rep.points.size() < 2) rep.min_separation = hi - lo;
    return rep;
}

} // namespace carleman
