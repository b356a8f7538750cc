#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "carleman/errors.hpp"

namespace carleman {

struct PiecewiseIntegral;

/** Compactly supported piecewise polynomial with breakpoints on an exact
 *  integer grid (multiples of 2^unit_exp, in coordinates local to some
 *  caller-chosen origin). Value is zero outside [knots.front(), knots.back()].
 *
 *  Each piece stores coefficients of the polynomial in (x - knot_p * unit),
 *  with x in real units, so differentiation and evaluation never touch the
 *  grid. The integer knots make breakpoint unions during convolution exact.
 */
class PiecewisePoly {
public:
    PiecewisePoly() = default;

    /// Box: constant `height` on [lo, hi) (grid knots), zero elsewhere.
    static PiecewisePoly box(std::int64_t unit_exp, std::int64_t lo, std::int64_t hi, double height) {
        PiecewisePoly pp;
        pp.unit_exp_ = unit_exp;
        pp.knots_ = {lo, hi};
        pp.coef_ = {{height}};
        pp.refresh_positions();
        return pp;
    }

    std::int64_t unit_exp() const { return unit_exp_; }
    double unit() const { return std::ldexp(1.0, static_cast<int>(unit_exp_)); }
    const std::vector<std::int64_t>& knots() const { return knots_; }
    std::size_t pieces() const { return coef_.size(); }
    int degree() const { return coef_.empty() ? 0 : static_cast<int>(coef_[0].size()) - 1; }
    double support_left() const { return pos_.front(); }
    double support_right() const { return pos_.back(); }

    /// Value at x (real units, same origin as the knots). Zero outside support.
    double eval(double x) const {
        if (coef_.empty() || x <= pos_.front() || x >= pos_.back()) return 0.0;
        const std::size_t p = piece_of(x);
        return horner(coef_[p], x - pos_[p]);
    }

    PiecewiseIntegral antiderivative() const;

    /** Convolution with the centered unit-mass box of full width
     *  2 * half_shift grid units: (f * u_a)(x) = (F(x + a/2) - F(x - a/2)) / a. */
    PiecewisePoly convolve_box(std::int64_t half_shift) const;

private:
    friend struct PiecewiseIntegral;

    /// index p with pos_[p] <= x < pos_[p+1]; caller guarantees x in support.
    std::size_t piece_of(double x) const {
        const auto it = std::upper_bound(pos_.begin(), pos_.end(), x);
        std::size_t p = static_cast<std::size_t>(it - pos_.begin());
        if (p == 0) return 0;
        --p;
        if (p >= coef_.size()) p = coef_.size() - 1;
        return p;
    }

    static double horner(const std::vector<double>& c, double t) {
        double v = 0.0;
        for (std::size_t j = c.size(); j-- > 0;) v = v * t + c[j];
        return v;
    }

    /// In-place Taylor shift: c(t) -> c(t + delta).
    static void taylor_shift(std::vector<double>& c, double delta) {
        if (delta == 0.0) return;
        const std::size_t d = c.size();
        for (std::size_t k = 0; k + 1 < d; ++k)
            for (std::size_t j = d - 1; j-- > k;)
                c[j] += delta * c[j + 1];
    }

    std::vector<double> shifted_piece(const PiecewiseIntegral& F, std::int64_t lo, std::int64_t hi,
                                      int deg) const;

    void refresh_positions() {
        pos_.resize(knots_.size());
        for (std::size_t i = 0; i < knots_.size(); ++i)
            pos_[i] = std::ldexp(static_cast<double>(knots_[i]), static_cast<int>(unit_exp_));
    }

    std::int64_t unit_exp_ = 0;
    std::vector<std::int64_t> knots_;
    std::vector<std::vector<double>> coef_;
    std::vector<double> pos_;
};

/** Antiderivative of a PiecewisePoly: F(support_left) = 0, constant `total`
 *  at and beyond the right end of the support. */
struct PiecewiseIntegral {
    PiecewisePoly pp;
    double total = 0.0;

    double eval(double x) const {
        if (pp.coef_.empty() || x <= pp.pos_.front()) return 0.0;
        if (x >= pp.pos_.back()) return total;
        const std::size_t p = pp.piece_of(x);
        return PiecewisePoly::horner(pp.coef_[p], x - pp.pos_[p]);
    }
};

inline PiecewiseIntegral PiecewisePoly::antiderivative() const {
    PiecewiseIntegral out;
    out.pp.unit_exp_ = unit_exp_;
    out.pp.knots_ = knots_;
    out.pp.coef_.resize(coef_.size());
    double running = 0.0;
    for (std::size_t p = 0; p < coef_.size(); ++p) {
        const std::vector<double>& c = coef_[p];
        std::vector<double> C(c.size() + 1);
        C[0] = running;
        for (std::size_t j = 0; j < c.size(); ++j) C[j + 1] = c[j] / static_cast<double>(j + 1);
        out.pp.coef_[p] = std::move(C);
        const double w = std::ldexp(static_cast<double>(knots_[p + 1] - knots_[p]),
                                    static_cast<int>(unit_exp_));
        running = horner(out.pp.coef_[p], w);
    }
    out.pp.refresh_positions();
    out.total = running;
    return out;
}

/** Local polynomial of the antiderivative F over the knot window [lo, hi]
 *  (grid units), recentered at lo and padded to degree `deg`. The window
 *  never straddles a knot of F by construction of the refined knot union. */
inline std::vector<double> PiecewisePoly::shifted_piece(const PiecewiseIntegral& F, std::int64_t lo,
                                                        std::int64_t hi, int deg) const {
    std::vector<double> c(static_cast<std::size_t>(deg) + 1, 0.0);
    if (hi <= knots_.front()) return c;                    // constant 0
    if (lo >= knots_.back()) { c[0] = F.total; return c; } // constant mass
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), lo);
    const std::size_t q = static_cast<std::size_t>(it - knots_.begin()) - 1;
    std::vector<double> local = F.pp.coef_[q];
    const double delta = std::ldexp(static_cast<double>(lo - knots_[q]), static_cast<int>(unit_exp_));
    taylor_shift(local, delta);
    for (std::size_t j = 0; j < local.size() && j < c.size(); ++j) c[j] = local[j];
    return c;
}

inline PiecewisePoly PiecewisePoly::convolve_box(std::int64_t half_shift) const {
    if (half_shift <= 0) throw Error("convolve_box: width must be positive");
    const PiecewiseIntegral F = antiderivative();
    const double a = std::ldexp(static_cast<double>(2 * half_shift), static_cast<int>(unit_exp_));

    std::vector<std::int64_t> nk;
    nk.reserve(2 * knots_.size());
    for (std::int64_t k : knots_) nk.push_back(k - half_shift);
    for (std::int64_t k : knots_) nk.push_back(k + half_shift);
    std::sort(nk.begin(), nk.end());
    nk.erase(std::unique(nk.begin(), nk.end()), nk.end());

    PiecewisePoly out;
    out.unit_exp_ = unit_exp_;
    out.knots_ = std::move(nk);
    const int deg = degree() + 1;
    out.coef_.resize(out.knots_.size() - 1);
    for (std::size_t p = 0; p + 1 < out.knots_.size(); ++p) {
        std::vector<double> plus = shifted_piece(F, out.knots_[p] + half_shift,
                                                 out.knots_[p + 1] + half_shift, deg);
        std::vector<double> minus = shifted_piece(F, out.knots_[p] - half_shift,
                                                  out.knots_[p + 1] - half_shift, deg);
        std::vector<double> c(static_cast<std::size_t>(deg) + 1, 0.0);
        for (std::size_t j = 0; j <= static_cast<std::size_t>(deg); ++j)
            c[j] = (plus[j] - minus[j]) / a;
        out.coef_[p] = std::move(c);
    }
    out.refresh_positions();
    return out;
}

} // namespace carleman
