#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "carleman/errors.hpp"

namespace carleman {

/// Dense monomial coefficients c_0 + c_1 x + ... + c_n x^n.
using PolyCoeffs = std::vector<double>;

inline double poly_eval(const PolyCoeffs& c, double x) {
    double v = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) v = v * x + c[j];
    return v;
}

/** Interpolant through n+1 points, kept in barycentric form for stable
 *  evaluation on clustered abscissae; monomial coefficients are recovered
 *  through the Newton form on demand. */
class Interpolant {
public:
    Interpolant(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        if (n == 0 || n != ys_.size()) throw Error("interpolation needs matching nonempty points");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (xs_[i] == xs_[j]) throw Error("interpolation abscissae must be distinct");
        w_.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) w_[i] /= (xs_[i] - xs_[j]);
    }

    double eval(double x) const {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            const double dx = x - xs_[i];
            if (dx == 0.0) return ys_[i];
            const double t = w_[i] / dx;
            num += t * ys_[i];
            den += t;
        }
        return num / den;
    }

    /// Monomial coefficients via divided differences (Newton form expanded
    /// Horner-style).
    PolyCoeffs coefficients() const {
        const std::size_t n = xs_.size();
        std::vector<double> dd = ys_;
        for (std::size_t lev = 1; lev < n; ++lev)
            for (std::size_t i = n - 1; i >= lev; --i)
                dd[i] = (dd[i] - dd[i - 1]) / (xs_[i] - xs_[i - lev]);
        PolyCoeffs c(n, 0.0);
        c[0] = dd[n - 1];
        for (std::size_t k = n - 1; k-- > 0;) {
            // c <- c * (x - x_k) + dd[k]
            for (std::size_t j = n - 1; j >= 1; --j) c[j] = c[j - 1] - xs_[k] * c[j];
            c[0] = dd[k] - xs_[k] * c[0];
        }
        return c;
    }

private:
    std::vector<double> xs_, ys_, w_;
};

/// Unique degree <= n polynomial through n+1 points, as coefficients.
inline PolyCoeffs lagrange_interpolate(const std::vector<double>& xs, const std::vector<double>& ys) {
    return Interpolant(xs, ys).coefficients();
}

/** If f and g agree at all witnesses (within 1e-10 relative), their
 *  coefficient vectors must agree within 1e-8 — anything else contradicts
 *  interpolation uniqueness and throws. Returns whether they agreed. */
inline bool uniqueness_check(const PolyCoeffs& f, const PolyCoeffs& g,
                             const std::vector<double>& witnesses) {
    const std::size_t n = std::max(f.size(), g.size());
    if (witnesses.size() < n)
        throw Error("uniqueness_check: need at least degree+1 witnesses");
    for (double x : witnesses) {
        const double vf = poly_eval(f, x), vg = poly_eval(g, x);
        const double scale = std::max({std::abs(vf), std::abs(vg), 1.0});
        if (std::abs(vf - vg) > 1e-10 * scale) return false;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double cf = j < f.size() ? f[j] : 0.0;
        const double cg = j < g.size() ? g[j] : 0.0;
        const double scale = std::max({std::abs(cf), std::abs(cg), 1.0});
        if (std::abs(cf - cg) > 1e-8 * scale)
            throw Error("uniqueness violated: distinct degree-" + std::to_string(n - 1) +
                        " polynomials agree at " + std::to_string(witnesses.size()) + " points");
    }
    return true;
}

/// Finite family of pairwise-distinct polynomials of degree <= n.
struct PolyFamily {
    std::size_t degree_bound = 0;
    std::vector<PolyCoeffs> members;

    void validate() const {
        for (const auto& c : members)
            if (c.size() > degree_bound + 1)
                throw Error("PolyFamily: member exceeds the degree bound");
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                bool same = true;
                for (std::size_t t = 0; t <= degree_bound && same; ++t) {
                    const double a = t < members[i].size() ? members[i][t] : 0.0;
                    const double b = t < members[j].size() ? members[j][t] : 0.0;
                    if (std::abs(a - b) > 1e-12 * std::max({std::abs(a), std::abs(b), 1.0})) same = false;
                }
                if (same) throw Error("PolyFamily: members must be pairwise distinct");
            }
    }
};

struct RefinementChain {
    std::vector<std::size_t> class_sizes;    ///< |G_1| >= |G_2| >= ... >= |G_{n+1}|
    std::vector<double> chosen_values;       ///< y_j at each column
    std::vector<std::size_t> final_class;    ///< indices of the surviving members
    std::size_t values_per_column_seen = 0;  ///< max distinct values at any column
};

namespace detail {

/// Group member values at one column into clusters (tolerance 1e-9 relative).
inline std::vector<std::vector<std::size_t>> value_classes(const std::vector<PolyCoeffs>& members,
                                                           const std::vector<std::size_t>& active,
                                                           double x) {
    std::vector<std::pair<double, std::size_t>> vals;
    vals.reserve(active.size());
    for (std::size_t idx : active) vals.emplace_back(poly_eval(members[idx], x), idx);
    std::sort(vals.begin(), vals.end());
    std::vector<std::vector<std::size_t>> classes;
    for (std::size_t t = 0; t < vals.size(); ++t) {
        const double scale = std::max(std::abs(vals[t].first), 1.0);
        if (t == 0 || vals[t].first - vals[t - 1].first > 1e-9 * scale)
            classes.emplace_back();
        classes.back().push_back(vals[t].second);
    }
    return classes;
}

} // namespace detail

/** Pigeonhole refinement: at each column keep the largest value class.
 *  Preconditions (checked): columns distinct and nonzero, every member takes
 *  at most m distinct values per column. The final class agrees at n+1
 *  points, so it is a single polynomial, and |family| <= m^{n+1}; both facts
 *  are asserted. */
inline RefinementChain pigeonhole_refine(const PolyFamily& family, const std::vector<double>& columns,
                                         std::size_t values_per_column) {
    family.validate();
    const std::size_t n = family.degree_bound;
    if (columns.size() != n + 1)
        throw Error("pigeonhole_refine: need exactly degree+1 columns");
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == 0.0) throw Error("pigeonhole_refine: columns must be nonzero");
        for (std::size_t j = i + 1; j < columns.size(); ++j)
            if (columns[i] == columns[j]) throw Error("pigeonhole_refine: columns must be distinct");
    }

    RefinementChain chain;
    std::vector<std::size_t> active(family.members.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

    // precondition: <= m values per column over the whole family
    for (double x : columns) {
        const auto classes = detail::value_classes(family.members, active, x);
        chain.values_per_column_seen = std::max(chain.values_per_column_seen, classes.size());
        if (classes.size() > values_per_column)
            throw Error("pigeonhole_refine: family takes " + std::to_string(classes.size()) +
                        " distinct values at column " + std::to_string(x) + ", cap is " +
                        std::to_string(values_per_column));
    }

    for (double x : columns) {
        auto classes = detail::value_classes(family.members, active, x);
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes.size(); ++c)
            if (classes[c].size() > classes[best].size()) best = c;
        // largest class has at least |G_j| / m members
        if (classes[best].size() * values_per_column < active.size())
            throw Error("pigeonhole_refine: largest class smaller than |G|/m");
        active = classes[best];
        chain.class_sizes.push_back(active.size());
        chain.chosen_values.push_back(poly_eval(family.members[active.front()], x));
    }

    if (active.size() != 1)
        throw Error("pigeonhole_refine: final class has " + std::to_string(active.size()) +
                    " members agreeing at degree+1 points; interpolation uniqueness violated");
    chain.final_class = active;

    // cardinality bound |family| <= m^{n+1}
    double bound = 1.0;
    for (std::size_t j = 0; j <= n; ++j) bound *= static_cast<double>(values_per_column);
    if (static_cast<double>(family.members.size()) > bound)
        throw Error("pigeonhole_refine: family of " + std::to_string(family.members.size()) +
                    " members exceeds the m^(n+1) bound " + std::to_string(bound));
    return chain;
}

} // namespace carleman
