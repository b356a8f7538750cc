#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carleman/dyadic.hpp"
#include "carleman/errors.hpp"
#include "carleman/transition.hpp"
#include "carleman/weights.hpp"

namespace carleman {

/// Exact identity of one transition atom t_{p,q,delta,gamma,i}.
struct AtomKey {
    Dyadic p, q, delta, gamma;
    long long i = 1;

    friend bool operator<(const AtomKey& a, const AtomKey& b) {
        if (auto c = a.p <=> b.p; c != 0) return c < 0;
        if (auto c = a.q <=> b.q; c != 0) return c < 0;
        if (auto c = a.delta <=> b.delta; c != 0) return c < 0;
        if (auto c = a.gamma <=> b.gamma; c != 0) return c < 0;
        return a.i < b.i;
    }
    friend bool operator==(const AtomKey& a, const AtomKey& b) {
        return a.p == b.p && a.q == b.q && a.delta == b.delta && a.gamma == b.gamma && a.i == b.i;
    }
};

/** One member of the countable transition family:
 *  t(x) = q + (gamma / y(delta,i)) * s_{delta,i}(x - p), mapping
 *  [p, p + delta] onto [q, q + gamma]. Admitted only when gamma <= y. */
struct TransitionAtom {
    AtomKey key;
    std::shared_ptr<const TransitionFunction> transition;
    double ratio = 0.0;      ///< gamma / y(delta, i), <= 1
    double p_d = 0.0, q_d = 0.0, delta_d = 0.0, gamma_d = 0.0, y_d = 0.0;

    Dyadic domain_end() const { return key.p + key.delta; }
    Dyadic range_end() const { return key.q + key.gamma; }

    /// Scaled transition value (gamma/y) s(xl), xl relative to p.
    double local_value(double xl) const { return ratio * transition->value(xl); }
    /// gamma - local_value, accurate near the right end of the piece.
    double local_tail(double xl) const { return ratio * transition->tail(xl); }
    double local_derivative(double xl, int k) const {
        return k == 0 ? local_value(xl) : ratio * transition->derivative(xl, k);
    }
};

/** Append-only registry T of admitted atoms with insert-if-absent semantics
 *  and a shared cache of the underlying transitions s_{delta,i}. Enumeration
 *  indices are insertion order; the registry size counts distinct parameter
 *  tuples, never evaluations. */
class AtomRegistry {
public:
    explicit AtomRegistry(WeightSequence seq, int k_max = 8)
        : seq_(std::move(seq)), k_max_(k_max) {
        const CarlemanVerdict v = classify(seq_);
        if (v.verdict != QAVerdict::NonQuasiAnalytic)
            throw InvalidSequenceError("AtomRegistry: sparse systems require a non-quasi-analytic sequence");
    }

    const WeightSequence& sequence() const { return seq_; }
    int certified_order() const { return k_max_; }

    std::shared_ptr<const TransitionFunction> transition(const Dyadic& delta, long long i) {
        const TransKey key{delta, i};
        std::scoped_lock lk(trans_mu_);
        auto it = transitions_.find(key);
        if (it != transitions_.end()) return it->second;
        auto t = std::make_shared<const TransitionFunction>(
            make_transition(delta.to_double(), i, seq_, k_max_));
        transitions_.emplace(key, t);
        return t;
    }

    /// y(delta, i) for the shared transition.
    double y_value(const Dyadic& delta, long long i) {
        return transition(delta, i)->end_value();
    }

    /// Admit (or find) the atom with the given exact parameters.
    /// Throws unless gamma / y(delta,i) <= 1 (checked exactly in dyadics).
    std::size_t admit(const Dyadic& p, const Dyadic& q, const Dyadic& delta,
                      const Dyadic& gamma, long long i) {
        if (!(gamma.sign() > 0) || !(delta.sign() > 0))
            throw InvalidScheduleError("atom spans must be positive");
        auto tr = transition(delta, i);
        const Dyadic y = Dyadic::from_double(tr->end_value());
        if (gamma > y)
            throw InvalidScheduleError("atom rejected: gamma exceeds y(delta,i), ratio > 1");
        AtomKey key{p, q, delta, gamma, i};
        std::scoped_lock lk(atoms_mu_);
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        TransitionAtom atom;
        atom.key = key;
        atom.transition = tr;
        atom.p_d = p.to_double();
        atom.q_d = q.to_double();
        atom.delta_d = delta.to_double();
        atom.gamma_d = gamma.to_double();
        atom.y_d = tr->end_value();
        atom.ratio = atom.gamma_d / atom.y_d;
        const std::size_t idx = atoms_.size();
        atoms_.push_back(std::move(atom));
        index_.emplace(std::move(key), idx);
        return idx;
    }

    const TransitionAtom& atom(std::size_t idx) const {
        std::scoped_lock lk(atoms_mu_);
        return atoms_.at(idx);
    }
    std::size_t size() const {
        std::scoped_lock lk(atoms_mu_);
        return atoms_.size();
    }

private:
    struct TransKey {
        Dyadic delta;
        long long i;
        friend bool operator<(const TransKey& a, const TransKey& b) {
            if (auto c = a.delta <=> b.delta; c != 0) return c < 0;
            return a.i < b.i;
        }
    };

    WeightSequence seq_;
    int k_max_;
    mutable std::mutex atoms_mu_;
    mutable std::mutex trans_mu_;
    std::map<AtomKey, std::size_t> index_;
    std::deque<TransitionAtom> atoms_;   // deque: references stay valid across growth
    std::map<TransKey, std::shared_ptr<const TransitionFunction>> transitions_;
};

/// Where an evaluated point came from.
struct Provenance {
    bool at_point = false;          ///< u resolved to the limit point P itself
    std::size_t atom_index = 0;     ///< registry enumeration index (when !at_point)
    double gap_bound = 0.0;         ///< |y_P - q_depth| when falling back near P
};

/// Evaluation result carrying the exact piece anchors used by the
/// order-exact monotonicity and inversion routines.
struct MapEval {
    double value = 0.0;
    Provenance prov;
    long long piece_rank = 0;   ///< strictly increasing with position on the line
    double local = 0.0;         ///< (gamma/y) s(x - p), measured from the piece bottom
    double local_tail = 0.0;    ///< gamma - local, accurate near the piece top
    double local_x = 0.0;       ///< x - p within the piece
};

/// Result of inverse evaluation: the preimage and where it was found.
struct InverseEval {
    double x = 0.0;
    Provenance prov;
};

/// p_i schedule for the left core; must increase strictly to x_P.
using PointSchedule = std::function<Dyadic(int)>;

inline PointSchedule default_schedule(double x_P) {
    const Dyadic x = Dyadic::from_double(x_P);
    return [x](int i) { return x - Dyadic(1).times_pow2(1 - i); };
}

/** The glued increasing map h_P: finitely many core pieces approaching P
 *  from both sides, unit-width extension pieces outward (grown on demand),
 *  and the point P itself. Evaluation reports provenance: which registry
 *  atom produced the value, or the point P. */
class SparsePiecewiseMap {
public:
    double x_P() const { return xP_d_; }
    double y_P() const { return yP_d_; }
    const Dyadic& x_P_exact() const { return xP_; }
    const Dyadic& y_P_exact() const { return yP_; }
    int depth() const { return depth_; }
    bool infinite() const { return infinite_; }
    const std::shared_ptr<AtomRegistry>& registry() const { return reg_; }
    /// Core atoms on the left of P, piece i = 1..depth.
    const std::vector<std::size_t>& left_atoms() const { return left_core_; }
    const std::vector<std::size_t>& right_atoms() const { return right_core_; }
    /// Junction points (p_{i+1}, q_{i+1}) between consecutive left pieces.
    std::vector<std::pair<Dyadic, Dyadic>> junctions() const {
        std::vector<std::pair<Dyadic, Dyadic>> out;
        for (std::size_t t = 0; t + 1 < left_core_.size(); ++t) {
            const TransitionAtom& a = reg_->atom(left_core_[t + 1]);
            out.emplace_back(a.key.p, a.key.q);
        }
        return out;
    }
    /// Gap y_P - q_{depth+1} left unresolved past the materialized depth.
    double residual_gap() const { return gaps_.back().to_double(); }

    MapEval eval(double u) const {
        const Dyadic du = Dyadic::from_double(u);
        if (du == xP_) {
            MapEval e;
            e.value = yP_d_;
            e.prov.at_point = true;
            e.piece_rank = depth_ + 1;
            return e;
        }
        if (du < xP_) {
            if (du >= left_deep_junction_) return fallback_eval();
            if (!infinite_ && du < left_ext_threshold())
                throw Error("SparsePiecewiseMap: u left of the core; call extend_infinite first");
            if (du < left_ext_threshold()) return ext_eval(du, /*left=*/true);
            return core_eval(du, /*left=*/true);
        }
        if (!infinite_)
            throw Error("SparsePiecewiseMap: u right of x_P; call extend_infinite first");
        if (du <= right_deep_junction_) return fallback_eval();
        if (du >= right_ext_threshold()) return ext_eval(du, /*left=*/false);
        return core_eval(du, /*left=*/false);
    }

    /// h^(k)(u); derivatives vanish at P and at every junction.
    double derivative(double u, int k) const {
        if (k == 0) return eval(u).value;
        const Dyadic du = Dyadic::from_double(u);
        if (du == xP_ || (du < xP_ && du >= left_deep_junction_) ||
            (infinite_ && du > xP_ && du <= right_deep_junction_))
            return 0.0;
        const auto [atomIdx, xl] = locate(du);
        const TransitionAtom& a = reg_->atom(atomIdx);
        return a.local_derivative(xl, k);
    }

    /// Inverse: x with h(x) = w, by monotone bisection inside the unique
    /// piece whose range contains w.
    InverseEval inverse(double w) const;

    struct MonotoneReport {
        bool strictly_increasing = true;
        std::size_t violations = 0;
        double first_violation_u = 0.0;
    };
    /// Verify h(u_{t+1}) > h(u_t) across an n-point grid on [lo, hi],
    /// comparing piece-exactly (cross-piece order is exact in dyadics;
    /// within-piece order is decided on the folded transition).
    MonotoneReport verify_strictly_increasing(double lo, double hi, std::size_t n) const;

    std::function<double(double, int)> derivative_fn() const {
        const SparsePiecewiseMap* self = this;
        return [self](double x, int k) { return self->derivative(x, k); };
    }

    friend SparsePiecewiseMap build_core(std::shared_ptr<AtomRegistry> reg,
                                         double x_P, double y_P, int depth,
                                         const PointSchedule& schedule);
    friend SparsePiecewiseMap& extend_infinite(SparsePiecewiseMap& map);

private:
    MapEval fallback_eval() const {
        MapEval e;
        e.value = yP_d_;
        e.prov.at_point = true;
        e.prov.gap_bound = residual_gap();
        e.piece_rank = depth_ + 1;
        return e;
    }

    const Dyadic& left_ext_threshold() const { return left_junctions_.front(); }
    const Dyadic& right_ext_threshold() const { return right_junctions_.front(); }

    /// Locate the unique piece containing u (grows extensions as needed) and
    /// return (atom index, local coordinate).
    std::pair<std::size_t, double> locate(const Dyadic& du) const;

    MapEval core_eval(const Dyadic& du, bool left) const;
    MapEval ext_eval(const Dyadic& du, bool left) const;
    MapEval piece_eval(std::size_t atomIdx, long long rank, const Dyadic& du) const;

    /// Ensure n+1 extension atoms exist on the requested side.
    void grow_extensions(bool left, std::size_t count) const;

    struct ExtCache {
        std::mutex mu;
        std::vector<std::size_t> left, right;
    };

    std::shared_ptr<AtomRegistry> reg_;
    Dyadic xP_, yP_;
    double xP_d_ = 0.0, yP_d_ = 0.0;
    int depth_ = 0;
    bool infinite_ = false;
    std::vector<std::size_t> left_core_;   // piece i = 1..depth (atom indices)
    std::vector<std::size_t> right_core_;  // mirrored piece i = 1..depth
    std::vector<Dyadic> gaps_;             // g_1..g_{depth+1}, g_i = y_P - q_i
    std::vector<Dyadic> left_junctions_;   // p_1..p_{depth+1}
    std::vector<Dyadic> right_junctions_;  // x_P + d_i, i = 1..depth+1 (descending toward P)
    Dyadic left_deep_junction_, right_deep_junction_;
    std::shared_ptr<ExtCache> ext_ = std::make_shared<ExtCache>();
};

/** Build the left core toward P: atoms t_{p_i, q_i, Delta_i, Gamma_i, i},
 *  i = 1..depth, with the halving q-rule
 *  q_{i+1} = y_P - (1/2) min(y(Delta_{i+1}, i+1), y_P - q_i), rounded down
 *  to a dyadic grid fine enough to preserve y(Delta_i, i) > y_P - q_i > 0. */
inline SparsePiecewiseMap build_core(std::shared_ptr<AtomRegistry> reg,
                                     double x_P, double y_P, int depth,
                                     const PointSchedule& schedule) {
    if (!reg) throw Error("build_core: null registry");
    if (depth < 1) throw InvalidScheduleError("build_core: depth must be >= 1");

    SparsePiecewiseMap m;
    m.reg_ = reg;
    m.xP_ = Dyadic::from_double(x_P);
    m.yP_ = Dyadic::from_double(y_P);
    m.xP_d_ = x_P;
    m.yP_d_ = y_P;
    m.depth_ = depth;

    // p-schedule and spans
    std::vector<Dyadic> p(static_cast<std::size_t>(depth) + 2);
    for (int i = 1; i <= depth + 1; ++i) {
        p[static_cast<std::size_t>(i)] = schedule(i);
        if (!(p[static_cast<std::size_t>(i)] < m.xP_))
            throw InvalidScheduleError("build_core: schedule point " + std::to_string(i) + " not left of x_P");
        if (i > 1 && !(p[static_cast<std::size_t>(i - 1)] < p[static_cast<std::size_t>(i)]))
            throw InvalidScheduleError("build_core: schedule not strictly increasing at index " + std::to_string(i));
    }
    std::vector<Dyadic> delta(static_cast<std::size_t>(depth) + 1);
    std::vector<double> y(static_cast<std::size_t>(depth) + 2);
    for (int i = 1; i <= depth; ++i)
        delta[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i + 1)] - p[static_cast<std::size_t>(i)];
    for (int i = 1; i <= depth; ++i)
        y[static_cast<std::size_t>(i)] = reg->y_value(delta[static_cast<std::size_t>(i)], i);
    // y for the gap rule one step past the materialized depth
    const Dyadic delta_next = schedule(depth + 2) - p[static_cast<std::size_t>(depth + 1)];
    if (!(delta_next.sign() > 0))
        throw InvalidScheduleError("build_core: schedule not strictly increasing past depth");
    y[static_cast<std::size_t>(depth) + 1] = reg->y_value(delta_next, depth + 1);

    // gap sequence g_i = y_P - q_i: g_1 seeded from y_1, then halving rule
    m.gaps_.resize(static_cast<std::size_t>(depth) + 2);
    const auto floor_gap = [&](const Dyadic& ideal_q, const Dyadic& fineness) {
        const std::int64_t e = fineness.msb_exponent() - 2;
        return m.yP_ - ideal_q.floor_to_exponent(e);
    };
    {
        const Dyadic y1 = Dyadic::from_double(y[1]);
        m.gaps_[1] = floor_gap(m.yP_ - y1.times_pow2(-1), y1);
    }
    for (int i = 1; i <= depth; ++i) {
        const Dyadic yi1 = Dyadic::from_double(y[static_cast<std::size_t>(i) + 1]);
        const Dyadic fine = std::min(yi1, m.gaps_[static_cast<std::size_t>(i)]);
        m.gaps_[static_cast<std::size_t>(i) + 1] =
            floor_gap(m.yP_ - fine.times_pow2(-1), fine);
    }

    for (int i = 1; i <= depth; ++i) {
        const Dyadic q_i = m.yP_ - m.gaps_[static_cast<std::size_t>(i)];
        const Dyadic gamma = m.gaps_[static_cast<std::size_t>(i)] - m.gaps_[static_cast<std::size_t>(i) + 1];
        if (!(gamma.sign() > 0)) throw InvalidScheduleError("build_core: q-schedule not strictly increasing");
        const std::size_t idx = reg->admit(p[static_cast<std::size_t>(i)], q_i,
                                           delta[static_cast<std::size_t>(i)], gamma, i);
        m.left_core_.push_back(idx);
    }
    m.left_junctions_.assign(p.begin() + 1, p.end());
    m.left_deep_junction_ = m.left_junctions_.back();
    m.right_deep_junction_ = m.xP_; // no right side yet
    return m;
}

inline SparsePiecewiseMap build_core(std::shared_ptr<AtomRegistry> reg,
                                     double x_P, double y_P, int depth) {
    return build_core(std::move(reg), x_P, y_P, depth, default_schedule(x_P));
}

/** Extend to an increasing bijection of the materialized reals: mirror the
 *  core to the right of P and hang unit-width pieces t_{., ., 1, y(1,1), 1}
 *  outward on both sides (materialized lazily as evaluations need them). */
inline SparsePiecewiseMap& extend_infinite(SparsePiecewiseMap& m) {
    if (m.infinite_) return m;
    auto reg = m.reg_;
    // mirrored right core: piece i maps [x_P + d_{i+1}, x_P + d_i]
    m.right_junctions_.clear();
    for (std::size_t t = 0; t < m.left_junctions_.size(); ++t) {
        const Dyadic d = m.xP_ - m.left_junctions_[t];
        m.right_junctions_.push_back(m.xP_ + d);
    }
    for (int i = 1; i <= m.depth_; ++i) {
        const TransitionAtom& la = reg->atom(m.left_core_[static_cast<std::size_t>(i - 1)]);
        const Dyadic pR = m.right_junctions_[static_cast<std::size_t>(i)]; // x_P + d_{i+1}
        const Dyadic qR = m.yP_ + m.gaps_[static_cast<std::size_t>(i) + 1];
        m.right_core_.push_back(reg->admit(pR, qR, la.key.delta, la.key.gamma, i));
    }
    m.right_deep_junction_ = m.right_junctions_.back();
    m.infinite_ = true;
    m.grow_extensions(true, 1);
    m.grow_extensions(false, 1);
    return m;
}

inline void SparsePiecewiseMap::grow_extensions(bool left, std::size_t count) const {
    std::scoped_lock lk(ext_->mu);
    auto& vec = left ? ext_->left : ext_->right;
    if (vec.size() >= count) return;
    const Dyadic one(1);
    const Dyadic y11 = Dyadic::from_double(reg_->y_value(one, 1));
    const TransitionAtom& first_left = reg_->atom(left_core_.front());
    const Dyadic pL = first_left.key.p;           // p_1
    const Dyadic qL = first_left.key.q;           // q_1
    const Dyadic pR = xP_ + (xP_ - pL);           // right end of the mirrored core
    const Dyadic qR = yP_ + gaps_[1];
    while (vec.size() < count) {
        const auto n = static_cast<long long>(vec.size());
        if (left) {
            // t_{u_{n+1}, v_{n+1}, 1, y(1,1), 1} maps [u_{n+1}, u_n] onto [v_{n+1}, v_n]
            const Dyadic u_next = pL - Dyadic(n + 1);
            const Dyadic v_next = qL - y11.times_int(n + 1);
            vec.push_back(reg_->admit(u_next, v_next, one, y11, 1));
        } else {
            const Dyadic u_n = pR + Dyadic(n);
            const Dyadic v_n = qR + y11.times_int(n);
            vec.push_back(reg_->admit(u_n, v_n, one, y11, 1));
        }
    }
}

inline MapEval SparsePiecewiseMap::piece_eval(std::size_t atomIdx, long long rank, const Dyadic& du) const {
    const TransitionAtom& a = reg_->atom(atomIdx);
    const double xl = (du - a.key.p).to_double();
    MapEval e;
    e.prov.atom_index = atomIdx;
    e.piece_rank = rank;
    e.local_x = xl;
    e.local = a.local_value(xl);
    e.local_tail = a.local_tail(xl);
    if (e.local > a.gamma_d) e.local = a.gamma_d;
    e.value = a.q_d + e.local;
    return e;
}

inline MapEval SparsePiecewiseMap::core_eval(const Dyadic& du, bool left) const {
    if (left) {
        // piece i: [p_i, p_{i+1}); junction vector holds p_1..p_{depth+1}
        std::size_t lo = 0, hi = left_junctions_.size() - 1;
        while (lo + 1 < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (du < left_junctions_[mid]) hi = mid; else lo = mid;
        }
        return piece_eval(left_core_[lo], static_cast<long long>(lo) + 1, du);
    }
    // right piece i covers [rj[i], rj[i-1]) with rj = x_P + d_1 > x_P + d_2 > ...
    std::size_t lo = 0, hi = right_junctions_.size() - 1;
    while (lo + 1 < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (du < right_junctions_[mid]) lo = mid; else hi = mid;
    }
    const long long rank = 2LL * depth_ + 1 - static_cast<long long>(lo);
    return piece_eval(right_core_[lo], rank, du);
}

inline MapEval SparsePiecewiseMap::ext_eval(const Dyadic& du, bool left) const {
    const Dyadic base = left ? left_ext_threshold() : right_ext_threshold();
    const Dyadic dist = left ? base - du : du - base;
    // unit-width pieces; left piece n covers [base-n-1, base-n), right [base+n, base+n+1)
    const Dyadic fl = dist.floor_to_exponent(0);
    auto n = static_cast<long long>(fl.to_double());
    if (left && Dyadic(n) == dist) --n;
    if (n < 0) n = 0;
    grow_extensions(left, static_cast<std::size_t>(n) + 1);
    std::size_t atomIdx;
    {
        std::scoped_lock lk(ext_->mu);
        atomIdx = (left ? ext_->left : ext_->right)[static_cast<std::size_t>(n)];
    }
    const long long rank = left ? -(n + 1) : 2LL * depth_ + 2 + n;
    return piece_eval(atomIdx, rank, du);
}

inline std::pair<std::size_t, double> SparsePiecewiseMap::locate(const Dyadic& du) const {
    if (!infinite_ && (!(du < xP_) || du < left_ext_threshold()))
        throw Error("SparsePiecewiseMap: point outside the core; call extend_infinite first");
    const MapEval e = (du < xP_) ? (du < left_ext_threshold() ? ext_eval(du, true)
                                                              : core_eval(du, true))
                                 : (du >= right_ext_threshold() ? ext_eval(du, false)
                                                                : core_eval(du, false));
    const TransitionAtom& a = reg_->atom(e.prov.atom_index);
    return {e.prov.atom_index, (du - a.key.p).to_double()};
}

inline SparsePiecewiseMap::MonotoneReport
SparsePiecewiseMap::verify_strictly_increasing(double lo, double hi, std::size_t n) const {
    MonotoneReport rep;
    if (n < 2 || !(hi > lo)) return rep;
    MapEval prev = eval(lo);
    double prev_u = lo;
    for (std::size_t t = 1; t < n; ++t) {
        const double u = lo + (hi - lo) * (static_cast<double>(t) / static_cast<double>(n - 1));
        if (!(u > prev_u)) continue;
        const MapEval cur = eval(u);
        bool strict;
        if (cur.piece_rank != prev.piece_rank) {
            // distinct pieces: value ranges are exactly chained by construction
            // and interior values stay strictly inside, so rank order decides
            strict = cur.piece_rank > prev.piece_rank;
        } else if (prev.prov.at_point || cur.prov.at_point) {
            strict = false;  // two samples collapsed onto P: unresolvable tie
        } else {
            const TransitionAtom& a = reg_->atom(cur.prov.atom_index);
            strict = a.transition->compare_values(prev.local_x, cur.local_x) < 0;
        }
        if (!strict) {
            if (rep.violations == 0) rep.first_violation_u = u;
            ++rep.violations;
        }
        prev = cur;
        prev_u = u;
    }
    rep.strictly_increasing = rep.violations == 0;
    return rep;
}

inline InverseEval SparsePiecewiseMap::inverse(double w) const {
    const Dyadic dw = Dyadic::from_double(w);
    InverseEval out;
    if (dw == yP_) {
        out.x = xP_d_;
        out.prov.at_point = true;
        return out;
    }

    // walk an extension side until the range [q, q+gamma) containing w is found
    const auto scan_extensions = [&](bool left_side, long long start) {
        auto n = start < 0 ? 0 : start;
        for (;;) {
            grow_extensions(left_side, static_cast<std::size_t>(n) + 1);
            std::size_t idx;
            {
                std::scoped_lock lk(ext_->mu);
                idx = (left_side ? ext_->left : ext_->right)[static_cast<std::size_t>(n)];
            }
            const TransitionAtom& a = reg_->atom(idx);
            const bool below = dw < a.key.q;
            const bool above = !(dw < a.range_end());
            if (!below && !above) return idx;
            if (left_side ? below : above) { ++n; continue; }
            if (n == 0) return idx;   // boundary guard; ranges tile, so unreachable
            --n;
        }
    };

    std::size_t atomIdx = 0;
    if (dw < yP_) {
        if (dw > yP_ - gaps_.back()) {   // inside the unresolved gap below y_P
            out.x = xP_d_;
            out.prov.at_point = true;
            out.prov.gap_bound = residual_gap();
            return out;
        }
        const TransitionAtom& first = reg_->atom(left_core_.front());
        if (dw < first.key.q) {
            if (!infinite_) throw Error("SparsePiecewiseMap::inverse: w below the core range; call extend_infinite");
            const double y11d = reg_->y_value(Dyadic(1), 1);
            const auto guess = static_cast<long long>(
                std::floor((first.key.q - dw).to_double() / y11d)) - 1;
            atomIdx = scan_extensions(true, guess);
        } else {
            // left core ranges [q_i, q_{i+1}) have ascending bottoms: last i with q_i <= w
            std::size_t loI = 0, hiI = left_core_.size();
            while (loI + 1 < hiI) {
                const std::size_t mid = (loI + hiI) / 2;
                if (dw < reg_->atom(left_core_[mid]).key.q) hiI = mid; else loI = mid;
            }
            atomIdx = left_core_[loI];
        }
    } else {
        if (!infinite_) throw Error("SparsePiecewiseMap::inverse: w above y_P; call extend_infinite");
        if (dw <= yP_ + gaps_.back()) {
            out.x = xP_d_;
            out.prov.at_point = true;
            out.prov.gap_bound = residual_gap();
            return out;
        }
        const TransitionAtom& outer = reg_->atom(right_core_.front()); // piece 1, topmost core range
        if (!(dw < outer.range_end())) {
            const double y11d = reg_->y_value(Dyadic(1), 1);
            const auto guess = static_cast<long long>(
                std::floor((dw - outer.range_end()).to_double() / y11d)) - 1;
            atomIdx = scan_extensions(false, guess);
        } else {
            // right core ranges descend with the piece index: first t with q_t <= w
            std::size_t loI = 0, hiI = right_core_.size() - 1;
            while (loI < hiI) {
                const std::size_t mid = (loI + hiI) / 2;
                if (!(dw < reg_->atom(right_core_[mid]).key.q)) hiI = mid; else loI = mid + 1;
            }
            atomIdx = right_core_[loI];
        }
    }

    const TransitionAtom& a = reg_->atom(atomIdx);
    // bisect the monotone local profile; solve from whichever end keeps full
    // relative accuracy
    const double T_bottom = (dw - a.key.q).to_double();
    const double T_top = (a.range_end() - dw).to_double();
    const bool from_bottom = T_bottom <= T_top;
    double xlo = 0.0, xhi = a.delta_d;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (xlo + xhi);
        if (mid <= xlo || mid >= xhi) break;
        const bool go_right = from_bottom ? (a.local_value(mid) < T_bottom)
                                          : (a.local_tail(mid) > T_top);
        if (go_right) xlo = mid; else xhi = mid;
    }
    const double xl = 0.5 * (xlo + xhi);
    out.x = (a.key.p + Dyadic::from_double(xl)).to_double();
    out.prov.at_point = false;
    out.prov.atom_index = atomIdx;
    return out;
}

/// Max sampled |h^(k)| over each left-core piece, i = 1..depth.
inline std::vector<double> piece_derivative_envelopes(const SparsePiecewiseMap& map, int k,
                                                      int samples_per_piece = 129) {
    std::vector<double> env;
    const auto& reg = map.registry();
    for (std::size_t t = 0; t < map.left_atoms().size(); ++t) {
        const TransitionAtom& a = reg->atom(map.left_atoms()[t]);
        double m = 0.0;
        for (int s = 1; s < samples_per_piece; ++s) {
            const double xl = a.delta_d * (static_cast<double>(s) / samples_per_piece);
            m = std::max(m, std::abs(a.local_derivative(xl, k)));
        }
        env.push_back(m);
    }
    return env;
}

/// One provenance row of the sparseness table.
struct SparsenessRow {
    double x_P = 0.0, y_P = 0.0;
    double u = 0.0, value = 0.0;
    bool resolved = false;       ///< value came from a registry atom
    std::size_t atom_index = 0;
};

struct SparsenessReport {
    std::vector<SparsenessRow> rows;
    std::size_t pair_count = 0;       ///< (P, u) pairs with u != x_P
    std::size_t registry_size = 0;    ///< distinct admitted parameter tuples
    bool all_resolved = true;
    // derivative-bound audit over all materialized pieces
    int k_max = 0;
    std::vector<double> sampled_norms;   ///< max sampled |h^(k)|, k = 1..k_max
    std::vector<double> weight_bounds;   ///< M_k, k = 1..k_max
    bool audit_ok = true;
};

/** Evaluate every map at every query; record the registry atom behind each
 *  value (u = x_P rows are excluded by definition) and audit the derivative
 *  bounds ||h^(k)|| <= M_k over the materialized pieces. */
inline SparsenessReport sparseness_report(std::shared_ptr<AtomRegistry> reg,
                                          const std::vector<std::pair<double, double>>& points,
                                          const std::vector<double>& queries,
                                          int depth = 12, int k_max = 0) {
    SparsenessReport rep;
    if (k_max <= 0) k_max = reg->certified_order();
    rep.k_max = k_max;
    rep.sampled_norms.assign(static_cast<std::size_t>(k_max), 0.0);
    const WeightSequence mseq = reg->sequence().materialized_to(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k)
        rep.weight_bounds.push_back(std::exp(mseq.log_value(static_cast<std::size_t>(k))));

    std::vector<SparsePiecewiseMap> maps;
    maps.reserve(points.size());
    for (const auto& P : points) {
        maps.push_back(build_core(reg, P.first, P.second, depth));
        extend_infinite(maps.back());
    }
    for (const auto& map : maps) {
        for (double u : queries) {
            if (Dyadic::from_double(u) == map.x_P_exact()) continue;
            const MapEval e = map.eval(u);
            SparsenessRow row;
            row.x_P = map.x_P();
            row.y_P = map.y_P();
            row.u = u;
            row.value = e.value;
            row.resolved = !e.prov.at_point;
            row.atom_index = e.prov.atom_index;
            rep.rows.push_back(row);
            ++rep.pair_count;
            if (!row.resolved) rep.all_resolved = false;
        }
        for (int k = 1; k <= k_max; ++k) {
            const auto sample_side = [&](const std::vector<std::size_t>& atoms) {
                for (std::size_t idx : atoms) {
                    const TransitionAtom& a = reg->atom(idx);
                    for (int s = 1; s < 64; ++s) {
                        const double xl = a.delta_d * (static_cast<double>(s) / 64.0);
                        rep.sampled_norms[static_cast<std::size_t>(k - 1)] =
                            std::max(rep.sampled_norms[static_cast<std::size_t>(k - 1)],
                                     std::abs(a.local_derivative(xl, k)));
                    }
                }
            };
            sample_side(map.left_atoms());
            sample_side(map.right_atoms());
        }
    }
    rep.registry_size = reg->size();
    for (int k = 1; k <= k_max; ++k)
        if (rep.sampled_norms[static_cast<std::size_t>(k - 1)] >
            rep.weight_bounds[static_cast<std::size_t>(k - 1)])
            rep.audit_ok = false;
    return rep;
}

} // namespace carleman
