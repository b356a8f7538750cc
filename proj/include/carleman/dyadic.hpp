#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>

#include "carleman/errors.hpp"

namespace carleman {

/** Exact dyadic rational m * 2^e with an arbitrary-precision mantissa.
 *
 *  Dyadics are the coordinate type for everything that must have exact
 *  identity: spline supports, transition-atom parameter tuples and registry
 *  keys, junction points. Every finite double converts losslessly; sums,
 *  differences and products are exact. The mantissa is kept odd (or zero),
 *  so equal values have equal representations.
 */
class Dyadic {
public:
    using Int = boost::multiprecision::cpp_int;

    Dyadic() : m_(0), e_(0) {}
    explicit Dyadic(long long v) : m_(v), e_(0) { normalize(); }
    Dyadic(Int mantissa, std::int64_t exp2) : m_(std::move(mantissa)), e_(exp2) { normalize(); }

    static Dyadic from_double(double v) {
        if (!std::isfinite(v)) throw Error("Dyadic::from_double: non-finite input");
        if (v == 0.0) return Dyadic();
        int ex = 0;
        double f = std::frexp(v, &ex);       // v = f * 2^ex, |f| in [0.5, 1)
        auto m = static_cast<long long>(std::ldexp(f, 53)); // exact: f has <= 53 bits
        return Dyadic(Int(m), static_cast<std::int64_t>(ex) - 53);
    }

    /// Nearest double (exact whenever the mantissa fits in 53 bits and the
    /// exponent is in range; otherwise rounded / flushed like ldexp).
    double to_double() const {
        if (is_zero()) return 0.0;
        const double md = m_.convert_to<double>();
        if (e_ > std::numeric_limits<int>::max()) return md * std::numeric_limits<double>::infinity();
        if (e_ < std::numeric_limits<int>::min()) return md * 0.0;
        return std::ldexp(md, static_cast<int>(e_));
    }

    bool is_zero() const { return m_.is_zero(); }
    int sign() const { return m_.sign(); }
    const Int& mantissa() const { return m_; }
    std::int64_t exp2() const { return e_; }

    /// floor(log2 |v|); requires a nonzero value.
    std::int64_t msb_exponent() const {
        if (is_zero()) throw Error("Dyadic::msb_exponent: zero value");
        return static_cast<std::int64_t>(msb(boost::multiprecision::abs(m_))) + e_;
    }

    Dyadic operator-() const { return Dyadic(-m_, e_); }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        const std::int64_t e = a.e_ < b.e_ ? a.e_ : b.e_;
        Int m = (a.m_ << static_cast<unsigned>(a.e_ - e)) + (b.m_ << static_cast<unsigned>(b.e_ - e));
        return Dyadic(std::move(m), e);
    }
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
    friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
        return Dyadic(a.m_ * b.m_, a.e_ + b.e_);
    }
    Dyadic times_int(long long n) const { return Dyadic(m_ * n, e_); }
    Dyadic times_pow2(std::int64_t k) const { return is_zero() ? Dyadic() : Dyadic(m_, e_ + k); }

    friend bool operator==(const Dyadic& a, const Dyadic& b) { return a.m_ == b.m_ && a.e_ == b.e_; }
    friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
        if (a.m_.sign() != b.m_.sign()) return a.m_.sign() <=> b.m_.sign();
        const Dyadic d = a - b;
        if (d.m_.sign() < 0) return std::strong_ordering::less;
        if (d.m_.sign() > 0) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    /// Largest multiple of 2^e not exceeding this value.
    Dyadic floor_to_exponent(std::int64_t e) const {
        if (is_zero() || e_ >= e) return *this;
        const unsigned shift = static_cast<unsigned>(e - e_);
        Int q;
        if (m_ >= 0) {
            q = m_ >> shift;
        } else {
            const Int bias = (Int(1) << shift) - 1;
            q = -((-m_ + bias) >> shift);
        }
        return Dyadic(std::move(q), e);
    }

    std::string str() const {
        return m_.str() + "*2^" + std::to_string(e_);
    }

private:
    void normalize() {
        if (m_.is_zero()) { e_ = 0; return; }
        const unsigned tz = lsb(boost::multiprecision::abs(m_));
        if (tz > 0) { m_ >>= tz; e_ += tz; }
    }

    Int m_;
    std::int64_t e_;
};

} // namespace carleman
