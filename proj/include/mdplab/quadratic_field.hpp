#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "mdplab/rational.hpp"

namespace mdplab {

/* Exact element a + b*sqrt(2) of the quadratic field Q(sqrt(2)).  The value
 * is rational iff b = 0, and that test is decidable, which is the whole
 * point: the divergence construction needs "u rational, v irrational" as a
 * machine-checkable invariant.  Only the vector-space operations over Q are
 * provided; the updates that arise are all affine with rational
 * coefficients. */
class ExtendedRational {
  public:
    ExtendedRational() = default;
    ExtendedRational(const Rational& a) : a_(a) {}
    ExtendedRational(Rational a, Rational b) : a_(std::move(a)), b_(std::move(b)) {}
    ExtendedRational(long long a) : a_(a) {}

    const Rational& a() const { return a_; }
    const Rational& b() const { return b_; }
    bool is_rational() const { return b_.is_zero(); }

    /* sign decided exactly: when a and b disagree in sign, |a| vs |b|sqrt2
     * reduces to a^2 vs 2 b^2.  Equality there would force a/b = ±sqrt2,
     * impossible for rationals, so the zero branch needs both parts zero. */
    int sign() const {
        const int sa = a_.sign(), sb = b_.sign();
        if (sb == 0) return sa;
        if (sa == 0) return sb;
        if (sa == sb) return sa;
        const Rational lhs = a_ * a_;
        const Rational rhs = Rational(2) * b_ * b_;
        if (lhs == rhs) return 0;
        return lhs > rhs ? sa : sb;
    }

    double to_double() const { return a_.to_double() + b_.to_double() * std::sqrt(2.0); }

    std::string str() const { return a_.str() + " + " + b_.str() + "*sqrt2"; }

    friend ExtendedRational operator+(const ExtendedRational& x, const ExtendedRational& y) {
        return {x.a_ + y.a_, x.b_ + y.b_};
    }
    friend ExtendedRational operator-(const ExtendedRational& x, const ExtendedRational& y) {
        return {x.a_ - y.a_, x.b_ - y.b_};
    }
    friend ExtendedRational operator-(const ExtendedRational& x) { return {-x.a_, -x.b_}; }
    friend ExtendedRational operator*(const Rational& c, const ExtendedRational& x) {
        return {c * x.a_, c * x.b_};
    }
    friend ExtendedRational operator*(const ExtendedRational& x, const Rational& c) {
        return c * x;
    }
    ExtendedRational& operator+=(const ExtendedRational& y) { return *this = *this + y; }
    ExtendedRational& operator-=(const ExtendedRational& y) { return *this = *this - y; }

    friend bool operator==(const ExtendedRational& x, const ExtendedRational& y) {
        return x.a_ == y.a_ && x.b_ == y.b_;
    }
    friend bool operator!=(const ExtendedRational& x, const ExtendedRational& y) {
        return !(x == y);
    }
    friend bool operator<(const ExtendedRational& x, const ExtendedRational& y) {
        return (x - y).sign() < 0;
    }
    friend bool operator>(const ExtendedRational& x, const ExtendedRational& y) {
        return (x - y).sign() > 0;
    }
    friend bool operator<=(const ExtendedRational& x, const ExtendedRational& y) {
        return (x - y).sign() <= 0;
    }
    friend bool operator>=(const ExtendedRational& x, const ExtendedRational& y) {
        return (x - y).sign() >= 0;
    }

  private:
    Rational a_;
    Rational b_;
};

}  // namespace mdplab
