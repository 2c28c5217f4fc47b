#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <Eigen/Core>

#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace mdplab {

using BigInt = boost::multiprecision::mpz_int;

/* Arbitrary-precision rational with plain value semantics, GMP underneath
 * (quasi-linear gcd; normalization dominates once operands reach a few
 * thousand bits).  The wrapper keeps the constructor set small so that
 * Eigen's scalar-promotion traits stay well-formed; the raw boost number
 * type cannot be used as an Eigen scalar because its byte-container
 * constructor is not SFINAE-friendly. */
class Rational {
public:
    using Backend = boost::multiprecision::mpq_rational;

    Rational() : v_(0) {}
    Rational(int n) : v_(n) {}
    Rational(long n) : v_(n) {}
    Rational(long long n) : v_(n) {}
    /* routed through BigInt: the builtin-int pair constructor of the gmp
     * backend mishandles negative denominators */
    Rational(long long num, long long den) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        v_ = Backend(BigInt(num), BigInt(den));
    }
    explicit Rational(Backend v) : v_(std::move(v)) {}
    explicit Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        v_ = Backend(num, den);
    }
    /* Exact: every finite double is a dyadic rational. */
    explicit Rational(double x) : v_(x) {}

    /* Accepts "p/q" or "p" with optional sign. */
    static Rational from_string(const std::string& s);

    const Backend& raw() const { return v_; }
    BigInt numerator() const { return boost::multiprecision::numerator(v_); }
    BigInt denominator() const { return boost::multiprecision::denominator(v_); }

    double to_double() const { return v_.template convert_to<double>(); }
    std::string str() const {
        std::ostringstream os;
        os << v_;
        return os.str();
    }
    bool is_zero() const { return v_.is_zero(); }
    int sign() const { return v_.sign(); }

    friend Rational operator+(const Rational& a, const Rational& b) { return Rational(a.v_ + b.v_); }
    friend Rational operator-(const Rational& a, const Rational& b) { return Rational(a.v_ - b.v_); }
    friend Rational operator*(const Rational& a, const Rational& b) { return Rational(a.v_ * b.v_); }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.v_.is_zero()) throw std::domain_error("Rational: division by zero");
        return Rational(a.v_ / b.v_);
    }
    Rational operator-() const { return Rational(-v_); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.v_.is_zero()) throw std::domain_error("Rational: division by zero");
        v_ /= o.v_;
        return *this;
    }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

    friend Rational abs(const Rational& a) { return a.v_ < 0 ? Rational(-a.v_) : a; }
    friend std::ostream& operator<<(std::ostream& os, const Rational& a) { return os << a.v_; }

private:
    Backend v_;
};

/* Parses the two integer parts separately: string construction of the gmp
 * rational skips canonicalization, which later mpq operations assume. */
inline Rational Rational::from_string(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) throw std::invalid_argument("empty rational literal");
    std::string t = s.substr(b, e - b + 1);
    std::size_t slash = t.find('/');
    if (slash != std::string::npos && t.find('/', slash + 1) != std::string::npos)
        throw std::invalid_argument("bad rational literal: " + s);
    try {
        if (slash == std::string::npos) return Rational(Backend(BigInt(t)));
        const BigInt num(t.substr(0, slash));
        const BigInt den(t.substr(slash + 1));
        return Rational(num, den);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad rational literal: " + s);
    }
}

inline std::size_t bit_size(const BigInt& x) {
    if (x.is_zero()) return 0;
    return static_cast<std::size_t>(boost::multiprecision::msb(boost::multiprecision::abs(x))) + 1;
}

}  // namespace mdplab

namespace Eigen {
template <>
struct NumTraits<mdplab::Rational> {
    using Real = mdplab::Rational;
    using NonInteger = mdplab::Rational;
    using Literal = mdplab::Rational;
    using Nested = mdplab::Rational;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 8,
        AddCost = 60,
        MulCost = 60
    };
    static mdplab::Rational epsilon() { return mdplab::Rational(0); }
    static mdplab::Rational dummy_precision() { return mdplab::Rational(0); }
    static int digits10() { return 0; }
};
}  // namespace Eigen
