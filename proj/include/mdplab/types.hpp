#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdplab/rational.hpp"
#include "mdplab/rng.hpp"

namespace mdplab {

using Index = Eigen::Index;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/* Per-scalar backend policy.  The double backend carries tolerances; the
 * Rational backend replaces every tolerance check by exact equality. */
template <class Scalar>
struct scalar_traits;

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static double from_double(double x) { return x; }
    static double to_double(double x) { return x; }
    static double uniform_from_bits(std::uint64_t r) {
        return static_cast<double>(r >> 11) * 0x1.0p-53;
    }
    static bool within(double a, double b, double tol) {
        return std::abs(a - b) <= tol;
    }
    /* (1 + n)^(-theta), the exploration schedule. */
    static double decay_pow(std::int64_t n, double theta) {
        return std::pow(1.0 + static_cast<double>(n), -theta);
    }
};

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static Rational from_double(double x) { return Rational(x); }
    static double to_double(const Rational& x) { return x.to_double(); }
    static Rational uniform_from_bits(std::uint64_t r) {
        BigInt num(r);
        BigInt den = BigInt(1) << 64;
        return Rational(num, den);
    }
    static bool within(const Rational& a, const Rational& b, double) {
        return a == b;
    }
    static Rational decay_pow(std::int64_t n, double theta) {
        if (theta != 1.0)
            throw std::invalid_argument(
                "rational backend supports only theta = 1 decay");
        return Rational(1) / Rational(n + 1);
    }
};

template <class Scalar>
Scalar next_uniform(StreamRng& rng) {
    return scalar_traits<Scalar>::uniform_from_bits(rng.next_u64());
}

template <class Derived>
typename Derived::Scalar sup_norm(const Eigen::MatrixBase<Derived>& v) {
    using S = typename Derived::Scalar;
    if (v.size() == 0) return S(0);
    return v.cwiseAbs().maxCoeff();
}

template <class Derived, class OtherDerived>
typename Derived::Scalar sup_diff(const Eigen::MatrixBase<Derived>& a,
                                  const Eigen::MatrixBase<OtherDerived>& b) {
    return sup_norm((a - b).eval());
}

/* sup of the positive part, zero when nothing is positive */
template <class Derived>
typename Derived::Scalar sup_pos(const Eigen::MatrixBase<Derived>& v) {
    using S = typename Derived::Scalar;
    S m(0);
    for (Index i = 0; i < v.size(); ++i)
        if (v(i) > m) m = v(i);
    return m;
}

/* Inverse-CDF draw over the stored coordinate order.  Zero-probability
 * entries can never be selected; rounding shortfalls fall back to the last
 * positive entry. */
template <class Derived>
Index sample_categorical(StreamRng& rng, const Eigen::MatrixBase<Derived>& probs) {
    using S = typename Derived::Scalar;
    S u = next_uniform<S>(rng);
    S acc(0);
    Index last_positive = -1;
    for (Index i = 0; i < probs.size(); ++i) {
        const S p = probs(i);
        if (p > S(0)) last_positive = i;
        acc += p;
        if (u < acc && p > S(0)) return i;
    }
    if (last_positive < 0)
        throw std::invalid_argument("sample_categorical: no positive mass");
    return last_positive;
}

/* Finite-support distribution over scalar values, stored as
 * (value, probability) atoms.  Sampling follows the stored order. */
template <class Scalar>
struct DiscreteDist {
    std::vector<std::pair<Scalar, Scalar>> support;

    static DiscreteDist point(Scalar v) { return DiscreteDist{{{std::move(v), Scalar(1)}}}; }

    Scalar mean() const {
        Scalar m(0);
        for (const auto& [v, p] : support) m += v * p;
        return m;
    }

    bool is_point_mass_at_zero() const {
        for (const auto& [v, p] : support)
            if (!(p == Scalar(0)) && !(v == Scalar(0))) return false;
        return !support.empty();
    }

    Scalar max_abs_value() const {
        Scalar m(0);
        for (const auto& [v, p] : support) {
            if (p == Scalar(0)) continue;
            Scalar a = v < Scalar(0) ? Scalar(-v) : v;
            if (a > m) m = a;
        }
        return m;
    }

    std::vector<std::string> validate(double tol = 1e-12) const {
        std::vector<std::string> findings;
        if (support.empty()) {
            findings.push_back("empty support");
            return findings;
        }
        Scalar total(0);
        for (const auto& [v, p] : support) {
            (void)v;
            if (p < Scalar(0)) findings.push_back("negative probability");
            total += p;
        }
        if (!scalar_traits<Scalar>::within(total, Scalar(1), tol))
            findings.push_back("probabilities do not sum to one");
        return findings;
    }

    Scalar sample(StreamRng& rng) const {
        Scalar u = next_uniform<Scalar>(rng);
        Scalar acc(0);
        Index last_positive = -1;
        for (Index i = 0; i < static_cast<Index>(support.size()); ++i) {
            const Scalar& p = support[static_cast<std::size_t>(i)].second;
            if (p > Scalar(0)) last_positive = i;
            acc += p;
            if (u < acc && p > Scalar(0))
                return support[static_cast<std::size_t>(i)].first;
        }
        if (last_positive < 0)
            throw std::invalid_argument("DiscreteDist::sample: no positive mass");
        return support[static_cast<std::size_t>(last_positive)].first;
    }
};

}  // namespace mdplab
