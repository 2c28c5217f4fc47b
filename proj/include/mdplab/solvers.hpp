#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mdplab/mdp.hpp"

namespace mdplab {

template <class Scalar>
Scalar mean_reward(const Mdp<Scalar>& m, Index x, Index a) {
    const Index z = m.pair_index(x, a);
    Scalar r(0);
    for (Index y = 0; y < m.num_states(); ++y)
        r += m.transition(z, y) * m.reward_at(z, y).mean();
    return r;
}

/* r(x,a) = sum_y P(x,a,y) g(x,a,y), per pair */
template <class Scalar>
Vec<Scalar> mean_rewards(const Mdp<Scalar>& m) {
    Vec<Scalar> r(m.num_pairs());
    for (Index x = 0; x < m.num_states(); ++x)
        for (Index a = 0; a < m.num_actions(x); ++a)
            r(m.pair_index(x, a)) = mean_reward(m, x, a);
    return r;
}

template <class Scalar>
struct PolicyMatrices {
    Vec<Scalar> r_pi;
    Mat<Scalar> p_pi;
};

template <class Scalar>
PolicyMatrices<Scalar> policy_matrices(const Mdp<Scalar>& m, const StationaryPolicy<Scalar>& pi) {
    auto findings = validate_policy(m, pi);
    if (!findings.empty())
        throw std::invalid_argument("policy_matrices: " + findings.front());
    const Index n = m.num_states();
    PolicyMatrices<Scalar> out{Vec<Scalar>::Zero(n), Mat<Scalar>::Zero(n, n)};
    for (Index x = 0; x < n; ++x)
        for (Index a = 0; a < m.num_actions(x); ++a) {
            const Index z = m.pair_index(x, a);
            const Scalar w = pi.prob(z);
            if (w == Scalar(0)) continue;
            out.r_pi(x) += w * mean_reward(m, x, a);
            for (Index y = 0; y < n; ++y) out.p_pi(x, y) += w * m.transition(z, y);
        }
    return out;
}

struct LinearSolve {};
template <class Scalar>
struct FixedPoint {
    Scalar tol;
};

/* V_pi from (I - gamma P_pi) V = r_pi, Gaussian elimination with partial
 * pivoting.  Nonsingular for gamma < 1: the matrix is strictly diagonally
 * dominant. */
template <class Scalar>
Vec<Scalar> policy_evaluation(const Mdp<Scalar>& m, const StationaryPolicy<Scalar>& pi,
                              LinearSolve = {}) {
    auto pm = policy_matrices(m, pi);
    const Index n = m.num_states();
    Mat<Scalar> A = Mat<Scalar>::Identity(n, n) - pm.p_pi * m.gamma;
    return Eigen::PartialPivLU<Mat<Scalar>>(A).solve(pm.r_pi);
}

/* iterates T_pi until the sup-norm change drops below tol, which leaves
 * the result within tol * gamma / (1 - gamma) of V_pi */
template <class Scalar>
Vec<Scalar> policy_evaluation(const Mdp<Scalar>& m, const StationaryPolicy<Scalar>& pi,
                              FixedPoint<Scalar> fp) {
    if (!(fp.tol > Scalar(0))) throw std::invalid_argument("fixed_point: tol must be positive");
    auto pm = policy_matrices(m, pi);
    Vec<Scalar> v = Vec<Scalar>::Zero(m.num_states());
    for (std::int64_t it = 0; it < 100000000; ++it) {
        Vec<Scalar> next = pm.r_pi + pm.p_pi * v * m.gamma;
        Scalar change = sup_diff(next, v);
        v.swap(next);
        if (change < fp.tol) return v;
    }
    throw std::runtime_error("fixed_point evaluation did not converge");
}

template <class Scalar>
Vec<Scalar> q_from_v(const Mdp<Scalar>& m, const Vec<Scalar>& v) {
    if (v.size() != m.num_states()) throw std::invalid_argument("q_from_v: wrong size");
    Vec<Scalar> q(m.num_pairs());
    for (Index x = 0; x < m.num_states(); ++x)
        for (Index a = 0; a < m.num_actions(x); ++a) {
            const Index z = m.pair_index(x, a);
            Scalar future(0);
            for (Index y = 0; y < m.num_states(); ++y) future += m.transition(z, y) * v(y);
            q(z) = mean_reward(m, x, a) + m.gamma * future;
        }
    return q;
}

/* one application of the optimal Bellman operator */
template <class Scalar>
Vec<Scalar> bellman_optimal(const Mdp<Scalar>& m, const Vec<Scalar>& v) {
    Vec<Scalar> q = q_from_v(m, v);
    Vec<Scalar> out(m.num_states());
    for (Index x = 0; x < m.num_states(); ++x) {
        Scalar best = q(m.pair_index(x, 0));
        for (Index a = 1; a < m.num_actions(x); ++a) {
            const Scalar& c = q(m.pair_index(x, a));
            if (c > best) best = c;
        }
        out(x) = best;
    }
    return out;
}

template <class Scalar>
struct OptimalSolution {
    Vec<Scalar> v;
    Vec<Scalar> q;
    std::int64_t iterations = 0;
};

/* Successive approximation from zero.  Stopping at sup change below
 * tol (1 - gamma) / gamma guarantees sup |v - V*| <= tol. */
template <class Scalar>
OptimalSolution<Scalar> value_iteration(const Mdp<Scalar>& m, Scalar tol) {
    if (!(tol > Scalar(0))) throw std::invalid_argument("value_iteration: tol must be positive");
    const bool one_shot = m.gamma == Scalar(0);
    const Scalar threshold =
        one_shot ? Scalar(0) : tol * (Scalar(1) - m.gamma) / m.gamma;
    OptimalSolution<Scalar> out;
    Vec<Scalar> v = Vec<Scalar>::Zero(m.num_states());
    for (std::int64_t it = 1; it <= 100000000; ++it) {
        Vec<Scalar> next = bellman_optimal(m, v);
        Scalar change = sup_diff(next, v);
        v.swap(next);
        out.iterations = it;
        if (one_shot || change < threshold) {
            out.v = v;
            out.q = q_from_v(m, v);
            return out;
        }
    }
    throw std::runtime_error("value_iteration did not converge");
}

template <class Scalar>
struct EnumeratedOptimum {
    Vec<Scalar> v;                      // pointwise max over deterministic policies
    StationaryPolicy<Scalar> policy;    // a policy attaining the max everywhere
    std::size_t policies_checked = 0;
};

/* Exhaustive deterministic-policy enumeration; independent of the Bellman
 * machinery so the two routes can audit each other. */
template <class Scalar>
EnumeratedOptimum<Scalar> brute_force_optimal(const Mdp<Scalar>& m) {
    const Index n = m.num_states();
    std::size_t total = 1;
    for (Index x = 0; x < n; ++x) {
        total *= static_cast<std::size_t>(m.num_actions(x));
        if (total > 1000000)
            throw std::length_error("brute_force_optimal: more than 1e6 deterministic policies");
    }
    std::vector<Index> choice(static_cast<std::size_t>(n), 0);
    EnumeratedOptimum<Scalar> out;
    bool first = true;
    Scalar best_sum(0);
    for (std::size_t i = 0; i < total; ++i) {
        auto pi = deterministic_policy(m, choice);
        Vec<Scalar> v = policy_evaluation(m, pi, LinearSolve{});
        Scalar s = v.sum();
        if (first) {
            out.v = v;
            out.policy = pi;
            best_sum = s;
            first = false;
        } else {
            for (Index x = 0; x < n; ++x)
                if (v(x) > out.v(x)) out.v(x) = v(x);
            /* a sum-maximal policy is pointwise optimal: V_pi <= V* everywhere
             * forces equality when the sums match the max */
            if (s > best_sum) {
                best_sum = s;
                out.policy = pi;
            }
        }
        for (Index x = 0; x < n; ++x) {
            if (++choice[static_cast<std::size_t>(x)] < m.num_actions(x)) break;
            choice[static_cast<std::size_t>(x)] = 0;
        }
    }
    out.policies_checked = total;
    return out;
}

/* eps-greedy with ties split by exact floating equality against the row
 * maximum; deliberate, so both scalar backends agree on the argmax set */
template <class Scalar>
StationaryPolicy<Scalar> epsilon_greedy(const Mdp<Scalar>& m, const Vec<Scalar>& q,
                                        const Vec<Scalar>& eps) {
    if (q.size() != m.num_pairs()) throw std::invalid_argument("epsilon_greedy: wrong q size");
    if (eps.size() != m.num_states())
        throw std::invalid_argument("epsilon_greedy: eps must have one entry per state");
    StationaryPolicy<Scalar> pi{Vec<Scalar>::Zero(m.num_pairs())};
    for (Index x = 0; x < m.num_states(); ++x) {
        const Scalar& e = eps(x);
        if (e < Scalar(0) || e > Scalar(1))
            throw std::invalid_argument("epsilon_greedy: eps outside [0, 1]");
        const Index na = m.num_actions(x);
        Scalar best = q(m.pair_index(x, 0));
        for (Index a = 1; a < na; ++a) {
            const Scalar& c = q(m.pair_index(x, a));
            if (c > best) best = c;
        }
        Index ties = 0;
        for (Index a = 0; a < na; ++a)
            if (q(m.pair_index(x, a)) == best) ++ties;
        const Scalar explore = e / Scalar(na);
        const Scalar greedy = (Scalar(1) - e) / Scalar(ties);
        for (Index a = 0; a < na; ++a) {
            const Index z = m.pair_index(x, a);
            pi.prob(z) = explore;
            if (q(z) == best) pi.prob(z) += greedy;
        }
    }
    return pi;
}

/* H(eps, q) = Q of the eps-greedy policy of q, through an exact policy
 * evaluation */
template <class Scalar>
Vec<Scalar> h_operator(const Mdp<Scalar>& m, const Vec<Scalar>& eps, const Vec<Scalar>& q) {
    auto pi = epsilon_greedy(m, q, eps);
    Vec<Scalar> v = policy_evaluation(m, pi, LinearSolve{});
    return q_from_v(m, v);
}

}  // namespace mdplab
