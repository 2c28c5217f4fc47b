#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdplab/types.hpp"

namespace mdplab {

template <class Scalar>
using RewardDist = DiscreteDist<Scalar>;

/* Finite discounted MDP.  State-action pairs are flattened: pair z of
 * (x, a) is pair_offset[x] + a, and all per-pair tables (transition rows,
 * rewards, policies, q-functions) are indexed by z. */
template <class Scalar>
struct Mdp {
    Scalar gamma{};
    std::vector<std::string> state_names;
    std::vector<std::vector<std::string>> action_names;
    std::vector<Index> pair_offset;               // size n+1
    Mat<Scalar> transition;                       // num_pairs x n, rows P(x,a,.)
    std::vector<std::vector<RewardDist<Scalar>>> reward;  // [pair][next state]

    Index num_states() const { return static_cast<Index>(state_names.size()); }
    Index num_actions(Index x) const {
        check_state(x);
        return pair_offset[static_cast<std::size_t>(x) + 1] - pair_offset[static_cast<std::size_t>(x)];
    }
    Index num_pairs() const { return pair_offset.empty() ? 0 : pair_offset.back(); }

    Index pair_index(Index x, Index a) const {
        check_state(x);
        if (a < 0 || a >= num_actions(x))
            throw std::out_of_range("unknown action " + std::to_string(a) + " at state " +
                                    state_names[static_cast<std::size_t>(x)]);
        return pair_offset[static_cast<std::size_t>(x)] + a;
    }

    std::pair<Index, Index> state_action(Index z) const {
        if (z < 0 || z >= num_pairs()) throw std::out_of_range("pair index out of range");
        Index x = 0;
        while (pair_offset[static_cast<std::size_t>(x) + 1] <= z) ++x;
        return {x, z - pair_offset[static_cast<std::size_t>(x)]};
    }

    const RewardDist<Scalar>& reward_at(Index z, Index y) const {
        return reward[static_cast<std::size_t>(z)][static_cast<std::size_t>(y)];
    }

    std::string pair_name(Index z) const {
        auto [x, a] = state_action(z);
        return state_names[static_cast<std::size_t>(x)] + "|" +
               action_names[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)];
    }

    /* sup |R| over reward atoms that sit on positive-probability transitions */
    Scalar max_abs_reward() const {
        Scalar m(0);
        for (Index z = 0; z < num_pairs(); ++z)
            for (Index y = 0; y < num_states(); ++y) {
                if (!(transition(z, y) > Scalar(0))) continue;
                Scalar a = reward_at(z, y).max_abs_value();
                if (a > m) m = a;
            }
        return m;
    }

private:
    void check_state(Index x) const {
        if (x < 0 || x >= num_states())
            throw std::out_of_range("unknown state index " + std::to_string(x));
    }
};

template <class Scalar>
std::vector<std::string> validate_mdp(const Mdp<Scalar>& m, double tol = 1e-12) {
    std::vector<std::string> findings;
    const Index n = m.num_states();
    if (n == 0) findings.push_back("no states");
    if (!(m.gamma >= Scalar(0)) || !(m.gamma < Scalar(1)))
        findings.push_back("gamma outside [0, 1)");
    std::set<std::string> seen;
    for (Index x = 0; x < n; ++x) {
        const auto& name = m.state_names[static_cast<std::size_t>(x)];
        if (!seen.insert(name).second) findings.push_back("duplicate state id " + name);
        if (name.find('|') != std::string::npos)
            findings.push_back("state id contains '|': " + name);
        if (m.num_actions(x) == 0)
            findings.push_back("state " + name + " has no actions");
    }
    if (m.transition.rows() != m.num_pairs() || m.transition.cols() != n) {
        findings.push_back("transition table has wrong shape");
        return findings;
    }
    for (Index z = 0; z < m.num_pairs(); ++z) {
        Scalar total(0);
        for (Index y = 0; y < n; ++y) {
            if (m.transition(z, y) < Scalar(0))
                findings.push_back("negative transition probability at " + m.pair_name(z));
            total += m.transition(z, y);
        }
        if (!scalar_traits<Scalar>::within(total, Scalar(1), tol))
            findings.push_back("transition row " + m.pair_name(z) + " does not sum to one");
        for (Index y = 0; y < n; ++y) {
            auto sub = m.reward_at(z, y).validate(tol);
            for (const auto& f : sub)
                findings.push_back("reward " + m.pair_name(z) + "|" +
                                   m.state_names[static_cast<std::size_t>(y)] + ": " + f);
        }
    }
    return findings;
}

template <class Scalar>
class MdpBuilder {
public:
    MdpBuilder(std::vector<Index> actions_per_state, Scalar gamma) {
        m_.gamma = std::move(gamma);
        const Index n = static_cast<Index>(actions_per_state.size());
        m_.pair_offset.assign(1, 0);
        for (Index x = 0; x < n; ++x) {
            m_.state_names.push_back("s" + std::to_string(x));
            std::vector<std::string> an;
            for (Index a = 0; a < actions_per_state[static_cast<std::size_t>(x)]; ++a)
                an.push_back("a" + std::to_string(a));
            m_.action_names.push_back(std::move(an));
            m_.pair_offset.push_back(m_.pair_offset.back() +
                                     actions_per_state[static_cast<std::size_t>(x)]);
        }
        m_.transition = Mat<Scalar>::Zero(m_.num_pairs(), n);
        m_.reward.assign(static_cast<std::size_t>(m_.num_pairs()),
                         std::vector<RewardDist<Scalar>>(
                             static_cast<std::size_t>(n), RewardDist<Scalar>::point(Scalar(0))));
    }

    MdpBuilder& names(std::vector<std::string> states,
                      std::vector<std::vector<std::string>> actions) {
        m_.state_names = std::move(states);
        m_.action_names = std::move(actions);
        return *this;
    }

    MdpBuilder& transition(Index x, Index a, Index y, Scalar p) {
        m_.transition(m_.pair_index(x, a), y) = std::move(p);
        return *this;
    }

    MdpBuilder& reward(Index x, Index a, Index y, RewardDist<Scalar> d) {
        m_.reward[static_cast<std::size_t>(m_.pair_index(x, a))][static_cast<std::size_t>(y)] =
            std::move(d);
        return *this;
    }

    MdpBuilder& reward(Index x, Index a, Index y, Scalar point_value) {
        return reward(x, a, y, RewardDist<Scalar>::point(std::move(point_value)));
    }

    Mdp<Scalar> build() const {
        auto findings = validate_mdp(m_);
        if (!findings.empty()) {
            std::string msg = "invalid MDP:";
            for (const auto& f : findings) msg += "\n  " + f;
            throw std::invalid_argument(msg);
        }
        return m_;
    }

    /* no validation; for tests that need broken instances */
    Mdp<Scalar> build_unchecked() const { return m_; }

private:
    Mdp<Scalar> m_;
};

/* Stationary policy stored per pair; row x must sum to one. */
template <class Scalar>
struct StationaryPolicy {
    Vec<Scalar> prob;
};

template <class Scalar>
std::vector<std::string> validate_policy(const Mdp<Scalar>& m,
                                         const StationaryPolicy<Scalar>& pi,
                                         double tol = 1e-12) {
    std::vector<std::string> findings;
    if (pi.prob.size() != m.num_pairs()) {
        findings.push_back("policy has wrong size");
        return findings;
    }
    for (Index x = 0; x < m.num_states(); ++x) {
        Scalar total(0);
        for (Index a = 0; a < m.num_actions(x); ++a) {
            Scalar p = pi.prob(m.pair_index(x, a));
            if (p < Scalar(0))
                findings.push_back("negative probability at state " +
                                   m.state_names[static_cast<std::size_t>(x)]);
            total += p;
        }
        if (!scalar_traits<Scalar>::within(total, Scalar(1), tol))
            findings.push_back("policy row at state " +
                               m.state_names[static_cast<std::size_t>(x)] +
                               " does not sum to one");
    }
    return findings;
}

template <class Scalar>
StationaryPolicy<Scalar> uniform_policy(const Mdp<Scalar>& m) {
    StationaryPolicy<Scalar> pi{Vec<Scalar>(m.num_pairs())};
    for (Index x = 0; x < m.num_states(); ++x) {
        Scalar p = Scalar(1) / Scalar(m.num_actions(x));
        for (Index a = 0; a < m.num_actions(x); ++a) pi.prob(m.pair_index(x, a)) = p;
    }
    return pi;
}

template <class Scalar>
StationaryPolicy<Scalar> deterministic_policy(const Mdp<Scalar>& m,
                                              const std::vector<Index>& action_per_state) {
    if (static_cast<Index>(action_per_state.size()) != m.num_states())
        throw std::invalid_argument("deterministic_policy: one action per state required");
    StationaryPolicy<Scalar> pi{Vec<Scalar>::Zero(m.num_pairs())};
    for (Index x = 0; x < m.num_states(); ++x)
        pi.prob(m.pair_index(x, action_per_state[static_cast<std::size_t>(x)])) = Scalar(1);
    return pi;
}

}  // namespace mdplab
