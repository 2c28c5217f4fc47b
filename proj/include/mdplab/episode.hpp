#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdplab/mdp.hpp"

namespace mdplab {

enum class EpisodeMode { truncated, absorbed };

/* One sampled trajectory.  steps[t] holds (X_t, A_t, R_{t+1}); final_state
 * is X_T.  In absorbed mode final_state lies in the absorbing set and the
 * last recorded reward is the one earned on entering it. */
template <class Scalar>
struct Episode {
    struct Step {
        Index state;
        Index action;
        Scalar reward;
    };
    std::vector<Step> steps;
    Index final_state = -1;
    EpisodeMode mode = EpisodeMode::truncated;

    Index length() const { return static_cast<Index>(steps.size()); }
};

/* Initial draw: either a distribution over pairs, or a distribution over
 * states with the first action drawn from the policy being run. */
template <class Scalar>
struct StartSpec {
    bool over_pairs = false;
    Vec<Scalar> probs;

    static StartSpec pairs(Vec<Scalar> p) { return {true, std::move(p)}; }
    static StartSpec states(Vec<Scalar> p) { return {false, std::move(p)}; }
};

struct AbsorbingFinding {
    std::string clause;  // "reward" | "closure" | "reachability"
    std::string detail;
};

struct AbsorbingReport {
    std::vector<AbsorbingFinding> findings;
    bool ok() const { return findings.empty(); }
};

struct AbsorbingSpec {
    std::vector<char> member;    // mask by state index
    std::vector<Index> states;   // sorted members
    bool validated = false;

    bool contains(Index x) const { return member[static_cast<std::size_t>(x)] != 0; }
};

/* The three clauses of a valid absorbing set: zero rewards out of it,
 * closure of the kernel on it, and reachability from everywhere through
 * the support graph of max_a P(x,a,.). */
template <class Scalar>
AbsorbingReport check_absorbing(const Mdp<Scalar>& m, const std::vector<Index>& triangle,
                                double tol = 1e-12) {
    const Index n = m.num_states();
    std::vector<char> member(static_cast<std::size_t>(n), 0);
    for (Index x : triangle) {
        if (x < 0 || x >= n)
            throw std::invalid_argument("check_absorbing: state index out of range");
        member[static_cast<std::size_t>(x)] = 1;
    }
    AbsorbingReport rep;
    for (Index x = 0; x < n; ++x) {
        if (!member[static_cast<std::size_t>(x)]) continue;
        for (Index a = 0; a < m.num_actions(x); ++a) {
            const Index z = m.pair_index(x, a);
            for (Index y = 0; y < n; ++y)
                if (!m.reward_at(z, y).is_point_mass_at_zero())
                    rep.findings.push_back(
                        {"reward", m.pair_name(z) + "|" +
                                       m.state_names[static_cast<std::size_t>(y)] +
                                       " is not a point mass at zero"});
            Scalar inside(0);
            for (Index y = 0; y < n; ++y)
                if (member[static_cast<std::size_t>(y)]) inside += m.transition(z, y);
            if (!scalar_traits<Scalar>::within(inside, Scalar(1), tol))
                rep.findings.push_back(
                    {"closure", m.pair_name(z) + " leaks probability outside the set"});
        }
    }
    std::vector<char> reaches = member;
    std::vector<Index> queue(triangle.begin(), triangle.end());
    while (!queue.empty()) {
        const Index y = queue.back();
        queue.pop_back();
        for (Index x = 0; x < n; ++x) {
            if (reaches[static_cast<std::size_t>(x)]) continue;
            bool edge = false;
            for (Index a = 0; a < m.num_actions(x) && !edge; ++a)
                if (m.transition(m.pair_index(x, a), y) > Scalar(0)) edge = true;
            if (edge) {
                reaches[static_cast<std::size_t>(x)] = 1;
                queue.push_back(x);
            }
        }
    }
    for (Index x = 0; x < n; ++x)
        if (!reaches[static_cast<std::size_t>(x)])
            rep.findings.push_back(
                {"reachability", "state " + m.state_names[static_cast<std::size_t>(x)] +
                                     " cannot reach the absorbing set"});
    return rep;
}

template <class Scalar>
AbsorbingSpec make_absorbing_spec(const Mdp<Scalar>& m, std::vector<Index> triangle,
                                  double tol = 1e-12) {
    auto rep = check_absorbing(m, triangle, tol);
    if (!rep.ok()) {
        std::string msg = "invalid absorbing set:";
        for (const auto& f : rep.findings) msg += "\n  [" + f.clause + "] " + f.detail;
        throw std::invalid_argument(msg);
    }
    AbsorbingSpec spec;
    spec.member.assign(static_cast<std::size_t>(m.num_states()), 0);
    for (Index x : triangle) spec.member[static_cast<std::size_t>(x)] = 1;
    for (Index x = 0; x < m.num_states(); ++x)
        if (spec.member[static_cast<std::size_t>(x)]) spec.states.push_back(x);
    spec.validated = true;
    return spec;
}

struct Truncated {
    Index horizon = 0;
};

namespace detail {

template <class Scalar>
void check_start(const Mdp<Scalar>& m, const StartSpec<Scalar>& start) {
    const Index want = start.over_pairs ? m.num_pairs() : m.num_states();
    if (start.probs.size() != want)
        throw std::invalid_argument("start distribution has wrong size");
}

template <class Scalar>
Index policy_draw(const Mdp<Scalar>& m, const StationaryPolicy<Scalar>& pi, Index x,
                  StreamRng& rng) {
    const Index off = m.pair_offset[static_cast<std::size_t>(x)];
    return sample_categorical(rng, pi.prob.segment(off, m.num_actions(x)));
}

}  // namespace detail

template <class Scalar>
Episode<Scalar> sample_episode(const Mdp<Scalar>& m, const StationaryPolicy<Scalar>& pi,
                               const StartSpec<Scalar>& start, const SeedSpec& seed,
                               Truncated tr) {
    if (tr.horizon < 0) throw std::invalid_argument("sample_episode: negative horizon");
    detail::check_start(m, start);
    StreamRng rng(seed);
    Episode<Scalar> e;
    e.mode = EpisodeMode::truncated;
    Index x, a = -1;
    if (start.over_pairs) {
        const Index z = sample_categorical(rng, start.probs);
        auto [sx, sa] = m.state_action(z);
        x = sx;
        a = sa;
    } else {
        x = sample_categorical(rng, start.probs);
        if (tr.horizon > 0) a = detail::policy_draw(m, pi, x, rng);
    }
    for (Index t = 0; t < tr.horizon; ++t) {
        if (t > 0) a = detail::policy_draw(m, pi, x, rng);
        const Index z = m.pair_index(x, a);
        const Index y = sample_categorical(rng, m.transition.row(z));
        Scalar r = m.reward_at(z, y).sample(rng);
        e.steps.push_back({x, a, std::move(r)});
        x = y;
    }
    e.final_state = x;
    return e;
}

template <class Scalar>
Episode<Scalar> sample_episode(const Mdp<Scalar>& m, const StationaryPolicy<Scalar>& pi,
                               const StartSpec<Scalar>& start, const SeedSpec& seed,
                               const AbsorbingSpec& abs, Index cap = 10000000) {
    if (!abs.validated)
        throw std::invalid_argument("absorbed sampling requires a validated AbsorbingSpec");
    if (abs.member.size() != static_cast<std::size_t>(m.num_states()))
        throw std::invalid_argument("AbsorbingSpec does not match the MDP");
    detail::check_start(m, start);
    StreamRng rng(seed);
    Episode<Scalar> e;
    e.mode = EpisodeMode::absorbed;
    Index x, a = -1;
    if (start.over_pairs) {
        const Index z = sample_categorical(rng, start.probs);
        auto [sx, sa] = m.state_action(z);
        x = sx;
        a = sa;
    } else {
        x = sample_categorical(rng, start.probs);
        if (!abs.contains(x)) a = detail::policy_draw(m, pi, x, rng);
    }
    while (!abs.contains(x)) {
        const Index z = m.pair_index(x, a);
        const Index y = sample_categorical(rng, m.transition.row(z));
        Scalar r = m.reward_at(z, y).sample(rng);
        e.steps.push_back({x, a, std::move(r)});
        x = y;
        if (abs.contains(x)) break;
        if (e.length() >= cap)
            throw std::runtime_error("sample_episode: no absorption within " +
                                     std::to_string(cap) + " steps");
        a = detail::policy_draw(m, pi, x, rng);
    }
    e.final_state = x;
    return e;
}

/* Discounted sum of the rewards from step `from` on, evaluated backwards
 * so no power of gamma is ever formed. */
template <class Scalar>
Scalar discounted_return(const Episode<Scalar>& e, Index from, const Scalar& gamma) {
    if (from < 0 || from > e.length())
        throw std::invalid_argument("discounted_return: index out of range");
    Scalar g(0);
    for (Index t = e.length() - 1; t >= from; --t)
        g = e.steps[static_cast<std::size_t>(t)].reward + gamma * g;
    return g;
}

template <class Scalar>
std::optional<Index> first_visit(const Episode<Scalar>& e, Index x, Index a) {
    for (Index t = 0; t < e.length(); ++t) {
        const auto& s = e.steps[static_cast<std::size_t>(t)];
        if (s.state == x && s.action == a) return t;
    }
    return std::nullopt;
}

/* earliest visit per pair among steps [0, window), single pass; -1 = none */
template <class Scalar>
std::vector<Index> first_visit_map(const Mdp<Scalar>& m, const Episode<Scalar>& e,
                                   Index window) {
    std::vector<Index> fv(static_cast<std::size_t>(m.num_pairs()), -1);
    const Index end = window < e.length() ? window : e.length();
    for (Index t = 0; t < end; ++t) {
        const auto& s = e.steps[static_cast<std::size_t>(t)];
        const Index z = m.pair_index(s.state, s.action);
        if (fv[static_cast<std::size_t>(z)] < 0) fv[static_cast<std::size_t>(z)] = t;
    }
    return fv;
}

/* smallest T with gamma^T r_max / (1 - gamma) <= tol */
inline Index horizon_for_tolerance(double gamma, double r_max, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("horizon_for_tolerance: tol must be positive");
    if (!(gamma >= 0) || !(gamma < 1))
        throw std::invalid_argument("horizon_for_tolerance: gamma outside [0, 1)");
    if (!(r_max >= 0)) throw std::invalid_argument("horizon_for_tolerance: negative r_max");
    if (r_max == 0 || gamma == 0) return 0;
    double tail = r_max / (1.0 - gamma);
    Index t = 0;
    while (tail > tol) {
        tail *= gamma;
        if (++t > 1000000000)
            throw std::runtime_error("horizon_for_tolerance: horizon exceeds 1e9");
    }
    return t;
}

}  // namespace mdplab
