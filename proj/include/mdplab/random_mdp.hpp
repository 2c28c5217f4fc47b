#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mdplab/episode.hpp"
#include "mdplab/mdp.hpp"

namespace mdplab {

/* Seeded instance generator.  Probabilities are dyadic (parts of 64 for
 * transitions, parts of 16 for reward atoms) so row sums are exact in both
 * scalar backends.  With absorbing_fraction > 0 the top index range becomes
 * a zero-reward self-loop set and every other pair only targets strictly
 * higher indices, so the absorbing-set conditions hold by construction. */
struct RandomMdpSpec {
    Index n_states = 4;
    Index max_actions = 2;
    double gamma = 0.4;
    Index branching = 2;
    double reward_min = -1.0;
    double reward_max = 1.0;
    Index reward_points = 1;
    double absorbing_fraction = 0.0;
    std::uint64_t seed = 0;
};

inline std::vector<std::string> validate_random_mdp_spec(const RandomMdpSpec& s) {
    std::vector<std::string> f;
    if (s.n_states < 1) f.push_back("n_states must be at least 1");
    if (s.max_actions < 1) f.push_back("max_actions must be at least 1");
    if (!(s.gamma >= 0 && s.gamma < 1)) f.push_back("gamma outside [0, 1)");
    if (s.branching < 1 || s.branching > 64)
        f.push_back("branching outside [1, 64]");  // transition parts are 64ths
    if (!(s.reward_min <= s.reward_max)) f.push_back("reward_min exceeds reward_max");
    if (s.reward_points < 1 || s.reward_points > 16)
        f.push_back("reward_points outside [1, 16]");  // atom weights are 16ths
    if (!(s.absorbing_fraction >= 0 && s.absorbing_fraction <= 1))
        f.push_back("absorbing_fraction outside [0, 1]");
    return f;
}

template <class Scalar>
struct GeneratedMdp {
    Mdp<Scalar> mdp;
    std::vector<Index> triangle;  // empty when absorbing_fraction == 0
};

namespace detail {

inline Index uniform_index(StreamRng& rng, Index n) {
    return static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
}

/* random composition of `total` into `parts` positive integers */
inline std::vector<Index> random_composition(StreamRng& rng, Index total, Index parts) {
    std::vector<Index> cuts;
    while (static_cast<Index>(cuts.size()) < parts - 1) {
        const Index c = 1 + uniform_index(rng, total - 1);
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    cuts.push_back(0);
    cuts.push_back(total);
    std::sort(cuts.begin(), cuts.end());
    std::vector<Index> out;
    for (std::size_t i = 1; i < cuts.size(); ++i) out.push_back(cuts[i] - cuts[i - 1]);
    return out;
}

}  // namespace detail

template <class Scalar>
GeneratedMdp<Scalar> generate_mdp(const RandomMdpSpec& spec) {
    auto findings = validate_random_mdp_spec(spec);
    if (!findings.empty()) {
        std::string msg = "invalid generator spec:";
        for (const auto& f : findings) msg += "\n  " + f;
        throw std::invalid_argument(msg);
    }
    StreamRng rng(SeedSpec{spec.seed, 0, 0});
    const Index n = spec.n_states;
    Index n_abs = 0;
    if (spec.absorbing_fraction > 0) {
        n_abs = static_cast<Index>(spec.absorbing_fraction * static_cast<double>(n) + 0.5);
        if (n_abs < 1) n_abs = 1;
        if (n_abs > n) n_abs = n;
    }
    const Index first_abs = n - n_abs;

    std::vector<Index> actions(static_cast<std::size_t>(n));
    for (Index x = 0; x < n; ++x)
        actions[static_cast<std::size_t>(x)] = 1 + detail::uniform_index(rng, spec.max_actions);

    MdpBuilder<Scalar> b(actions, scalar_traits<Scalar>::from_double(spec.gamma));
    const double span = spec.reward_max - spec.reward_min;

    for (Index x = 0; x < n; ++x) {
        const bool absorbing = x >= first_abs;
        for (Index a = 0; a < actions[static_cast<std::size_t>(x)]; ++a) {
            if (absorbing) {
                b.transition(x, a, x, Scalar(1));
                continue;  // builder rewards default to a point mass at zero
            }
            std::vector<Index> candidates;
            if (n_abs > 0) {
                for (Index y = x + 1; y < n; ++y) candidates.push_back(y);
            } else {
                for (Index y = 0; y < n; ++y) candidates.push_back(y);
            }
            Index k = 1 + detail::uniform_index(
                              rng, std::min(spec.branching,
                                            static_cast<Index>(candidates.size())));
            std::vector<Index> targets;
            for (Index j = 0; j < k; ++j) {
                const Index pick = detail::uniform_index(
                    rng, static_cast<Index>(candidates.size()) - j);
                std::swap(candidates[static_cast<std::size_t>(pick)],
                          candidates[candidates.size() - 1 - static_cast<std::size_t>(j)]);
                targets.push_back(candidates[candidates.size() - 1 - static_cast<std::size_t>(j)]);
            }
            const auto parts = detail::random_composition(rng, 64, k);
            for (Index j = 0; j < k; ++j) {
                const Scalar p = Scalar(parts[static_cast<std::size_t>(j)]) / Scalar(64);
                b.transition(x, a, targets[static_cast<std::size_t>(j)], p);
                DiscreteDist<Scalar> dist;
                const auto wts = detail::random_composition(rng, 16, spec.reward_points);
                for (Index i = 0; i < spec.reward_points; ++i) {
                    const double val =
                        spec.reward_min +
                        span * static_cast<double>(rng.next_u64() % 257) / 256.0;
                    dist.support.push_back(
                        {scalar_traits<Scalar>::from_double(val),
                         Scalar(wts[static_cast<std::size_t>(i)]) / Scalar(16)});
                }
                b.reward(x, a, targets[static_cast<std::size_t>(j)], dist);
            }
        }
    }
    GeneratedMdp<Scalar> out{b.build(), {}};
    for (Index x = first_abs; x < n; ++x)
        if (n_abs > 0) out.triangle.push_back(x);
    return out;
}

}  // namespace mdplab
