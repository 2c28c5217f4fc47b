#pragma once

#include "mdplab/episode.hpp"
#include "mdplab/mdp.hpp"
#include "mdplab/solvers.hpp"

namespace mdplab::testing {

/* One state, two self-loop actions: action 0 pays 0, action 1 pays 1.
 * V* = gamma-geometric series of the better arm. */
template <class Scalar>
Mdp<Scalar> loop_mdp(Scalar gamma) {
    return MdpBuilder<Scalar>({2}, gamma)
        .names({"e"}, {{"0", "1"}})
        .transition(0, 0, 0, Scalar(1))
        .transition(0, 1, 0, Scalar(1))
        .reward(0, 1, 0, Scalar(1))
        .build();
}

/* s0 -> s1 -> s2 chain, s2 absorbing with zero reward.  Each interior
 * state has a fast action straight down the chain and a slow one that
 * stays put with probability 1/2. */
template <class Scalar>
Mdp<Scalar> chain_mdp(Scalar gamma) {
    const Scalar half = Scalar(1) / Scalar(2);
    return MdpBuilder<Scalar>({2, 2, 1}, gamma)
        .transition(0, 0, 1, Scalar(1))
        .reward(0, 0, 1, Scalar(1))
        .transition(0, 1, 0, half)
        .transition(0, 1, 1, half)
        .reward(0, 1, 1, Scalar(2))
        .transition(1, 0, 2, Scalar(1))
        .reward(1, 0, 2, Scalar(1))
        .transition(1, 1, 1, half)
        .transition(1, 1, 2, half)
        .transition(2, 0, 2, Scalar(1))
        .build();
}

inline std::vector<Index> chain_triangle() { return {2}; }

template <class Scalar>
StartSpec<Scalar> uniform_states(const Mdp<Scalar>& m) {
    return StartSpec<Scalar>::states(
        Vec<Scalar>::Constant(m.num_states(), Scalar(1) / Scalar(m.num_states())));
}

}  // namespace mdplab::testing
