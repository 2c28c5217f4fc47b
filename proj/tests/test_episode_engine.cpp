#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mdplab/episode.hpp"
#include "mdplab/random_mdp.hpp"
#include "mdplab/rng.hpp"

#include "helpers.hpp"

using namespace mdplab;
using testing::chain_mdp;
using testing::chain_triangle;
using testing::loop_mdp;

namespace {

Episode<double> loop_episode(const Mdp<double>& m, Index action, Index t_max,
                             std::uint64_t episode = 0) {
    const auto pi = deterministic_policy(m, {action});
    Vec<double> mu(1);
    mu << 1.0;
    return sample_episode(m, pi, StartSpec<double>::states(mu), SeedSpec{1, 0, episode},
                          Truncated{t_max});
}

}  // namespace

TEST_CASE("deterministic kernel, truncated") {
    const auto m = loop_mdp<double>(0.75);
    const auto e = loop_episode(m, 1, 5);
    REQUIRE(e.length() == 5);
    for (const auto& s : e.steps) {
        CHECK(s.state == 0);
        CHECK(s.action == 1);
        CHECK(s.reward == 1.0);
    }
    CHECK(e.final_state == 0);
    CHECK(e.mode == EpisodeMode::truncated);
}

TEST_CASE("discounted return is the geometric sum") {
    const auto m = loop_mdp<double>(0.75);
    const auto e = loop_episode(m, 1, 100);
    const double g = discounted_return(e, 0, 0.75);
    const double expect = (1.0 - std::pow(0.75, 100)) / 0.25;
    CHECK(std::abs(g - expect) < 1e-12);
    CHECK(std::abs(g - 4.0) < 1e-11);
    CHECK(discounted_return(e, e.length(), 0.75) == 0.0);
    CHECK_THROWS_AS(discounted_return(e, -1, 0.75), std::invalid_argument);
}

TEST_CASE("return shifts by one discount factor") {
    const auto m = loop_mdp<double>(0.75);
    const auto e = loop_episode(m, 1, 40);
    const double g0 = discounted_return(e, 0, 0.75);
    const double g1 = discounted_return(e, 1, 0.75);
    CHECK(std::abs(g0 - (1.0 + 0.75 * g1)) < 1e-13);
}

TEST_CASE("first visit scan") {
    Episode<double> e;
    e.steps = {{0, 1, 1.0}, {1, 0, 0.0}, {0, 0, 2.0}, {1, 0, 0.0}, {0, 0, 1.0}};
    CHECK(first_visit(e, 0, 1) == Index{0});
    CHECK(first_visit(e, 0, 0) == Index{2});
    CHECK(first_visit(e, 1, 0) == Index{1});
    CHECK(!first_visit(e, 1, 1).has_value());
}

TEST_CASE("absorbing-set report") {
    const auto m = loop_mdp<double>(0.75);
    const auto empty = check_absorbing(m, {});
    CHECK(!empty.ok());
    bool reach = false;
    for (const auto& f : empty.findings) reach = reach || f.clause == "reachability";
    CHECK(reach);

    const auto chain = chain_mdp<double>(0.5);
    CHECK(check_absorbing(chain, chain_triangle()).ok());

    // absorbing state that still pays: clause (a)
    auto paying = MdpBuilder<double>({1, 1}, 0.5)
                      .transition(0, 0, 1, 1.0)
                      .transition(1, 0, 1, 1.0)
                      .reward(1, 0, 1, 3.0)
                      .build();
    const auto rep = check_absorbing(paying, {1});
    CHECK(!rep.ok());
    bool reward_clause = false;
    for (const auto& f : rep.findings) reward_clause = reward_clause || f.clause == "reward";
    CHECK(reward_clause);
}

TEST_CASE("horizon for tolerance") {
    CHECK(horizon_for_tolerance(0.0, 1.0, 1e-6) == 0);
    CHECK(horizon_for_tolerance(0.5, 1.0, 1e-6) == 21);
    CHECK(horizon_for_tolerance(0.5, 0.0, 1e-6) == 0);
    CHECK_THROWS_AS(horizon_for_tolerance(0.5, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(horizon_for_tolerance(1.0, 1.0, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(horizon_for_tolerance(0.5, -1.0, 1e-6), std::invalid_argument);
}

TEST_CASE("sampling is a pure function of the seed") {
    const auto m = chain_mdp<double>(0.5);
    const auto pi = uniform_policy(m);
    const auto start = testing::uniform_states(m);
    const SeedSpec seed{42, 3, 17};
    const auto a = sample_episode(m, pi, start, seed, Truncated{30});
    const auto b = sample_episode(m, pi, start, seed, Truncated{30});
    REQUIRE(a.length() == b.length());
    for (Index t = 0; t < a.length(); ++t) {
        CHECK(a.steps[t].state == b.steps[t].state);
        CHECK(a.steps[t].action == b.steps[t].action);
        CHECK(a.steps[t].reward == b.steps[t].reward);
    }
    const auto c = sample_episode(m, pi, start, SeedSpec{42, 3, 18}, Truncated{30});
    bool differs = c.length() != a.length();
    for (Index t = 0; !differs && t < a.length(); ++t)
        differs = c.steps[t].state != a.steps[t].state || c.steps[t].action != a.steps[t].action;
    CHECK(differs);
}

TEST_CASE("empirical transition frequencies") {
    // two actions whose rows mix three successors with dyadic weights
    auto m = MdpBuilder<double>({2, 1, 1}, 0.5)
                 .transition(0, 0, 0, 0.25)
                 .transition(0, 0, 1, 0.25)
                 .transition(0, 0, 2, 0.5)
                 .transition(0, 1, 1, 0.75)
                 .transition(0, 1, 2, 0.25)
                 .transition(1, 0, 1, 1.0)
                 .transition(2, 0, 2, 1.0)
                 .build();
    Vec<double> start = Vec<double>::Zero(m.num_pairs());
    start(0) = 1.0;  // always begin at (s0, a0)
    const auto pi = uniform_policy(m);
    const int n = 100000;
    std::vector<int> hits(3, 0);
    for (int k = 0; k < n; ++k) {
        const auto e = sample_episode(m, pi, StartSpec<double>::pairs(start),
                                      SeedSpec{7, 0, static_cast<std::uint64_t>(k)},
                                      Truncated{1});
        REQUIRE(e.length() == 1);
        ++hits[static_cast<std::size_t>(e.final_state)];
    }
    const double probs[3] = {0.25, 0.25, 0.5};
    for (int y = 0; y < 3; ++y) {
        const double p = probs[y];
        const double freq = static_cast<double>(hits[static_cast<std::size_t>(y)]) / n;
        CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n));
    }
}

TEST_CASE("return scales with the rewards") {
    const auto base = chain_mdp<double>(0.5);
    auto scaled = MdpBuilder<double>({2, 2, 1}, 0.5)
                      .transition(0, 0, 1, 1.0)
                      .reward(0, 0, 1, 3.0)
                      .transition(0, 1, 0, 0.5)
                      .transition(0, 1, 1, 0.5)
                      .reward(0, 1, 1, 6.0)
                      .transition(1, 0, 2, 1.0)
                      .reward(1, 0, 2, 3.0)
                      .transition(1, 1, 1, 0.5)
                      .transition(1, 1, 2, 0.5)
                      .transition(2, 0, 2, 1.0)
                      .build();
    const auto pi = uniform_policy(base);
    const auto start = testing::uniform_states(base);
    for (std::uint64_t k = 0; k < 50; ++k) {
        const SeedSpec seed{5, 0, k};
        const auto ea = sample_episode(base, pi, start, seed, Truncated{20});
        const auto eb = sample_episode(scaled, pi, start, seed, Truncated{20});
        REQUIRE(ea.length() == eb.length());
        const double ga = discounted_return(ea, 0, 0.5);
        const double gb = discounted_return(eb, 0, 0.5);
        CHECK(std::abs(gb - 3.0 * ga) < 1e-12);
    }
}

TEST_CASE("absorbed episodes and post-absorption padding") {
    const auto m = chain_mdp<double>(0.5);
    const auto spec = make_absorbing_spec(m, chain_triangle());
    const auto pi = uniform_policy(m);
    const auto start = testing::uniform_states(m);
    for (std::uint64_t k = 0; k < 10000; ++k) {
        const auto e = sample_episode(m, pi, start, SeedSpec{9, 0, k}, spec);
        CHECK(e.final_state == 2);
        CHECK(e.mode == EpisodeMode::absorbed);
        if (k < 100) {
            auto padded = e;
            for (int extra = 0; extra < 7; ++extra)
                padded.steps.push_back({2, 0, 0.0});
            CHECK(discounted_return(padded, 0, 0.5) == discounted_return(e, 0, 0.5));
        }
    }
}

TEST_CASE("absorption cap is enforced") {
    const auto m = chain_mdp<double>(0.5);
    const auto spec = make_absorbing_spec(m, chain_triangle());
    const auto pi = uniform_policy(m);
    Vec<double> mu = Vec<double>::Zero(3);
    mu(0) = 1.0;  // two hops to the triangle at minimum
    CHECK_THROWS_AS(
        sample_episode(m, pi, StartSpec<double>::states(mu), SeedSpec{9, 0, 0}, spec, 1),
        std::runtime_error);
}

TEST_CASE("spec construction rejects a bad triangle") {
    const auto m = loop_mdp<double>(0.75);
    CHECK_THROWS_AS(make_absorbing_spec(m, std::vector<Index>{}), std::invalid_argument);
}

TEST_CASE("generator output is valid and reproducible") {
    RandomMdpSpec spec;
    spec.n_states = 5;
    spec.max_actions = 3;
    spec.gamma = 0.3;
    spec.branching = 3;
    spec.reward_points = 2;
    spec.absorbing_fraction = 0.4;
    spec.seed = 123;
    const auto a = generate_mdp<double>(spec);
    const auto b = generate_mdp<double>(spec);
    CHECK(validate_mdp(a.mdp).empty());
    REQUIRE(!a.triangle.empty());
    CHECK(check_absorbing(a.mdp, a.triangle).ok());
    CHECK((a.mdp.transition.array() == b.mdp.transition.array()).all());
    CHECK(a.triangle == b.triangle);

    const auto ar = generate_mdp<Rational>(spec);
    for (Index z = 0; z < a.mdp.num_pairs(); ++z)
        for (Index y = 0; y < a.mdp.num_states(); ++y)
            CHECK(ar.mdp.transition(z, y).to_double() == a.mdp.transition(z, y));
}
