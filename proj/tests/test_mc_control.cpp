#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mdplab/counterexample.hpp"
#include "mdplab/mc_control.hpp"
#include "mdplab/random_mdp.hpp"
#include "mdplab/rational.hpp"

#include "helpers.hpp"

using namespace mdplab;
using testing::chain_mdp;
using testing::chain_triangle;
using testing::loop_mdp;
using testing::uniform_states;

namespace {

template <class Scalar>
Schedules<Scalar> const_alpha_schedules(Scalar alpha, const Mdp<Scalar>& m) {
    Schedules<Scalar> s;
    s.alpha = [alpha](Index, std::int64_t, Index, const Episode<Scalar>&) { return alpha; };
    s.epsilon = [](const Mdp<Scalar>& mm, const std::vector<std::int64_t>&, std::int64_t) {
        return Vec<Scalar>::Constant(mm.num_states(), Scalar(1)).eval();
    };
    const auto start = uniform_states(m);
    s.start = [start](std::int64_t) { return start; };
    return s;
}

}  // namespace

TEST_CASE("zero step size leaves the table alone") {
    const auto m = chain_mdp<double>(0.5);
    auto st = general_init(m, Vec<double>(0));
    Vec<double> q0 = st.q;
    const auto sched = const_alpha_schedules(0.0, m);
    for (int k = 0; k < 20; ++k)
        general_step(m, st, sched, 1, 0, TruncatedRun{10, 5});
    CHECK((st.q.array() == q0.array()).all());
    // counts still advance; only the values are frozen
    std::int64_t total = 0;
    for (auto n : st.n_pairs) total += n;
    CHECK(total > 0);
}

TEST_CASE("full step size copies the return") {
    // single action, so the policy is forced; gamma 3/4 with unit rewards
    auto m = MdpBuilder<double>({1}, 0.75).transition(0, 0, 0, 1.0).reward(0, 0, 0, 1.0).build();
    const Index t = horizon_for_tolerance(0.75, 1.0, 1e-9);
    auto st = general_init(m, Vec<double>(0));
    const auto sched = const_alpha_schedules(1.0, m);
    general_step(m, st, sched, 1, 0, TruncatedRun{t, 1});
    CHECK(std::abs(st.q(0) - 4.0) < 1.01e-9);
}

TEST_CASE("half step size averages old value and return") {
    // deterministic single-path MDP: reward 4 then absorption at zero reward
    auto m = MdpBuilder<double>({1, 1}, 0.5)
                 .transition(0, 0, 1, 1.0)
                 .reward(0, 0, 1, 4.0)
                 .transition(1, 0, 1, 1.0)
                 .build();
    Vec<double> mu = Vec<double>::Zero(2);
    mu(0) = 1.0;
    Schedules<double> sched;
    sched.alpha = [](Index, std::int64_t, Index, const Episode<double>&) { return 0.5; };
    sched.epsilon = [](const Mdp<double>& mm, const std::vector<std::int64_t>&, std::int64_t) {
        return Vec<double>::Constant(mm.num_states(), 1.0).eval();
    };
    sched.start = [mu](std::int64_t) { return StartSpec<double>::states(mu); };
    auto st = general_init(m, Vec<double>(0));
    general_step(m, st, sched, 1, 0, TruncatedRun{40, 1});
    CHECK(st.q(0) == 2.0);  // (1 - 1/2) * 0 + 1/2 * 4, return is exactly 4
}

TEST_CASE("step-size range is enforced") {
    const auto m = chain_mdp<double>(0.5);
    auto st = general_init(m, Vec<double>(0));
    auto sched = const_alpha_schedules(1.5, m);
    CHECK_THROWS_AS(general_step(m, st, sched, 1, 0, TruncatedRun{10, 5}),
                    std::invalid_argument);
    auto st2 = general_init(m, Vec<double>(0));
    const auto neg = const_alpha_schedules(-0.25, m);
    CHECK_THROWS_AS(general_step(m, st2, neg, 1, 0, TruncatedRun{10, 5}),
                    std::invalid_argument);
}

TEST_CASE("episode zero explores uniformly") {
    const auto m = loop_mdp<double>(0.75);
    const auto st = fva_init(m, Vec<double>(0), 1.0);
    const auto eps = epsilon_from_counts<double>(m, st.n_pairs, st.theta);
    CHECK(eps(0) == 1.0);
    const auto pi = epsilon_greedy(m, st.q, eps);
    CHECK(pi.prob(0) == 0.5);
    CHECK(pi.prob(1) == 0.5);
    CHECK_THROWS_AS(fva_init(m, Vec<double>(0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fva_init(m, Vec<double>(0), 1.5), std::invalid_argument);
}

TEST_CASE("first visit overwrites, second visit averages") {
    const auto m = loop_mdp<double>(0.75);
    Vec<double> q = Vec<double>::Zero(2);
    q(1) = 123.0;  // prior value is irrelevant on the first visit
    std::vector<std::int64_t> n(2, 0);
    Episode<double> e1;
    e1.steps = {{0, 1, 1.0}};
    const auto alpha = [](Index, std::int64_t n_after, Index, const Episode<double>&) {
        return 1.0 / static_cast<double>(n_after);
    };
    detail::apply_first_visits(m, e1, e1.length(), q, n, alpha,
                               static_cast<PairAudit<double>*>(nullptr), 0);
    CHECK(q(1) == 1.0);
    CHECK(n[1] == 1);
    Episode<double> e2;
    e2.steps = {{0, 1, 3.0}};
    detail::apply_first_visits(m, e2, e2.length(), q, n, alpha,
                               static_cast<PairAudit<double>*>(nullptr), 1);
    CHECK(q(1) == 2.0);  // running mean of returns 1 and 3
    CHECK(n[1] == 2);
    CHECK(q(0) == 0.0);  // untouched pair
    CHECK(n[0] == 0);
}

TEST_CASE("only the first visit in an episode updates") {
    const auto m = loop_mdp<double>(0.0);
    Vec<double> q = Vec<double>::Zero(2);
    std::vector<std::int64_t> n(2, 0);
    Episode<double> e;
    e.steps = {{0, 1, 7.0}, {0, 1, 9.0}};  // same pair twice; gamma 0 isolates rewards
    detail::apply_first_visits(m, e, e.length(), q, n,
                               [](Index, std::int64_t, Index, const Episode<double>&) {
                                   return 1.0;
                               },
                               static_cast<PairAudit<double>*>(nullptr), 0);
    CHECK(q(1) == 7.0);
    CHECK(n[1] == 1);
}

TEST_CASE("empty run leaves everything untouched") {
    const auto m = chain_mdp<double>(0.5);
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 0;
    cfg.trace_every = 10;
    const auto r = run_fva(m, cfg, TruncatedRun{20, 10});
    CHECK(r.trace.empty());
    CHECK((r.q.array() == 0.0).all());
    for (auto n : r.n_pairs) CHECK(n == 0);
}

TEST_CASE("running-mean identity, exact over rationals") {
    const auto m = chain_mdp<Rational>(Rational(1, 2));
    FvaConfig<Rational> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 200;
    cfg.master_seed = 3;
    auto st = fva_init(m, cfg.q0, cfg.theta);
    const RunMode mode = AbsorbedRun{make_absorbing_spec(m, chain_triangle())};
    for (std::int64_t k = 0; k < cfg.episodes; ++k)
        fva_step(m, st, cfg.start, cfg.master_seed, cfg.replicate, mode);
    for (Index z = 0; z < m.num_pairs(); ++z)
        CHECK(st.q(z) * Rational(st.n_pairs[static_cast<std::size_t>(z)]) == st.sum_returns(z));
}

TEST_CASE("running-mean identity, float drift bound") {
    const auto m = chain_mdp<double>(0.5);
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 5000;
    cfg.master_seed = 3;
    const auto r = run_fva(m, cfg, AbsorbedRun{make_absorbing_spec(m, chain_triangle())});
    for (Index z = 0; z < m.num_pairs(); ++z) {
        const double lhs = r.q(z) * static_cast<double>(r.n_pairs[static_cast<std::size_t>(z)]);
        CHECK(std::abs(lhs - r.sum_returns(z)) <= 1e-9 * static_cast<double>(cfg.episodes));
    }
}

TEST_CASE("state counts aggregate pair counts") {
    const auto m = chain_mdp<double>(0.5);
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 500;
    cfg.master_seed = 5;
    const auto r = run_fva(m, cfg, TruncatedRun{40, 20});
    const auto ns = state_counts(m, r.n_pairs);
    for (Index x = 0; x < m.num_states(); ++x) {
        std::int64_t acc = 0;
        for (Index a = 0; a < m.num_actions(x); ++a)
            acc += r.n_pairs[static_cast<std::size_t>(m.pair_index(x, a))];
        CHECK(ns[static_cast<std::size_t>(x)] == acc);
    }
}

TEST_CASE("exploration decays monotonically and policies stay well formed") {
    const auto m = chain_mdp<double>(0.5);
    auto st = fva_init(m, Vec<double>(0), 1.0);
    const auto start = uniform_states(m);
    const RunMode mode = TruncatedRun{40, 20};
    Vec<double> prev_eps = epsilon_from_counts<double>(m, st.n_pairs, st.theta);
    for (std::int64_t k = 0; k < 300; ++k) {
        const auto eps = epsilon_from_counts<double>(m, st.n_pairs, st.theta);
        for (Index x = 0; x < m.num_states(); ++x) CHECK(eps(x) <= prev_eps(x));
        const auto pi = epsilon_greedy(m, st.q, eps);
        for (Index x = 0; x < m.num_states(); ++x) {
            double row = 0;
            const double floor = eps(x) / static_cast<double>(m.num_actions(x));
            for (Index a = 0; a < m.num_actions(x); ++a) {
                const double p = pi.prob(m.pair_index(x, a));
                CHECK(p >= floor - 1e-15);
                row += p;
            }
            CHECK(std::abs(row - 1.0) < 1e-12);
        }
        prev_eps = eps;
        fva_step(m, st, start, 7, 0, mode);
    }
}

TEST_CASE("pairs of an unreachable state never move") {
    // s1 cannot be entered; its table entries must keep their initial values
    auto m = MdpBuilder<double>({2, 2}, 0.5)
                 .transition(0, 0, 0, 1.0)
                 .reward(0, 0, 0, 1.0)
                 .transition(0, 1, 0, 1.0)
                 .transition(1, 0, 0, 1.0)
                 .transition(1, 1, 1, 1.0)
                 .build();
    Vec<double> mu = Vec<double>::Zero(2);
    mu(0) = 1.0;
    FvaConfig<double> cfg;
    cfg.q0 = Vec<double>::Zero(4);
    cfg.q0(2) = -5.0;
    cfg.q0(3) = 11.0;
    cfg.start = StartSpec<double>::states(mu);
    cfg.episodes = 400;
    cfg.master_seed = 2;
    const auto r = run_fva(m, cfg, TruncatedRun{30, 15});
    CHECK(r.q(2) == -5.0);
    CHECK(r.q(3) == 11.0);
    CHECK(r.n_pairs[2] == 0);
    CHECK(r.n_pairs[3] == 0);
}

TEST_CASE("first-visit runs reduce to the general scheme") {
    const auto m = chain_mdp<double>(0.5);
    const RunMode mode = TruncatedRun{40, 20};
    const auto start = uniform_states(m);

    auto fva = fva_init(m, Vec<double>(0), 1.0);
    auto gen = general_init(m, Vec<double>(0));
    const auto sched = fva_schedules<double>(1.0, start);
    for (std::int64_t k = 0; k < 300; ++k) {
        fva_step(m, fva, start, 11, 0, mode);
        general_step(m, gen, sched, 11, 0, mode);
        REQUIRE((fva.q.array() == gen.q.array()).all());
        REQUIRE(fva.n_pairs == gen.n_pairs);
    }
}

TEST_CASE("trace rows measure against the exact solution") {
    const auto m = loop_mdp<double>(0.4);
    const auto sol = value_iteration(m, 1e-12);
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 400;
    cfg.master_seed = 1;
    cfg.trace_every = 100;
    const auto r = run_fva(m, cfg, truncation_for(0.4, 1.0, 1e-9), &sol);
    REQUIRE(r.trace.size() == 4);
    CHECK(r.trace.back().k == 400);
    CHECK(r.trace.back().q_err == sup_diff(r.q, sol.q));
    for (const auto& row : r.trace) {
        CHECK(row.v_err >= 0.0);
        CHECK(row.q_err >= 0.0);
        CHECK(row.pairs_updated <= m.num_pairs());
    }
}

TEST_CASE("schedule audit records exact harmonic sums") {
    const auto m = chain_mdp<Rational>(Rational(1, 2));
    FvaConfig<Rational> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 150;
    cfg.master_seed = 13;
    auto st = fva_init(m, cfg.q0, cfg.theta);
    auto audit = PairAudit<Rational>::zero(m.num_pairs());
    const RunMode mode = AbsorbedRun{make_absorbing_spec(m, chain_triangle())};
    for (std::int64_t k = 0; k < cfg.episodes; ++k)
        fva_step(m, st, cfg.start, cfg.master_seed, cfg.replicate, mode, &audit);
    for (Index z = 0; z < m.num_pairs(); ++z) {
        const auto n = st.n_pairs[static_cast<std::size_t>(z)];
        CHECK(audit.sum_alpha(z) == harmonic_number(n));
        Rational sq(0);
        for (std::int64_t l = 1; l <= n; ++l) sq += Rational(1) / Rational(l * l);
        CHECK(audit.sum_alpha_sq(z) == sq);
    }
}

TEST_CASE("hypothesis audit rows") {
    const auto m = chain_mdp<double>(0.5);
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 800;
    cfg.master_seed = 4;
    auto st = fva_init(m, cfg.q0, cfg.theta);
    auto audit = PairAudit<double>::zero(m.num_pairs());
    const RunMode mode = TruncatedRun{40, 20};
    for (std::int64_t k = 0; k < cfg.episodes; ++k)
        fva_step(m, st, cfg.start, cfg.master_seed, cfg.replicate, mode, &audit);
    const auto eps = epsilon_from_counts<double>(m, st.n_pairs, st.theta);
    const auto rows = check_cqdev(m, audit, st.n_pairs, eps, cfg.episodes);
    REQUIRE(rows.size() == static_cast<std::size_t>(m.num_pairs()));
    const double pi_sq_6 = 1.6449340668482264;
    for (const auto& row : rows) {
        CHECK(row.sum_alpha_sq < pi_sq_6);
        CHECK(!row.never_updated);
        CHECK(row.visits > 0);
    }
}

TEST_CASE("audit flags pairs that never moved") {
    const auto m = loop_mdp<double>(0.5);
    auto audit = PairAudit<double>::zero(m.num_pairs());
    audit.updates[1] = 5;
    audit.last_update[1] = 90;
    std::vector<std::int64_t> n = {0, 5};
    Vec<double> eps(1);
    eps << 0.25;
    const auto rows = check_cqdev(m, audit, n, eps, 100);
    CHECK(rows[0].never_updated);
    CHECK(rows[0].sum_alpha == 0.0);
    CHECK(rows[0].sum_alpha_sq == 0.0);
    CHECK(!rows[1].never_updated);
    CHECK(!rows[1].stalled);
}

TEST_CASE("exploration level after ninety-nine visits") {
    const auto m = loop_mdp<double>(0.5);
    std::vector<std::int64_t> n = {99, 0};
    const auto eps = epsilon_from_counts<double>(m, n, 1.0);
    CHECK(eps(0) == 0.01);
}

TEST_CASE("coupled estimators agree on a chain, one episode") {
    const auto m = chain_mdp<double>(0.5);
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 1;
    cfg.master_seed = 21;
    const auto rep = couple_alg2_alg3(m, make_absorbing_spec(m, chain_triangle()), cfg);
    CHECK(rep.agree);
    CHECK(!rep.divergence.has_value());
}

TEST_CASE("coupled estimators agree for two hundred episodes") {
    const auto m = chain_mdp<double>(0.5);
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 200;
    for (std::uint64_t s = 0; s < 3; ++s) {
        cfg.master_seed = 100 + s;
        const auto rep = couple_alg2_alg3(m, make_absorbing_spec(m, chain_triangle()), cfg);
        CHECK(rep.agree);
    }
}

TEST_CASE("coupling on a generated instance") {
    RandomMdpSpec spec;
    spec.n_states = 4;
    spec.max_actions = 3;
    spec.gamma = 0.4;
    spec.absorbing_fraction = 0.3;
    spec.seed = 77;
    const auto g = generate_mdp<double>(spec);
    REQUIRE(!g.triangle.empty());
    FvaConfig<double> cfg;
    cfg.start = uniform_states(g.mdp);
    cfg.episodes = 100;
    cfg.master_seed = 8;
    const auto rep = couple_alg2_alg3(g.mdp, make_absorbing_spec(g.mdp, g.triangle), cfg);
    CHECK(rep.agree);
    // absorption happens on entry, so no triangle pair is ever executed and
    // the comparison exclusion is vacuous
    CHECK(rep.triangle_pair_visits == 0);
}

TEST_CASE("all-absorbing instance keeps both tables at zero") {
    // every state absorbing: episodes end instantly, no pair inside the
    // triangle is ever updated, so both tables stay all-zero
    auto m = MdpBuilder<double>({1, 1}, 0.5)
                 .transition(0, 0, 0, 1.0)
                 .transition(1, 0, 1, 1.0)
                 .build();
    FvaConfig<double> cfg;
    cfg.start = uniform_states(m);
    cfg.episodes = 50;
    cfg.master_seed = 1;
    const auto spec = make_absorbing_spec(m, std::vector<Index>{0, 1});
    const auto rep = couple_alg2_alg3(m, spec, cfg);
    CHECK(rep.agree);
    auto st = fva_init(m, Vec<double>(0), 1.0);
    for (std::int64_t k = 0; k < 50; ++k)
        fva_step(m, st, cfg.start, 1, 0, AbsorbedRun{spec});
    CHECK((st.q.array() == 0.0).all());
}

TEST_CASE("truncation window sizing") {
    const auto tr = truncation_for(0.4, 1.0, 1e-9 * 0.6);
    CHECK(tr.episode_length == 2 * tr.scan_window);
    const double tol = 1e-9 * 0.6;
    const double w = static_cast<double>(tr.scan_window);
    CHECK(std::pow(0.4, w) * 1.0 / 0.6 <= tol * 1.000001);
    CHECK(std::pow(0.4, w - 1) * 1.0 / 0.6 > tol * 0.999999);
}
