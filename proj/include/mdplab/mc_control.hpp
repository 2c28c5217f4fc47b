#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mdplab/episode.hpp"
#include "mdplab/solvers.hpp"

namespace mdplab {

/* The one update primitive every control path goes through.  Using the
 * same floating expression everywhere is what turns the alpha = 1/n
 * reduction into a bitwise identity instead of an approximation. */
template <class Scalar>
void convex_update(Scalar& q, const Scalar& alpha, const Scalar& g) {
    q = (Scalar(1) - alpha) * q + alpha * g;
}

template <class Scalar>
std::vector<std::int64_t> state_counts(const Mdp<Scalar>& m,
                                       const std::vector<std::int64_t>& n_pairs) {
    if (n_pairs.size() != static_cast<std::size_t>(m.num_pairs()))
        throw std::invalid_argument("state_counts: wrong count vector size");
    std::vector<std::int64_t> out(static_cast<std::size_t>(m.num_states()), 0);
    for (Index x = 0; x < m.num_states(); ++x)
        for (Index a = 0; a < m.num_actions(x); ++a)
            out[static_cast<std::size_t>(x)] +=
                n_pairs[static_cast<std::size_t>(m.pair_index(x, a))];
    return out;
}

/* exploration decay (1 + N(x))^(-theta) from the visit counts */
template <class Scalar>
Vec<Scalar> epsilon_from_counts(const Mdp<Scalar>& m, const std::vector<std::int64_t>& n_pairs,
                                double theta) {
    const auto ns = state_counts(m, n_pairs);
    Vec<Scalar> eps(m.num_states());
    for (Index x = 0; x < m.num_states(); ++x)
        eps(x) = scalar_traits<Scalar>::decay_pow(ns[static_cast<std::size_t>(x)], theta);
    return eps;
}

template <class Scalar>
Vec<Scalar> greedy_state_values(const Mdp<Scalar>& m, const Vec<Scalar>& q) {
    if (q.size() != m.num_pairs())
        throw std::invalid_argument("greedy_state_values: wrong q size");
    Vec<Scalar> v(m.num_states());
    for (Index x = 0; x < m.num_states(); ++x) {
        Scalar best = q(m.pair_index(x, 0));
        for (Index a = 1; a < m.num_actions(x); ++a) {
            const Scalar& c = q(m.pair_index(x, a));
            if (c > best) best = c;
        }
        v(x) = best;
    }
    return v;
}

/* per-pair record of the step sizes actually applied; the sums feed the
 * divergence/square-summability report */
template <class Scalar>
struct PairAudit {
    Vec<Scalar> sum_alpha;
    Vec<Scalar> sum_alpha_sq;
    std::vector<std::int64_t> updates;
    std::vector<std::int64_t> last_update;

    static PairAudit zero(Index num_pairs) {
        PairAudit a;
        a.sum_alpha = Vec<Scalar>::Zero(num_pairs);
        a.sum_alpha_sq = Vec<Scalar>::Zero(num_pairs);
        a.updates.assign(static_cast<std::size_t>(num_pairs), 0);
        a.last_update.assign(static_cast<std::size_t>(num_pairs), -1);
        return a;
    }
};

struct AuditFlags {
    std::vector<Index> never_updated;
    std::vector<Index> stalled;  // updated, but not in the later half of the run
};

template <class Scalar>
AuditFlags audit_flags(const PairAudit<Scalar>& a, std::int64_t episodes) {
    AuditFlags f;
    for (std::size_t z = 0; z < a.updates.size(); ++z) {
        if (a.updates[z] == 0)
            f.never_updated.push_back(static_cast<Index>(z));
        else if (a.last_update[z] < episodes / 2)
            f.stalled.push_back(static_cast<Index>(z));
    }
    return f;
}

namespace detail {

/* The alpha rule is called as alpha(z, n_after, tau, episode) and must only
 * inspect steps up to and including tau.  g_sum, when given, accumulates the
 * raw first-visit returns without touching the q arithmetic. */
template <class Scalar, class Alpha>
void apply_first_visits(const Mdp<Scalar>& m, const Episode<Scalar>& e, Index window,
                        Vec<Scalar>& q, std::vector<std::int64_t>& n_pairs, Alpha&& alpha,
                        PairAudit<Scalar>* audit, std::int64_t k,
                        Vec<Scalar>* g_sum = nullptr) {
    const auto fv = first_visit_map(m, e, window);
    for (Index z = 0; z < m.num_pairs(); ++z) {
        const Index t = fv[static_cast<std::size_t>(z)];
        if (t < 0) continue;
        ++n_pairs[static_cast<std::size_t>(z)];
        const Scalar a = alpha(z, n_pairs[static_cast<std::size_t>(z)], t, e);
        if (a < Scalar(0) || a > Scalar(1))
            throw std::invalid_argument("apply_first_visits: alpha outside [0, 1]");
        const Scalar g = discounted_return(e, t, m.gamma);
        convex_update(q(z), a, g);
        if (g_sum) (*g_sum)(z) += g;
        if (audit) {
            audit->sum_alpha(z) += a;
            audit->sum_alpha_sq(z) += a * a;
            ++audit->updates[static_cast<std::size_t>(z)];
            audit->last_update[static_cast<std::size_t>(z)] = k;
        }
    }
}

}  // namespace detail

/* Episode regimes.  A truncated run samples a fixed-length trajectory but
 * only scans the first scan_window steps for first visits, so the return
 * behind any accepted visit still has at least scan_window sampled steps
 * ahead of it. */
struct TruncatedRun {
    Index episode_length = 0;
    Index scan_window = 0;
};

struct AbsorbedRun {
    AbsorbingSpec spec;
    Index cap = 10000000;
};

using RunMode = std::variant<TruncatedRun, AbsorbedRun>;

/* episode_length = 2w keeps the truncation bias of a return started
 * anywhere inside the scan window below tol */
inline TruncatedRun truncation_for(double gamma, double r_max, double tol) {
    Index w = horizon_for_tolerance(gamma, r_max, tol);
    if (w < 1) w = 1;
    return {2 * w, w};
}

template <class Scalar>
struct FvaState {
    Vec<Scalar> q;
    std::vector<std::int64_t> n_pairs;
    Vec<Scalar> sum_returns;  // q(z) * n_pairs(z) up to rounding; exact in rational mode
    std::int64_t k = 0;
    double theta = 1.0;
};

template <class Scalar>
FvaState<Scalar> fva_init(const Mdp<Scalar>& m, const Vec<Scalar>& q0, double theta) {
    if (!(theta > 0) || !(theta <= 1))
        throw std::invalid_argument("fva_init: theta outside (0, 1]");
    FvaState<Scalar> st;
    st.q = q0.size() == 0 ? Vec<Scalar>::Zero(m.num_pairs()) : q0;
    if (st.q.size() != m.num_pairs()) throw std::invalid_argument("fva_init: wrong q0 size");
    st.n_pairs.assign(static_cast<std::size_t>(m.num_pairs()), 0);
    st.sum_returns = Vec<Scalar>::Zero(m.num_pairs());
    st.theta = theta;
    return st;
}

template <class Scalar>
void fva_step(const Mdp<Scalar>& m, FvaState<Scalar>& st, const StartSpec<Scalar>& start,
              std::uint64_t master_seed, std::uint64_t replicate, const RunMode& mode,
              PairAudit<Scalar>* audit = nullptr) {
    const Vec<Scalar> eps = epsilon_from_counts<Scalar>(m, st.n_pairs, st.theta);
    const StationaryPolicy<Scalar> pi = epsilon_greedy(m, st.q, eps);
    const SeedSpec seed{master_seed, replicate, static_cast<std::uint64_t>(st.k)};
    Episode<Scalar> e;
    Index window = 0;
    if (const auto* tr = std::get_if<TruncatedRun>(&mode)) {
        e = sample_episode(m, pi, start, seed, Truncated{tr->episode_length});
        window = tr->scan_window;
    } else {
        const auto& ar = std::get<AbsorbedRun>(mode);
        e = sample_episode(m, pi, start, seed, ar.spec, ar.cap);
        window = e.length();
    }
    detail::apply_first_visits(
        m, e, window, st.q, st.n_pairs,
        [](Index, std::int64_t n_after, Index, const Episode<Scalar>&) {
            return Scalar(1) / Scalar(n_after);
        },
        audit, st.k, &st.sum_returns);
    ++st.k;
}

/* Schedule hooks for the general estimator.  alpha sees the pair, its count
 * including the current visit, the first-visit time, and the episode; it
 * must only read the prefix up to that time. */
template <class Scalar>
struct Schedules {
    std::function<Scalar(Index z, std::int64_t n_after, Index tau, const Episode<Scalar>& e)>
        alpha;
    std::function<Vec<Scalar>(const Mdp<Scalar>&, const std::vector<std::int64_t>&, std::int64_t k)>
        epsilon;
    std::function<StartSpec<Scalar>(std::int64_t k)> start;
};

template <class Scalar>
Schedules<Scalar> fva_schedules(double theta, StartSpec<Scalar> start) {
    Schedules<Scalar> s;
    s.alpha = [](Index, std::int64_t n_after, Index, const Episode<Scalar>&) {
        return Scalar(1) / Scalar(n_after);
    };
    s.epsilon = [theta](const Mdp<Scalar>& m, const std::vector<std::int64_t>& np, std::int64_t) {
        return epsilon_from_counts<Scalar>(m, np, theta);
    };
    s.start = [start](std::int64_t) { return start; };
    return s;
}

template <class Scalar>
struct GeneralState {
    Vec<Scalar> q;
    std::vector<std::int64_t> n_pairs;
    std::int64_t k = 0;
};

template <class Scalar>
GeneralState<Scalar> general_init(const Mdp<Scalar>& m, const Vec<Scalar>& q0) {
    GeneralState<Scalar> st;
    st.q = q0.size() == 0 ? Vec<Scalar>::Zero(m.num_pairs()) : q0;
    if (st.q.size() != m.num_pairs()) throw std::invalid_argument("general_init: wrong q0 size");
    st.n_pairs.assign(static_cast<std::size_t>(m.num_pairs()), 0);
    return st;
}

template <class Scalar>
void general_step(const Mdp<Scalar>& m, GeneralState<Scalar>& st, const Schedules<Scalar>& sched,
                  std::uint64_t master_seed, std::uint64_t replicate, const RunMode& mode,
                  PairAudit<Scalar>* audit = nullptr) {
    if (!sched.alpha || !sched.epsilon || !sched.start)
        throw std::invalid_argument("general_step: incomplete schedules");
    const Vec<Scalar> eps = sched.epsilon(m, st.n_pairs, st.k);
    const StationaryPolicy<Scalar> pi = epsilon_greedy(m, st.q, eps);
    const StartSpec<Scalar> start = sched.start(st.k);
    const SeedSpec seed{master_seed, replicate, static_cast<std::uint64_t>(st.k)};
    Episode<Scalar> e;
    Index window = 0;
    if (const auto* tr = std::get_if<TruncatedRun>(&mode)) {
        e = sample_episode(m, pi, start, seed, Truncated{tr->episode_length});
        window = tr->scan_window;
    } else {
        const auto& ar = std::get<AbsorbedRun>(mode);
        e = sample_episode(m, pi, start, seed, ar.spec, ar.cap);
        window = e.length();
    }
    detail::apply_first_visits(m, e, window, st.q, st.n_pairs, sched.alpha, audit, st.k);
    ++st.k;
}

struct TraceRow {
    std::int64_t k;
    double q_err;  // NaN when no reference was given
    double v_err;  // exact V of the current policy vs V*, via a linear solve
    std::int64_t pairs_updated;
};

template <class Scalar>
struct RunResult {
    Vec<Scalar> q;
    std::vector<std::int64_t> n_pairs;
    Vec<Scalar> sum_returns;  // empty for general runs
    std::int64_t episodes = 0;
    std::vector<TraceRow> trace;
    PairAudit<Scalar> audit;
};

template <class Scalar>
struct FvaConfig {
    Vec<Scalar> q0;  // empty means zero
    StartSpec<Scalar> start;
    double theta = 1.0;
    std::int64_t episodes = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::int64_t trace_every = 0;
};

template <class Scalar>
struct GeneralConfig {
    Vec<Scalar> q0;
    Schedules<Scalar> schedules;
    std::int64_t episodes = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::int64_t trace_every = 0;
};

namespace detail {

template <class Scalar>
void push_trace(std::vector<TraceRow>& trace, const Mdp<Scalar>& m, const Vec<Scalar>& q,
                const std::vector<std::int64_t>& n_pairs, std::int64_t k,
                const Vec<Scalar>& eps, const OptimalSolution<Scalar>* ref) {
    TraceRow row{k, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), 0};
    for (auto c : n_pairs) row.pairs_updated += c > 0 ? 1 : 0;
    if (ref) {
        row.q_err = scalar_traits<Scalar>::to_double(sup_diff(q, ref->q));
        const auto pi = epsilon_greedy(m, q, eps);
        const Vec<Scalar> v_pi = policy_evaluation(m, pi, LinearSolve{});
        row.v_err = scalar_traits<Scalar>::to_double(sup_diff(v_pi, ref->v));
    }
    trace.push_back(row);
}

}  // namespace detail

template <class Scalar>
RunResult<Scalar> run_fva(const Mdp<Scalar>& m, const FvaConfig<Scalar>& cfg, const RunMode& mode,
                          const OptimalSolution<Scalar>* ref = nullptr) {
    if (cfg.episodes < 0) throw std::invalid_argument("run_fva: negative episode count");
    auto st = fva_init(m, cfg.q0, cfg.theta);
    auto audit = PairAudit<Scalar>::zero(m.num_pairs());
    RunResult<Scalar> out;
    for (std::int64_t k = 0; k < cfg.episodes; ++k) {
        fva_step(m, st, cfg.start, cfg.master_seed, cfg.replicate, mode, &audit);
        if (cfg.trace_every > 0 && ((k + 1) % cfg.trace_every == 0 || k + 1 == cfg.episodes))
            detail::push_trace(out.trace, m, st.q, st.n_pairs, k + 1,
                               epsilon_from_counts<Scalar>(m, st.n_pairs, st.theta), ref);
    }
    out.q = std::move(st.q);
    out.n_pairs = std::move(st.n_pairs);
    out.sum_returns = std::move(st.sum_returns);
    out.episodes = cfg.episodes;
    out.audit = std::move(audit);
    return out;
}

template <class Scalar>
RunResult<Scalar> run_general(const Mdp<Scalar>& m, const GeneralConfig<Scalar>& cfg,
                              const RunMode& mode, const OptimalSolution<Scalar>* ref = nullptr) {
    if (cfg.episodes < 0) throw std::invalid_argument("run_general: negative episode count");
    auto st = general_init(m, cfg.q0);
    auto audit = PairAudit<Scalar>::zero(m.num_pairs());
    RunResult<Scalar> out;
    for (std::int64_t k = 0; k < cfg.episodes; ++k) {
        general_step(m, st, cfg.schedules, cfg.master_seed, cfg.replicate, mode, &audit);
        if (cfg.trace_every > 0 && ((k + 1) % cfg.trace_every == 0 || k + 1 == cfg.episodes))
            detail::push_trace(out.trace, m, st.q, st.n_pairs, k + 1,
                               cfg.schedules.epsilon(m, st.n_pairs, st.k), ref);
    }
    out.q = std::move(st.q);
    out.n_pairs = std::move(st.n_pairs);
    out.episodes = cfg.episodes;
    out.audit = std::move(audit);
    return out;
}

/* per-pair audit of the step-size and exploration conditions after a run */
struct CqdevRow {
    Index pair;
    std::string name;
    double final_eps;
    double sum_alpha;
    double sum_alpha_sq;
    std::int64_t visits;
    bool never_updated;
    bool stalled;
};

template <class Scalar>
std::vector<CqdevRow> check_cqdev(const Mdp<Scalar>& m, const PairAudit<Scalar>& audit,
                                  const std::vector<std::int64_t>& n_pairs,
                                  const Vec<Scalar>& eps_final, std::int64_t episodes) {
    if (eps_final.size() != m.num_states())
        throw std::invalid_argument("check_cqdev: eps has wrong size");
    const auto flags = audit_flags(audit, episodes);
    std::vector<char> never(static_cast<std::size_t>(m.num_pairs()), 0);
    std::vector<char> stall(static_cast<std::size_t>(m.num_pairs()), 0);
    for (Index z : flags.never_updated) never[static_cast<std::size_t>(z)] = 1;
    for (Index z : flags.stalled) stall[static_cast<std::size_t>(z)] = 1;
    std::vector<CqdevRow> rows;
    for (Index x = 0; x < m.num_states(); ++x)
        for (Index a = 0; a < m.num_actions(x); ++a) {
            const Index z = m.pair_index(x, a);
            rows.push_back({z, m.pair_name(z),
                            scalar_traits<Scalar>::to_double(eps_final(x)),
                            scalar_traits<Scalar>::to_double(audit.sum_alpha(z)),
                            scalar_traits<Scalar>::to_double(audit.sum_alpha_sq(z)),
                            n_pairs[static_cast<std::size_t>(z)],
                            never[static_cast<std::size_t>(z)] != 0,
                            stall[static_cast<std::size_t>(z)] != 0});
        }
    return rows;
}

struct CoupleDivergence {
    std::int64_t k;
    Index pair;  // -1 when the divergence is in the sampled path itself
    std::string kind;
};

struct CoupleReport {
    bool agree = true;
    std::int64_t episodes = 0;
    std::optional<CoupleDivergence> divergence;
    std::int64_t triangle_pair_visits = 0;
};

/* Runs the absorbed estimator and, against it, a truncated estimator whose
 * horizon is reset each episode to the realized absorption time.  The two
 * samplers consume the seed stream in the same order, so every state off
 * the absorbing set must match bit for bit at every episode. */
template <class Scalar>
CoupleReport couple_alg2_alg3(const Mdp<Scalar>& m, const AbsorbingSpec& abs,
                              const FvaConfig<Scalar>& cfg, Index cap = 10000000) {
    auto st_abs = fva_init(m, cfg.q0, cfg.theta);
    auto st_trunc = fva_init(m, cfg.q0, cfg.theta);
    CoupleReport rep;
    rep.episodes = cfg.episodes;
    std::vector<char> tri_pair(static_cast<std::size_t>(m.num_pairs()), 0);
    for (Index x = 0; x < m.num_states(); ++x)
        if (abs.contains(x))
            for (Index a = 0; a < m.num_actions(x); ++a)
                tri_pair[static_cast<std::size_t>(m.pair_index(x, a))] = 1;

    for (std::int64_t k = 0; k < cfg.episodes; ++k) {
        const SeedSpec seed{cfg.master_seed, cfg.replicate,
                            static_cast<std::uint64_t>(k)};
        const Vec<Scalar> eps_a = epsilon_from_counts<Scalar>(m, st_abs.n_pairs, st_abs.theta);
        const Vec<Scalar> eps_t =
            epsilon_from_counts<Scalar>(m, st_trunc.n_pairs, st_trunc.theta);
        const auto pi_a = epsilon_greedy(m, st_abs.q, eps_a);
        const auto pi_t = epsilon_greedy(m, st_trunc.q, eps_t);
        for (Index z = 0; z < m.num_pairs(); ++z) {
            if (tri_pair[static_cast<std::size_t>(z)]) continue;
            if (!(pi_a.prob(z) == pi_t.prob(z))) {
                rep.agree = false;
                rep.divergence = CoupleDivergence{k, z, "policy"};
                return rep;
            }
        }
        const auto e_abs = sample_episode(m, pi_a, cfg.start, seed, abs, cap);
        const auto e_trunc =
            sample_episode(m, pi_t, cfg.start, seed, Truncated{e_abs.length()});

        bool same_path = e_abs.length() == e_trunc.length();
        for (Index t = 0; same_path && t < e_abs.length(); ++t) {
            const auto& sa = e_abs.steps[static_cast<std::size_t>(t)];
            const auto& st_ = e_trunc.steps[static_cast<std::size_t>(t)];
            same_path = sa.state == st_.state && sa.action == st_.action &&
                        sa.reward == st_.reward;
        }
        if (!same_path) {
            rep.agree = false;
            rep.divergence = CoupleDivergence{k, -1, "path"};
            return rep;
        }

        PairAudit<Scalar>* no_audit = nullptr;
        detail::apply_first_visits(
            m, e_abs, e_abs.length(), st_abs.q, st_abs.n_pairs,
            [](Index, std::int64_t n, Index, const Episode<Scalar>&) {
                return Scalar(1) / Scalar(n);
            },
            no_audit, k);
        detail::apply_first_visits(
            m, e_trunc, e_trunc.length(), st_trunc.q, st_trunc.n_pairs,
            [](Index, std::int64_t n, Index, const Episode<Scalar>&) {
                return Scalar(1) / Scalar(n);
            },
            no_audit, k);
        ++st_abs.k;
        ++st_trunc.k;

        for (Index z = 0; z < m.num_pairs(); ++z) {
            if (tri_pair[static_cast<std::size_t>(z)]) continue;
            if (st_abs.n_pairs[static_cast<std::size_t>(z)] !=
                st_trunc.n_pairs[static_cast<std::size_t>(z)]) {
                rep.agree = false;
                rep.divergence = CoupleDivergence{k, z, "count"};
                return rep;
            }
            if (!(st_abs.q(z) == st_trunc.q(z))) {
                rep.agree = false;
                rep.divergence = CoupleDivergence{k, z, "q"};
                return rep;
            }
        }
    }
    /* the policies built from the final tables, so the agreement claim
     * covers episode index K as well */
    {
        const Vec<Scalar> eps_a = epsilon_from_counts<Scalar>(m, st_abs.n_pairs, st_abs.theta);
        const Vec<Scalar> eps_t =
            epsilon_from_counts<Scalar>(m, st_trunc.n_pairs, st_trunc.theta);
        const auto pi_a = epsilon_greedy(m, st_abs.q, eps_a);
        const auto pi_t = epsilon_greedy(m, st_trunc.q, eps_t);
        for (Index z = 0; z < m.num_pairs(); ++z) {
            if (tri_pair[static_cast<std::size_t>(z)]) continue;
            if (!(pi_a.prob(z) == pi_t.prob(z))) {
                rep.agree = false;
                rep.divergence = CoupleDivergence{cfg.episodes, z, "policy"};
                return rep;
            }
        }
    }
    for (Index z = 0; z < m.num_pairs(); ++z)
        if (tri_pair[static_cast<std::size_t>(z)])
            rep.triangle_pair_visits += st_abs.n_pairs[static_cast<std::size_t>(z)] +
                                        st_trunc.n_pairs[static_cast<std::size_t>(z)];
    return rep;
}

}  // namespace mdplab
