#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdplab/random_mdp.hpp"
#include "mdplab/solvers.hpp"

namespace mdplab {

/* ---- averaging recursion Z_{k+1} = (1 - theta_k) Z_k + theta_k zeta ---- */

template <class Scalar>
struct RmConfig {
    std::function<Scalar(std::int64_t)> theta;
    DiscreteDist<Scalar> noise;  // finite support, zero mean
    Scalar z0{};
    std::int64_t steps = 0;
    SeedSpec seed;
};

template <class Scalar>
void check_zero_mean(const DiscreteDist<Scalar>& d, const char* who) {
    auto findings = d.validate();
    if (!findings.empty()) throw std::invalid_argument(std::string(who) + ": invalid noise");
    if (!scalar_traits<Scalar>::within(d.mean(), Scalar(0), 1e-12))
        throw std::invalid_argument(std::string(who) + ": noise mean is not zero");
}

/* Z_0 .. Z_steps; one noise draw is consumed per step regardless of theta,
 * so trajectories with different step rules stay draw-aligned. */
template <class Scalar>
std::vector<Scalar> robbins_monro(const RmConfig<Scalar>& cfg) {
    if (!cfg.theta) throw std::invalid_argument("robbins_monro: missing theta rule");
    if (cfg.steps < 0) throw std::invalid_argument("robbins_monro: negative step count");
    check_zero_mean(cfg.noise, "robbins_monro");
    StreamRng rng(cfg.seed);
    std::vector<Scalar> z;
    z.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    z.push_back(cfg.z0);
    for (std::int64_t k = 0; k < cfg.steps; ++k) {
        const Scalar th = cfg.theta(k);
        if (th < Scalar(0) || th > Scalar(1))
            throw std::invalid_argument("robbins_monro: theta outside [0, 1] at step " +
                                        std::to_string(k));
        const Scalar zeta = cfg.noise.sample(rng);
        z.push_back((Scalar(1) - th) * z.back() + th * zeta);
    }
    return z;
}

/* steps 1/2, 1/3, 1/4, ...: divergent sum, summable squares */
template <class Scalar>
std::function<Scalar(std::int64_t)> harmonic_theta() {
    return [](std::int64_t k) { return Scalar(1) / Scalar(k + 2); };
}

/* steps 1/2, 1/4, 1/8, ...: summable, the divergence hypothesis fails and
 * the recursion freezes at a positive limit */
template <class Scalar>
std::function<Scalar(std::int64_t)> halving_theta() {
    return [](std::int64_t k) {
        const int e = k + 1 > 1074 ? 1074 : static_cast<int>(k + 1);
        return scalar_traits<Scalar>::from_double(std::ldexp(1.0, -e));
    };
}

/* ---- abstract recursion toward a target table ---- */

/* A map family member: apply(eta, f) must stay componentwise below f_star
 * and contract toward it in the weakened sense
 *   ||f_star - M(eta,f)||inf <= rho ||f_star - f||inf
 *                               + beta ||(f - f_star)_+||inf + beta ||eta||inf. */
template <class Scalar>
struct SaMap {
    std::string name;
    Vec<Scalar> f_star;
    std::function<Vec<Scalar>(const Vec<Scalar>& eta, const Vec<Scalar>& f)> apply;
};

template <class Scalar>
SaMap<Scalar> constant_target_map(Vec<Scalar> f_star) {
    SaMap<Scalar> m;
    m.name = "constant-target";
    m.f_star = std::move(f_star);
    Vec<Scalar> fs = m.f_star;
    m.apply = [fs](const Vec<Scalar>&, const Vec<Scalar>&) { return fs; };
    return m;
}

template <class Scalar>
SaMap<Scalar> shrink_toward_target_map(Vec<Scalar> f_star, Scalar rho) {
    if (rho < Scalar(0) || !(rho < Scalar(1)))
        throw std::invalid_argument("shrink_toward_target_map: rho outside [0, 1)");
    SaMap<Scalar> m;
    m.name = "shrink-to-target";
    m.f_star = std::move(f_star);
    Vec<Scalar> fs = m.f_star;
    m.apply = [fs, rho](const Vec<Scalar>&, const Vec<Scalar>& f) {
        const Scalar gap = sup_diff(fs, f);
        return Vec<Scalar>(fs.array() - rho * gap);
    };
    return m;
}

/* The policy-evaluation operator of a fixed MDP, with target Q*.  eta is
 * indexed per pair like f; a state's exploration level is the largest eta
 * among its pairs. */
template <class Scalar>
SaMap<Scalar> policy_evaluation_map(Mdp<Scalar> mdp, Vec<Scalar> q_star) {
    SaMap<Scalar> m;
    m.name = "policy-evaluation";
    m.f_star = std::move(q_star);
    m.apply = [mdp = std::move(mdp)](const Vec<Scalar>& eta, const Vec<Scalar>& f) {
        Vec<Scalar> eps(mdp.num_states());
        for (Index x = 0; x < mdp.num_states(); ++x) {
            Scalar e = eta(mdp.pair_index(x, 0));
            for (Index a = 1; a < mdp.num_actions(x); ++a) {
                const Scalar& c = eta(mdp.pair_index(x, a));
                if (c > e) e = c;
            }
            eps(x) = e;
        }
        return h_operator(mdp, eps, f);
    };
    return m;
}

template <class Scalar>
struct SaConfig {
    std::function<Vec<Scalar>(std::int64_t)> lambda;  // componentwise in [0, 1]
    std::function<Vec<Scalar>(std::int64_t)> eta;     // componentwise in [0, 1]
    DiscreteDist<Scalar> xi;  // i.i.d. across components and steps, zero mean
    Vec<Scalar> f0;
    std::int64_t steps = 0;
    SeedSpec seed;
};

template <class Scalar>
struct SaResult {
    Vec<Scalar> f_final;
    double sup_err = 0;  // ||f_final - f_star||inf
    bool dominated = true;
    std::int64_t first_violation = -1;
    double domination_max_gap = 0;  // max of (f - f_star) - W, <= 0 when dominated
    double lambda_min_sum = 0;      // sum over steps of the smallest component
    double lambda_sq_max_sum = 0;   // sum over steps of the largest component squared
    double final_eta_sup = 0;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::int64_t, double>> err_trace;
};

/* Runs f_{k+1}(y) = f_k(y) + lambda_k(y) (M(eta_k, f_k)(y) - f_k(y) + xi(y))
 * and, on the same noise draws, the plain averaging recursion W started at
 * f_0 - f_star.  With exact arithmetic f_k - f_star <= W_k holds
 * componentwise at every step whenever M stays below f_star; the result
 * records the first step where that ordering breaks, if any. */
template <class Scalar>
SaResult<Scalar> abstract_sa(const SaMap<Scalar>& map, const SaConfig<Scalar>& cfg,
                             std::int64_t trace_every = 0) {
    if (!map.apply) throw std::invalid_argument("abstract_sa: map has no apply rule");
    if (!cfg.lambda || !cfg.eta) throw std::invalid_argument("abstract_sa: missing rules");
    if (cfg.steps < 0) throw std::invalid_argument("abstract_sa: negative step count");
    check_zero_mean(cfg.xi, "abstract_sa");
    const Index n = map.f_star.size();
    if (cfg.f0.size() != n) throw std::invalid_argument("abstract_sa: f0 size mismatch");

    StreamRng rng(cfg.seed);
    Vec<Scalar> f = cfg.f0;
    Vec<Scalar> w = cfg.f0 - map.f_star;
    SaResult<Scalar> res;
    double initial_eta_sup = 0;

    for (std::int64_t k = 0; k < cfg.steps; ++k) {
        const Vec<Scalar> lam = cfg.lambda(k);
        const Vec<Scalar> eta = cfg.eta(k);
        if (lam.size() != n || eta.size() != n)
            throw std::invalid_argument("abstract_sa: rule output size mismatch");
        for (Index y = 0; y < n; ++y) {
            if (lam(y) < Scalar(0) || lam(y) > Scalar(1))
                throw std::invalid_argument("abstract_sa: lambda outside [0, 1]");
            if (eta(y) < Scalar(0) || eta(y) > Scalar(1))
                throw std::invalid_argument("abstract_sa: eta outside [0, 1]");
        }
        if (k == 0) initial_eta_sup = scalar_traits<Scalar>::to_double(sup_norm(eta));
        Vec<Scalar> xi(n);
        for (Index y = 0; y < n; ++y) xi(y) = cfg.xi.sample(rng);
        const Vec<Scalar> mf = map.apply(eta, f);
        if (mf.size() != n) throw std::invalid_argument("abstract_sa: map output size mismatch");
        for (Index y = 0; y < n; ++y) {
            f(y) = f(y) + lam(y) * (mf(y) - f(y) + xi(y));
            w(y) = (Scalar(1) - lam(y)) * w(y) + lam(y) * xi(y);
        }
        Scalar lam_min = lam(0), lam_max = lam(0);
        for (Index y = 1; y < n; ++y) {
            if (lam(y) < lam_min) lam_min = lam(y);
            if (lam(y) > lam_max) lam_max = lam(y);
        }
        res.lambda_min_sum += scalar_traits<Scalar>::to_double(lam_min);
        const double lm = scalar_traits<Scalar>::to_double(lam_max);
        res.lambda_sq_max_sum += lm * lm;
        for (Index y = 0; y < n; ++y) {
            const Scalar gap = f(y) - map.f_star(y) - w(y);
            if (gap > Scalar(0)) {
                if (res.dominated) {
                    res.dominated = false;
                    res.first_violation = k;
                }
                const double g = scalar_traits<Scalar>::to_double(gap);
                if (g > res.domination_max_gap) res.domination_max_gap = g;
            }
        }
        if (k + 1 == cfg.steps)
            res.final_eta_sup = scalar_traits<Scalar>::to_double(sup_norm(eta));
        if (trace_every > 0 && ((k + 1) % trace_every == 0 || k + 1 == cfg.steps))
            res.err_trace.push_back(
                {k + 1, scalar_traits<Scalar>::to_double(sup_diff(f, map.f_star))});
    }
    res.f_final = std::move(f);
    res.sup_err = scalar_traits<Scalar>::to_double(sup_diff(res.f_final, map.f_star));
    /* crude finite-run proxies for the asymptotic hypotheses; flags, not
     * errors, so negative controls can run */
    if (cfg.steps > 100 && res.lambda_min_sum < 4.0)
        res.warnings.push_back("step-size sum looks summable; divergence hypothesis doubtful");
    if (initial_eta_sup > 0 && res.final_eta_sup > 0.5 * initial_eta_sup)
        res.warnings.push_back("eta does not appear to vanish");
    return res;
}

/* ---- exhaustive check of the epsilon-greedy evaluation bound ---- */

struct SweepConfig {
    std::uint64_t seed = 0;
    int count = 200;  // tuples per gamma
    std::vector<double> gammas = {0.1, 0.25, 0.4};
};

struct SweepResult {
    int tuples = 0;
    double max_upper_violation = 0;  // componentwise H <= Q*
    double max_norm_violation = 0;   // sup-norm bound with factor gamma/(1-gamma)
    int violations_beyond_tol = 0;
    double tol = 1e-10;
};

/* Random small instances; H computed by exact linear solves, never by
 * sampling, so any true violation would surface deterministically. */
inline SweepResult contraction_sweep(const SweepConfig& cfg) {
    if (cfg.count < 1) throw std::invalid_argument("contraction_sweep: count must be positive");
    if (cfg.gammas.empty()) throw std::invalid_argument("contraction_sweep: no gammas");
    SweepResult res;
    for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
        const double gamma = cfg.gammas[gi];
        for (int i = 0; i < cfg.count; ++i) {
            StreamRng rng(SeedSpec{cfg.seed, static_cast<std::uint64_t>(gi),
                                   static_cast<std::uint64_t>(i)});
            RandomMdpSpec spec;
            spec.n_states = 1 + static_cast<Index>(rng.next_u64() % 5);
            spec.max_actions = 1 + static_cast<Index>(rng.next_u64() % 4);
            spec.gamma = gamma;
            spec.branching = 3;
            spec.reward_points = 1 + static_cast<Index>(rng.next_u64() % 2);
            spec.reward_min = -2.0;
            spec.reward_max = 2.0;
            spec.seed = rng.next_u64();
            const auto gen = generate_mdp<double>(spec);
            const auto& m = gen.mdp;
            const auto sol = value_iteration(m, 1e-12);
            Vec<double> q(m.num_pairs());
            for (Index z = 0; z < m.num_pairs(); ++z)
                q(z) = sol.q(z) + 4.0 * rng.next_double() - 2.0;
            Vec<double> eps(m.num_states());
            for (Index x = 0; x < m.num_states(); ++x) eps(x) = rng.next_double();
            const Vec<double> h = h_operator(m, eps, q);

            double upper = 0;
            for (Index z = 0; z < m.num_pairs(); ++z)
                upper = std::max(upper, h(z) - sol.q(z));
            const double lhs = sup_diff(h, sol.q);
            const double rhs = gamma / (1.0 - gamma) *
                               (sup_diff(sol.q, q) + sup_pos((q - sol.q).eval()) +
                                2.0 * sup_norm(sol.q) * sup_norm(eps));
            const double norm_violation = lhs - rhs;
            res.max_upper_violation = std::max(res.max_upper_violation, upper);
            res.max_norm_violation = std::max(res.max_norm_violation, norm_violation);
            if (upper > res.tol || norm_violation > res.tol) ++res.violations_beyond_tol;
            ++res.tuples;
        }
    }
    return res;
}

}  // namespace mdplab
