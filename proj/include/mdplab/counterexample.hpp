#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdplab/quadratic_field.hpp"

namespace mdplab {

enum class Zone { outside = 0, Z1 = 1, Z2 = 2, Z3 = 3, Z4 = 4 };

inline const char* zone_name(Zone z) {
    switch (z) {
        case Zone::Z1: return "Z1";
        case Zone::Z2: return "Z2";
        case Zone::Z3: return "Z3";
        case Zone::Z4: return "Z4";
        default: return "outside";
    }
}

inline Zone zone_successor(Zone z) {
    switch (z) {
        case Zone::Z1: return Zone::Z2;
        case Zone::Z2: return Zone::Z3;
        case Zone::Z3: return Zone::Z4;
        case Zone::Z4: return Zone::Z1;
        default: return Zone::outside;
    }
}

/* band edges shared by the four zone predicates */
struct ZoneBounds {
    Rational lower_mid;   // 1 / (2 (1 - gamma))
    Rational upper_high;  // (1 + 2 gamma) / (4 (1 - gamma))
    Rational lower_low;   // (3 - 2 gamma) / (4 (1 - gamma))
    Rational u_cap;       // gamma / (1 - gamma)

    static ZoneBounds at(const Rational& gamma) {
        const Rational one(1), two(2), four(4);
        const Rational om = one - gamma;
        return {one / (two * om), (one + two * gamma) / (four * om),
                (Rational(3) - two * gamma) / (four * om), gamma / om};
    }
};

/* Exact membership.  The upper band pairs with v > u > 1 (Z1) and
 * v < u < gamma/(1-gamma) (Z2); the lower band with the same two wedge
 * conditions in the order Z3 (below diagonal), Z4 (above). */
inline Zone zone_of(const ExtendedRational& u, const ExtendedRational& v,
                    const Rational& gamma) {
    const ZoneBounds zb = ZoneBounds::at(gamma);
    const ExtendedRational one(Rational(1));
    const bool above = v > u;
    const bool below = u > v;
    const bool wedge_up = above && u > one;
    const bool wedge_down = below && u < ExtendedRational(zb.u_cap);
    const bool band_high = v > ExtendedRational(zb.lower_mid) && v < ExtendedRational(zb.upper_high);
    const bool band_low = v > ExtendedRational(zb.lower_low) && v < ExtendedRational(zb.lower_mid);
    if (wedge_up && band_high) return Zone::Z1;
    if (wedge_down && band_high) return Zone::Z2;
    if (wedge_down && band_low) return Zone::Z3;
    if (wedge_up && band_low) return Zone::Z4;
    return Zone::outside;
}

struct CxParams {
    Rational gamma;
    Rational q;
    ExtendedRational u0;
    ExtendedRational v0;

    static CxParams defaults() {
        CxParams p;
        p.gamma = Rational(3, 4);
        p.q = Rational(1, 10);
        p.u0 = ExtendedRational(Rational(9, 4));
        p.v0 = ExtendedRational(Rational(9, 4), Rational(1, 100));
        return p;
    }
};

inline std::vector<std::string> validate_cx_params(const CxParams& p) {
    std::vector<std::string> findings;
    const Rational half(1, 2), one(1);
    if (!(p.gamma > half && p.gamma < one))
        findings.push_back("gamma outside (1/2, 1)");
    else {
        const Rational q_cap = p.gamma / Rational(2) - Rational(1, 4);
        if (!(p.q > Rational(0) && p.q < q_cap))
            findings.push_back("q outside (0, gamma/2 - 1/4)");
    }
    if (!p.u0.is_rational()) findings.push_back("u0 must be rational (b = 0)");
    if (p.v0.is_rational()) findings.push_back("v0 must be irrational (b != 0)");
    if (findings.empty() && zone_of(p.u0, p.v0, p.gamma) != Zone::Z1)
        findings.push_back("(u0, v0) does not lie in Z1");
    return findings;
}

struct CxState {
    ExtendedRational u;
    ExtendedRational v;
    std::int64_t L0 = 0;
    std::int64_t L1 = 0;
    std::int64_t k = 0;  // completed steps; L0 + L1 == k
    Zone zone = Zone::outside;
};

inline CxState cx_init(const CxParams& p) {
    auto findings = validate_cx_params(p);
    if (!findings.empty()) {
        std::string msg = "invalid counterexample parameters:";
        for (const auto& f : findings) msg += "\n  " + f;
        throw std::invalid_argument(msg);
    }
    CxState st;
    st.u = p.u0;
    st.v = p.v0;
    st.zone = Zone::Z1;
    return st;
}

/* One step of the divergence automaton.  The step size is q / (1 + L)
 * with the count of completed updates of that action, so the first update
 * of an action uses q itself; the count increments afterwards.  Zone
 * confinement (successor or stay) and the rationality split are asserted
 * after every step since the whole argument collapses if either fails. */
inline CxState cx_step(const CxState& st, const CxParams& p) {
    if (st.zone == Zone::outside)
        throw std::logic_error("cx_step: state outside all zones");
    CxState nx = st;
    const Rational one(1);
    const Rational horizon = one / (one - p.gamma);  // 1/(1-gamma)
    switch (st.zone) {
        case Zone::Z1: {
            const Rational alpha = p.q / Rational(1 + st.L0);
            nx.u = st.u + alpha * (ExtendedRational(p.gamma * horizon) - st.u);
            ++nx.L0;
            break;
        }
        case Zone::Z2: {
            const Rational alpha = p.q / Rational(1 + st.L1);
            nx.v = st.v - alpha * (st.v - ExtendedRational(one));
            ++nx.L1;
            break;
        }
        case Zone::Z3: {
            const Rational alpha = p.q / Rational(1 + st.L0);
            nx.u = st.u - alpha * st.u;
            ++nx.L0;
            break;
        }
        case Zone::Z4: {
            const Rational alpha = p.q / Rational(1 + st.L1);
            nx.v = st.v + alpha * (ExtendedRational(horizon) - st.v);
            ++nx.L1;
            break;
        }
        default: throw std::logic_error("cx_step: unreachable");
    }
    ++nx.k;
    nx.zone = zone_of(nx.u, nx.v, p.gamma);
    if (nx.zone != st.zone && nx.zone != zone_successor(st.zone))
        throw std::logic_error(std::string("cx_step: left ") + zone_name(st.zone) +
                               " for " + zone_name(nx.zone) + " at step " +
                               std::to_string(nx.k));
    if (!nx.u.is_rational() || nx.v.is_rational())
        throw std::logic_error("cx_step: rationality invariant broken at step " +
                               std::to_string(nx.k));
    return nx;
}

struct CxTraceRow {
    std::int64_t k;
    Zone zone;
    double u_approx;
    double v_approx;
    std::int64_t L0;
    std::int64_t L1;
    Rational v_policy;  // 1/(1-gamma) in Z1 and Z4, zero in Z2 and Z3
};

struct CxTransition {
    std::int64_t k;  // step after which the zone changed
    Zone from;
    Zone to;
};

struct CxSummary {
    std::int64_t steps = 0;
    std::int64_t cycles = 0;  // completed Z4 -> Z1 returns
    std::vector<CxTransition> transitions;
    CxState final_state;
    Rational sum_alpha0;     // exact running sums of applied step sizes
    Rational sum_alpha1;
    Rational sum_alpha0_sq;
    Rational sum_alpha1_sq;
    std::size_t max_denominator_bits = 0;
    std::int64_t longest_dwell = 0;
    bool zone_stuck = false;  // no transition at all within the step budget
};

struct CxTrace {
    std::vector<CxTraceRow> rows;
    CxSummary summary;
};

inline Rational cx_policy_value(Zone z, const Rational& gamma) {
    if (z == Zone::Z1 || z == Zone::Z4) return Rational(1) / (Rational(1) - gamma);
    return Rational(0);
}

/* sum of 1/1 + 1/2 + ... + 1/n, the audit target for the alpha sums */
inline Rational harmonic_number(std::int64_t n) {
    Rational h(0);
    for (std::int64_t i = 1; i <= n; ++i) h += Rational(1) / Rational(i);
    return h;
}

inline std::size_t cx_denominator_bits(const CxState& st) {
    std::size_t bits = bit_size(st.u.a().denominator());
    const std::size_t va = bit_size(st.v.a().denominator());
    const std::size_t vb = bit_size(st.v.b().denominator());
    if (va > bits) bits = va;
    if (vb > bits) bits = vb;
    return bits;
}

inline CxTrace run_counterexample(const CxParams& p, std::int64_t max_steps,
                                  std::int64_t record_every = 1) {
    if (max_steps < 0) throw std::invalid_argument("run_counterexample: negative step budget");
    if (record_every < 1) record_every = 1;
    CxTrace tr;
    CxState st = cx_init(p);
    auto record = [&](const CxState& s) {
        tr.rows.push_back({s.k, s.zone, s.u.to_double(), s.v.to_double(), s.L0, s.L1,
                           cx_policy_value(s.zone, p.gamma)});
    };
    record(st);
    CxSummary& sm = tr.summary;
    sm.max_denominator_bits = cx_denominator_bits(st);
    std::int64_t dwell_start = 0;
    for (std::int64_t k = 0; k < max_steps; ++k) {
        const Zone before = st.zone;
        const bool on_u = before == Zone::Z1 || before == Zone::Z3;
        const Rational alpha =
            p.q / Rational(1 + (on_u ? st.L0 : st.L1));
        CxState nx = cx_step(st, p);
        if (on_u) {
            sm.sum_alpha0 += alpha;
            sm.sum_alpha0_sq += alpha * alpha;
        } else {
            sm.sum_alpha1 += alpha;
            sm.sum_alpha1_sq += alpha * alpha;
        }
        if (nx.zone != before) {
            sm.transitions.push_back({nx.k, before, nx.zone});
            if (before == Zone::Z4 && nx.zone == Zone::Z1) ++sm.cycles;
            const std::int64_t dwell = nx.k - dwell_start;
            if (dwell > sm.longest_dwell) sm.longest_dwell = dwell;
            dwell_start = nx.k;
        }
        st = std::move(nx);
        const std::size_t bits = cx_denominator_bits(st);
        if (bits > sm.max_denominator_bits) sm.max_denominator_bits = bits;
        if (st.k % record_every == 0 || k + 1 == max_steps) record(st);
    }
    const std::int64_t tail_dwell = st.k - dwell_start;
    if (tail_dwell > sm.longest_dwell) sm.longest_dwell = tail_dwell;
    sm.steps = st.k;
    sm.final_state = st;
    sm.zone_stuck = max_steps > 0 && sm.transitions.empty();
    return tr;
}

}  // namespace mdplab
