#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdplab/counterexample.hpp"

using namespace mdplab;

namespace {

ExtendedRational xr(long long n, long long d) { return ExtendedRational(Rational(n, d)); }

}  // namespace

TEST_CASE("band edges at gamma three quarters") {
    const auto zb = ZoneBounds::at(Rational(3, 4));
    CHECK(zb.lower_mid == Rational(2));
    CHECK(zb.upper_high == Rational(5, 2));
    CHECK(zb.lower_low == Rational(3, 2));
    CHECK(zb.u_cap == Rational(3));
}

TEST_CASE("zone membership") {
    const Rational gamma(3, 4);
    const ExtendedRational u0 = xr(9, 4);
    const ExtendedRational v0(Rational(9, 4), Rational(1, 100));
    CHECK(zone_of(u0, v0, gamma) == Zone::Z1);
    CHECK(zone_of(ExtendedRational(Rational(0)), ExtendedRational(Rational(0)), gamma) ==
          Zone::outside);
    // below the diagonal in the upper band
    CHECK(zone_of(v0, u0, gamma) == Zone::Z2);
    // lower band, above and below the diagonal
    const ExtendedRational lo(Rational(7, 4), Rational(1, 100));
    CHECK(zone_of(xr(7, 4), lo, gamma) == Zone::Z4);
    CHECK(zone_of(xr(17, 8), lo, gamma) == Zone::Z3);
}

TEST_CASE("first update from the starting corner") {
    CxParams p = CxParams::defaults();
    const auto st = cx_init(p);
    CHECK(st.zone == Zone::Z1);
    const auto nx = cx_step(st, p);
    // u <- u + q (gamma/(1-gamma) - u) at L0 = 0, v untouched
    const Rational expect = Rational(9, 4) + Rational(1, 10) * (Rational(3) - Rational(9, 4));
    CHECK(nx.u.a() == expect);
    CHECK(nx.u.b().is_zero());
    CHECK(nx.v == st.v);
    CHECK(nx.L0 == 1);
    CHECK(nx.L1 == 0);
    CHECK(nx.k == 1);
}

TEST_CASE("parameter validation") {
    CHECK(validate_cx_params(CxParams::defaults()).empty());

    CxParams q_boundary = CxParams::defaults();
    q_boundary.q = Rational(1, 8);  // gamma/2 - 1/4 exactly; must be rejected
    CHECK(!validate_cx_params(q_boundary).empty());
    CHECK_THROWS_AS(cx_init(q_boundary), std::invalid_argument);

    CxParams low_gamma = CxParams::defaults();
    low_gamma.gamma = Rational(1, 2);
    CHECK(!validate_cx_params(low_gamma).empty());

    CxParams rational_v = CxParams::defaults();
    rational_v.v0 = xr(23, 10);
    CHECK(!validate_cx_params(rational_v).empty());

    CxParams outside_start = CxParams::defaults();
    outside_start.u0 = xr(1, 2);
    CHECK(!validate_cx_params(outside_start).empty());
}

TEST_CASE("per-zone update shape over a long run") {
    const CxParams p = CxParams::defaults();
    CxState st = cx_init(p);
    const auto zb = ZoneBounds::at(p.gamma);
    const ExtendedRational u_cap(zb.u_cap);
    for (int k = 0; k < 2000; ++k) {
        const CxState nx = cx_step(st, p);
        switch (st.zone) {
            case Zone::Z1:
                CHECK(nx.v == st.v);
                CHECK(nx.u > st.u);       // drift toward gamma/(1-gamma)
                CHECK(nx.u < u_cap);      // but never past it
                break;
            case Zone::Z2:
                CHECK(nx.u == st.u);
                CHECK(nx.v < st.v);
                break;
            case Zone::Z3:
                CHECK(nx.v == st.v);
                CHECK(nx.u < st.u);
                break;
            case Zone::Z4:
                CHECK(nx.u == st.u);
                CHECK(nx.v > st.v);
                break;
            default:
                FAIL("state outside all zones");
        }
        CHECK(nx.u.is_rational());
        CHECK(!nx.v.is_rational());
        CHECK(nx.L0 + nx.L1 == nx.k);
        st = nx;
    }
}

TEST_CASE("zero step budget returns the initial state") {
    const CxParams p = CxParams::defaults();
    const auto tr = run_counterexample(p, 0);
    CHECK(tr.summary.steps == 0);
    CHECK(tr.summary.cycles == 0);
    CHECK(tr.summary.transitions.empty());
    REQUIRE(tr.rows.size() == 1);  // the initial row only
    CHECK(tr.rows[0].k == 0);
    CHECK(tr.summary.final_state.u == cx_init(p).u);
}

TEST_CASE("negative step budget is rejected") {
    CHECK_THROWS_AS(run_counterexample(CxParams::defaults(), -1), std::invalid_argument);
}

TEST_CASE("full run: cycles, alternation, exact audits") {
    const CxParams p = CxParams::defaults();
    const auto tr = run_counterexample(p, 5000);
    const auto& s = tr.summary;
    CHECK(s.steps == 5000);
    CHECK(s.cycles >= 5);
    CHECK(!s.zone_stuck);

    // zone order is the strict cycle Z1 -> Z2 -> Z3 -> Z4 -> Z1
    for (const auto& t : s.transitions) CHECK(t.to == zone_successor(t.from));

    // the induced policy value flips between 1/(1-gamma) and 0
    const Rational four(4);
    bool saw_four = false, saw_zero = false;
    for (const auto& row : tr.rows) {
        if (row.zone == Zone::Z1 || row.zone == Zone::Z4) {
            CHECK(row.v_policy == four);
            saw_four = true;
        } else {
            CHECK(row.v_policy == Rational(0));
            saw_zero = true;
        }
    }
    CHECK(saw_four);
    CHECK(saw_zero);

    // final state stays split: u rational, v irrational
    CHECK(s.final_state.u.is_rational());
    CHECK(!s.final_state.v.is_rational());

    // step-size audit: exact harmonic partial sums per action
    CHECK(s.sum_alpha0 == p.q * harmonic_number(s.final_state.L0));
    CHECK(s.sum_alpha1 == p.q * harmonic_number(s.final_state.L1));
    Rational sq0(0), sq1(0);
    for (std::int64_t l = 1; l <= s.final_state.L0; ++l) sq0 += Rational(1) / Rational(l * l);
    for (std::int64_t l = 1; l <= s.final_state.L1; ++l) sq1 += Rational(1) / Rational(l * l);
    CHECK(s.sum_alpha0_sq == p.q * p.q * sq0);
    CHECK(s.sum_alpha1_sq == p.q * p.q * sq1);

    CHECK(s.max_denominator_bits > 0);
    CHECK(s.longest_dwell > 0);
}

TEST_CASE("trace thinning keeps the last row") {
    const auto tr = run_counterexample(CxParams::defaults(), 1000, 100);
    CHECK(tr.rows.size() == 11);  // k = 0, 100, ..., 1000
    CHECK(tr.rows.back().k == 1000);
}
