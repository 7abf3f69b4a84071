#include <algorithm>
#include <cmath>
#include <limits>

#include "cograte/error.hpp"
#include "cograte/protocols.hpp"
#include "doctest.h"

using namespace cograte;

namespace {

SystemParams common() {
    SystemParams p;  // defaults are the common set with sigma_p_pd = 0.005, tau_f = 0.05T
    p.lambda_p = 0.2;
    return p;
}

Allocation mid(const SystemParams& p, Protocol proto) { return Allocation::from_fractions(p, proto, 0.5, 0.5); }

}  // namespace

TEST_CASE("system parameter invariants") {
    SystemParams p = common();
    CHECK_NOTHROW(p.validate());
    p.tau_s = p.t;
    CHECK_THROWS_WITH_AS(p.validate(), "tau_s must be < T", InvariantError);
    p = common();
    p.tau_f = 0.96 * p.t;
    CHECK_THROWS_AS(p.validate(), InvariantError);
    p = common();
    p.sigma_s_sd = 0.0;
    CHECK_THROWS_AS(p.validate(), InvariantError);
    p = common();
    p.f = 1.5;
    CHECK_THROWS_AS(p.validate(), InvariantError);
    p = common();
    CHECK(p.transmission_window(Protocol::P1) == doctest::Approx(4.75e-3));
    CHECK(p.transmission_window(Protocol::P2) == doctest::Approx(4.5e-3));
    CHECK_THROWS_AS(resolve(p, Protocol::P1, {0.1e-3, 1e6}), InvariantError);
    CHECK_THROWS_AS(resolve(p, Protocol::P1, {1e-3, 2e7}), InvariantError);
    CHECK(parse_protocol("p2") == Protocol::P2);
    CHECK_THROWS_AS(parse_protocol("P3"), std::invalid_argument);
}

TEST_CASE("mu_nc") {
    SystemParams p = common();
    CHECK(mu_nc(p) == doctest::Approx(0.220069532795636794).epsilon(1e-12));
    p.sigma_p_pd = 1e9;
    CHECK(mu_nc(p) == doctest::Approx(1.0).epsilon(1e-9));
    p = common();
    double prev = 1.0;
    for (double tf = 0.0; tf < 0.5 * p.t; tf += 0.02 * p.t) {
        p.tau_f = tf;
        const double m = mu_nc(p);
        CHECK(m < prev);
        prev = m;
    }
}

TEST_CASE("mid-grid link statistics and metrics, term-by-term oracle") {
    const SystemParams p = common();
    const LinkStats s1 = link_stats(p, Protocol::P1, mid(p, Protocol::P1));
    CHECK(s1.out_p_pd == doctest::Approx(0.998861543662947689).epsilon(1e-12));
    CHECK(s1.out_p_s == doctest::Approx(0.0333225631052085836).epsilon(1e-12));
    CHECK(s1.out_s_pd == doctest::Approx(0.287449221440051604).epsilon(1e-12));
    CHECK(s1.succ_p_pd_int == doctest::Approx(0.00014636723211041737).epsilon(1e-11));
    CHECK(s1.p_md == doctest::Approx(0.00268961312866715694).epsilon(1e-8));
    CHECK(s1.p_fa == doctest::Approx(0.1).epsilon(1e-10));

    const ProtocolMetrics m1 = evaluate(p, mid(p, Protocol::P1), Protocol::P1);
    CHECK(m1.mu_p == doctest::Approx(0.68730785728129499).epsilon(1e-9));
    CHECK(m1.rate_empty == doctest::Approx(41027.8157920428738).epsilon(1e-11));
    CHECK(m1.rate_busy == doctest::Approx(24706.9568027216112).epsilon(1e-9));
    CHECK(m1.energy_empty == doctest::Approx(4.76875e-6).epsilon(1e-12));
    CHECK(m1.energy_busy == doctest::Approx(3.69035771394920885e-6).epsilon(1e-9));
    CHECK(m1.mean_rate == doctest::Approx(36278.6022288865275).epsilon(1e-9));
    CHECK(m1.mean_energy == doctest::Approx(4.45494817898882633e-6).epsilon(1e-9));
    CHECK(m1.delay == doctest::Approx(1.64167268810977882).epsilon(1e-8));
    CHECK(m1.feasible);

    const ProtocolMetrics m2 = evaluate(p, mid(p, Protocol::P2), Protocol::P2);
    CHECK(m2.stats.out_p_pd == doctest::Approx(0.999265117549980034).epsilon(1e-12));
    CHECK(m2.stats.out_s_pd == doctest::Approx(0.302874620695549066).epsilon(1e-12));
    CHECK(m2.mu_p == doctest::Approx(0.670853876052881625).epsilon(1e-9));
    CHECK(m2.rate_empty == doctest::Approx(41081.5875034348042).epsilon(1e-11));
    CHECK(m2.rate_busy == doctest::Approx(24701.555683014035).epsilon(1e-9));
    CHECK(m2.energy_busy == doctest::Approx(3.62768961312866716e-6).epsilon(1e-9));
    CHECK(m2.mean_rate == doctest::Approx(36198.2492966717043).epsilon(1e-9));
    CHECK(m2.mean_energy == doctest::Approx(4.43295520371089175e-6).epsilon(1e-9));
    CHECK(m2.delay == doctest::Approx(1.69904091415008752).epsilon(1e-8));
}

TEST_CASE("service rate limits") {
    LinkStats s;
    s.p_md = 0.0;
    s.out_p_pd = 0.3;
    s.out_p_s = 1.0;
    s.out_s_pd = 1.0;
    CHECK(mu_p1(s) == doctest::Approx(0.7));
    s.p_md = 1.0;
    s.succ_p_pd_int = 0.123;
    CHECK(mu_p1(s) == doctest::Approx(0.123));
    s = LinkStats{};
    s.out_p_pd = s.out_p_s = s.out_s_pd = 0.0;
    s.p_md = 0.0;
    CHECK(mu_p1(s) == 1.0);

    s.out_p_pd = 0.6;
    s.out_p_s = 0.2;
    s.out_s_pd = 0.3;
    s.p_md = 0.01;
    s.succ_p_pd_int = 0.05;
    s.beta = 1.0;
    CHECK(mu_p2(s) == mu_p1(s));
    s.beta = 0.0;
    CHECK(mu_p2(s) == doctest::Approx(0.99 * 0.4 + 0.01 * 0.05));
    SystemParams p = common();
    p.f = 1.0;
    p.omega = 0.0;
    CHECK(p.beta() == 1.0);
    p.f = 0.0;
    CHECK(p.beta() == 0.0);
}

TEST_CASE("omega = 1 gives identical service rates") {
    SystemParams p = common();
    p.f = 0.3;
    p.omega = 1.0;
    const Allocation a{2e-3, 4e6};
    const LinkStats s = link_stats(p, Protocol::P2, a);
    CHECK(mu_p2(s) == mu_p1(s));
}

TEST_CASE("degenerate splits") {
    SystemParams p = common();
    const double window = p.transmission_window(Protocol::P1);
    const LinkStats s = link_stats(p, Protocol::P1, {window, p.w});
    CHECK(s.out_s_pd == 1.0);
    const ProtocolMetrics m = evaluate(p, {window, p.w}, Protocol::P1);
    CHECK(m.mu_p == doctest::Approx((1 - s.p_md) * (1 - s.out_p_pd) + s.p_md * s.succ_p_pd_int).epsilon(1e-15));

    p.sigma_s_pd = 1e12;
    CHECK(link_stats(p, Protocol::P1, {2e-3, 5e6}).out_s_pd < 1e-12);

    // W_p = 0: nothing to sense, primary cannot transmit.
    p = common();
    const LinkStats z = link_stats(p, Protocol::P1, {2e-3, 0.0});
    CHECK(z.p_md == 1.0);
    CHECK(z.p_fa == p.target_pfa);
    CHECK(std::isnan(z.threshold));
    CHECK(z.out_p_pd == 1.0);
    CHECK(z.succ_p_pd_int == 0.0);
}

TEST_CASE("energy and rate identities") {
    SystemParams p = common();
    p.lambda_p = 0.0;
    const double g = secondary_capacity(p);
    for (Protocol proto : {Protocol::P1, Protocol::P2}) {
        const Allocation full_su{2e-3, 0.0};
        const LinkStats s = link_stats(p, proto, full_su);
        const SecondaryEnergy e =
            proto == Protocol::P1 ? energy_split_p1(p, full_su, s) : energy_split_p2(p, full_su, s);
        CHECK(e.energy_busy == doctest::Approx(p.t * p.w * p.p0).epsilon(1e-14));
        const SecondaryRates r = proto == Protocol::P1 ? secondary_rate_p1(p, full_su, s, g)
                                                       : secondary_rate_p2(p, full_su, s, g);
        CHECK(r.rate_empty == doctest::Approx(p.t * p.w * g).epsilon(1e-14));
    }
    // lambda = 0, P_FA = 0, delta_s = 0.
    SystemParams idle = common();
    idle.lambda_p = 0.0;
    LinkStats s = link_stats(idle, Protocol::P1, {2e-3, idle.w});
    s.p_fa = 0.0;
    const double expect = (2e-3 - idle.tau_s + (idle.transmission_window(Protocol::P1) - 2e-3) + idle.tau_f) *
                          idle.w * idle.p0;
    CHECK(mean_energy_p1(idle, {2e-3, idle.w}, s) == doctest::Approx(expect).epsilon(1e-14));
    const double expect2 =
        (2e-3 - idle.tau_s + (idle.transmission_window(Protocol::P2) - 2e-3) + 2 * idle.tau_f) * idle.w * idle.p0;
    CHECK(mean_energy_p2(idle, {2e-3, idle.w}, s) == doctest::Approx(expect2).epsilon(1e-14));

    // lambda = 0: the mean is the empty-slot value.
    const ProtocolMetrics m = evaluate(idle, {2e-3, 4e6}, Protocol::P2);
    CHECK(m.mean_rate == m.rate_empty);
    CHECK(m.mean_energy == m.energy_empty);
    CHECK(m.nu0 == 1.0);
}

TEST_CASE("P2 busy rate limits") {
    SystemParams p = common();
    p.tau_f = 0.1e-3;
    const Allocation a{2e-3, 4e6};
    const double g = 1.0;
    LinkStats s = link_stats(p, Protocol::P2, a);
    // Gamma_f = 1, P_MD = 0: the P1 busy expression with tau_f doubled.
    s.gamma_f = 1.0;
    s.p_md = 0.0;
    SystemParams doubled = p;
    doubled.tau_f = 2 * p.tau_f;
    const double t_s2 = p.transmission_window(Protocol::P2) - a.t_p;
    // Same T_s under P1 with tau_f doubled.
    CHECK(doubled.transmission_window(Protocol::P1) - a.t_p == doctest::Approx(t_s2));
    CHECK(secondary_rate_p2(p, a, s, g).rate_busy ==
          doctest::Approx(secondary_rate_p1(doubled, a, s, g).rate_busy).epsilon(1e-14));
    // Gamma_f = 0: no relaying, full T_s credited once p->s decodes.
    s.gamma_f = 0.0;
    const double ds = (p.w - a.w_p) / p.w;
    CHECK(secondary_rate_p2(p, a, s, g).rate_busy ==
          doctest::Approx(((2 * p.tau_f + a.t_p) * ds + t_s2) * p.w).epsilon(1e-14));
}

TEST_CASE("feasibility and violations") {
    SystemParams p = common();
    const ProtocolMetrics nc = evaluate(p, {0.0, 0.0}, Protocol::NC);
    CHECK(nc.mu_p == doctest::Approx(0.2200695).epsilon(1e-6));
    CHECK(nc.feasible);
    CHECK(nc.delay == doctest::Approx(0.8 / (nc.mu_p - 0.2)).epsilon(1e-12));
    CHECK(nc.mean_rate == 0.0);

    p.lambda_p = 0.3;
    const ProtocolMetrics ncu = evaluate(p, {0.0, 0.0}, Protocol::NC);
    CHECK_FALSE(ncu.stable);
    CHECK(ncu.violations == kUnstable);
    CHECK(std::isinf(ncu.delay));

    p = common();
    p.energy_budget = 1e-6;
    const ProtocolMetrics tight = evaluate(p, mid(p, Protocol::P1), Protocol::P1);
    CHECK((tight.violations & kEnergy) != 0);
    CHECK_FALSE(tight.feasible);

    p = common();
    const ProtocolMetrics oob = evaluate(p, {1e-5, 1e6}, Protocol::P1);
    CHECK(oob.violations == kBounds);
    CHECK(std::isnan(oob.mu_p));

    // Every point of a 50x50 grid stays in range.
    for (Protocol proto : {Protocol::P1, Protocol::P2}) {
        for (int i = 0; i < 50; ++i)
            for (int j = 0; j < 50; ++j) {
                const double window = p.transmission_window(proto);
                const Allocation a{std::min(window, p.tau_s + (window - p.tau_s) * i / 49.0), p.w * j / 49.0};
                const ProtocolMetrics m = evaluate(p, a, proto);
                REQUIRE(m.violations != kBounds);
                CHECK(m.mu_p >= 0.0);
                CHECK(m.mu_p <= 1.0);
                CHECK(m.rate_empty >= 0.0);
                CHECK(m.rate_busy >= 0.0);
                CHECK(m.energy_empty >= 0.0);
                CHECK(m.energy_busy >= 0.0);
            }
    }
    CHECK(describe_violations(kUnstable | kEnergy) == "unstable (mu <= lambda), energy above budget");
}
