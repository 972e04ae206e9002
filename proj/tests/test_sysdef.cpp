#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "isores/presets.hpp"
#include "isores/sysdef.hpp"
#include "test_support.hpp"

using namespace isores;
using testsup::kPi;

TEST_CASE("envelope exponent and chi per family") {
    Envelope e{EnvelopeFamily::Power, 0.25, 1.0};
    CHECK(e.m() == 4);
    CHECK(e.chi_m() == doctest::Approx(-0.25));

    Envelope h{EnvelopeFamily::Power, 0.5, 1.0};
    CHECK(h.m() == 2);
    CHECK(h.chi_m() == doctest::Approx(-0.5));

    Envelope nl{EnvelopeFamily::Power, 0.3, 1.0};
    CHECK(nl.m() == 3);
    CHECK(nl.chi_m() == 0.0);

    Envelope pl{EnvelopeFamily::PowerLog, 1.0 / 3.0, 30.0};
    pl.validate();
    CHECK(pl.m() == 3);
    CHECK(pl.chi_m() == 0.0);

    CHECK_THROWS_AS((Envelope{EnvelopeFamily::Power, 1.5, 1.0}).validate(),
                    std::invalid_argument);
    // power_log needs log(t0) > 1/alpha for monotone decay
    CHECK_THROWS_AS((Envelope{EnvelopeFamily::PowerLog, 0.5, 2.0}).validate(),
                    std::invalid_argument);
}

TEST_CASE("envelope asymptotics: ell and the mu^{m+1}/ell ordering") {
    Envelope e{EnvelopeFamily::Power, 0.25, 1.0};
    for (double t : {1e2, 1e4, 1e6}) CHECK(e.ell(t) == doctest::Approx(-0.25 / t));
    // mu^{m+1}/ell -> 0 at rate 10^{alpha(m+1)-1} per decade
    double prev = 1e300;
    const double decade = std::pow(10.0, 0.25 * (e.m() + 1) - 1.0);
    for (int d = 2; d <= 8; ++d) {
        const double t = std::pow(10.0, d);
        const double ratio = std::abs(e.mu_pow(e.m() + 1, t) / e.ell(t));
        CHECK(ratio < prev / (decade * 0.999));
        prev = ratio;
    }
    // alpha = 1 (m = 1): the ratio is exactly 1/t, a full 10x per decade
    Envelope u{EnvelopeFamily::Power, 1.0, 1.0};
    prev = 1e300;
    for (int d = 2; d <= 8; ++d) {
        const double t = std::pow(10.0, d);
        const double ratio = std::abs(u.mu_pow(u.m() + 1, t) / u.ell(t));
        CHECK(ratio < prev / 9.999);
        prev = ratio;
    }
}

TEST_CASE("gamma closed forms and the power_log quadrature self-check") {
    Envelope half{EnvelopeFamily::Power, 0.5, 1.0};
    CHECK(half.gamma(2, std::exp(2.0)) == doctest::Approx(2.0).epsilon(1e-12));

    Envelope quarter{EnvelopeFamily::Power, 0.25, 1.0};
    CHECK(quarter.gamma(2, 4.0) == doctest::Approx(2.0).epsilon(1e-12));

    Envelope pl{EnvelopeFamily::PowerLog, 0.25, 100.0};
    pl.validate();
    const double coarse = pl.gamma_between(3, 100.0, 5000.0);
    double refined = 0.0;  // Richardson-style: sum of halves must agree
    refined += pl.gamma_between(3, 100.0, 1000.0);
    refined += pl.gamma_between(3, 1000.0, 5000.0);
    CHECK(coarse == doctest::Approx(refined).epsilon(1e-10));
}

TEST_CASE("phase closed forms") {
    Envelope quarter{EnvelopeFamily::Power, 0.25, 1.0};
    PhaseLaw ph{{2.0, 0.6}, 0.0};
    for (double t : {1.0, 7.0, 123.0}) {
        CHECK(ph.S(t, quarter) ==
              doctest::Approx(2.0 * t + 4.0 * 0.6 / 3.0 * std::pow(t, 0.75)).epsilon(1e-13));
        CHECK(ph.S_prime(t, quarter) ==
              doctest::Approx(2.0 + 0.6 * std::pow(t, -0.25)).epsilon(1e-13));
    }
    Envelope half{EnvelopeFamily::Power, 0.5, 1.0};
    PhaseLaw ph2{{1.0, 5.0}, 0.0};
    CHECK(ph2.S(9.0, half) == doctest::Approx(9.0 + 2.0 * 5.0 * 3.0).epsilon(1e-13));
}

TEST_CASE("resonance validation") {
    Resonance ok{1, 2, 1.0, 2.0};
    ok.validate();
    CHECK_THROWS_AS((Resonance{2, 4, 1.0, 2.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((Resonance{1, 2, 1.0, 2.0 + 1e-6}).validate(), std::invalid_argument);
}

TEST_CASE("horizon bookkeeping") {
    Envelope quarter{EnvelopeFamily::Power, 0.25, 1.0};

    // integrable iff exponent * alpha > 1
    CHECK(horizon_T_eps(quarter, 6, 10.0, 0.3, 0.5).infinite);   // 6/4 > 1
    CHECK_FALSE(horizon_T_eps(quarter, 4, 10.0, 0.3, 0.5).infinite);  // log case
    CHECK_FALSE(horizon_T_eps(quarter, 2, 10.0, 0.3, 0.5).infinite);

    // log case closed form: T = t_s (exp(eps^{-2(1-l)}) - 1)
    const double ts = 10.0, eps = 0.5, l = 0.5;
    const auto h4 = horizon_T_eps(quarter, 4, ts, eps, l);
    CHECK(h4.T ==
          doctest::Approx(ts * (std::exp(std::pow(eps, -1.0)) - 1.0)).epsilon(1e-9));

    // exponent 2 (the drift-mode horizon): 2 (sqrt(T + ts) - sqrt(ts)) = eps^{-2(1-l)}
    const auto h2 = horizon_T_eps(quarter, 2, ts, eps, l);
    CHECK(2.0 * (std::sqrt(h2.T + ts) - std::sqrt(ts)) ==
          doctest::Approx(std::pow(eps, -1.0)).epsilon(1e-10));
}

TEST_CASE("cartesian_to_polar reproduces the closed-form entries") {
    auto cs = make_ex0({});
    auto spec = cartesian_to_polar(cs);
    CHECK(spec.drift.count(2) == 1);
    CHECK(spec.noise.count(1) == 1);

    testsup::Rng rng(0x77);
    const auto& a = spec.drift.at(2);
    const auto& A = spec.noise.at(1);
    for (int i = 0; i < 40; ++i) {
        const double r = rng.uniform(0.2, 2.2), phi = rng.uniform(-4, 4), S = rng.uniform(-9, 9);
        const double f = cs.eval_f(r * std::cos(phi), -r * std::sin(phi), S);
        const double g = cs.eval_g(r * std::cos(phi), S);
        const double e2 = cs.eps * cs.eps;
        // drift order n carries the Ito corrections too (2p = n here)
        const double a1 = -f * std::sin(phi) + e2 / (2.0 * r) * g * g * std::pow(std::cos(phi), 2);
        const double a2 = -f * std::cos(phi) / r - e2 / (2.0 * r * r) * g * g * std::sin(2.0 * phi);
        CHECK(a[0].eval(r, phi, S) == doctest::Approx(a1).epsilon(1e-11));
        CHECK(a[1].eval(r, phi, S) == doctest::Approx(a2).epsilon(1e-11));
        CHECK(A[0][0].eval(r, phi, S) == doctest::Approx(-g * std::sin(phi)).epsilon(1e-11));
        CHECK(A[1][0].eval(r, phi, S) ==
              doctest::Approx(-g * std::cos(phi) / r).epsilon(1e-11));
        CHECK(A[0][1].empty());
        CHECK(A[1][1].empty());
    }
}

TEST_CASE("cartesian_to_polar edge cases") {
    auto cs = make_ex0({{"A1", 0.0}, {"B0", 0.0}, {"B1", 0.0}, {"C0", 0.0}});
    cs.g.clear();
    auto spec = cartesian_to_polar(cs);
    CHECK(spec.drift.empty());
    CHECK(spec.noise.empty());

    // g = x1 sin S alone: alpha_{2,1,p} = -cos^2(phi) sin S
    auto cs2 = make_ex0({{"A1", 0.0}, {"B0", 0.0}, {"B1", 0.0}, {"C0", 0.0}, {"eps", 0.0}});
    auto spec2 = cartesian_to_polar(cs2);
    testsup::Rng rng(0x78);
    for (int i = 0; i < 20; ++i) {
        const double r = rng.uniform(0.2, 2.0), phi = rng.uniform(-4, 4), S = rng.uniform(-9, 9);
        CHECK(spec2.noise.at(1)[1][0].eval(r, phi, S) ==
              doctest::Approx(-std::pow(std::cos(phi), 2) * std::sin(S)).epsilon(1e-12));
    }
}

TEST_CASE("polar drift reconstructs the Cartesian vector field (eps = 0)") {
    auto cs = make_ex0({{"eps", 0.0}, {"A1", 0.7}});
    auto spec = cartesian_to_polar(cs);
    testsup::Rng rng(0x79);
    for (int i = 0; i < 60; ++i) {
        const double x1 = rng.uniform(-1.5, 1.5), x2 = rng.uniform(-1.5, 1.5);
        const double r = std::hypot(x1, x2);
        if (r < 0.15) continue;
        const double phi = std::atan2(-x2, x1);
        const double S = rng.uniform(-9, 9);
        const double dr = spec.drift1(r, phi, S, 1.0) / spec.env.mu_pow(spec.n, 1.0);
        const double dphi = spec.drift2(r, phi, S, 1.0) / spec.env.mu_pow(spec.n, 1.0);
        // chain rule back to Cartesian: the perturbation enters xdot2 only
        const double f = cs.eval_f(x1, x2, S);
        const double xdot1_pert = dr * std::cos(phi) - r * dphi * std::sin(phi);
        const double xdot2_pert = -dr * std::sin(phi) - r * dphi * std::cos(phi);
        CHECK(std::abs(xdot1_pert) < 1e-10 * std::max(1.0, std::abs(f)));
        CHECK(xdot2_pert == doctest::Approx(f).epsilon(1e-10));
    }
}

TEST_CASE("presets reject unknown parameters") {
    CHECK_THROWS_WITH_AS(make_ex0({{"BOGUS", 1.0}}), doctest::Contains("unknown parameter"),
                         std::invalid_argument);
    CHECK_THROWS_AS(make_preset("no-such-preset"), std::invalid_argument);
    CHECK(is_preset_name("fig-ex22"));
    CHECK_FALSE(is_preset_name("fig-ex99"));
    CHECK(ic_lattice().size() == 28);
}

TEST_CASE("JSON spec round trip") {
    auto spec = cartesian_to_polar(make_ex0({}));
    const std::string text = system_spec_to_json(spec);
    auto back = load_system_spec(text);
    CHECK(back.n == spec.n);
    CHECK(back.p == spec.p);
    CHECK(back.res.varkappa == spec.res.varkappa);
    REQUIRE(back.drift.count(2) == 1);
    CHECK(TrigPoly::approx_equal(back.drift.at(2)[0], spec.drift.at(2)[0], 1e-12));
    CHECK(TrigPoly::approx_equal(back.drift.at(2)[1], spec.drift.at(2)[1], 1e-12));
    CHECK(TrigPoly::approx_equal(back.noise.at(1)[1][0], spec.noise.at(1)[1][0], 1e-12));

    CHECK_THROWS_AS(load_system_spec("{"), std::invalid_argument);
    // gcd(kappa, varkappa) != 1 must be rejected
    const std::string bad = R"({"resonance":{"kappa":2,"varkappa":4,"nu0":1.0,"s0":2.0},
      "envelope":{"family":"power","alpha":0.25,"t0":1.0},
      "phase":{"s":[2.0]}, "n":2, "p":1, "eps":0.0})";
    CHECK_THROWS_WITH_AS(load_system_spec(bad), doctest::Contains("coprime"),
                         std::invalid_argument);
}

TEST_CASE("horizon solving works for the log-corrected family") {
    Envelope pl{EnvelopeFamily::PowerLog, 0.6, 30.0};
    pl.validate();
    CHECK(horizon_T_eps(pl, 2, 40.0, 0.4, 0.5).infinite);  // 2 * 0.6 > 1
    const auto h = horizon_T_eps(pl, 1, 40.0, 0.4, 0.5);   // 0.6 <= 1: finite
    REQUIRE_FALSE(h.infinite);
    const double target = std::pow(0.4, -1.0);
    CHECK(pl.gamma_between(1, 40.0, 40.0 + h.T) == doctest::Approx(target).epsilon(1e-8));
}
