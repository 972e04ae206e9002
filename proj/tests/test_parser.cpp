#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "isores/parser.hpp"
#include "test_support.hpp"

using isores::AngleVar;
using isores::parse_expr;
using isores::TrigKind;
using isores::TrigPoly;

TEST_CASE("grammar basics") {
    // -r sin(phi) cos(S) expands to a sin pair
    auto p = parse_expr("-1*r*sin(phi)*cos(S)", AngleVar::phi, 2);
    CHECK(p.size() == 2);
    testsup::Rng rng(0x11);
    for (int i = 0; i < 10; ++i) {
        const double r = rng.uniform(0.2, 2.0), phi = rng.uniform(-4, 4), S = rng.uniform(-9, 9);
        CHECK(p.eval(r, phi, S) ==
              doctest::Approx(-r * std::sin(phi) * std::cos(S)).epsilon(1e-12));
    }

    // r^-1 cos(phi)^2 = 1/(2r) + cos(2 phi)/(2r)
    auto q = parse_expr("r^-1*cos(phi)^2", AngleVar::phi, 2);
    auto expect = TrigPoly::constant(0.5, 2, -1) +
                  TrigPoly::harmonic(0.5, -1, TrigKind::Cos, 2, 0, 2);
    CHECK(TrigPoly::approx_equal(q, expect, 1e-15));
    for (int i = 0; i < 10; ++i) {
        const double r = rng.uniform(0.2, 2.0), phi = rng.uniform(-4, 4);
        CHECK(q.eval(r, phi, 0.0) ==
              doctest::Approx(std::pow(std::cos(phi), 2) / r).epsilon(1e-12));
    }

    // cos(2*phi - S): j = 2, S-frequency -1 = -varkappa/varkappa
    auto c = parse_expr("cos(2*phi - S)", AngleVar::phi, 2);
    REQUIRE(c.size() == 1);
    CHECK(c.terms()[0].jpsi == 2);
    CHECK(c.terms()[0].lnum == -2);
    CHECK(c.terms()[0].kind == TrigKind::Cos);
}

TEST_CASE("fractional S-frequencies go through the global denominator") {
    auto p = parse_expr("sin(psi + 1/2*S)", AngleVar::psi, 2);
    REQUIRE(p.size() == 1);
    CHECK(p.terms()[0].jpsi == 1);
    CHECK(p.terms()[0].lnum == 1);

    CHECK_THROWS_WITH_AS(parse_expr("cos(1/3*S)", AngleVar::phi, 2),
                         doctest::Contains("non-integer frequency"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_expr("cos(1/2*phi)", AngleVar::phi, 2),
                         doctest::Contains("non-integer frequency"), std::invalid_argument);
}

TEST_CASE("errors carry positions and name the offending token") {
    CHECK_THROWS_WITH_AS(parse_expr("r^2 + ", AngleVar::phi, 1),
                         doctest::Contains("position"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_expr("2*x", AngleVar::phi, 1),
                         doctest::Contains("unknown identifier 'x'"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_expr("cos(psi)", AngleVar::phi, 1),
                         doctest::Contains("unknown identifier 'psi'"), std::invalid_argument);
    CHECK_THROWS_AS(parse_expr("cos(2*phi", AngleVar::phi, 1), std::invalid_argument);
    CHECK_THROWS_AS(parse_expr("", AngleVar::phi, 1), std::invalid_argument);
}

TEST_CASE("print then parse is the identity on canonical polys") {
    testsup::Rng rng(0x5EED0003);
    for (int rep = 0; rep < 200; ++rep) {
        const int den = rng.uniform_int(1, 3);
        auto p = testsup::random_poly(rng, den, 8, 3, 3, 4, true);
        if (p.empty()) continue;
        auto back = parse_expr(p.to_string("psi"), AngleVar::psi, den);
        CHECK(TrigPoly::approx_equal(p, back, 1e-13 * std::max(1.0, p.max_abs_coeff())));
    }
}
