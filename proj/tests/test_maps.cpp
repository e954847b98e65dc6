#include <doctest.h>

#include <cmath>

#include "clvmap/map.hpp"
#include "clvmap/rng.hpp"
#include "test_util.hpp"

using namespace clv;
using testutil::Mat2;

TEST_CASE("mcmillan step: CT fixed values") {
    CtMap ct(kTwoPi);
    const PlanarPoint o = ct.step({0.0, 0.0});
    CHECK(o.x == 0.0);
    CHECK(o.y == 0.0);

    const PlanarPoint q = ct.step({kPi, 0.0});
    CHECK(circle_distance(q.x, 0.0) < 1e-14);
    CHECK(q.y == kPi);
}

TEST_CASE("mcmillan step: direct evaluation of f(x) - y") {
    CtMap ct(kPi / 2.0);
    const double x = 1e-3, y = 2e-3;
    const double expected_x = 2.0 * x + (kPi / 2.0) * std::sin(x) - y;
    const PlanarPoint p = ct.step({x, y});
    CHECK(p.x == doctest::Approx(expected_x).epsilon(1e-15));
    CHECK(p.y == x);
}

TEST_CASE("mcmillan step rejects non-finite input") {
    CtMap ct(kTwoPi);
    CHECK_THROWS_AS(ct.step({std::nan(""), 0.0}), std::domain_error);
    CHECK_THROWS_AS(ct.inverse_step({0.0, INFINITY}), std::domain_error);
}

TEST_CASE("inverse composes to the identity") {
    CtMap ct(kTwoPi);
    const PlanarPoint p{1.0, 2.0};
    const PlanarPoint r = ct.inverse_step(ct.step(p));
    CHECK(testutil::point_distance(r, p, Geometry::Torus) < 1e-12);

    const PlanarPoint back = ct.inverse_step({0.0, kPi});
    CHECK(circle_distance(back.x, kPi) < 1e-13);
    CHECK(circle_distance(back.y, 0.0) < 1e-13);
}

TEST_CASE("reflection conjugates the map to its inverse") {
    CtMap ct(kTwoPi);
    SplitMix64 rng(7);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const PlanarPoint p{rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)};
        const PlanarPoint lhsp = ct.step(p);
        const PlanarPoint lhs{lhsp.y, lhsp.x};               // X o f
        const PlanarPoint rhs = ct.inverse_step({p.y, p.x});  // f^-1 o X
        worst = std::max(worst, testutil::point_distance(lhs, rhs, Geometry::Torus));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("jacobian entries and determinant") {
    CtMap ct(kTwoPi);
    const Jacobian2 j0 = ct.jacobian({0.0, 0.5});
    CHECK(j0.a == doctest::Approx(2.0 + kTwoPi).epsilon(1e-15));
    CHECK(j0.b == -1.0);
    CHECK(j0.c == 1.0);
    CHECK(j0.d == 0.0);
    CHECK(j0.det == 1.0);

    const Jacobian2 j1 = ct.jacobian({kPi / 2.0, 0.0});
    CHECK(j1.a == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("area preservation along an orbit") {
    CtMap ct(kTwoPi);
    SplitMix64 rng(11);
    PlanarPoint p{rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)};
    for (int i = 0; i < 200; ++i) {
        const Jacobian2 j = ct.jacobian(p);
        CHECK(std::fabs(j.det - 1.0) <= 1e-14);
        p = ct.step(p);
    }
}

TEST_CASE("determinant of a 50-step Jacobian product is 1") {
    CtMap ct(kTwoPi);
    const Mat2 f = testutil::iterated_jacobian(ct, {0.3, 1.7}, 50);
    CHECK(std::fabs(f.det() - 1.0) < 1e-9 * std::fabs(f.a));
}

TEST_CASE("cocycle composition F^(j+k) = F^j(f^k p) F^k(p)") {
    CtMap ct(kPi / 2.0);
    SplitMix64 rng(13);
    for (int rep = 0; rep < 5; ++rep) {
        const PlanarPoint p{rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)};
        for (int k = 1; k <= 10; k += 3) {
            for (int j = 1; j <= 10; j += 4) {
                const Mat2 lhs = testutil::iterated_jacobian(ct, p, j + k);
                const Mat2 rhs =
                    testutil::iterated_jacobian(ct, testutil::iterate(ct, p, k), j) *
                    testutil::iterated_jacobian(ct, p, k);
                CHECK(lhs.scaled_diff(rhs) < 1e-9);
            }
        }
    }
}

TEST_CASE("reversibility of the cocycle: F^k(p) = X F^(-k)(Xp) X") {
    CtMap ct(kTwoPi);
    SplitMix64 rng(17);
    const Mat2 X = Mat2::reflection();
    for (int rep = 0; rep < 10; ++rep) {
        const PlanarPoint p{rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)};
        for (int k = 1; k <= 10; ++k) {
            const Mat2 lhs = testutil::iterated_jacobian(ct, p, k);
            const Mat2 rhs = X * testutil::iterated_inverse_jacobian(ct, {p.y, p.x}, k) * X;
            CHECK(lhs.scaled_diff(rhs) < 1e-9);
        }
    }
}

TEST_CASE("fixed point classification from the trace") {
    SUBCASE("synthetic trace 4") {
        const FixedPointReport r = classify_fixed_point(4.0);
        CHECK(r.cls == StabilityClass::Hyperbolic);
        CHECK(r.chi_plus.real() == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-14));
        CHECK(r.chi_minus.real() == doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-14));
        CHECK(r.lyapunov == doctest::Approx(std::log(2.0 + std::sqrt(3.0))).epsilon(1e-14));
        CHECK(r.slope_plus == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-14));
        CHECK(r.chi_plus.real() * r.chi_minus.real() == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("trace 2 is parabolic with unit eigenvalues") {
        const FixedPointReport r = classify_fixed_point(2.0);
        CHECK(r.cls == StabilityClass::Parabolic);
        CHECK(r.chi_plus.real() == 1.0);
        CHECK(r.slope_plus == 1.0);
    }
    SUBCASE("trace 1 is elliptic with unit-modulus pair") {
        const FixedPointReport r = classify_fixed_point(1.0);
        CHECK(r.cls == StabilityClass::Elliptic);
        CHECK(std::abs(r.chi_plus) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(r.chi_plus.real() == doctest::Approx(0.5).epsilon(1e-14));  // e^{i pi/3}
        CHECK(std::isnan(r.slope_plus));
    }
    SUBCASE("negative traces carry the sign") {
        const FixedPointReport r = classify_fixed_point(-4.0);
        CHECK(r.cls == StabilityClass::Hyperbolic);
        CHECK(r.chi_plus.real() == doctest::Approx(-(2.0 + std::sqrt(3.0))).epsilon(1e-14));
        CHECK(r.chi_plus.real() * r.chi_minus.real() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("fixed points of CT at K = pi/2") {
    CtMap ct(kPi / 2.0);
    const auto fps = fixed_points(ct);
    REQUIRE(fps.size() == 2);
    CHECK(circle_distance(fps[0].location.x, 0.0) < 1e-10);
    CHECK(fps[0].cls == StabilityClass::Hyperbolic);
    CHECK(fps[0].trace == doctest::Approx(2.0 + kPi / 2.0).epsilon(1e-12));
    CHECK(circle_distance(fps[1].location.x, kPi) < 1e-10);
    CHECK(fps[1].cls == StabilityClass::Elliptic);
    CHECK(fps[1].trace == doctest::Approx(2.0 - kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("fixed points of CT at K = 2pi include the mod-2pi roots") {
    CtMap ct(kTwoPi);
    const auto fps = fixed_points(ct);
    REQUIRE(fps.size() == 4);
    const double xs[4] = {0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};
    for (int i = 0; i < 4; ++i) {
        CHECK(circle_distance(fps[i].location.x, xs[i]) < 1e-10);
        CHECK(fps[i].location.y == fps[i].location.x);
        // residual of the torus fixed-point condition
        const double res = std::remainder(ct.f(fps[i].location.x) - 2.0 * fps[i].location.x, kTwoPi);
        CHECK(std::fabs(res) < 1e-10);
    }
    // origin: trace 2 + 2pi, lambda = arccosh((2 + 2pi)/2)
    CHECK(fps[0].cls == StabilityClass::Hyperbolic);
    CHECK(fps[0].lyapunov == doctest::Approx(std::acosh(1.0 + kPi)).epsilon(1e-10));
    CHECK(fps[0].lyapunov == doctest::Approx(2.0993).epsilon(1e-4));
    // the half-pi points sit exactly on the parabolic boundary (f' = 2)
    CHECK(fps[1].cls == StabilityClass::Parabolic);
    CHECK(fps[3].cls == StabilityClass::Parabolic);
    CHECK(fps[2].cls == StabilityClass::Hyperbolic);
}

TEST_CASE("fixed points of a synthetic linear map on the plane") {
    CoeffMcMillanMap lin(4.0, 0.0, 0.0, 0.0, Geometry::Plane);
    const auto fps = fixed_points(lin);
    REQUIRE(fps.size() == 1);
    CHECK(std::fabs(fps[0].location.x) < 1e-10);
    CHECK(fps[0].slope_plus == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-12));
    CHECK(fps[0].lyapunov == doctest::Approx(1.3170).epsilon(1e-4));
}

TEST_CASE("fixed_points rejects bad resolution") {
    CtMap ct(kTwoPi);
    CHECK_THROWS_AS(fixed_points(ct, 1), std::invalid_argument);
}
