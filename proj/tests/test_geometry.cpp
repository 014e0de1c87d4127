#include <doctest.h>

#include <cmath>

#include "hyperball/geometry.hpp"
#include "support/testutil.hpp"

using namespace hyperball;
using namespace hyperball::testutil;

namespace {
const Curvature c1{};
constexpr double kPi = 3.14159265358979323846;
}  // namespace

TEST_CASE("conformal factor") {
    CHECK(conformal_factor(BallPoint::origin(3)) == doctest::Approx(2.0).epsilon(1e-15));
    // ||x||^2 = 0.75
    BallPoint x({0.5, std::sqrt(0.5)}, c1);
    CHECK(conformal_factor(x) == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(conformal_factor(BallPoint::origin(2, Curvature(4.0))) == doctest::Approx(2.0));
    CHECK_THROWS_AS(BallPoint({1.0, 0.0}, c1), std::domain_error);
    CHECK_THROWS_AS(BallPoint({0.5, 0.5}, Curvature(4.0)), std::domain_error);
}

TEST_CASE("mobius addition identities and oracle value") {
    Xoshiro256pp rng(11);
    for (int i = 0; i < 50; ++i) {
        const BallPoint v = random_ball_point(rng, 3, c1);
        const BallPoint zero = BallPoint::origin(3);
        CHECK(max_abs_diff(mobius_add(zero, v).x, v.x) <= 1e-12);
        CHECK(norm(mobius_add(negate(v), v).x) <= 1e-12);
    }
    // Frozen 50-digit mpmath evaluation of the closed form.
    const BallPoint u({0.5, 0.55}, c1);
    const BallPoint v({0.3, -0.6}, c1);
    const BallPoint w = mobius_add(u, v);
    CHECK(w.x[0] == doctest::Approx(0.7643831762554508).epsilon(1e-12));
    CHECK(w.x[1] == doctest::Approx(0.3724855816570544).epsilon(1e-12));

    CHECK_THROWS_AS(mobius_add(u, BallPoint({0.1, 0.1, 0.1}, c1)), std::invalid_argument);
    CHECK_THROWS_AS(mobius_add(u, BallPoint({0.1, 0.1}, Curvature(2.0))), std::invalid_argument);
}

TEST_CASE("mobius scalar multiplication") {
    const BallPoint v({0.5, 0.0}, c1);
    CHECK(max_abs_diff(mobius_scalar_mul(1.0, v).x, v.x) <= 1e-15);
    CHECK(norm(mobius_scalar_mul(0.0, v).x) == 0.0);
    CHECK(norm(mobius_scalar_mul(3.0, BallPoint::origin(2)).x) == 0.0);
    // 2 (x) [0.5, 0] has norm tanh(2*atanh(0.5)) = 0.8
    const BallPoint d = mobius_scalar_mul(2.0, v);
    CHECK(d.x[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(d.x[1] == 0.0);
}

TEST_CASE("exp0") {
    CHECK(norm(exp0(Vec{0.0, 0.0}, c1).x) == 0.0);
    const BallPoint e = exp0(Vec{1.0, 0.0}, c1);
    CHECK(e.x[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-14));
    CHECK(e.x[1] == 0.0);
    // tanh saturates; the boundary projection caps the norm at 1 - 1e-5.
    const BallPoint far = exp0(Vec{100.0, 0.0}, c1);
    CHECK(std::fabs(far.norm() - 1.0) <= 1e-5 + 1e-12);
    CHECK(far.norm() < 1.0);
}

TEST_CASE("exp_at and log_at round trips") {
    CHECK(exp_at(BallPoint({0.2, -0.3}, c1),
                 TangentVector{Vec{0.0, 0.0}, BallPoint({0.2, -0.3}, c1)})
              .x[0] == doctest::Approx(0.2));
    // exp at the origin reduces to exp0
    const Vec v{0.3, 0.4};
    const BallPoint from_origin =
        exp_at(BallPoint::origin(2), TangentVector{v, BallPoint::origin(2)});
    CHECK(max_abs_diff(from_origin.x, exp0(v, c1).x) <= 1e-14);

    Xoshiro256pp rng(21);
    for (int i = 0; i < 200; ++i) {
        const Curvature c(i % 3 == 0 ? 1.0 : (i % 3 == 1 ? 0.5 : 2.0));
        const BallPoint x = random_ball_point(rng, 4, c, 0.7);
        const BallPoint y = random_ball_point(rng, 4, c, 0.9);
        const TangentVector lv = log_at(x, y);
        CHECK(max_abs_diff(exp_at(x, lv).x, y.x) <= 1e-8);

        const TangentVector tv{random_vec(rng, 4, 0.4), x};
        const BallPoint z = exp_at(x, tv);
        CHECK(max_abs_diff(log_at(x, z).v, tv.v) <= 1e-8);
    }

    // log of the exp0 example inverts it
    const TangentVector back = log_at(BallPoint::origin(2), exp0(Vec{1.0, 0.0}, c1));
    CHECK(back.v[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(back.v[1]) <= 1e-15);
}

TEST_CASE("distance") {
    const BallPoint a({0.5, 0.55}, c1);
    const BallPoint b({0.3, -0.6}, c1);
    CHECK(std::fabs(distance(a, b) - 3.1822) <= 5e-4);
    CHECK(distance(a, b) == doctest::Approx(3.182283585205116).epsilon(1e-12));
    CHECK(distance(a, a) == 0.0);
    CHECK(distance(BallPoint::origin(2), BallPoint({0.5, 0.0}, c1)) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("origin distance") {
    CHECK(origin_distance(BallPoint::origin(5)) == 0.0);
    CHECK(origin_distance(BallPoint({0.5, 0.0}, c1)) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-13));
    // ||x|| = tanh(r), r = 1 -> hyperbolic radius exactly 2r
    CHECK(origin_distance(BallPoint({std::tanh(1.0), 0.0}, c1)) ==
          doctest::Approx(2.0).epsilon(1e-13));

    Xoshiro256pp rng(31);
    for (int i = 0; i < 100; ++i) {
        const BallPoint x = random_ball_point(rng, 3, c1, 0.95);
        CHECK(std::fabs(origin_distance(x) - distance(BallPoint::origin(3), x)) <= 1e-10);
    }
}

TEST_CASE("gyroline endpoints and midpoint") {
    Xoshiro256pp rng(41);
    for (int i = 0; i < 100; ++i) {
        const BallPoint a = random_ball_point(rng, 3, c1);
        const BallPoint b = random_ball_point(rng, 3, c1);
        CHECK(max_abs_diff(gyroline(a, b, 0.0).x, a.x) <= 1e-12);
        CHECK(max_abs_diff(gyroline(a, b, 1.0).x, b.x) <= 1e-9);
        const BallPoint mid = gyroline(a, b, 0.5);
        CHECK(std::fabs(distance(a, mid) - distance(mid, b)) <= 1e-8);
    }
    const BallPoint a({0.1, 0.2}, c1);
    CHECK(max_abs_diff(gyroline(a, a, 0.7).x, a.x) == 0.0);
}

TEST_CASE("angle") {
    const BallPoint at = BallPoint::origin(2);
    CHECK(angle(at, BallPoint({0.3, 0.0}, c1), BallPoint({-0.4, 0.0}, c1)) ==
          doctest::Approx(kPi).epsilon(1e-12));
    const BallPoint t({0.2, 0.1}, c1);
    CHECK(angle(at, t, t) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(angle(at, at, t), std::invalid_argument);
}

TEST_CASE("triangle defect") {
    const BallPoint a({0.5, 0.55}, c1);
    const BallPoint b({0.3, -0.6}, c1);
    const BallPoint c({-0.1, 0.1}, c1);
    const DefectResult res = triangle_defect(a, b, c);
    CHECK(!res.degenerate);
    const double deg = res.defect * 180.0 / kPi;
    CHECK(deg == doctest::Approx(58.21).epsilon(0.05 / 58.21));

    // local flatness: tiny triangles are nearly Euclidean
    const DefectResult tiny = triangle_defect(BallPoint({4e-5, 0.0}, c1),
                                              BallPoint({0.0, 5e-5}, c1),
                                              BallPoint({-3e-5, -2e-5}, c1));
    CHECK(!tiny.degenerate);
    CHECK(tiny.defect >= 0.0);
    CHECK(tiny.defect < 1e-6);

    // shrinking the triangle shrinks the defect
    const DefectResult scaled = triangle_defect(BallPoint({0.05, 0.055}, c1),
                                                BallPoint({0.03, -0.06}, c1),
                                                BallPoint({-0.01, 0.01}, c1));
    CHECK(scaled.defect < res.defect);
    CHECK(scaled.defect == doctest::Approx(0.6865631855 * kPi / 180.0).epsilon(1e-6));

    // degenerate cases report a flag, not a bogus value
    CHECK(triangle_defect(a, a, b).degenerate);
    const BallPoint m = gyroline(a, b, 0.5);
    const DefectResult collinear = triangle_defect(a, m, b);
    CHECK(collinear.degenerate);
    CHECK(collinear.defect == 0.0);
}

TEST_CASE("gyrogroup and metric properties") {
    Xoshiro256pp rng(51);
    const std::size_t dim = 3;
    for (int i = 0; i < 500; ++i) {
        const BallPoint u = random_ball_point(rng, dim, c1);
        const BallPoint v = random_ball_point(rng, dim, c1);
        const BallPoint w = random_ball_point(rng, dim, c1);

        // left cancellation
        CHECK(max_abs_diff(mobius_add(u, mobius_add(negate(u), v)).x, v.x) <= 1e-10);
        // metric symmetry and triangle inequality
        CHECK(std::fabs(distance(u, v) - distance(v, u)) <= 1e-12);
        CHECK(distance(u, w) <= distance(u, v) + distance(v, w) + 1e-9);
    }
}

TEST_CASE("euclidean limit of mobius addition") {
    const Curvature tiny(1e-6);
    Xoshiro256pp rng(61);
    for (int i = 0; i < 100; ++i) {
        Vec a = random_vec(rng, 3, 0.4);
        Vec b = random_vec(rng, 3, 0.4);
        const BallPoint u(a, tiny);
        const BallPoint v(b, tiny);
        CHECK(max_abs_diff(mobius_add(u, v).x, add(a, b)) <= 1e-4);
    }
}

TEST_CASE("scalar distributivity") {
    Xoshiro256pp rng(71);
    for (int i = 0; i < 200; ++i) {
        const BallPoint v = random_ball_point(rng, 3, c1);
        const double r1 = rng.uniform(-2.0, 2.0);
        const double r2 = rng.uniform(-2.0, 2.0);
        const BallPoint lhs = mobius_scalar_mul(r1 + r2, v);
        const BallPoint rhs = mobius_add(mobius_scalar_mul(r1, v), mobius_scalar_mul(r2, v));
        CHECK(max_abs_diff(lhs.x, rhs.x) <= 1e-9);
    }
}

TEST_CASE("gyrolines run at unit speed and exp0 reaches hyperbolic radius 2r") {
    Xoshiro256pp rng(81);
    for (int i = 0; i < 100; ++i) {
        const BallPoint a = random_ball_point(rng, 2, c1);
        const BallPoint b = random_ball_point(rng, 2, c1);
        const double t = rng.uniform();
        CHECK(std::fabs(distance(a, gyroline(a, b, t)) - t * distance(a, b)) <= 1e-8);

        const Vec v = random_vec(rng, 2, 1.5);
        CHECK(std::fabs(origin_distance(exp0(v, c1)) - 2.0 * norm(v)) <= 1e-10);
    }
}

TEST_CASE("mobius vjp matches finite differences") {
    Xoshiro256pp rng(91);
    for (int trial = 0; trial < 25; ++trial) {
        Vec u = random_vec(rng, 3, 0.25);
        Vec v = random_vec(rng, 3, 0.25);
        const Vec w = random_vec(rng, 3, 1.0);

        auto objective = [&]() {
            return dot(detail::mobius_add_parts(u, v, 1.0).z, w);
        };
        Vec du(3, 0.0), dv(3, 0.0);
        const auto parts = detail::mobius_add_parts(u, v, 1.0);
        detail::mobius_add_vjp(parts, u, v, 1.0, w, du, dv);

        CHECK(check_gradient(objective, u, du) <= 1e-7);
        CHECK(check_gradient(objective, v, dv) <= 1e-7);
    }
}
