#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "ostcal/geometry.hpp"

using namespace ostcal;

TEST_CASE("rotation_from_axis_angle") {
    SUBCASE("zero angle is identity") {
        CHECK(rotation_from_axis_angle(Vec3d::UnitZ(), 0.0).isApprox(Mat3d::Identity()));
    }
    SUBCASE("quarter turn about z maps x to y") {
        const Vec3d y = rotation_from_axis_angle(Vec3d::UnitZ(), EIGEN_PI / 2) * Vec3d::UnitX();
        CHECK((y - Vec3d::UnitY()).norm() < 1e-15);
    }
    SUBCASE("trace about the diagonal axis") {
        const Mat3d R = rotation_from_axis_angle(Vec3d(Vec3d::Ones().normalized()), 0.3);
        // 1 + 2 cos(0.3), evaluated with a matrix-exponential oracle.
        CHECK(R.trace() == doctest::Approx(2.910672978251212).epsilon(1e-14));
        CHECK((R - oracle::rotation_series(Vec3d::Ones().normalized(), 0.3)).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("non-unit axis is rejected") {
        CHECK_THROWS_AS(rotation_from_axis_angle(Vec3d(1, 1, 0), 0.1), PreconditionError);
        CHECK_THROWS_AS(rotation_from_axis_angle(Vec3d(1 + 1e-6, 0, 0), 0.1), PreconditionError);
    }
}

TEST_CASE("rotation_angle") {
    CHECK(rotation_angle(Mat3d::Identity()) == 0.0);
    CHECK(rotation_angle(rotation_from_axis_angle(Vec3d::UnitZ(), 0.2)) == doctest::Approx(0.2).epsilon(1e-12));

    const Mat3d R = rotation_from_axis_angle(Vec3d::UnitX(), deg_to_rad(5.0)) *
                    rotation_from_axis_angle(Vec3d::UnitY(), deg_to_rad(5.0));
    CHECK(rad_to_deg(rotation_angle(R)) == doctest::Approx(7.069945578430278).epsilon(1e-12));

    // Overshoot beyond trace 3 is clamped.
    CHECK(rotation_angle(Mat3d(Mat3d::Identity() * (1 + 1e-15))) == 0.0);
}

TEST_CASE("angle round trip holds over [0, pi]") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0.0, EIGEN_PI);
    for (int i = 0; i < 2000; ++i) {
        const Vec3d axis = Vec3d(n(rng), n(rng), n(rng)).normalized();
        const double theta = i == 0 ? 0.0 : (i == 1 ? EIGEN_PI : u(rng));
        const Mat3d R = rotation_from_axis_angle(axis, theta);
        CHECK(is_rotation(R));
        // acos loses precision near 0 and pi; compare through cos there.
        const double got = rotation_angle(R);
        if (theta > 1e-3 && theta < EIGEN_PI - 1e-3)
            CHECK(std::abs(got - theta) < 1e-9);
        else
            CHECK(std::abs(std::cos(got) - std::cos(theta)) < 1e-12);
    }
}

TEST_CASE("apply") {
    const Vec4d p(0.3, -0.2, 0.7, 1.0);
    CHECK(apply(RigidTransformd::identity(), p) == p);

    const auto T = RigidTransformd::from_translation(Vec3d(1, 2, 3));
    CHECK(apply(T, Vec4d(0, 0, 0, 1)) == Vec4d(1, 2, 3, 1));
    CHECK(apply(T, Vec4d(1, 0, 0, 0)) == Vec4d(1, 0, 0, 0));

    SUBCASE("linear in homogeneous combinations") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int i = 0; i < 100; ++i) {
            const RigidTransformd G(oracle::random_rotation(rng, EIGEN_PI), Vec3d(u(rng), u(rng), u(rng)));
            const Vec4d a = homogeneous_point(Vec3d(u(rng), u(rng), u(rng)));
            const Vec4d b = homogeneous_direction(Vec3d(u(rng), u(rng), u(rng)));
            const double alpha = u(rng);
            const double beta = u(rng);
            // alpha*a + beta*b has w = alpha; the map is linear in it.
            const Vec4d lhs = apply(G, Vec4d(alpha * a + beta * b));
            const Vec4d rhs = alpha * apply(G, a) + beta * apply(G, b);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("invert") {
    CHECK(invert(RigidTransformd::identity()).matrix() == Mat4d::Identity());
    const auto Tinv = invert(RigidTransformd::from_translation(Vec3d(1, 2, 3)));
    CHECK(Tinv.translation() == Vec3d(-1, -2, -3));
    CHECK(Tinv.rotation() == Mat3d::Identity());

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const RigidTransformd T(oracle::random_rotation(rng, EIGEN_PI), Vec3d(u(rng), u(rng), u(rng)));
        CHECK(((T * invert(T)).matrix() - Mat4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((invert(T).matrix() * T.matrix() - Mat4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((invert(invert(T)).matrix() - T.matrix()).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("RigidTransform validates its rotation block") {
    Mat3d bad = Mat3d::Identity();
    bad(0, 0) = 1.001;
    CHECK_THROWS_AS(RigidTransformd(bad, Vec3d::Zero()), PreconditionError);
    CHECK_THROWS_AS(RigidTransformd(Mat3d(-Mat3d::Identity()), Vec3d::Zero()), PreconditionError);

    // Drift is only repaired when asked for.
    Mat3d drift = rotation_from_axis_angle(Vec3d::UnitY(), 0.4);
    drift(0, 1) += 1e-7;
    const auto fixed = RigidTransformd::orthonormalized(drift, Vec3d::Zero());
    CHECK(is_rotation(fixed.rotation(), 1e-12));
    CHECK((fixed.rotation() - oracle::polar_rotation(drift)).cwiseAbs().maxCoeff() < 1e-12);

    Mat4d m = Mat4d::Identity();
    m(3, 0) = 0.5;
    CHECK_THROWS_AS(RigidTransformd::from_matrix(m), PreconditionError);
}

TEST_CASE("project_to_pixel") {
    auto px = project_to_pixel(Vec3d(100, 50, 1));
    CHECK(px.u == 100.0);
    CHECK(px.v == 50.0);
    px = project_to_pixel(Vec3d(200, 100, 2));
    CHECK(px.u == 100.0);
    CHECK(px.v == 50.0);
    CHECK_THROWS_AS(project_to_pixel(Vec3d(1, 1, 0)), BehindViewpointError);
    CHECK_THROWS_AS(project_to_pixel(Vec3d(1, 1, -3)), BehindViewpointError);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-100, 100), s(0.01, 50);
    for (int i = 0; i < 100; ++i) {
        const Vec3d h(u(rng), u(rng), s(rng));
        const double k = s(rng);
        const auto a = project_to_pixel(h);
        const auto b = project_to_pixel(Vec3d(k * h));
        CHECK(a.u == doctest::Approx(b.u).epsilon(1e-13));
        CHECK(a.v == doctest::Approx(b.v).epsilon(1e-13));
    }
}
