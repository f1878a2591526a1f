#include <doctest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "ostcal/display_model.hpp"

using namespace ostcal;

namespace {

double max_abs(const Mat4d& m) { return m.cwiseAbs().maxCoeff(); }

CalibrationProfiled random_profile(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    CalibrationProfiled p;
    p.k_on = {1000 + 200 * u(rng), 1000 + 200 * u(rng), 640 + 50 * u(rng), 360 + 50 * u(rng)};
    p.h0 = {0.02 * u(rng), 0.02 * u(rng), 2.0 + 0.3 * u(rng), 2.0 + 0.3 * u(rng)};
    p.phi4_tilde = 1.0 / p.h0.z_cs;
    p.t_c0v = Vec3d(0.03 * u(rng), 0.03 * u(rng), 0.03 * u(rng));
    return p;
}

}  // namespace

TEST_CASE("homography_matrix") {
    CHECK(homography_matrix(HomographyParams<double>{0, 0, 1.5, 1.5}) == Mat4d::Identity());
    const Mat4d H = homography_matrix(HomographyParams<double>{0.01, 0, 2.0, 2.0});
    CHECK(H(0, 2) == doctest::Approx(-0.005));
    const Mat4d S = homography_matrix(HomographyParams<double>{0, 0, 1.0, 2.0});
    CHECK(S(0, 0) == 2.0);
    CHECK(S(1, 1) == 2.0);
    CHECK(S(2, 2) == 1.0);
}

TEST_CASE("build_U") {
    CHECK(build_U(ViewpointShiftd{}, 0.5) == Mat4d::Identity());
    const Mat4d U = build_U(ViewpointShiftd{0.01, 0.005, 0.02}, 0.5);
    CHECK(U(0, 0) == doctest::Approx(0.99));
    CHECK(U(1, 1) == doctest::Approx(0.99));
    CHECK(U(0, 2) == doctest::Approx(0.005));
    CHECK(U(1, 2) == doctest::Approx(0.0025));
    CHECK(build_U(ViewpointShiftd{0.01, 0.005, 0.02}, 0.0) == Mat4d::Identity());
}

TEST_CASE("build_Q") {
    CHECK(build_Q(ViewpointShiftd{}) == Mat4d::Identity());
    const Mat4d Q = build_Q(ViewpointShiftd{0.01, 0.005, 0.02});
    CHECK(Q.topRightCorner<3, 1>() == Vec3d(-0.01, -0.005, -0.02));
    CHECK(Q.topLeftCorner<3, 3>() == Mat3d::Identity());
}

TEST_CASE("build_UQ") {
    CHECK(build_UQ(ViewpointShiftd{}, 0.5) == Mat4d::Identity());

    const Mat4d UQ = build_UQ(ViewpointShiftd{0.02, 0, 0}, 0.5);
    CHECK(UQ(0, 2) == doctest::Approx(0.01));
    CHECK(UQ(0, 3) == doctest::Approx(-0.02));
    CHECK(UQ.diagonal() == Eigen::Vector4d::Ones());

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.02, 0.02), f(0.3, 0.7);
    for (int i = 0; i < 500; ++i) {
        const ViewpointShiftd phi{u(rng), u(rng), u(rng)};
        const double p4 = f(rng);
        const Mat4d expect = oracle::uq_closed_form(phi.phi1(), phi.phi2(), phi.phi3(), p4);
        CHECK(max_abs(build_UQ(phi, p4) - expect) < 1e-12);
    }
}

TEST_CASE("misalignment_transform") {
    std::mt19937_64 rng(9);
    const RigidTransformd X(oracle::random_rotation(rng, 0.5), Vec3d(0.05, -0.02, 0.1));

    CHECK(max_abs(misalignment_transform(ViewpointShiftd{}, 0.5, X) - Mat4d::Identity()) < 1e-15);

    const ViewpointShiftd phi{0.01, -0.008, 0.015};
    CHECK(max_abs(misalignment_transform(phi, 0.5, RigidTransformd::identity()) - build_UQ(phi, 0.5)) == 0.0);

    // The 3x3 block is near-rigid: its rotational part stays well under a degree.
    for (int i = 0; i < 50; ++i) {
        const RigidTransformd Xi(oracle::random_rotation(rng, EIGEN_PI), Vec3d::Random() * 0.1);
        const Mat4d M = misalignment_transform(phi, 0.5, Xi);
        const Mat3d R = oracle::polar_rotation(M.topLeftCorner<3, 3>());
        CHECK(rad_to_deg(oracle::axis_angle(R).norm()) < 0.6);
    }
}

TEST_CASE("project_point") {
    CalibrationProfiled p;
    p.k_on = {1000, 1000, 500, 500};
    p.h0 = {0, 0, 2, 2};
    p.phi4_tilde = 0.5;
    const auto E0 = RigidTransformd::identity();

    auto px = project_point(p, ViewpointShiftd{}, E0, Vec4d(0, 0, 1, 1));
    CHECK(px.u == doctest::Approx(500));
    CHECK(px.v == doctest::Approx(500));
    px = project_point(p, ViewpointShiftd{}, E0, Vec4d(0.1, 0, 1, 1));
    CHECK(px.u == doctest::Approx(600));
    CHECK(px.v == doctest::Approx(500));

    CHECK_THROWS_AS(project_point(p, ViewpointShiftd{}, E0, Vec4d(0, 0, -1, 1)), BehindViewpointError);
    CHECK_THROWS_AS(project_point(p, ViewpointShiftd{}, E0, Vec4d(0, 0, 1, 0)), PreconditionError);

    SUBCASE("matches an explicit matrix product") {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int i = 0; i < 100; ++i) {
            const auto prof = random_profile(rng);
            const ViewpointShiftd phi{0.02 * u(rng), 0.02 * u(rng), 0.02 * u(rng)};
            const RigidTransformd E(oracle::random_rotation(rng, 0.3), Vec3d(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)));
            const Vec4d v(0.2 * u(rng), 0.2 * u(rng), 1.0 + 0.5 * u(rng), 1.0);

            Mat4d K4 = Mat4d::Identity();
            K4.topLeftCorner<3, 3>() << prof.k_on.fx, 0, prof.k_on.cx, 0, prof.k_on.fy, prof.k_on.cy, 0, 0, 1;
            Mat4d H = Mat4d::Identity();
            H(0, 0) = H(1, 1) = prof.h0.z_cs / prof.h0.z_es;
            H(0, 2) = -prof.h0.x_ce / prof.h0.z_es;
            H(1, 2) = -prof.h0.y_ce / prof.h0.z_es;
            const Vec4d h = K4 * H * oracle::uq_closed_form(phi.phi1(), phi.phi2(), phi.phi3(), prof.phi4_tilde) *
                            E.matrix() * v;

            const auto got = project_point(prof, phi, E, v);
            CHECK(std::abs(got.u - h.x() / h.z()) < 1e-9);
            CHECK(std::abs(got.v - h.y() / h.z()) < 1e-9);
        }
    }
}

TEST_CASE("updated_projection") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-1, 1);

    SUBCASE("zero shift reproduces the offline projection exactly") {
        for (int i = 0; i < 100; ++i) {
            const auto prof = random_profile(rng);
            CHECK(updated_projection(prof, ViewpointShiftd{}) == offline_projection(prof));
        }
    }

    SUBCASE("identity homography and no offset give the intrinsics embedding") {
        CalibrationProfiled p;
        p.k_on = {800, 820, 320, 240};
        p.h0 = {0, 0, 2, 2};
        p.phi4_tilde = 0.5;
        CHECK(updated_projection(p, ViewpointShiftd{}) == p.k_on.embedded());
    }

    SUBCASE("agrees with project_point through the display frame") {
        for (int i = 0; i < 100; ++i) {
            const auto prof = random_profile(rng);
            const ViewpointShiftd phi{0.02 * u(rng), 0.02 * u(rng), 0.02 * u(rng)};
            const RigidTransformd E0(oracle::random_rotation(rng, 0.3), Vec3d(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)));
            const Vec4d v(0.2 * u(rng), 0.2 * u(rng), 1.0 + 0.5 * u(rng), 1.0);

            // World to display frame: x_V = E0 v - t_c0v.
            Mat4d VW = E0.matrix();
            VW.topRightCorner<3, 1>() -= prof.t_c0v;
            const Vec4d h = updated_projection(prof, phi) * VW * v;

            const auto got = project_point(prof, phi, E0, v);
            CHECK(std::abs(got.u - h.x() / h.z()) < 1e-9);
            CHECK(std::abs(got.v - h.y() / h.z()) < 1e-9);
        }
    }
}

TEST_CASE("reprojection_error") {
    using Px = Pixel<double>;
    const std::vector<Px> a{{1, 2}, {3, 4}};
    CHECK(reprojection_error<double>(a, a) == 0.0);

    const std::vector<Px> g{{0, 0}};
    const std::vector<Px> r{{3, 4}};
    CHECK(reprojection_error<double>(g, r) == doctest::Approx(5.0));

    const std::vector<Px> g2{{0, 0}, {10, 10}};
    const std::vector<Px> r2{{2, 0}, {10, 14}};
    CHECK(reprojection_error<double>(g2, r2) == doctest::Approx(3.0));

    CHECK_THROWS_AS(reprojection_error<double>(std::vector<Px>{}, std::vector<Px>{}), InputError);
    CHECK_THROWS_AS(reprojection_error<double>(g, g2), InputError);
}

TEST_CASE("pose_overlay_error") {
    const RigidTransformd T(rotation_from_axis_angle(Vec3d::UnitY(), 0.4), Vec3d(0.1, 0.2, 0.3));
    const auto same = pose_overlay_error(T, T);
    CHECK(same.rotation_vector.norm() < 1e-12);
    CHECK(same.translation_delta.norm() == 0.0);

    const auto real = RigidTransformd::identity();
    const auto virt = RigidTransformd::from_rotation(rotation_from_axis_angle(Vec3d::UnitX(), deg_to_rad(5.0)));
    const auto e = pose_overlay_error(real, virt);
    CHECK(std::abs(e.rotation_vector.x() - 0.0873) < 1e-4);
    CHECK(std::abs(e.rotation_vector.x() - 0.08726646259971647) < 1e-12);
    CHECK(std::abs(e.rotation_vector.y()) < 1e-12);
    CHECK(std::abs(e.rotation_vector.z()) < 1e-12);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 100; ++i) {
        const RigidTransformd a(oracle::random_rotation(rng, EIGEN_PI), Vec3d(u(rng), u(rng), u(rng)));
        const RigidTransformd b(oracle::random_rotation(rng, EIGEN_PI), Vec3d(u(rng), u(rng), u(rng)));
        const auto err = pose_overlay_error(a, b);
        const Vec3d expect = oracle::axis_angle(b.rotation() * a.rotation().transpose());
        if (expect.norm() < EIGEN_PI - 1e-3) CHECK((err.rotation_vector - expect).norm() < 1e-9);
        CHECK((err.translation_delta - (b.translation() - a.translation())).norm() < 1e-15);
    }
}

TEST_CASE("CalibrationProfile::validate") {
    CalibrationProfiled p;
    p.k_on = {1000, 1000, 500, 500};
    p.h0 = {0, 0, 2, 2};
    p.phi4_tilde = 0.5;
    CHECK_NOTHROW(p.validate());

    auto bad = p;
    bad.k_on.fx = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = p;
    bad.h0.z_es = -1;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = p;
    bad.phi4_tilde = 0.4;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("ViewpointShift sanity bound") {
    CHECK(ViewpointShiftd{0.02, -0.03, 0.05}.within_sanity_bound());
    CHECK_FALSE(ViewpointShiftd{0.06, 0, 0}.within_sanity_bound());
    CHECK((-ViewpointShiftd{1, 2, 3}).value == Vec3d(-1, -2, -3));
}
