#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "ostcal/geometry.hpp"

namespace ostcal {

/// Ideal on-axis eye-display intrinsics, in pixels.
template <typename Scalar>
struct OnAxisIntrinsics {
    Scalar fx{1};
    Scalar fy{1};
    Scalar cx{0};
    Scalar cy{0};

    bool valid() const { return fx > 0 && fy > 0 && std::isfinite(cx) && std::isfinite(cy); }

    Mat3<Scalar> matrix() const {
        Mat3<Scalar> K;
        K << fx, 0, cx,
             0, fy, cy,
             0, 0, 1;
        return K;
    }

    /// [K 0; 0 1], so the first three rows of a 4x4 chain give (zeta*u, zeta*v, zeta).
    Mat4<Scalar> embedded() const {
        Mat4<Scalar> K4 = Mat4<Scalar>::Identity();
        K4.template topLeftCorner<3, 3>() = matrix();
        return K4;
    }
};

/// Offset of the viewpoint from the ideal on-axis centre, and the depths of
/// both to the virtual screen. Lengths in meters; screen normal is +z.
template <typename Scalar>
struct HomographyParams {
    Scalar x_ce{0};
    Scalar y_ce{0};
    Scalar z_es{1};
    Scalar z_cs{1};

    bool valid() const {
        return std::isfinite(x_ce) && std::isfinite(y_ce) && z_es > 0 && z_cs > 0 && std::isfinite(z_es) &&
               std::isfinite(z_cs);
    }
};

/// Translation of the user's eye from the offline-calibrated viewpoint, meters.
template <typename Scalar>
struct ViewpointShift {
    static constexpr Scalar kSanityBound = Scalar(0.05);

    Vec3<Scalar> value = Vec3<Scalar>::Zero();

    ViewpointShift() = default;
    ViewpointShift(Scalar phi1, Scalar phi2, Scalar phi3) : value(phi1, phi2, phi3) {}
    explicit ViewpointShift(const Vec3<Scalar>& v) : value(v) {}

    Scalar phi1() const { return value.x(); }
    Scalar phi2() const { return value.y(); }
    Scalar phi3() const { return value.z(); }

    /// Eye-box sized shifts are a few centimetres at most.
    bool within_sanity_bound() const { return value.allFinite() && value.cwiseAbs().maxCoeff() <= kSanityBound; }

    ViewpointShift operator-() const { return ViewpointShift(-value); }
};

using ViewpointShiftd = ViewpointShift<double>;

/// Offline calibration state of one eye.
template <typename Scalar>
struct CalibrationProfile {
    OnAxisIntrinsics<Scalar> k_on;
    HomographyParams<Scalar> h0;
    Scalar phi4_tilde{1};  // 1 / z_{C0 S}, in 1/m
    Vec3<Scalar> t_c0v = Vec3<Scalar>::Zero();

    /// Throws InputError describing the first violated invariant.
    void validate() const {
        if (!k_on.valid()) throw InputError("intrinsics require fx, fy > 0 and finite principal point");
        if (!h0.valid()) throw InputError("homography parameters require z_es, z_cs > 0");
        if (!(phi4_tilde > 0) || !std::isfinite(phi4_tilde)) throw InputError("phi4_tilde must be positive");
        if (std::abs(phi4_tilde - Scalar(1) / h0.z_cs) > Scalar(1e-9))
            throw InputError("phi4_tilde is inconsistent with 1 / z_cs");
        if (!t_c0v.allFinite()) throw InputError("t_c0v must be finite");
    }
};

using CalibrationProfiled = CalibrationProfile<double>;

/// Viewpoint homography H in 4x4 form: diag(z_cs/z_es, z_cs/z_es, 1, 1) with
/// the in-plane shift in the third column.
template <typename Scalar>
Mat4<Scalar> homography_matrix(const HomographyParams<Scalar>& p) {
    Mat4<Scalar> H = Mat4<Scalar>::Identity();
    H(0, 0) = H(1, 1) = p.z_cs / p.z_es;
    H(0, 2) = -p.x_ce / p.z_es;
    H(1, 2) = -p.y_ce / p.z_es;
    return H;
}

/// Update of H for a viewpoint shift: H1 = H0 * U.
template <typename Scalar>
Mat4<Scalar> build_U(const ViewpointShift<Scalar>& phi, Scalar phi4_tilde) {
    Mat4<Scalar> U = Mat4<Scalar>::Identity();
    U(0, 0) = U(1, 1) = Scalar(1) - phi.phi3() * phi4_tilde;
    U(0, 2) = phi.phi1() * phi4_tilde;
    U(1, 2) = phi.phi2() * phi4_tilde;
    return U;
}

/// Update of the extrinsic for a viewpoint shift: E1 = Q * E0.
template <typename Scalar>
Mat4<Scalar> build_Q(const ViewpointShift<Scalar>& phi) {
    Mat4<Scalar> Q = Mat4<Scalar>::Identity();
    Q.template topRightCorner<3, 1>() = -phi.value;
    return Q;
}

template <typename Scalar>
Mat4<Scalar> build_UQ(const ViewpointShift<Scalar>& phi, Scalar phi4_tilde) {
    return build_U(phi, phi4_tilde) * build_Q(phi);
}

/// World-space map between the cursor cloud and the aligned cloud,
/// M = X^-1 * UQ * X. General 4x4: the 3x3 block carries a small scale.
template <typename Scalar>
Mat4<Scalar> misalignment_transform(const ViewpointShift<Scalar>& phi, Scalar phi4_tilde,
                                    const RigidTransform<Scalar>& X) {
    return invert(X).matrix() * build_UQ(phi, phi4_tilde) * X.matrix();
}

/// Pixel of a world point seen through the phi-updated model.
template <typename Scalar>
Pixel<Scalar> project_point(const CalibrationProfile<Scalar>& profile, const ViewpointShift<Scalar>& phi,
                            const RigidTransform<Scalar>& E0, const Vec4<Scalar>& v_world) {
    if (v_world.w() != Scalar(1)) throw PreconditionError("project_point expects a point with w = 1");
    const Vec4<Scalar> eye = build_UQ(phi, profile.phi4_tilde) * apply(E0, v_world);
    const Vec4<Scalar> h = homography_matrix(profile.h0) * eye;
    return project_to_pixel<Scalar>(profile.k_on.matrix() * h.template head<3>());
}

/// Rendering projection P1 = K_on * H0 * UQ * [I | t_c0v; 0 1].
template <typename Scalar>
Mat4<Scalar> updated_projection(const CalibrationProfile<Scalar>& profile, const ViewpointShift<Scalar>& phi) {
    Mat4<Scalar> offset = Mat4<Scalar>::Identity();
    offset.template topRightCorner<3, 1>() = profile.t_c0v;
    return profile.k_on.embedded() * homography_matrix(profile.h0) * build_UQ(phi, profile.phi4_tilde) * offset;
}

/// Offline rendering projection P0 = K_on * H0 * [I | t_c0v; 0 1].
template <typename Scalar>
Mat4<Scalar> offline_projection(const CalibrationProfile<Scalar>& profile) {
    Mat4<Scalar> offset = Mat4<Scalar>::Identity();
    offset.template topRightCorner<3, 1>() = profile.t_c0v;
    return profile.k_on.embedded() * homography_matrix(profile.h0) * offset;
}

/// Mean Euclidean distance between paired pixels.
template <typename Scalar>
Scalar reprojection_error(std::span<const Pixel<Scalar>> gt, std::span<const Pixel<Scalar>> reproj) {
    if (gt.empty() || gt.size() != reproj.size())
        throw InputError("reprojection_error needs two non-empty sequences of equal length");
    Scalar sum = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) sum += std::hypot(gt[i].u - reproj[i].u, gt[i].v - reproj[i].v);
    return sum / Scalar(gt.size());
}

template <typename Scalar>
struct PoseOverlayError {
    Vec3<Scalar> rotation_vector;    // axis * angle of R_virtual * R_real^T, radians
    Vec3<Scalar> translation_delta;  // t_virtual - t_real, meters; z is the along-depth error
};

template <typename Scalar>
PoseOverlayError<Scalar> pose_overlay_error(const RigidTransform<Scalar>& real, const RigidTransform<Scalar>& virt) {
    return {rotation_vector(virt.rotation() * real.rotation().transpose()),
            virt.translation() - real.translation()};
}

}  // namespace ostcal
