#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "ostcal/errors.hpp"

namespace ostcal {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

/// Homogeneous 3D point (w = 1) or direction (w = 0).
template <typename Scalar>
using Vec4 = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Scalar>
using Mat4 = Eigen::Matrix<Scalar, 4, 4>;

using Vec3d = Vec3<double>;
using Vec4d = Vec4<double>;
using Mat3d = Mat3<double>;
using Mat4d = Mat4<double>;

template <typename Derived>
Vec4<typename Derived::Scalar> homogeneous_point(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    return Vec4<Scalar>(p.x(), p.y(), p.z(), Scalar(1));
}

template <typename Derived>
Vec4<typename Derived::Scalar> homogeneous_direction(const Eigen::MatrixBase<Derived>& d) {
    using Scalar = typename Derived::Scalar;
    return Vec4<Scalar>(d.x(), d.y(), d.z(), Scalar(0));
}

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
    return deg * Scalar(EIGEN_PI) / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
    return rad * Scalar(180) / Scalar(EIGEN_PI);
}

/// True when R is orthonormal with determinant +1, both within tol.
template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& R, typename Derived::Scalar tol = 1e-9) {
    using Scalar = typename Derived::Scalar;
    const Mat3<Scalar> M = R;
    if (!M.allFinite()) return false;
    const Scalar ortho = (M.transpose() * M - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(M.determinant() - Scalar(1)) <= tol;
}

/// Closest rotation in the Frobenius sense (orthogonal polar factor).
template <typename Derived>
Mat3<typename Derived::Scalar> nearest_rotation(const Eigen::MatrixBase<Derived>& A) {
    using Scalar = typename Derived::Scalar;
    Eigen::JacobiSVD<Mat3<Scalar>> svd(Mat3<Scalar>(A), Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3<Scalar> D = Mat3<Scalar>::Identity();
    D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? Scalar(-1) : Scalar(1);
    return svd.matrixU() * D * svd.matrixV().transpose();
}

template <typename Derived>
Mat3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& v) {
    Mat3<typename Derived::Scalar> K;
    K << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
         -v.y(), v.x(), 0;
    return K;
}

/// Rodrigues rotation about a unit axis.
template <typename Derived>
Mat3<typename Derived::Scalar> rotation_from_axis_angle(const Eigen::MatrixBase<Derived>& axis,
                                                        typename Derived::Scalar angle) {
    using Scalar = typename Derived::Scalar;
    const Vec3<Scalar> a = axis;
    if (!a.allFinite() || std::abs(a.norm() - Scalar(1)) > Scalar(1e-9))
        throw PreconditionError("rotation axis must be a unit vector");
    const Mat3<Scalar> K = skew(a);
    return Mat3<Scalar>::Identity() + std::sin(angle) * K + (Scalar(1) - std::cos(angle)) * K * K;
}

/// Magnitude of the rotation in [0, pi].
template <typename Derived>
typename Derived::Scalar rotation_angle(const Eigen::MatrixBase<Derived>& R) {
    using Scalar = typename Derived::Scalar;
    const Scalar c = std::clamp((R.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
    return std::acos(c);
}

/// Axis * angle form of R (log map).
template <typename Derived>
Vec3<typename Derived::Scalar> rotation_vector(const Eigen::MatrixBase<Derived>& R) {
    using Scalar = typename Derived::Scalar;
    const Eigen::AngleAxis<Scalar> aa{Mat3<Scalar>(R)};
    return aa.axis() * aa.angle();
}

/// Rigid motion x -> R x + t. The rotation block is validated on construction.
template <typename Scalar>
class RigidTransform {
   public:
    static constexpr Scalar kTolerance = Scalar(1e-9);

    RigidTransform() : rotation_(Mat3<Scalar>::Identity()), translation_(Vec3<Scalar>::Zero()) {}

    RigidTransform(const Mat3<Scalar>& rotation, const Vec3<Scalar>& translation)
        : rotation_(rotation), translation_(translation) {
        if (!is_rotation(rotation_, kTolerance))
            throw PreconditionError("rotation block is not orthonormal with det +1");
        if (!translation_.allFinite()) throw PreconditionError("translation is not finite");
    }

    static RigidTransform identity() { return {}; }

    static RigidTransform from_translation(const Vec3<Scalar>& t) {
        return RigidTransform(Mat3<Scalar>::Identity(), t);
    }

    static RigidTransform from_rotation(const Mat3<Scalar>& R) {
        return RigidTransform(R, Vec3<Scalar>::Zero());
    }

    /// Projects the 3x3 block onto SO(3) before validating. Use at input
    /// boundaries where poses come from drifting external sources.
    static RigidTransform orthonormalized(const Mat3<Scalar>& R, const Vec3<Scalar>& t) {
        return RigidTransform(nearest_rotation(R), t);
    }

    /// Accepts a 4x4 whose bottom row is (0, 0, 0, 1).
    static RigidTransform from_matrix(const Mat4<Scalar>& T) {
        if ((T.row(3) - Eigen::Matrix<Scalar, 1, 4>(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kTolerance)
            throw PreconditionError("bottom row of a rigid transform must be (0,0,0,1)");
        return RigidTransform(T.template topLeftCorner<3, 3>(), T.template topRightCorner<3, 1>());
    }

    const Mat3<Scalar>& rotation() const { return rotation_; }
    const Vec3<Scalar>& translation() const { return translation_; }

    Mat4<Scalar> matrix() const {
        Mat4<Scalar> T = Mat4<Scalar>::Identity();
        T.template topLeftCorner<3, 3>() = rotation_;
        T.template topRightCorner<3, 1>() = translation_;
        return T;
    }

    Vec3<Scalar> operator*(const Vec3<Scalar>& p) const { return rotation_ * p + translation_; }

    RigidTransform operator*(const RigidTransform& other) const {
        RigidTransform out;
        out.rotation_ = rotation_ * other.rotation_;
        out.translation_ = rotation_ * other.translation_ + translation_;
        return out;
    }

   private:
    Mat3<Scalar> rotation_;
    Vec3<Scalar> translation_;
};

using RigidTransformd = RigidTransform<double>;

/// Applies T to a homogeneous vector. Directions (w = 0) ignore translation.
template <typename Scalar>
Vec4<Scalar> apply(const RigidTransform<Scalar>& T, const Vec4<Scalar>& p) {
    Vec4<Scalar> out;
    out.template head<3>() = T.rotation() * p.template head<3>() + p.w() * T.translation();
    out.w() = p.w();
    return out;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& T) {
    const Mat3<Scalar> Rt = T.rotation().transpose();
    return RigidTransform<Scalar>(Rt, -(Rt * T.translation()));
}

template <typename Scalar>
struct Pixel {
    Scalar u{0};
    Scalar v{0};
};

using Pixeld = Pixel<double>;

/// Perspective division of homogeneous image coordinates (u*z, v*z, z).
template <typename Scalar>
Pixel<Scalar> project_to_pixel(const Vec3<Scalar>& h) {
    if (!(h.z() > Scalar(0)))
        throw BehindViewpointError("point projects with non-positive depth (" + std::to_string(double(h.z())) + ")");
    return {h.x() / h.z(), h.y() / h.z()};
}

}  // namespace ostcal
