#pragma once

#include <span>
#include <vector>

#include "ostcal/display_model.hpp"
#include "ostcal/kdtree.hpp"

namespace ostcal {

/// Ordered world-frame points, meters.
using PointCloud = std::vector<Vec3d>;

struct RcIcpOptions {
    int max_iterations = 800;
    /// Stop when 1 > e_k / e_{k-1} > convergence_ratio.
    double convergence_ratio = 0.9999;
    double rotation_guard_deg = 9.0;
    /// RMS residual (m) treated as an exact fit. Below this the error ratio is
    /// dominated by rounding and no longer decreases.
    double exact_fit_rms = 1e-10;

    void validate() const;
};

struct RegistrationResult {
    ViewpointShiftd phi;
    int iterations = 0;
    /// Sum of squared point-to-point distances of the last iterate, m^2.
    double final_error = 0;
    bool converged = false;
    double guard_rotation_deg = 0;
    bool guard_accepted = true;
    /// True errors e_k (index 0 is the centroid-seeded start).
    std::vector<double> error_history;
    /// Linearized surrogate sum_i lambda_i . (M_k p_i - q_i) per iteration.
    std::vector<double> surrogate_history;
};

struct Correspondence {
    Vec3d source;  // p_i
    Vec3d target;  // q_i
};

/// Rows of the per-iteration linear problem A x = b in the unknown shift.
struct LinearSystem {
    Eigen::Matrix<double, Eigen::Dynamic, 3> A;
    Eigen::VectorXd b;
};

NearestNeighborIndex build_index(const PointCloud& cloud);

/// Linearizes sum_i lambda_i . (M(phi) p_i - q_i) around the residuals of
/// M_prev, one row per correspondence.
LinearSystem assemble_system(std::span<const Correspondence> correspondences, const Mat4d& M_prev,
                             const RigidTransformd& X, double phi4_tilde);

/// SVD least squares; throws DegenerateGeometryError when rank(A) < 3.
ViewpointShiftd solve_system(const LinearSystem& sys);

/// Rotation-constrained ICP: registers source onto target within the
/// three-parameter family M = X^-1 UQ(phi) X. Also evaluates the rotation
/// guard with opts.rotation_guard_deg.
RegistrationResult rcicp(const PointCloud& source, const PointCloud& target, const RigidTransformd& X,
                         double phi4_tilde, const RcIcpOptions& opts = {});

/// Same as rcicp without running the rotation guard.
RegistrationResult rcicp_unguarded(const PointCloud& source, const PointCloud& target, const RigidTransformd& X,
                                   double phi4_tilde, const RcIcpOptions& opts = {});

struct IcpResult {
    RigidTransformd transform;  // target ~ transform * source
    int iterations = 0;
    bool converged = false;
    double final_error = 0;
};

/// Point-to-point ICP with centroid pre-alignment and per-iteration Kabsch.
IcpResult icp_rigid_detailed(const PointCloud& source, const PointCloud& target, int max_iterations = 800,
                             double convergence_ratio = 0.9999);

RigidTransformd icp_rigid(const PointCloud& source, const PointCloud& target, int max_iterations = 800);

/// Optimal rigid motion mapping src onto dst for paired points.
RigidTransformd kabsch(std::span<const Vec3d> src, std::span<const Vec3d> dst);

/// Shift implied by an unconstrained registration: the negated translation
/// column of X * M_icp * X^-1.
ViewpointShiftd phi_from_icp(const RigidTransformd& M_icp, const RigidTransformd& X);

struct GuardVerdict {
    double rotation_deg = 0;
    bool accepted = true;
};

/// Relative rotation between the clouds; accepted when <= threshold_deg.
GuardVerdict rotation_guard(const PointCloud& source, const PointCloud& target, double threshold_deg = 9.0);

/// Point-wise application of a general 4x4 to a cloud.
PointCloud transform_cloud(const Mat4d& M, const PointCloud& cloud);

Vec3d centroid(std::span<const Vec3d> cloud);

}  // namespace ostcal
