#include "ostcal/registration.hpp"

#include <cmath>
#include <string>

namespace ostcal {

namespace {

void require_cloud(const PointCloud& cloud, std::size_t min_points, const char* name) {
    if (cloud.size() < min_points)
        throw InputError(std::string(name) + " cloud needs at least " + std::to_string(min_points) + " points, has " +
                         std::to_string(cloud.size()));
    for (const auto& p : cloud)
        if (!p.allFinite()) throw InputError(std::string(name) + " cloud contains a non-finite point");
}

Vec3d transform_point(const Mat4d& M, const Vec3d& p) {
    return M.topLeftCorner<3, 3>() * p + M.topRightCorner<3, 1>();
}

// Nearest target point for every transformed source point. Returns the summed
// squared distances.
double match(const NearestNeighborIndex& index, const PointCloud& source, const Mat4d& M,
             std::vector<Correspondence>& out) {
    out.resize(source.size());
    double error = 0;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const auto m = index.nearest(transform_point(M, source[i]));
        out[i] = {source[i], index.point(m.index)};
        error += m.squared_distance;
    }
    return error;
}

double residual_sum(const Mat4d& M, std::span<const Correspondence> corr) {
    double e = 0;
    for (const auto& c : corr) e += (transform_point(M, c.source) - c.target).squaredNorm();
    return e;
}

double surrogate_sum(const Mat4d& M, const Mat4d& M_prev, std::span<const Correspondence> corr) {
    double e = 0;
    for (const auto& c : corr)
        e += (transform_point(M, c.source) - c.target).dot(transform_point(M_prev, c.source) - c.target);
    return e;
}

// 1 > e_k / e_{k-1} > ratio, with an exact fit treated as converged.
bool should_stop(double e_k, double e_prev, double ratio, double exact_fit) {
    if (e_k <= exact_fit || e_prev <= exact_fit) return true;
    const double r = e_k / e_prev;
    return r < 1.0 && r > ratio;
}

void require_non_collinear(const PointCloud& cloud, const char* name) {
    const Vec3d c = centroid(cloud);
    Mat3d cov = Mat3d::Zero();
    for (const auto& p : cloud) cov += (p - c) * (p - c).transpose();
    const Eigen::SelfAdjointEigenSolver<Mat3d> eig(cov, Eigen::EigenvaluesOnly);
    const Vec3d ev = eig.eigenvalues();  // ascending
    if (!(ev[1] > 1e-12 * ev[2]) || ev[2] <= 0)
        throw DegenerateGeometryError(std::string(name) + " cloud is collinear or a single point");
}

}  // namespace

void RcIcpOptions::validate() const {
    if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
    if (!(convergence_ratio > 0 && convergence_ratio < 1)) throw InputError("convergence_ratio must lie in (0, 1)");
    if (!(rotation_guard_deg >= 0)) throw InputError("rotation_guard_deg must be non-negative");
    if (!(exact_fit_rms >= 0)) throw InputError("exact_fit_rms must be non-negative");
}

Vec3d centroid(std::span<const Vec3d> cloud) {
    Vec3d c = Vec3d::Zero();
    for (const auto& p : cloud) c += p;
    return cloud.empty() ? c : Vec3d(c / double(cloud.size()));
}

PointCloud transform_cloud(const Mat4d& M, const PointCloud& cloud) {
    PointCloud out;
    out.reserve(cloud.size());
    for (const auto& p : cloud) out.push_back(transform_point(M, p));
    return out;
}

NearestNeighborIndex build_index(const PointCloud& cloud) { return NearestNeighborIndex(cloud); }

LinearSystem assemble_system(std::span<const Correspondence> correspondences, const Mat4d& M_prev,
                             const RigidTransformd& X, double phi4_tilde) {
    if (correspondences.empty()) throw InputError("assemble_system needs at least one correspondence");
    const auto n = static_cast<Eigen::Index>(correspondences.size());
    LinearSystem sys;
    sys.A.resize(n, 3);
    sys.b.resize(n);
    // lambda^T X^-1 restricted to xyz is (R lambda)^T, since lambda has w = 0.
    const Mat3d& R = X.rotation();
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& c = correspondences[static_cast<std::size_t>(j)];
        const Vec3d lambda = transform_point(M_prev, c.source) - c.target;
        const Vec3d lp = R * lambda;
        const Vec3d s = X * c.source;
        const Vec3d d = X * c.target;
        const double depth_scale = 1.0 - phi4_tilde * s.z();
        sys.A(j, 0) = -lp.x() * depth_scale;
        sys.A(j, 1) = -lp.y() * depth_scale;
        sys.A(j, 2) = -(phi4_tilde * (lp.x() * s.x() + lp.y() * s.y()) + lp.z());
        sys.b(j) = (d - s).dot(lp);
    }
    return sys;
}

ViewpointShiftd solve_system(const LinearSystem& sys) {
    if (sys.A.rows() != sys.b.size()) throw InputError("linear system row count mismatch");
    if (sys.A.rows() < 3) throw DegenerateGeometryError("fewer than three equations for three unknowns");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    if (svd.rank() < 3)
        throw DegenerateGeometryError("residual directions do not span 3D (rank " + std::to_string(svd.rank()) + ")");
    return ViewpointShiftd(Vec3d(svd.solve(sys.b)));
}

RegistrationResult rcicp_unguarded(const PointCloud& source, const PointCloud& target, const RigidTransformd& X,
                                   double phi4_tilde, const RcIcpOptions& opts) {
    opts.validate();
    require_cloud(source, 4, "source");
    require_cloud(target, 4, "target");
    if (!std::isfinite(phi4_tilde)) throw InputError("phi4_tilde must be finite");

    const NearestNeighborIndex index(target);
    const double exact_fit = double(source.size()) * opts.exact_fit_rms * opts.exact_fit_rms;

    // Seed correspondences with the centroid-aligning translation. It is not a
    // member of the constrained family and never enters the result.
    Mat4d M_prev = Mat4d::Identity();
    M_prev.topRightCorner<3, 1>() = centroid(target) - centroid(source);

    std::vector<Correspondence> corr;
    RegistrationResult result;
    double e_prev = match(index, source, M_prev, corr);
    if (e_prev <= exact_fit) {
        // The seed fits exactly, so every residual points the same way and the
        // linear system has rank 1. Accept the seed if it is a member of the
        // family (X^-1 Q X is the translation -R_X^T phi), otherwise restart
        // from the residuals of phi = 0.
        const ViewpointShiftd candidate(Vec3d(-(X.rotation() * M_prev.topRightCorner<3, 1>())));
        const Mat4d M_candidate = misalignment_transform(candidate, phi4_tilde, X);
        const double e_candidate = match(index, source, M_candidate, corr);
        if (e_candidate <= exact_fit) {
            result.phi = candidate;
            result.error_history.push_back(e_candidate);
            result.final_error = e_candidate;
            result.converged = true;
            return result;
        }
        M_prev = Mat4d::Identity();
        e_prev = match(index, source, M_prev, corr);
    }
    result.error_history.push_back(e_prev);
    result.final_error = e_prev;
    if (e_prev <= exact_fit) {
        result.converged = true;
        return result;
    }

    for (int k = 1; k <= opts.max_iterations; ++k) {
        const LinearSystem sys = assemble_system(corr, M_prev, X, phi4_tilde);
        result.phi = solve_system(sys);
        const Mat4d M = misalignment_transform(result.phi, phi4_tilde, X);

        const double e_k = residual_sum(M, corr);
        result.surrogate_history.push_back(surrogate_sum(M, M_prev, corr));
        result.error_history.push_back(e_k);
        result.iterations = k;
        result.final_error = e_k;
        if (should_stop(e_k, e_prev, opts.convergence_ratio, exact_fit)) {
            result.converged = true;
            break;
        }
        M_prev = M;
        e_prev = match(index, source, M_prev, corr);
    }
    return result;
}

RegistrationResult rcicp(const PointCloud& source, const PointCloud& target, const RigidTransformd& X,
                         double phi4_tilde, const RcIcpOptions& opts) {
    RegistrationResult result = rcicp_unguarded(source, target, X, phi4_tilde, opts);
    const GuardVerdict guard = rotation_guard(source, target, opts.rotation_guard_deg);
    result.guard_rotation_deg = guard.rotation_deg;
    result.guard_accepted = guard.accepted;
    return result;
}

RigidTransformd kabsch(std::span<const Vec3d> src, std::span<const Vec3d> dst) {
    if (src.size() != dst.size() || src.empty()) throw InputError("kabsch needs equally sized non-empty point sets");
    const Vec3d cs = centroid(src);
    const Vec3d cd = centroid(dst);
    Mat3d H = Mat3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();
    Eigen::JacobiSVD<Mat3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3d D = Mat3d::Identity();
    D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
    const Mat3d R = svd.matrixV() * D * svd.matrixU().transpose();
    return RigidTransformd::orthonormalized(R, cd - R * cs);
}

IcpResult icp_rigid_detailed(const PointCloud& source, const PointCloud& target, int max_iterations,
                             double convergence_ratio) {
    if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
    require_cloud(source, 3, "source");
    require_cloud(target, 3, "target");
    require_non_collinear(source, "source");
    require_non_collinear(target, "target");

    const NearestNeighborIndex index(target);
    const double exact_fit = double(source.size()) * 1e-20;

    IcpResult result;
    result.transform = RigidTransformd::from_translation(centroid(target) - centroid(source));
    std::vector<Correspondence> corr;
    double e_prev = match(index, source, result.transform.matrix(), corr);
    result.final_error = e_prev;
    if (e_prev <= exact_fit) {
        result.converged = true;
        return result;
    }

    PointCloud src(source.size());
    PointCloud dst(source.size());
    for (int k = 1; k <= max_iterations; ++k) {
        for (std::size_t i = 0; i < corr.size(); ++i) {
            src[i] = corr[i].source;
            dst[i] = corr[i].target;
        }
        result.transform = kabsch(src, dst);
        const double e_k = residual_sum(result.transform.matrix(), corr);
        result.iterations = k;
        result.final_error = e_k;
        if (should_stop(e_k, e_prev, convergence_ratio, exact_fit)) {
            result.converged = true;
            break;
        }
        e_prev = match(index, source, result.transform.matrix(), corr);
    }
    return result;
}

RigidTransformd icp_rigid(const PointCloud& source, const PointCloud& target, int max_iterations) {
    return icp_rigid_detailed(source, target, max_iterations).transform;
}

ViewpointShiftd phi_from_icp(const RigidTransformd& M_icp, const RigidTransformd& X) {
    const RigidTransformd uq = X * M_icp * invert(X);
    return ViewpointShiftd(Vec3d(-uq.translation()));
}

GuardVerdict rotation_guard(const PointCloud& source, const PointCloud& target, double threshold_deg) {
    const RigidTransformd M = icp_rigid(source, target);
    GuardVerdict v;
    v.rotation_deg = rad_to_deg(rotation_angle(M.rotation()));
    // Inclusive boundary, with slack for the rounding of the recovered rotation.
    v.accepted = v.rotation_deg <= threshold_deg + 1e-9;
    return v;
}

}  // namespace ostcal
