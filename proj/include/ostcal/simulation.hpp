#pragma once

#include <cstdint>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ostcal/registration.hpp"

namespace ostcal {

enum class HandSampling {
    Silhouette,  // uniform over the area enclosed by the hand outline
    Contour,     // uniform along the outline only
};

/// Parameters of a synthetic planar hand cloud.
struct SyntheticCloudSpec {
    int point_count = 1000;
    double extent = 0.18;        // overall hand size, m
    double depth_jitter = 0.01;  // half-width of uniform depth noise, m
    Vec3d center{0.0, 0.0, 0.5};
    std::uint64_t seed = 0;
    HandSampling sampling = HandSampling::Silhouette;

    void validate() const;
};

struct NoiseSpec {
    double rotation_deg = 0;
    std::uint64_t seed = 0;
};

/// A registration pair and the disturbance that produced it.
struct TrialPair {
    PointCloud source;
    PointCloud target;
    Vec3d noise_axis = Vec3d::UnitZ();
    std::size_t pivot_index = 0;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    int trial = 0;  // index within its noise level
    double rotation_deg = 0;
    ViewpointShiftd phi_gt;
    ViewpointShiftd phi_rcicp;
    ViewpointShiftd phi_icp;
    Vec3d err_rcicp = Vec3d::Zero();  // |phi - phi_gt| per component, m
    Vec3d err_icp = Vec3d::Zero();
    int iterations_rcicp = 0;
    bool converged_rcicp = false;
    int iterations_icp = 0;
    bool converged_icp = false;
    double guard_rotation_deg = 0;
    std::size_t pivot_index = 0;
    /// Set when a registration threw; the error fields are then NaN.
    std::optional<std::string> failure;

    bool failed() const { return failure.has_value(); }
};

enum class ShiftPolicy { Fixed, SeededRandom };
enum class ExtrinsicPolicy { Identity, Fixed, SeededRandom };

struct SweepConfig {
    double rotation_start_deg = 0;
    double rotation_stop_deg = 20;
    double rotation_step_deg = 1;
    int trials_per_level = 20;
    ShiftPolicy phi_policy = ShiftPolicy::SeededRandom;
    ViewpointShiftd phi_fixed{0.01, -0.008, 0.015};
    double phi_random_bound = 0.02;
    double phi4_tilde = 0.5;
    ExtrinsicPolicy x_policy = ExtrinsicPolicy::SeededRandom;
    RigidTransformd x_fixed;
    std::uint64_t base_seed = 1;
    /// Worker threads; results do not depend on this.
    int threads = 0;

    void validate() const;
    std::vector<double> levels() const;
};

/// Deterministic 64-bit mix of a seed with stream identifiers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Uniform direction on the unit sphere (Marsaglia).
template <typename Rng>
Vec3d random_unit_axis(Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double a = 0, b = 0, s = 2;
    while (s >= 1.0 || s == 0.0) {
        a = u(rng);
        b = u(rng);
        s = a * a + b * b;
    }
    const double f = 2.0 * std::sqrt(1.0 - s);
    return Vec3d(a * f, b * f, 1.0 - 2.0 * s);
}

/// Planar hand silhouette (palm disc with five finger lobes) in the
/// z = center.z plane, fitted into an extent-sized square around the centre,
/// with uniform depth jitter of +-depth_jitter.
PointCloud generate_hand_cloud(const SyntheticCloudSpec& spec);

/// Seeded head pose: rotation <= 30 deg about a random axis, eye centre
/// within 0.1 m of the world origin (translation norm <= 0.1 m).
RigidTransformd random_head_pose(std::uint64_t seed);

/// Seeded shift, uniform in [-bound, bound] per component.
ViewpointShiftd random_shift(std::uint64_t seed, double bound = 0.02);

/// target = R_noise o (X^-1 UQ(phi_gt) X) applied to source, the noise
/// rotation pivoting about a seeded point of the transformed cloud.
TrialPair make_trial_pair(const PointCloud& source, const ViewpointShiftd& phi_gt, double phi4_tilde,
                          const RigidTransformd& X, const NoiseSpec& noise);

/// Registers one pair with rcICP and with ICP + phi_from_icp.
TrialRecord run_trial(const PointCloud& source, const ViewpointShiftd& phi_gt, double phi4_tilde,
                      const RigidTransformd& X, const NoiseSpec& noise, const RcIcpOptions& opts = {});

std::vector<TrialRecord> run_sweep(const SweepConfig& cfg, const SyntheticCloudSpec& spec,
                                   const RcIcpOptions& opts = {});

struct ComponentStats {
    Vec3d median_mm = Vec3d::Zero();
    Vec3d mean_mm = Vec3d::Zero();
    Vec3d stddev_mm = Vec3d::Zero();
};

struct LevelSummary {
    double rotation_deg = 0;
    int trials = 0;
    int failures = 0;
    ComponentStats rcicp;
    ComponentStats icp;
};

struct SweepSummary {
    std::vector<LevelSummary> levels;
    /// Largest level such that it and every lower level have all three
    /// median rcICP errors <= accuracy_mm. Empty when the first level fails.
    std::optional<double> tolerance_angle_deg;
    double accuracy_mm = 4.0;
};

SweepSummary summarize(const std::vector<TrialRecord>& records, double accuracy_mm = 4.0);

}  // namespace ostcal
