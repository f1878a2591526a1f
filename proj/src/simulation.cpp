#include "ostcal/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <numbers>
#include <thread>

namespace ostcal {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct FingerLobe {
    double angle;   // direction from the palm centre, rad
    double length;  // fraction of the free length beyond the palm
    double width;   // angular half-width, rad
};

// Fingers point towards +y, thumb out to the side.
constexpr FingerLobe kFingers[] = {
    {std::numbers::pi * 0.34, 0.78, 0.085},  // little
    {std::numbers::pi * 0.43, 0.93, 0.090},  // ring
    {std::numbers::pi * 0.52, 1.00, 0.090},  // middle
    {std::numbers::pi * 0.61, 0.94, 0.090},  // index
    {std::numbers::pi * 0.86, 0.70, 0.110},  // thumb
};

double contour_radius(double theta, double palm, double free_length) {
    double r = palm;
    for (const auto& f : kFingers) {
        double d = std::remainder(theta - f.angle, 2.0 * std::numbers::pi);
        r += free_length * f.length * std::exp(-(d * d) / (f.width * f.width));
    }
    return r;
}

double median(std::vector<double> v) {
    const auto n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ComponentStats component_stats(const std::vector<Vec3d>& errors_m) {
    ComponentStats s;
    if (errors_m.empty()) {
        s.median_mm = s.mean_mm = s.stddev_mm = Vec3d::Constant(std::numeric_limits<double>::quiet_NaN());
        return s;
    }
    const double n = double(errors_m.size());
    for (int c = 0; c < 3; ++c) {
        std::vector<double> vals;
        vals.reserve(errors_m.size());
        for (const auto& e : errors_m) vals.push_back(e[c] * 1000.0);
        double mean = 0;
        for (double v : vals) mean += v;
        mean /= n;
        double var = 0;
        for (double v : vals) var += (v - mean) * (v - mean);
        s.median_mm[c] = median(vals);
        s.mean_mm[c] = mean;
        s.stddev_mm[c] = vals.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    }
    return s;
}

}  // namespace

void SyntheticCloudSpec::validate() const {
    if (point_count < 50) throw InputError("point_count must be at least 50");
    if (!(extent > 0)) throw InputError("extent must be positive");
    if (!(depth_jitter >= 0)) throw InputError("depth_jitter must be non-negative");
    if (!center.allFinite()) throw InputError("center must be finite");
}

void SweepConfig::validate() const {
    if (!(rotation_step_deg > 0)) throw InputError("rotation step must be positive");
    if (!(rotation_start_deg >= 0) || rotation_stop_deg < rotation_start_deg)
        throw InputError("rotation range must satisfy 0 <= start <= stop");
    if (trials_per_level < 1) throw InputError("trials_per_level must be >= 1");
    if (!std::isfinite(phi4_tilde) || phi4_tilde < 0) throw InputError("phi4_tilde must be finite and >= 0");
    if (!(phi_random_bound >= 0)) throw InputError("phi bound must be non-negative");
}

std::vector<double> SweepConfig::levels() const {
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((rotation_stop_deg - rotation_start_deg) / rotation_step_deg + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(rotation_start_deg + double(i) * rotation_step_deg);
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return mix(mix(mix(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

PointCloud generate_hand_cloud(const SyntheticCloudSpec& spec) {
    spec.validate();
    const double reach = 0.5 * spec.extent;
    const double palm = 0.45 * reach;
    const double free_length = reach - palm;
    // Palm centre sits below the cloud centre so the fingers fit the extent box.
    const Eigen::Vector2d palm_offset(0.0, -0.25 * reach);

    constexpr int kVertices = 4096;
    std::vector<Eigen::Vector2d> poly(kVertices + 1);
    double max_abs = 0;
    for (int i = 0; i <= kVertices; ++i) {
        const double t = 2.0 * std::numbers::pi * double(i) / kVertices;
        const double r = contour_radius(t, palm, free_length);
        poly[i] = Eigen::Vector2d(r * std::cos(t), r * std::sin(t)) + palm_offset;
        max_abs = std::max(max_abs, poly[i].cwiseAbs().maxCoeff());
    }
    const double fit = std::min(1.0, reach / max_abs);

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> jitter(-spec.depth_jitter, spec.depth_jitter);
    PointCloud cloud;
    cloud.reserve(spec.point_count);
    auto emit = [&](const Eigen::Vector2d& xy) {
        cloud.emplace_back(spec.center.x() + fit * xy.x(), spec.center.y() + fit * xy.y(),
                           spec.center.z() + jitter(rng));
    };

    if (spec.sampling == HandSampling::Silhouette) {
        // Uniform over the enclosed area by rejection from the bounding square.
        std::uniform_real_distribution<double> box(-reach / fit, reach / fit);
        while (cloud.size() < std::size_t(spec.point_count)) {
            const Eigen::Vector2d xy(box(rng), box(rng));
            const Eigen::Vector2d rel = xy - palm_offset;
            if (rel.norm() <= contour_radius(std::atan2(rel.y(), rel.x()), palm, free_length)) emit(xy);
        }
        return cloud;
    }

    // Contour: arc-length sampling of the polyline so finger edges are as
    // densely covered as the palm.
    std::vector<double> arc(kVertices + 1, 0.0);
    for (int i = 1; i <= kVertices; ++i) arc[i] = arc[i - 1] + (poly[i] - poly[i - 1]).norm();
    std::uniform_real_distribution<double> along(0.0, arc.back());
    for (int i = 0; i < spec.point_count; ++i) {
        const double s = along(rng);
        const auto k =
            std::clamp<std::ptrdiff_t>(std::upper_bound(arc.begin(), arc.end(), s) - arc.begin(), 1, kVertices);
        const double seg = arc[k] - arc[k - 1];
        const double w = seg > 0 ? (s - arc[k - 1]) / seg : 0.0;
        emit((1.0 - w) * poly[k - 1] + w * poly[k]);
    }
    return cloud;
}

RigidTransformd random_head_pose(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Vec3d axis = random_unit_axis(rng);
    std::uniform_real_distribution<double> angle(0.0, deg_to_rad(30.0));
    const Mat3d R = rotation_from_axis_angle(axis, angle(rng));
    // Eye centre uniformly inside a 0.1 m ball; X maps world into the eye frame.
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    Vec3d eye;
    do eye = Vec3d(u(rng), u(rng), u(rng));
    while (eye.norm() > 0.1);
    return RigidTransformd(R, -(R * eye));
}

ViewpointShiftd random_shift(std::uint64_t seed, double bound) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-bound, bound);
    const double a = u(rng);
    const double b = u(rng);
    const double c = u(rng);
    return {a, b, c};
}

TrialPair make_trial_pair(const PointCloud& source, const ViewpointShiftd& phi_gt, double phi4_tilde,
                          const RigidTransformd& X, const NoiseSpec& noise) {
    if (source.empty()) throw InputError("make_trial_pair needs a non-empty source cloud");
    if (!(noise.rotation_deg >= 0)) throw InputError("rotation noise must be non-negative");
    TrialPair pair;
    pair.source = source;
    pair.target = transform_cloud(misalignment_transform(phi_gt, phi4_tilde, X), source);

    std::mt19937_64 rng(noise.seed);
    pair.noise_axis = random_unit_axis(rng);
    std::uniform_int_distribution<std::size_t> pick(0, source.size() - 1);
    pair.pivot_index = pick(rng);
    if (noise.rotation_deg == 0) return pair;

    const Mat3d R = rotation_from_axis_angle(pair.noise_axis, deg_to_rad(noise.rotation_deg));
    const Vec3d pivot = pair.target[pair.pivot_index];
    for (auto& p : pair.target) p = pivot + R * (p - pivot);
    return pair;
}

TrialRecord run_trial(const PointCloud& source, const ViewpointShiftd& phi_gt, double phi4_tilde,
                      const RigidTransformd& X, const NoiseSpec& noise, const RcIcpOptions& opts) {
    TrialRecord rec;
    rec.seed = noise.seed;
    rec.rotation_deg = noise.rotation_deg;
    rec.phi_gt = phi_gt;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.err_rcicp = rec.err_icp = Vec3d::Constant(nan);
    try {
        const TrialPair pair = make_trial_pair(source, phi_gt, phi4_tilde, X, noise);
        rec.pivot_index = pair.pivot_index;

        const RegistrationResult rc = rcicp_unguarded(pair.source, pair.target, X, phi4_tilde, opts);
        rec.phi_rcicp = rc.phi;
        rec.iterations_rcicp = rc.iterations;
        rec.converged_rcicp = rc.converged;
        rec.err_rcicp = (rc.phi.value - phi_gt.value).cwiseAbs();

        // The baseline ICP is the same registration the rotation guard runs.
        const IcpResult icp =
            icp_rigid_detailed(pair.source, pair.target, opts.max_iterations, opts.convergence_ratio);
        rec.phi_icp = phi_from_icp(icp.transform, X);
        rec.iterations_icp = icp.iterations;
        rec.converged_icp = icp.converged;
        rec.err_icp = (rec.phi_icp.value - phi_gt.value).cwiseAbs();
        rec.guard_rotation_deg = rad_to_deg(rotation_angle(icp.transform.rotation()));
    } catch (const Error& e) {
        rec.failure = e.what();
    }
    return rec;
}

std::vector<TrialRecord> run_sweep(const SweepConfig& cfg, const SyntheticCloudSpec& spec, const RcIcpOptions& opts) {
    cfg.validate();
    spec.validate();
    opts.validate();
    const std::vector<double> levels = cfg.levels();
    const std::size_t per_level = static_cast<std::size_t>(cfg.trials_per_level);
    std::vector<TrialRecord> records(levels.size() * per_level);

    auto run_one = [&](std::size_t task) {
        const std::size_t li = task / per_level;
        const std::size_t trial = task % per_level;
        const std::uint64_t seed = derive_seed(cfg.base_seed, li, trial);

        SyntheticCloudSpec cloud_spec = spec;
        cloud_spec.seed = derive_seed(spec.seed ^ seed, 1);
        const PointCloud cloud = generate_hand_cloud(cloud_spec);

        const ViewpointShiftd phi = cfg.phi_policy == ShiftPolicy::Fixed
                                        ? cfg.phi_fixed
                                        : random_shift(derive_seed(seed, 2), cfg.phi_random_bound);
        RigidTransformd X;
        switch (cfg.x_policy) {
            case ExtrinsicPolicy::Identity: break;
            case ExtrinsicPolicy::Fixed: X = cfg.x_fixed; break;
            case ExtrinsicPolicy::SeededRandom: X = random_head_pose(derive_seed(seed, 3)); break;
        }
        const NoiseSpec noise{levels[li], derive_seed(seed, 4)};
        TrialRecord rec = run_trial(cloud, phi, cfg.phi4_tilde, X, noise, opts);
        rec.seed = seed;
        rec.trial = static_cast<int>(trial);
        records[task] = std::move(rec);
    };

    unsigned workers = cfg.threads > 0 ? unsigned(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, unsigned(records.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < records.size(); t = next++) run_one(t);
    };
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    return records;
}

SweepSummary summarize(const std::vector<TrialRecord>& records, double accuracy_mm) {
    if (records.empty()) throw InputError("summarize needs at least one trial record");
    std::map<double, std::pair<std::vector<Vec3d>, std::vector<Vec3d>>> by_level;
    std::map<double, std::pair<int, int>> counts;
    for (const auto& r : records) {
        auto& c = counts[r.rotation_deg];
        ++c.first;
        auto& lv = by_level[r.rotation_deg];
        if (r.failed()) {
            ++c.second;
            continue;
        }
        lv.first.push_back(r.err_rcicp);
        lv.second.push_back(r.err_icp);
    }

    SweepSummary out;
    out.accuracy_mm = accuracy_mm;
    bool contiguous = true;
    for (const auto& [level, errs] : by_level) {
        LevelSummary s;
        s.rotation_deg = level;
        s.trials = counts[level].first;
        s.failures = counts[level].second;
        s.rcicp = component_stats(errs.first);
        s.icp = component_stats(errs.second);
        out.levels.push_back(s);
        const bool within = !errs.first.empty() && (s.rcicp.median_mm.array() <= accuracy_mm).all();
        if (contiguous && within)
            out.tolerance_angle_deg = level;
        else
            contiguous = false;
    }
    return out;
}

}  // namespace ostcal
