// Command-line front end: synthetic clouds, rcICP registration, noise sweeps,
// projection updates and the rotation guard.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "ostcal/io.hpp"
#include "ostcal/registration.hpp"
#include "ostcal/simulation.hpp"

namespace {

using namespace ostcal;

enum ExitCode : int {
    kSuccess = 0,
    kFailure = 1,
    kInputError = 2,
    kDegenerate = 3,
    kGuardRejected = 4,
};

// "a,b,c" or "a b c" in millimeters -> meters.
Vec3d parse_mm_triple(const std::string& text) {
    std::string cleaned = text;
    for (char& c : cleaned)
        if (c == ',') c = ' ';
    std::istringstream in(cleaned);
    std::string tok;
    std::vector<double> v;
    while (in >> tok) v.push_back(io::parse_double(tok));
    if (v.size() != 3) throw InputError("expected three comma-separated values, got '" + text + "'");
    return Vec3d(v[0], v[1], v[2]) / 1000.0;
}

Vec3d parse_m_triple(const std::string& text) { return parse_mm_triple(text) * 1000.0; }

struct Range {
    double start = 0, stop = 0, step = 1;
};

Range parse_range(const std::string& text) {
    Range r;
    const auto a = text.find(':');
    const auto b = text.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) throw InputError("range must be start:stop:step");
    r.start = io::parse_double(text.substr(0, a));
    r.stop = io::parse_double(text.substr(a + 1, b - a - 1));
    r.step = io::parse_double(text.substr(b + 1));
    return r;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

RigidTransformd resolve_extrinsic(const std::string& inline_values, const std::string& file) {
    if (!inline_values.empty() && !file.empty()) throw InputError("give either --extrinsic or --extrinsic-file");
    if (inline_values.empty() && file.empty()) throw InputError("an extrinsic is required (--extrinsic or --extrinsic-file)");
    const io::ExtrinsicParse parsed =
        file.empty() ? io::parse_extrinsic(std::string_view(inline_values)) : io::load_extrinsic(file);
    if (parsed.reorthonormalized)
        warn("extrinsic rotation re-orthonormalized (deviation " + io::format_general(parsed.orthonormality_error, 3) +
             ")");
    return parsed.transform;
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const DegenerateGeometryError& e) {
        std::cerr << "error: degenerate geometry: " << e.what() << '\n';
        return kDegenerate;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}

struct CloudFlags {
    int points = 1000;
    std::uint64_t seed = 0;
    double extent = 0.18;
    double jitter = 0.01;
    std::string center = "0,0,0.5";
    std::string sampling = "silhouette";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--points", points, "Number of points (>= 50)");
        cmd->add_option("--seed", seed, "Cloud seed");
        cmd->add_option("--extent", extent, "Hand size in meters");
        cmd->add_option("--jitter", jitter, "Depth jitter half-width in meters");
        cmd->add_option("--center", center, "Cloud centre x,y,z in meters");
        cmd->add_option("--sampling", sampling, "silhouette | contour")
            ->check(CLI::IsMember({"silhouette", "contour"}));
    }

    SyntheticCloudSpec spec() const {
        SyntheticCloudSpec s;
        s.point_count = points;
        s.seed = seed;
        s.extent = extent;
        s.depth_jitter = jitter;
        s.center = parse_m_triple(center);
        s.sampling = sampling == "contour" ? HandSampling::Contour : HandSampling::Silhouette;
        s.validate();
        return s;
    }
};

void print_matrix(const Mat4d& P) {
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) std::cout << (c ? " " : "") << io::format_general(P(r, c), 9);
        std::cout << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online OST display calibration: rotation-constrained ICP and viewpoint-shift model"};
    app.require_subcommand(1);

    // gen-cloud
    CloudFlags gen_flags;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-cloud", "Write a synthetic hand cloud");
    gen_flags.add_to(gen);
    gen->add_option("-o,--output", gen_out, "Output cloud file")->required();

    // simulate
    CloudFlags sim_flags;
    double sim_noise_deg = 0;
    std::uint64_t sim_noise_seed = 0;
    std::string sim_phi_mm;
    double sim_phi4 = 0.5;
    std::string sim_profile;
    std::string sim_extrinsic;
    std::uint64_t sim_x_seed = 0;
    bool sim_identity_x = false;
    std::string sim_prefix;
    auto* sim = app.add_subcommand("simulate", "Write one synthetic registration pair and its ground truth");
    sim_flags.add_to(sim);
    sim->add_option("--noise-deg", sim_noise_deg, "Rotational disturbance in degrees");
    sim->add_option("--noise-seed", sim_noise_seed, "Seed of the disturbance axis and pivot");
    sim->add_option("--phi", sim_phi_mm, "Ground-truth shift x,y,z in mm (default: seeded within +-20 mm)");
    auto* phi4_opt = sim->add_option("--phi4", sim_phi4, "1 / z_C0S in 1/m");
    sim->add_option("--profile", sim_profile, "Take phi4_tilde from a profile")->excludes(phi4_opt);
    auto* sim_x_opt = sim->add_option("--extrinsic", sim_extrinsic, "X as 12 reals, row-major 3x4");
    sim->add_option("--x-seed", sim_x_seed, "Seed of the random head pose");
    sim->add_flag("--identity-extrinsic", sim_identity_x, "Use X = identity")->excludes(sim_x_opt);
    sim->add_option("-o,--output-prefix", sim_prefix,
                    "Writes <prefix>.source.cloud, <prefix>.target.cloud, <prefix>.truth")
        ->required();

    // register
    std::string reg_source, reg_target, reg_profile, reg_extrinsic, reg_extrinsic_file;
    RcIcpOptions reg_opts;
    auto* reg = app.add_subcommand("register", "Estimate the viewpoint shift from an aligned pair with rcICP");
    reg->add_option("--source", reg_source, "Cloud sampled at the alignment moment")->required();
    reg->add_option("--target", reg_target, "Cloud that generated the cursor")->required();
    reg->add_option("--profile", reg_profile, "Calibration profile")->required();
    reg->add_option("--extrinsic", reg_extrinsic, "X as 12 reals, row-major 3x4");
    reg->add_option("--extrinsic-file", reg_extrinsic_file, "File with X (12 reals or a ground-truth sidecar)");
    reg->add_option("--max-iterations", reg_opts.max_iterations, "Iteration cap");
    reg->add_option("--convergence-ratio", reg_opts.convergence_ratio, "Stop when 1 > e_k/e_{k-1} > ratio");
    reg->add_option("--guard-deg", reg_opts.rotation_guard_deg, "Reject pairs rotated by more than this");

    // sweep
    std::string sweep_range = "0:20:1";
    int sweep_trials = 20;
    std::uint64_t sweep_seed = 1;
    std::string sweep_out;
    int sweep_points = 1000;
    std::string sweep_phi_mm;
    double sweep_phi4 = 0.5;
    std::string sweep_x = "random";
    int sweep_threads = 0;
    std::string sweep_sampling = "silhouette";
    RcIcpOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Run the rotational-noise robustness sweep");
    sweep->add_option("--range", sweep_range, "Noise levels start:stop:step in degrees");
    sweep->add_option("--trials", sweep_trials, "Trials per noise level");
    sweep->add_option("--seed", sweep_seed, "Base seed");
    sweep->add_option("-o,--output", sweep_out, "Per-trial CSV report");
    sweep->add_option("--points", sweep_points, "Points per synthetic cloud");
    sweep->add_option("--phi", sweep_phi_mm, "Fixed ground-truth shift in mm (default: seeded per trial)");
    sweep->add_option("--phi4", sweep_phi4, "1 / z_C0S in 1/m");
    sweep->add_option("--extrinsic-policy", sweep_x, "random | identity")
        ->check(CLI::IsMember({"random", "identity"}));
    sweep->add_option("--sampling", sweep_sampling, "silhouette | contour")
        ->check(CLI::IsMember({"silhouette", "contour"}));
    sweep->add_option("--threads", sweep_threads, "Worker threads (0 = hardware concurrency)");
    sweep->add_option("--max-iterations", sweep_opts.max_iterations, "rcICP / ICP iteration cap");

    // update-projection
    std::string up_profile;
    std::string up_phi_mm = "0,0,0";
    auto* up = app.add_subcommand("update-projection", "Print the rendering projection updated by a shift");
    up->add_option("--profile", up_profile, "Calibration profile")->required();
    up->add_option("--phi", up_phi_mm, "Viewpoint shift x,y,z in mm");

    // guard-check
    std::string gc_source, gc_target;
    double gc_threshold = 9.0;
    auto* gc = app.add_subcommand("guard-check", "Accept or reject an alignment by its relative rotation");
    gc->add_option("--source", gc_source, "Aligned cloud")->required();
    gc->add_option("--target", gc_target, "Cursor cloud")->required();
    gc->add_option("--threshold", gc_threshold, "Rotation threshold in degrees");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kInputError;
    }

    if (*gen) {
        return run_guarded([&] {
            io::save_cloud(gen_out, generate_hand_cloud(gen_flags.spec()));
            return kSuccess;
        });
    }

    if (*sim) {
        return run_guarded([&] {
            const PointCloud cloud = generate_hand_cloud(sim_flags.spec());
            io::GroundTruth truth;
            truth.phi4_tilde = sim_profile.empty() ? sim_phi4 : io::load_profile(sim_profile).phi4_tilde;
            truth.phi_gt = sim_phi_mm.empty() ? random_shift(derive_seed(sim_flags.seed, 2))
                                              : ViewpointShiftd(parse_mm_triple(sim_phi_mm));
            if (!truth.phi_gt.within_sanity_bound()) warn("ground-truth shift exceeds the 5 cm sanity bound");
            if (!sim_extrinsic.empty())
                truth.X = resolve_extrinsic(sim_extrinsic, "");
            else if (!sim_identity_x)
                truth.X = random_head_pose(sim_x_seed);
            truth.seed = sim_noise_seed;
            truth.noise_deg = sim_noise_deg;
            const TrialPair pair =
                make_trial_pair(cloud, truth.phi_gt, truth.phi4_tilde, truth.X, {sim_noise_deg, sim_noise_seed});
            truth.pivot_index = pair.pivot_index;
            truth.noise_axis = pair.noise_axis;

            io::save_cloud(sim_prefix + ".source.cloud", pair.source);
            io::save_cloud(sim_prefix + ".target.cloud", pair.target);
            std::ofstream out(sim_prefix + ".truth", std::ios::binary);
            if (!out) throw Error("cannot write " + sim_prefix + ".truth");
            io::write_ground_truth(out, truth);
            return kSuccess;
        });
    }

    if (*reg) {
        return run_guarded([&] {
            const CalibrationProfiled profile = io::load_profile(reg_profile);
            const RigidTransformd X = resolve_extrinsic(reg_extrinsic, reg_extrinsic_file);
            const PointCloud source = io::load_cloud(reg_source);
            const PointCloud target = io::load_cloud(reg_target);
            reg_opts.validate();

            const GuardVerdict guard = rotation_guard(source, target, reg_opts.rotation_guard_deg);
            std::cout << "guard_deg = " << io::format_fixed(guard.rotation_deg, 4) << '\n';
            if (!guard.accepted) {
                std::cerr << "rejected: relative rotation " << io::format_fixed(guard.rotation_deg, 2)
                          << " deg exceeds " << io::format_fixed(reg_opts.rotation_guard_deg, 2)
                          << " deg; repeat the alignment\n";
                return int(kGuardRejected);
            }
            const RegistrationResult r = rcicp_unguarded(source, target, X, profile.phi4_tilde, reg_opts);
            const Vec3d mm = r.phi.value * 1000.0;
            std::cout << "phi_mm = " << io::format_fixed(mm.x(), 6) << ' ' << io::format_fixed(mm.y(), 6) << ' '
                      << io::format_fixed(mm.z(), 6) << '\n'
                      << "iterations = " << r.iterations << '\n'
                      << "converged = " << (r.converged ? 1 : 0) << '\n'
                      << "final_error_m2 = " << io::format_general(r.final_error, 9) << '\n';
            if (!r.phi.within_sanity_bound()) warn("estimated shift exceeds the 5 cm sanity bound");
            return int(kSuccess);
        });
    }

    if (*sweep) {
        return run_guarded([&] {
            const Range range = parse_range(sweep_range);
            SweepConfig cfg;
            cfg.rotation_start_deg = range.start;
            cfg.rotation_stop_deg = range.stop;
            cfg.rotation_step_deg = range.step;
            cfg.trials_per_level = sweep_trials;
            cfg.base_seed = sweep_seed;
            cfg.phi4_tilde = sweep_phi4;
            cfg.threads = sweep_threads;
            if (!sweep_phi_mm.empty()) {
                cfg.phi_policy = ShiftPolicy::Fixed;
                cfg.phi_fixed = ViewpointShiftd(parse_mm_triple(sweep_phi_mm));
            }
            cfg.x_policy = sweep_x == "identity" ? ExtrinsicPolicy::Identity : ExtrinsicPolicy::SeededRandom;
            SyntheticCloudSpec spec;
            spec.point_count = sweep_points;
            spec.sampling = sweep_sampling == "contour" ? HandSampling::Contour : HandSampling::Silhouette;

            const auto records = run_sweep(cfg, spec, sweep_opts);
            if (!sweep_out.empty()) {
                std::ofstream out(sweep_out, std::ios::binary);
                if (!out) throw Error("cannot write " + sweep_out);
                io::write_sweep_csv(out, records);
                if (!out) throw Error("failed writing " + sweep_out);
            }
            const SweepSummary summary = summarize(records);
            std::cout << "level_deg  rcicp_median_mm(x y z)  icp_median_mm(x y z)  failures\n";
            for (const auto& l : summary.levels) {
                std::cout << io::format_fixed(l.rotation_deg, 1);
                for (int c = 0; c < 3; ++c) std::cout << ' ' << io::format_fixed(l.rcicp.median_mm[c], 3);
                std::cout << " |";
                for (int c = 0; c < 3; ++c) std::cout << ' ' << io::format_fixed(l.icp.median_mm[c], 3);
                std::cout << " | " << l.failures << '\n';
            }
            std::cout << "tolerance_angle_deg = "
                      << (summary.tolerance_angle_deg ? io::format_fixed(*summary.tolerance_angle_deg) : "none")
                      << '\n';
            return int(kSuccess);
        });
    }

    if (*up) {
        return run_guarded([&] {
            const CalibrationProfiled profile = io::load_profile(up_profile);
            const ViewpointShiftd phi(parse_mm_triple(up_phi_mm));
            if (phi.value.norm() > ViewpointShiftd::kSanityBound)
                warn("viewpoint shift magnitude exceeds the 5 cm sanity bound");
            print_matrix(updated_projection(profile, phi));
            return kSuccess;
        });
    }

    if (*gc) {
        return run_guarded([&] {
            const GuardVerdict v = rotation_guard(io::load_cloud(gc_source), io::load_cloud(gc_target), gc_threshold);
            std::cout << "rotation_deg = " << io::format_fixed(v.rotation_deg, 4) << '\n'
                      << "accepted = " << (v.accepted ? 1 : 0) << '\n';
            return int(v.accepted ? kSuccess : kGuardRejected);
        });
    }
    return kFailure;
}
