#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ostcal/display_model.hpp"
#include "ostcal/simulation.hpp"

namespace ostcal::io {

/// Shortest round-trip decimal (never exponent notation), '.' separator.
std::string format_fixed(double value);

/// Fixed number of digits after the decimal point.
std::string format_fixed(double value, int decimals);

/// %.Ng-style formatting, locale independent.
std::string format_general(double value, int significant_digits);

/// Strict locale-independent parse of a whole token.
double parse_double(std::string_view token);

// Cloud files:
//   ostcal-cloud 1
//   points <N>
//   <x> <y> <z>      (N lines, meters)
void write_cloud(std::ostream& out, const PointCloud& cloud);
PointCloud read_cloud(std::istream& in);
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_cloud(const std::filesystem::path& path);

/// Flat "key = value" document; '#' starts a comment. Keys are unique.
class KeyValueDocument {
   public:
    static KeyValueDocument parse(std::istream& in);
    static KeyValueDocument load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key, std::size_t count) const;

    /// Throws InputError naming the first key outside `allowed`.
    void reject_unknown(const std::vector<std::string>& allowed) const;

    void write(std::ostream& out) const;

   private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
};

/// Profile keys: units (must be "m"), fx, fy, cx, cy, x_ce, y_ce, z_cs, z_es,
/// t_c0v (3 reals), phi4_tilde (optional, defaults to 1 / z_cs).
CalibrationProfiled read_profile(std::istream& in);
CalibrationProfiled load_profile(const std::filesystem::path& path);
void write_profile(std::ostream& out, const CalibrationProfiled& profile);

struct ExtrinsicParse {
    RigidTransformd transform;
    /// Set when the rotation block needed re-orthonormalization.
    bool reorthonormalized = false;
    double orthonormality_error = 0;
};

/// 12 reals, row-major 3x4 [R | t]. Rotation must be orthonormal within
/// 1e-6; drift beyond 1e-9 is projected back onto SO(3).
ExtrinsicParse parse_extrinsic(std::span<const double> values);
ExtrinsicParse parse_extrinsic(std::string_view text);
std::string format_extrinsic(const RigidTransformd& X);

/// Ground truth written next to a simulated pair.
struct GroundTruth {
    ViewpointShiftd phi_gt;
    double phi4_tilde = 0.5;
    std::uint64_t seed = 0;
    double noise_deg = 0;
    RigidTransformd X;
    std::size_t pivot_index = 0;
    Vec3d noise_axis = Vec3d::UnitZ();
};

void write_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& in);

/// Reads an extrinsic from a file that is either a ground-truth sidecar (key
/// "X") or a bare list of 12 reals.
ExtrinsicParse load_extrinsic(const std::filesystem::path& path);

inline constexpr std::string_view kSweepHeader =
    "level_deg,trial,seed,method,err_x_mm,err_y_mm,err_z_mm,iterations,converged,guard_deg";

/// One row per (trial x method), methods "rcicp" then "icp". Failed trials
/// carry "nan" errors and converged = 0.
void write_sweep_csv(std::ostream& out, const std::vector<TrialRecord>& records);

}  // namespace ostcal::io
