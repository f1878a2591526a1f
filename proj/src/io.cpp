#include "ostcal/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>

namespace ostcal::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        const auto start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return in;
}

std::string join_doubles(std::span<const double> values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ' ';
        out += format_fixed(values[i]);
    }
    return out;
}

}  // namespace

std::string format_fixed(double value) {
    char buf[512];
    const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    return std::string(buf, r.ptr);
}

std::string format_fixed(double value, int decimals) {
    char buf[512];
    const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
    return std::string(buf, r.ptr);
}

std::string format_general(double value, int significant_digits) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, significant_digits);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view token) {
    double value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    const auto r = std::from_chars(first, last, value);
    if (r.ec != std::errc() || r.ptr != last || token.empty())
        throw InputError("not a number: '" + std::string(token) + "'");
    return value;
}

void write_cloud(std::ostream& out, const PointCloud& cloud) {
    out << "ostcal-cloud 1\n" << "points " << cloud.size() << '\n';
    for (const auto& p : cloud)
        out << format_fixed(p.x()) << ' ' << format_fixed(p.y()) << ' ' << format_fixed(p.z()) << '\n';
}

PointCloud read_cloud(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "ostcal-cloud 1") throw InputError("missing 'ostcal-cloud 1' header");
    if (!std::getline(in, line)) throw InputError("missing point count line");
    const auto head = split_ws(line);
    if (head.size() != 2 || head[0] != "points") throw InputError("expected 'points <N>'");
    std::size_t count = 0;
    const auto r = std::from_chars(head[1].data(), head[1].data() + head[1].size(), count);
    if (r.ec != std::errc() || r.ptr != head[1].data() + head[1].size()) throw InputError("bad point count");

    PointCloud cloud;
    cloud.reserve(count);
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 3) throw InputError("line " + std::to_string(line_no) + ": expected 'x y z'");
        const Vec3d p(parse_double(tokens[0]), parse_double(tokens[1]), parse_double(tokens[2]));
        if (!p.allFinite()) throw InputError("line " + std::to_string(line_no) + ": non-finite coordinate");
        cloud.push_back(p);
    }
    if (cloud.size() != count)
        throw InputError("declared " + std::to_string(count) + " points but found " + std::to_string(cloud.size()));
    return cloud;
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_cloud(out, cloud);
    if (!out) throw Error("failed writing " + path.string());
}

PointCloud load_cloud(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_cloud(in);
}

KeyValueDocument KeyValueDocument::parse(std::istream& in) {
    KeyValueDocument doc;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw InputError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(trim(view.substr(0, eq)));
        if (key.empty()) throw InputError("line " + std::to_string(line_no) + ": empty key");
        if (doc.contains(key)) throw InputError("duplicate key '" + key + "'");
        doc.set(key, std::string(trim(view.substr(eq + 1))));
    }
    return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse(in);
}

void KeyValueDocument::set(const std::string& key, const std::string& value) {
    if (!contains(key)) order_.push_back(key);
    values_[key] = value;
}

const std::string& KeyValueDocument::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw InputError("missing key '" + key + "'");
    return it->second;
}

double KeyValueDocument::get_double(const std::string& key) const { return get_doubles(key, 1).front(); }

std::vector<double> KeyValueDocument::get_doubles(const std::string& key, std::size_t count) const {
    const auto tokens = split_ws(get(key));
    if (tokens.size() != count)
        throw InputError("key '" + key + "' needs " + std::to_string(count) + " value(s), has " +
                         std::to_string(tokens.size()));
    std::vector<double> out;
    for (auto t : tokens) {
        const double v = parse_double(t);
        if (!std::isfinite(v)) throw InputError("key '" + key + "' has a non-finite value");
        out.push_back(v);
    }
    return out;
}

void KeyValueDocument::reject_unknown(const std::vector<std::string>& allowed) const {
    for (const auto& key : order_)
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InputError("unknown key '" + key + "'");
}

void KeyValueDocument::write(std::ostream& out) const {
    for (const auto& key : order_) out << key << " = " << values_.at(key) << '\n';
}

CalibrationProfiled read_profile(std::istream& in) {
    const auto doc = KeyValueDocument::parse(in);
    doc.reject_unknown({"units", "fx", "fy", "cx", "cy", "x_ce", "y_ce", "z_cs", "z_es", "phi4_tilde", "t_c0v"});
    if (doc.get("units") != "m") throw InputError("profile units must be 'm'");
    CalibrationProfiled p;
    p.k_on = {doc.get_double("fx"), doc.get_double("fy"), doc.get_double("cx"), doc.get_double("cy")};
    p.h0 = {doc.get_double("x_ce"), doc.get_double("y_ce"), doc.get_double("z_es"), doc.get_double("z_cs")};
    p.phi4_tilde = doc.contains("phi4_tilde") ? doc.get_double("phi4_tilde") : 1.0 / p.h0.z_cs;
    const auto t = doc.get_doubles("t_c0v", 3);
    p.t_c0v = Vec3d(t[0], t[1], t[2]);
    p.validate();
    return p;
}

CalibrationProfiled load_profile(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_profile(in);
}

void write_profile(std::ostream& out, const CalibrationProfiled& p) {
    KeyValueDocument doc;
    doc.set("units", "m");
    doc.set("fx", format_fixed(p.k_on.fx));
    doc.set("fy", format_fixed(p.k_on.fy));
    doc.set("cx", format_fixed(p.k_on.cx));
    doc.set("cy", format_fixed(p.k_on.cy));
    doc.set("x_ce", format_fixed(p.h0.x_ce));
    doc.set("y_ce", format_fixed(p.h0.y_ce));
    doc.set("z_cs", format_fixed(p.h0.z_cs));
    doc.set("z_es", format_fixed(p.h0.z_es));
    doc.set("phi4_tilde", format_fixed(p.phi4_tilde));
    doc.set("t_c0v", join_doubles(std::span<const double>(p.t_c0v.data(), 3)));
    doc.write(out);
}

ExtrinsicParse parse_extrinsic(std::span<const double> v) {
    if (v.size() != 12) throw InputError("extrinsic needs 12 values (row-major 3x4), got " + std::to_string(v.size()));
    Mat3d R;
    Vec3d t;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) R(r, c) = v[std::size_t(4 * r + c)];
        t[r] = v[std::size_t(4 * r + 3)];
    }
    if (!R.allFinite() || !t.allFinite()) throw InputError("extrinsic contains non-finite values");
    ExtrinsicParse out;
    out.orthonormality_error = std::max((R.transpose() * R - Mat3d::Identity()).cwiseAbs().maxCoeff(),
                                        std::abs(R.determinant() - 1.0));
    if (out.orthonormality_error > 1e-6)
        throw InputError("extrinsic rotation is not orthonormal (error " + format_general(out.orthonormality_error, 3) +
                         ")");
    if (out.orthonormality_error > 1e-9) {
        out.transform = RigidTransformd::orthonormalized(R, t);
        out.reorthonormalized = true;
    } else {
        out.transform = RigidTransformd(R, t);
    }
    return out;
}

ExtrinsicParse parse_extrinsic(std::string_view text) {
    std::vector<double> values;
    std::string cleaned(text);
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::replace(cleaned.begin(), cleaned.end(), '\n', ' ');
    for (auto t : split_ws(cleaned)) values.push_back(parse_double(t));
    return parse_extrinsic(std::span<const double>(values));
}

std::string format_extrinsic(const RigidTransformd& X) {
    std::vector<double> v;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) v.push_back(X.rotation()(r, c));
        v.push_back(X.translation()[r]);
    }
    return join_doubles(v);
}

void write_ground_truth(std::ostream& out, const GroundTruth& g) {
    KeyValueDocument doc;
    doc.set("units", "m");
    doc.set("phi_gt", join_doubles(std::span<const double>(g.phi_gt.value.data(), 3)));
    doc.set("phi4_tilde", format_fixed(g.phi4_tilde));
    doc.set("seed", std::to_string(g.seed));
    doc.set("noise_deg", format_fixed(g.noise_deg));
    doc.set("pivot_index", std::to_string(g.pivot_index));
    doc.set("noise_axis", join_doubles(std::span<const double>(g.noise_axis.data(), 3)));
    doc.set("X", format_extrinsic(g.X));
    doc.write(out);
}

GroundTruth read_ground_truth(std::istream& in) {
    const auto doc = KeyValueDocument::parse(in);
    doc.reject_unknown({"units", "phi_gt", "phi4_tilde", "seed", "noise_deg", "pivot_index", "noise_axis", "X"});
    if (doc.get("units") != "m") throw InputError("ground truth units must be 'm'");
    GroundTruth g;
    const auto phi = doc.get_doubles("phi_gt", 3);
    g.phi_gt = ViewpointShiftd(phi[0], phi[1], phi[2]);
    g.phi4_tilde = doc.get_double("phi4_tilde");
    g.seed = std::stoull(doc.get("seed"));
    g.noise_deg = doc.get_double("noise_deg");
    g.pivot_index = std::stoull(doc.get("pivot_index"));
    const auto axis = doc.get_doubles("noise_axis", 3);
    g.noise_axis = Vec3d(axis[0], axis[1], axis[2]);
    g.X = parse_extrinsic(std::span<const double>(doc.get_doubles("X", 12))).transform;
    return g;
}

ExtrinsicParse load_extrinsic(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (text.find('=') == std::string::npos) return parse_extrinsic(std::string_view(text));
    std::istringstream doc_in(text);
    const auto doc = KeyValueDocument::parse(doc_in);
    return parse_extrinsic(std::span<const double>(doc.get_doubles("X", 12)));
}

void write_sweep_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << kSweepHeader << '\n';
    auto row = [&](const TrialRecord& r, const char* method, const Vec3d& err, int iterations, bool converged) {
        out << format_fixed(r.rotation_deg) << ',' << r.trial << ',' << r.seed << ',' << method;
        for (int c = 0; c < 3; ++c) out << ',' << (r.failed() ? std::string("nan") : format_fixed(err[c] * 1000.0, 6));
        out << ',' << iterations << ',' << (converged && !r.failed() ? 1 : 0) << ','
            << format_fixed(r.guard_rotation_deg, 4) << '\n';
    };
    for (const auto& r : records) {
        row(r, "rcicp", r.err_rcicp, r.iterations_rcicp, r.converged_rcicp);
        row(r, "icp", r.err_icp, r.iterations_icp, r.converged_icp);
    }
}

}  // namespace ostcal::io
