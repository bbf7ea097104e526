#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tofprox/calibration.hpp"
#include "tofprox/histogram.hpp"
#include "tofprox/reference.hpp"

namespace tofprox {

// Raised on malformed or inconsistent files.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace io {

// Shortest representation that round-trips a double exactly.
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw ParseError("trailing junk in number: '" + s + "'");
    return v;
}

inline long parse_long(const std::string& s) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw ParseError("not an integer: '" + s + "'");
    }
    if (pos != s.size()) throw ParseError("trailing junk in integer: '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return f;
}

}  // namespace io

// ---------------------------------------------------------------------------
// Key-value configuration files: `key = value` lines, '#' comments.
// ---------------------------------------------------------------------------

class KeyValueConfig {
public:
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void set(const std::string& key, double value) { values_[key] = io::fmt(value); }
    void set(const std::string& key, int value) { values_[key] = std::to_string(value); }
    void set(const std::string& key, long value) { values_[key] = std::to_string(value); }
    void set(const std::string& key, unsigned long long value) { values_[key] = std::to_string(value); }
    void set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }
    void set(const std::string& key, const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += io::fmt(v[i]);
        }
        values_[key] = s;
    }

    std::string get_string(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : io::parse_double(it->second);
    }
    int get_int(const std::string& key, int fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : static_cast<int>(io::parse_long(it->second));
    }
    unsigned long long get_u64(const std::string& key, unsigned long long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return std::stoull(it->second);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ParseError("not a boolean: '" + it->second + "'");
    }
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const auto& tok : io::split(it->second, ','))
            if (!io::strip(tok).empty()) out.push_back(io::parse_double(io::strip(tok)));
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

    void save(const std::string& path) const {
        auto f = io::open_out(path);
        for (const auto& [k, v] : values_) f << k << " = " << v << "\n";
    }

    static KeyValueConfig load(const std::string& path) {
        auto f = io::open_in(path);
        KeyValueConfig cfg;
        std::string line;
        while (std::getline(f, line)) {
            const std::string s = io::strip(line);
            if (s.empty() || s[0] == '#') continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ParseError("config line missing '=': " + s);
            cfg.set(io::strip(s.substr(0, eq)), io::strip(s.substr(eq + 1)));
        }
        return cfg;
    }

private:
    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Reference dataset files.
//
//   #refdata v1 b=<int> n=<int> sigma=<real> kde_step=<real> kde_margin=<real>
//           sigma_floor=<real> domain=<processed|raw> poses=<int>
//   #grid lo=<csv> step=<csv> count=<csv>            (grid datasets only)
//   #rawmean1 <b reals>                              (when recorded)
//   q_1 .. q_n | mean_0 .. mean_{b-1} | spread_0 .. spread_{b-1} | count
// ---------------------------------------------------------------------------

inline void save_reference_dataset(const ReferenceDataset& ds, const std::string& path) {
    auto f = io::open_out(path);
    f << "#refdata v1 b=" << ds.bin_count << " n=" << ds.dof << " sigma=" << io::fmt(ds.kde.bandwidth)
      << " kde_step=" << io::fmt(ds.kde.search_resolution)
      << " kde_margin=" << io::fmt(ds.kde.search_margin)
      << " sigma_floor=" << io::fmt(ds.sigma_floor)
      << " domain=" << (ds.domain == StatsDomain::Processed ? "processed" : "raw")
      << " poses=" << ds.poses.size() << "\n";
    if (ds.grid) {
        const GridSpec& g = *ds.grid;
        auto csv = [](const auto& v, auto fmt1) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) s += ",";
                s += fmt1(v[i]);
            }
            return s;
        };
        f << "#grid lo=" << csv(g.lo, [](double x) { return io::fmt(x); })
          << " step=" << csv(g.step, [](double x) { return io::fmt(x); })
          << " count=" << csv(g.count, [](int x) { return std::to_string(x); }) << "\n";
    }
    if (!ds.raw_mean_first_pose.empty()) {
        f << "#rawmean1";
        for (double v : ds.raw_mean_first_pose) f << " " << io::fmt(v);
        f << "\n";
    }
    for (const auto& p : ds.poses) {
        for (std::size_t a = 0; a < p.q.angles.size(); ++a)
            f << (a ? " " : "") << io::fmt(p.q.angles[a]);
        f << " |";
        for (double v : p.mean) f << " " << io::fmt(v);
        f << " |";
        for (double v : p.spread) f << " " << io::fmt(v);
        f << " | " << p.sample_count << "\n";
    }
}

inline ReferenceDataset load_reference_dataset(const std::string& path) {
    auto f = io::open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    auto head = io::tokens(line);
    if (head.size() < 2 || head[0] != "#refdata" || head[1] != "v1")
        throw ParseError(path + ": not a #refdata v1 file");

    ReferenceDataset ds;
    std::size_t n_poses = 0;
    for (std::size_t i = 2; i < head.size(); ++i) {
        const auto eq = head[i].find('=');
        if (eq == std::string::npos) throw ParseError(path + ": bad header field " + head[i]);
        const std::string key = head[i].substr(0, eq), val = head[i].substr(eq + 1);
        if (key == "b")
            ds.bin_count = static_cast<int>(io::parse_long(val));
        else if (key == "n")
            ds.dof = static_cast<int>(io::parse_long(val));
        else if (key == "sigma")
            ds.kde.bandwidth = io::parse_double(val);
        else if (key == "kde_step")
            ds.kde.search_resolution = io::parse_double(val);
        else if (key == "kde_margin")
            ds.kde.search_margin = io::parse_double(val);
        else if (key == "sigma_floor")
            ds.sigma_floor = io::parse_double(val);
        else if (key == "domain")
            ds.domain = val == "raw" ? StatsDomain::Raw : StatsDomain::Processed;
        else if (key == "poses")
            n_poses = static_cast<std::size_t>(io::parse_long(val));
    }
    if (ds.bin_count <= 0 || ds.dof <= 0) throw ParseError(path + ": missing b or n");

    const std::size_t b = static_cast<std::size_t>(ds.bin_count);
    const std::size_t n = static_cast<std::size_t>(ds.dof);
    while (std::getline(f, line)) {
        const std::string s = io::strip(line);
        if (s.empty()) continue;
        if (s.rfind("#grid", 0) == 0) {
            GridSpec g;
            for (const auto& tok : io::tokens(s.substr(5))) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) throw ParseError(path + ": bad #grid field " + tok);
                const std::string key = tok.substr(0, eq);
                const auto parts = io::split(tok.substr(eq + 1), ',');
                if (key == "lo")
                    for (const auto& p : parts) g.lo.push_back(io::parse_double(p));
                else if (key == "step")
                    for (const auto& p : parts) g.step.push_back(io::parse_double(p));
                else if (key == "count")
                    for (const auto& p : parts) g.count.push_back(static_cast<int>(io::parse_long(p)));
            }
            if (g.lo.size() != n || g.step.size() != n || g.count.size() != n)
                throw ParseError(path + ": #grid dimensions disagree with n");
            ds.grid = std::move(g);
            continue;
        }
        if (s.rfind("#rawmean1", 0) == 0) {
            const auto vals = io::tokens(s.substr(9));
            if (vals.size() != b) throw ParseError(path + ": #rawmean1 length mismatch");
            ds.raw_mean_first_pose.clear();
            for (const auto& v : vals) ds.raw_mean_first_pose.push_back(io::parse_double(v));
            continue;
        }
        if (s[0] == '#') continue;

        const auto fields = io::split(s, '|');
        if (fields.size() != 4) throw ParseError(path + ": pose line needs 4 '|' fields");
        ReferencePose pose;
        const auto qs = io::tokens(fields[0]);
        if (qs.size() != n) throw ParseError(path + ": pose has wrong joint count");
        for (const auto& v : qs) pose.q.angles.push_back(io::parse_double(v));
        const auto ms = io::tokens(fields[1]);
        const auto ss = io::tokens(fields[2]);
        if (ms.size() != b || ss.size() != b)
            throw ParseError(path + ": pose statistics have wrong bin count");
        for (const auto& v : ms) pose.mean.push_back(io::parse_double(v));
        for (const auto& v : ss) pose.spread.push_back(io::parse_double(v));
        const auto cs = io::tokens(fields[3]);
        if (cs.size() != 1) throw ParseError(path + ": pose count field malformed");
        pose.sample_count = static_cast<int>(io::parse_long(cs[0]));
        ds.poses.push_back(std::move(pose));
    }
    if (n_poses != 0 && ds.poses.size() != n_poses)
        throw ParseError(path + ": header promises " + std::to_string(n_poses) + " poses, found " +
                         std::to_string(ds.poses.size()));
    return ds;
}

// ---------------------------------------------------------------------------
// Frame files: CSV with a header line declaring the schema.
//   frame_id,q_1,..,q_n,bin_0,..,bin_{b-1}
// ---------------------------------------------------------------------------

struct FrameRecord {
    long frame_id = 0;
    JointState q;
    TransientHistogram h;
};

inline void save_frames(const std::vector<FrameRecord>& frames, int dof, int bin_count,
                        const std::string& path) {
    auto f = io::open_out(path);
    f << "frame_id";
    for (int a = 1; a <= dof; ++a) f << ",q_" << a;
    for (int i = 0; i < bin_count; ++i) f << ",bin_" << i;
    f << "\n";
    for (const auto& fr : frames) {
        if (static_cast<int>(fr.q.dof()) != dof ||
            static_cast<int>(fr.h.bin_count()) != bin_count)
            throw std::invalid_argument("save_frames: record shape mismatch");
        f << fr.frame_id;
        for (double a : fr.q.angles) f << "," << io::fmt(a);
        for (double c : fr.h.counts) f << "," << io::fmt(c);
        f << "\n";
    }
}

inline std::vector<FrameRecord> load_frames(const std::string& path, int* dof_out = nullptr,
                                            int* bin_count_out = nullptr) {
    auto f = io::open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty frame file");
    const auto head = io::split(io::strip(line), ',');
    if (head.empty() || head[0] != "frame_id")
        throw ParseError(path + ": frame header must start with frame_id");
    int dof = 0, bins = 0;
    std::size_t i = 1;
    while (i < head.size() && head[i] == "q_" + std::to_string(dof + 1)) {
        ++dof;
        ++i;
    }
    while (i < head.size() && head[i] == "bin_" + std::to_string(bins)) {
        ++bins;
        ++i;
    }
    if (i != head.size() || bins == 0)
        throw ParseError(path + ": frame header must be frame_id,q_1..q_n,bin_0..bin_{b-1}");

    std::vector<FrameRecord> out;
    while (std::getline(f, line)) {
        const std::string s = io::strip(line);
        if (s.empty() || s[0] == '#') continue;
        const auto fields = io::split(s, ',');
        if (fields.size() != head.size())
            throw ParseError(path + ": frame line has wrong field count");
        FrameRecord fr;
        fr.frame_id = io::parse_long(fields[0]);
        for (int a = 0; a < dof; ++a)
            fr.q.angles.push_back(io::parse_double(fields[static_cast<std::size_t>(1 + a)]));
        for (int bi = 0; bi < bins; ++bi)
            fr.h.counts.push_back(io::parse_double(fields[static_cast<std::size_t>(1 + dof + bi)]));
        out.push_back(std::move(fr));
    }
    if (dof_out) *dof_out = dof;
    if (bin_count_out) *bin_count_out = bins;
    return out;
}

// Ground-truth sidecar for simulated evaluation frames.
//   frame_id,has_object,true_distance_m
inline void save_labels(const std::vector<std::pair<long, std::optional<double>>>& labels,
                        const std::string& path) {
    auto f = io::open_out(path);
    f << "frame_id,has_object,true_distance_m\n";
    for (const auto& [id, d] : labels) {
        f << id << "," << (d ? 1 : 0) << ",";
        if (d) f << io::fmt(*d);
        f << "\n";
    }
}

inline std::vector<std::pair<long, std::optional<double>>> load_labels(const std::string& path) {
    auto f = io::open_in(path);
    std::string line;
    if (!std::getline(f, line) || io::strip(line) != "frame_id,has_object,true_distance_m")
        throw ParseError(path + ": bad labels header");
    std::vector<std::pair<long, std::optional<double>>> out;
    while (std::getline(f, line)) {
        const std::string s = io::strip(line);
        if (s.empty()) continue;
        const auto fields = io::split(s, ',');
        if (fields.size() != 3) throw ParseError(path + ": bad labels line");
        std::optional<double> d;
        if (io::parse_long(fields[1]) != 0) d = io::parse_double(fields[2]);
        out.emplace_back(io::parse_long(fields[0]), d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibration files.
//   #calib v1 b=<int> n=<int>
//   <n source-pose angles>
//   <b correction values>
// ---------------------------------------------------------------------------

inline void save_calibration(const CalibrationOffset& calib, const std::string& path) {
    auto f = io::open_out(path);
    f << "#calib v1 b=" << calib.correction.size() << " n=" << calib.source_pose.dof() << "\n";
    for (std::size_t a = 0; a < calib.source_pose.dof(); ++a)
        f << (a ? " " : "") << io::fmt(calib.source_pose.angles[a]);
    f << "\n";
    for (std::size_t i = 0; i < calib.correction.size(); ++i)
        f << (i ? " " : "") << io::fmt(calib.correction[i]);
    f << "\n";
}

inline CalibrationOffset load_calibration(const std::string& path) {
    auto f = io::open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty calibration file");
    const auto head = io::tokens(line);
    if (head.size() < 2 || head[0] != "#calib" || head[1] != "v1")
        throw ParseError(path + ": not a #calib v1 file");
    std::size_t b = 0, n = 0;
    for (std::size_t i = 2; i < head.size(); ++i) {
        const auto eq = head[i].find('=');
        if (eq == std::string::npos) throw ParseError(path + ": bad calib header field");
        const std::string key = head[i].substr(0, eq), val = head[i].substr(eq + 1);
        if (key == "b") b = static_cast<std::size_t>(io::parse_long(val));
        if (key == "n") n = static_cast<std::size_t>(io::parse_long(val));
    }
    CalibrationOffset out;
    if (!std::getline(f, line)) throw ParseError(path + ": missing pose line");
    for (const auto& tok : io::tokens(line)) out.source_pose.angles.push_back(io::parse_double(tok));
    if (out.source_pose.dof() != n) throw ParseError(path + ": pose length mismatch");
    if (!std::getline(f, line)) throw ParseError(path + ": missing correction line");
    for (const auto& tok : io::tokens(line)) out.correction.push_back(io::parse_double(tok));
    if (out.correction.size() != b) throw ParseError(path + ": correction length mismatch");
    return out;
}

}  // namespace tofprox
