#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tofprox/background_model.hpp"
#include "tofprox/calibration.hpp"
#include "tofprox/detector.hpp"
#include "tofprox/io.hpp"
#include "tofprox/simulator.hpp"

namespace tofprox {

// Everything a benchmark run needs, with defaults sized so the full suite
// finishes in minutes on a laptop core. All randomness derives from `seed`.
struct BenchmarkConfig {
    int dof = 2;
    std::vector<double> grid_lo = {-1.5707963267948966, -1.0471975511965976};
    std::vector<double> grid_hi = {1.5707963267948966, 1.0471975511965976};
    std::vector<double> grid_step = {0.2617993877991494, 0.2617993877991494};  // pi/12
    int frames_per_pose = 50;

    SensorSpec sensor = make_default_sensor();
    SimArm arm = SimArm::standard(2);
    KdeConfig kde;
    DetectorConfig detector;
    double sigma_floor = 1e-4;
    double match_window_m = 0.06;

    int self_detection_frames = 1000;
    int detection_object_frames = 300;
    int detection_clean_frames = 200;
    int object_width_bins = 5;
    double object_taper = 0.75;
    double object_contrast = 6.0;  // target peak deviation, in units of sigma_q
    double object_bin_lo = 20.0;
    double object_bin_hi = 70.0;

    double bias_amplitude = 60.0;   // counts; injected power-cycle bias
    double bias_period_bins = 20.0;
    // Ambient level for the bias sub-experiment. The bias is photon-domain,
    // so its shot noise survives calibration; the quiet-bin sigma must sit
    // above the floor for the restored pipeline to absorb that noise.
    double bias_ambient_rate = 30.0;
    double artifact_drift_factor = 2.0;  // cover-glass brightness drift for the trim ablation
    int ablation_frames = 200;
    int calibration_frames = 50;

    std::vector<double> ambient_factors = {1.0, 0.5, 5.0, 10.0};
    int ambient_frames = 200;

    std::vector<double> roc_t = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<int> roc_c = {1, 2, 4, 8};

    int baseline_frames = 150;
    double baseline_min_clearance_m = 0.06;  // object distance beyond the farthest robot surface

    std::uint64_t seed = 7041991;

    static SensorSpec make_default_sensor() {
        SensorSpec s;
        s.bin_count = 80;
        s.ambient_rate = 2.0;
        return s;
    }

    void apply(const KeyValueConfig& kv) {
        dof = kv.get_int("dof", dof);
        arm = SimArm::standard(dof);
        grid_lo = kv.get_doubles("grid_lo", resize_default(grid_lo));
        grid_hi = kv.get_doubles("grid_hi", resize_default(grid_hi));
        grid_step = kv.get_doubles("grid_step", resize_default(grid_step));
        frames_per_pose = kv.get_int("frames_per_pose", frames_per_pose);

        sensor.bin_count = kv.get_int("bin_count", sensor.bin_count);
        sensor.pulse_sigma = kv.get_double("pulse_sigma", sensor.pulse_sigma);
        sensor.signal_photons = kv.get_double("signal_photons", sensor.signal_photons);
        sensor.ambient_rate = kv.get_double("ambient_rate", sensor.ambient_rate);

        arm.glass_photons = kv.get_double("arm_glass_photons", arm.glass_photons);
        arm.link_photons = kv.get_double("arm_link_photons", arm.link_photons);
        arm.forearm_photons = kv.get_double("arm_forearm_photons", arm.forearm_photons);
        arm.wrist_photons = kv.get_double("arm_wrist_photons", arm.wrist_photons);
        arm.wrist_swing = kv.get_double("arm_wrist_swing", arm.wrist_swing);

        kde.bandwidth = kv.get_double("kde_sigma", kde.bandwidth);
        kde.search_resolution = kv.get_double("kde_step", kde.search_resolution);
        kde.search_margin = kv.get_double("kde_margin", kde.search_margin);

        detector.t = kv.get_double("t", detector.t);
        detector.c = kv.get_int("c", detector.c);
        detector.trim_lo = kv.get_int("trim_lo", detector.trim_lo);
        detector.trim_hi = kv.get_int("trim_hi", detector.trim_hi);

        sigma_floor = kv.get_double("sigma_floor", sigma_floor);
        match_window_m = kv.get_double("match_window_m", match_window_m);

        self_detection_frames = kv.get_int("self_detection_frames", self_detection_frames);
        detection_object_frames = kv.get_int("detection_object_frames", detection_object_frames);
        detection_clean_frames = kv.get_int("detection_clean_frames", detection_clean_frames);
        object_width_bins = kv.get_int("object_width_bins", object_width_bins);
        object_taper = kv.get_double("object_taper", object_taper);
        object_contrast = kv.get_double("object_contrast", object_contrast);
        object_bin_lo = kv.get_double("object_bin_lo", object_bin_lo);
        object_bin_hi = kv.get_double("object_bin_hi", object_bin_hi);

        bias_amplitude = kv.get_double("bias_amplitude", bias_amplitude);
        bias_period_bins = kv.get_double("bias_period_bins", bias_period_bins);
        bias_ambient_rate = kv.get_double("bias_ambient_rate", bias_ambient_rate);
        artifact_drift_factor = kv.get_double("artifact_drift_factor", artifact_drift_factor);
        ablation_frames = kv.get_int("ablation_frames", ablation_frames);
        calibration_frames = kv.get_int("calibration_frames", calibration_frames);

        ambient_factors = kv.get_doubles("ambient_factors", ambient_factors);
        ambient_frames = kv.get_int("ambient_frames", ambient_frames);

        roc_t = kv.get_doubles("roc_t", roc_t);
        std::vector<double> cs(roc_c.begin(), roc_c.end());
        cs = kv.get_doubles("roc_c", cs);
        roc_c.assign(cs.size(), 0);
        for (std::size_t i = 0; i < cs.size(); ++i) roc_c[i] = static_cast<int>(cs[i]);

        baseline_frames = kv.get_int("baseline_frames", baseline_frames);
        baseline_min_clearance_m = kv.get_double("baseline_min_clearance_m", baseline_min_clearance_m);

        seed = kv.get_u64("seed", seed);
        validate();
    }

    KeyValueConfig snapshot() const {
        KeyValueConfig kv;
        kv.set("dof", dof);
        kv.set("grid_lo", grid_lo);
        kv.set("grid_hi", grid_hi);
        kv.set("grid_step", grid_step);
        kv.set("frames_per_pose", frames_per_pose);
        kv.set("bin_count", sensor.bin_count);
        kv.set("pulse_sigma", sensor.pulse_sigma);
        kv.set("signal_photons", sensor.signal_photons);
        kv.set("ambient_rate", sensor.ambient_rate);
        kv.set("arm_glass_photons", arm.glass_photons);
        kv.set("arm_link_photons", arm.link_photons);
        kv.set("arm_forearm_photons", arm.forearm_photons);
        kv.set("arm_wrist_photons", arm.wrist_photons);
        kv.set("arm_wrist_swing", arm.wrist_swing);
        kv.set("kde_sigma", kde.bandwidth);
        kv.set("kde_step", kde.search_resolution);
        kv.set("kde_margin", kde.search_margin);
        kv.set("t", detector.t);
        kv.set("c", detector.c);
        kv.set("trim_lo", detector.trim_lo);
        kv.set("trim_hi", detector.trim_hi);
        kv.set("sigma_floor", sigma_floor);
        kv.set("match_window_m", match_window_m);
        kv.set("self_detection_frames", self_detection_frames);
        kv.set("detection_object_frames", detection_object_frames);
        kv.set("detection_clean_frames", detection_clean_frames);
        kv.set("object_width_bins", object_width_bins);
        kv.set("object_taper", object_taper);
        kv.set("object_contrast", object_contrast);
        kv.set("object_bin_lo", object_bin_lo);
        kv.set("object_bin_hi", object_bin_hi);
        kv.set("bias_amplitude", bias_amplitude);
        kv.set("bias_period_bins", bias_period_bins);
        kv.set("bias_ambient_rate", bias_ambient_rate);
        kv.set("artifact_drift_factor", artifact_drift_factor);
        kv.set("ablation_frames", ablation_frames);
        kv.set("calibration_frames", calibration_frames);
        kv.set("ambient_factors", ambient_factors);
        kv.set("ambient_frames", ambient_frames);
        kv.set("roc_t", roc_t);
        std::vector<double> cs(roc_c.begin(), roc_c.end());
        kv.set("roc_c", cs);
        kv.set("baseline_frames", baseline_frames);
        kv.set("baseline_min_clearance_m", baseline_min_clearance_m);
        kv.set("seed", static_cast<unsigned long long>(seed));
        return kv;
    }

    void validate() const {
        if (dof < 1 || dof > 3) throw std::invalid_argument("BenchmarkConfig: dof must be 1..3");
        if (grid_lo.size() != static_cast<std::size_t>(dof) ||
            grid_hi.size() != static_cast<std::size_t>(dof) ||
            grid_step.size() != static_cast<std::size_t>(dof))
            throw std::invalid_argument("BenchmarkConfig: grid vectors must have dof entries");
    }

    GridSpec grid() const { return make_grid(grid_lo, grid_hi, grid_step); }

private:
    std::vector<double> resize_default(std::vector<double> v) const {
        v.resize(static_cast<std::size_t>(dof), v.empty() ? 0.0 : v.back());
        return v;
    }
};

// Per-frame record emitted to frames.csv; aux carries experiment-specific
// numeric fields.
struct FrameOutcome {
    std::string condition;
    long frame_id = 0;
    JointState q;
    bool has_object = false;
    double true_distance = 0.0;
    int n_detections = 0;
    std::optional<int> closest_bin;
    std::optional<double> closest_distance;
    bool extrapolated = false;
    bool no_decision = false;
    std::string outcome;  // TP/FN/FP/TN/NA
    std::map<std::string, double> aux;
};

struct EvalRow {
    std::string condition;
    std::map<std::string, std::string> params;
    int n_frames = 0;
    int n_object_frames = 0;
    int n_clean_frames = 0;
    std::optional<double> tpr;
    std::optional<double> fpr;
    std::optional<double> mean_abs_error_m;
};

struct EvalReport {
    std::string experiment;
    std::vector<EvalRow> rows;
    std::vector<FrameOutcome> frames;
    KeyValueConfig snapshot;

    const EvalRow& row(const std::string& condition) const {
        for (const auto& r : rows)
            if (r.condition == condition) return r;
        throw std::out_of_range("EvalReport: no row '" + condition + "'");
    }

    std::string report_csv() const {
        std::string s =
            "experiment,condition,params,n_frames,n_object_frames,n_clean_frames,tpr,fpr,"
            "mean_abs_error_m\n";
        for (const auto& r : rows) {
            s += experiment + "," + r.condition + ",";
            bool first = true;
            for (const auto& [k, v] : r.params) {
                if (!first) s += ";";
                s += k + "=" + v;
                first = false;
            }
            s += "," + std::to_string(r.n_frames) + "," + std::to_string(r.n_object_frames) + "," +
                 std::to_string(r.n_clean_frames) + ",";
            if (r.tpr) s += io::fmt(*r.tpr);
            s += ",";
            if (r.fpr) s += io::fmt(*r.fpr);
            s += ",";
            if (r.mean_abs_error_m) s += io::fmt(*r.mean_abs_error_m);
            s += "\n";
        }
        return s;
    }

    std::string frames_csv() const {
        std::string s =
            "experiment,condition,frame_id,q,has_object,true_distance_m,n_detections,closest_bin,"
            "closest_distance_m,extrapolated,no_decision,outcome,aux\n";
        for (const auto& fo : frames) {
            s += experiment + "," + fo.condition + "," + std::to_string(fo.frame_id) + ",";
            for (std::size_t a = 0; a < fo.q.angles.size(); ++a) {
                if (a) s += ";";
                s += io::fmt(fo.q.angles[a]);
            }
            s += ",";
            s += fo.has_object ? "1" : "0";
            s += ",";
            if (fo.has_object) s += io::fmt(fo.true_distance);
            s += "," + std::to_string(fo.n_detections) + ",";
            if (fo.closest_bin) s += std::to_string(*fo.closest_bin);
            s += ",";
            if (fo.closest_distance) s += io::fmt(*fo.closest_distance);
            s += ",";
            s += fo.extrapolated ? "1" : "0";
            s += ",";
            s += fo.no_decision ? "1" : "0";
            s += "," + fo.outcome + ",";
            bool first = true;
            for (const auto& [k, v] : fo.aux) {
                if (!first) s += ";";
                s += k + "=" + io::fmt(v);
                first = false;
            }
            s += "\n";
        }
        return s;
    }

    void write(const std::string& dir) const {
        std::filesystem::create_directories(dir);
        io::open_out(dir + "/report.csv") << report_csv();
        io::open_out(dir + "/frames.csv") << frames_csv();
        snapshot.save(dir + "/config.snapshot");
    }
};

namespace bench {

inline JointState random_joint_state(std::mt19937_64& rng, const std::vector<double>& lo,
                                     const std::vector<double>& hi) {
    JointState q;
    q.angles.reserve(lo.size());
    for (std::size_t a = 0; a < lo.size(); ++a) {
        std::uniform_real_distribution<double> dist(lo[a], hi[a]);
        q.angles.push_back(dist(rng));
    }
    return q;
}

inline ReferenceDataset build_reference(const BenchmarkConfig& cfg,
                                        StatsDomain domain = StatsDomain::Processed,
                                        const SimArm* arm = nullptr,
                                        const SensorSpec* sensor = nullptr) {
    const double floor = domain == StatsDomain::Processed ? cfg.sigma_floor
                                                          : default_sigma_floor(domain);
    return generate_reference(arm ? *arm : cfg.arm, cfg.grid(), cfg.frames_per_pose,
                              sensor ? *sensor : cfg.sensor, cfg.kde, mix_seed(cfg.seed, 1),
                              domain, floor);
}

// Every k-th lattice pose per axis, keeping index 0. Step grows by k; poses
// past the last kept index fall away, so the sampled hull can shrink.
inline ReferenceDataset subsample_reference(const ReferenceDataset& ds, int factor) {
    if (factor < 1) throw std::invalid_argument("subsample_reference: factor must be >= 1");
    if (!ds.grid) throw std::invalid_argument("subsample_reference: dataset is not grid-structured");
    if (factor == 1) return ds;
    const GridSpec& g = *ds.grid;

    GridSpec sub;
    sub.lo = g.lo;
    sub.step.resize(g.dof());
    sub.count.resize(g.dof());
    for (std::size_t a = 0; a < g.dof(); ++a) {
        sub.step[a] = g.step[a] * factor;
        sub.count[a] = (g.count[a] - 1) / factor + 1;
    }

    ReferenceDataset out;
    out.bin_count = ds.bin_count;
    out.dof = ds.dof;
    out.kde = ds.kde;
    out.domain = ds.domain;
    out.sigma_floor = ds.sigma_floor;
    out.raw_mean_first_pose = ds.raw_mean_first_pose;
    out.grid = sub;
    const std::size_t n_sub = sub.pose_count();
    out.poses.reserve(n_sub);
    for (std::size_t si = 0; si < n_sub; ++si) {
        // Map the sub-grid index to the dense grid flat index.
        std::size_t rem = si, flat = 0;
        std::vector<int> idx(g.dof());
        for (std::size_t a = g.dof(); a-- > 0;) {
            idx[a] = static_cast<int>(rem % static_cast<std::size_t>(sub.count[a])) * factor;
            rem /= static_cast<std::size_t>(sub.count[a]);
        }
        for (std::size_t a = 0; a < g.dof(); ++a)
            flat = flat * static_cast<std::size_t>(g.count[a]) + static_cast<std::size_t>(idx[a]);
        out.poses.push_back(ds.poses[flat]);
    }
    return out;
}

// Object brightness that produces the requested contrast, measured in units
// of the model's interpolated per-bin sigma at this pose. Contrast targets
// the c-th largest expected deviation inside the object window, so a
// target_z-sigma object carries at least one full minimum-length segment
// above target_z in expectation. Computed on noise-free renders through the
// same pre-processing the detector uses.
inline double albedo_for_contrast(const BenchmarkConfig& cfg, const BackgroundModel& model,
                                  const JointState& q, double distance, double target_z,
                                  const SimArm* arm_override = nullptr) {
    const SimArm& arm = arm_override ? *arm_override : cfg.arm;
    const BackgroundQuery bg = model.query(q);
    const std::vector<double> exp_rob = render_scene_expected(arm, q, std::nullopt, cfg.sensor);
    const std::vector<double> v_rob =
        preprocess(TransientHistogram(exp_rob), cfg.kde).values;

    const double center = cfg.sensor.distance_to_bin(distance);
    const int lo = std::max(cfg.detector.trim_lo,
                            static_cast<int>(std::floor(center - 3.0 * cfg.sensor.pulse_sigma)));
    const int hi = std::min(cfg.detector.trim_hi,
                            static_cast<int>(std::ceil(center + cfg.object_width_bins +
                                                       3.0 * cfg.sensor.pulse_sigma)) +
                                1);
    const std::size_t rank = static_cast<std::size_t>(
        std::min(cfg.detector.c, std::max(1, hi - lo)));

    double albedo = 1e-3;
    for (int iter = 0; iter < 4; ++iter) {
        ObjectSpec obj{distance, albedo, cfg.object_width_bins, cfg.object_taper};
        const std::vector<double> exp_obj = render_scene_expected(arm, q, obj, cfg.sensor);
        const std::vector<double> v_obj =
            preprocess(TransientHistogram(exp_obj), cfg.kde).values;
        std::vector<double> zs;
        zs.reserve(static_cast<std::size_t>(hi - lo));
        for (int i = lo; i < hi; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            zs.push_back(std::abs(v_obj[ui] - v_rob[ui]) / bg.sigma[ui]);
        }
        std::sort(zs.begin(), zs.end(), std::greater<double>());
        const double z_rank = zs[rank - 1];
        if (z_rank <= 0.0) throw std::runtime_error("albedo_for_contrast: object invisible");
        albedo *= target_z / z_rank;
    }
    return albedo;
}

// Raw-histogram baseline standing in for on-sensor distance estimates: the
// top-two interior local maxima by height, converted to distances.
inline std::vector<double> onsensor_estimates(const TransientHistogram& h,
                                              const DetectorConfig& cfg) {
    std::vector<std::pair<double, int>> peaks;  // (height, bin)
    for (std::size_t i = 1; i + 1 < h.counts.size(); ++i)
        if (h.counts[i] > h.counts[i - 1] && h.counts[i] >= h.counts[i + 1])
            peaks.emplace_back(h.counts[i], static_cast<int>(i));
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<double> out;
    for (std::size_t k = 0; k < peaks.size() && k < 2; ++k)
        out.push_back(bin_to_distance(peaks[k].second, cfg));
    return out;
}

inline void record_detection_outcome(FrameOutcome& fo, const FrameResult& res,
                                     double match_window) {
    fo.n_detections = res.no_decision ? 0 : static_cast<int>(res.detections.size());
    fo.extrapolated = res.extrapolated;
    fo.no_decision = res.no_decision;
    if (res.has_detection()) {
        fo.closest_bin = res.detections.front().peak_bin;
        fo.closest_distance = res.detections.front().distance;
    }
    if (fo.has_object) {
        const bool tp = res.has_detection() &&
                        std::abs(*fo.closest_distance - fo.true_distance) <= match_window;
        fo.outcome = tp ? "TP" : "FN";
    } else {
        fo.outcome = res.has_detection() ? "FP" : "TN";
    }
}

inline EvalRow aggregate(const std::string& condition, const std::vector<FrameOutcome>& frames) {
    EvalRow row;
    row.condition = condition;
    int tp = 0, fn = 0, fp = 0, tn = 0, err_n = 0;
    double err = 0.0;
    for (const auto& fo : frames) {
        if (fo.condition != condition) continue;
        ++row.n_frames;
        if (fo.outcome == "TP") {
            ++tp;
            if (fo.closest_distance) {
                err += std::abs(*fo.closest_distance - fo.true_distance);
                ++err_n;
            }
        } else if (fo.outcome == "FN") {
            ++fn;
        } else if (fo.outcome == "FP") {
            ++fp;
        } else if (fo.outcome == "TN") {
            ++tn;
        }
    }
    row.n_object_frames = tp + fn;
    row.n_clean_frames = fp + tn;
    if (row.n_object_frames > 0) row.tpr = static_cast<double>(tp) / row.n_object_frames;
    if (row.n_clean_frames > 0) row.fpr = static_cast<double>(fp) / row.n_clean_frames;
    if (err_n > 0) row.mean_abs_error_m = err / err_n;
    return row;
}

// The labeled evaluation suite shared by the detection, ROC and ablation
// experiments: objects of the configured contrast at uniform random bins,
// plus robot-only frames, at uniform random poses.
inline std::vector<LabeledFrame> labeled_suite(const BenchmarkConfig& cfg,
                                               const BackgroundModel& model) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 3));
    std::vector<LabeledFrame> out;
    out.reserve(static_cast<std::size_t>(cfg.detection_object_frames + cfg.detection_clean_frames));
    std::uniform_real_distribution<double> bin_dist(cfg.object_bin_lo, cfg.object_bin_hi);
    for (int i = 0; i < cfg.detection_object_frames; ++i) {
        const JointState q = random_joint_state(rng, cfg.grid_lo, cfg.grid_hi);
        const double d = cfg.sensor.bin_to_distance(bin_dist(rng));
        ObjectSpec obj{d, albedo_for_contrast(cfg, model, q, d, cfg.object_contrast),
                       cfg.object_width_bins, cfg.object_taper};
        out.push_back(generate_eval_scene(cfg.arm, q, obj, cfg.sensor,
                                          mix_seed(cfg.seed, 3, static_cast<std::uint64_t>(i))));
    }
    for (int i = 0; i < cfg.detection_clean_frames; ++i) {
        const JointState q = random_joint_state(rng, cfg.grid_lo, cfg.grid_hi);
        out.push_back(generate_eval_scene(
            cfg.arm, q, std::nullopt, cfg.sensor,
            mix_seed(cfg.seed, 3, 1000000ull + static_cast<std::uint64_t>(i))));
    }
    return out;
}

inline std::vector<LabeledFrame> robot_only_suite(const BenchmarkConfig& cfg, int count,
                                                  std::uint64_t tag,
                                                  const SimArm* arm_override = nullptr,
                                                  const SensorSpec* sensor_override = nullptr) {
    std::mt19937_64 rng(mix_seed(cfg.seed, tag));
    std::vector<LabeledFrame> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const JointState q = random_joint_state(rng, cfg.grid_lo, cfg.grid_hi);
        out.push_back(generate_eval_scene(arm_override ? *arm_override : cfg.arm, q, std::nullopt,
                                          sensor_override ? *sensor_override : cfg.sensor,
                                          mix_seed(cfg.seed, tag, static_cast<std::uint64_t>(i))));
    }
    return out;
}

}  // namespace bench

// ---------------------------------------------------------------------------
// Experiments.
// ---------------------------------------------------------------------------

// Self-detection (false positive) rate versus joint-space sampling density:
// the reference grid sub-sampled 1x..4x per axis, in both interpolation modes,
// on a shared suite of robot-only frames.
inline EvalReport eval_self_detection(const BenchmarkConfig& cfg) {
    EvalReport report;
    report.experiment = "self_detection";
    report.snapshot = cfg.snapshot();

    const ReferenceDataset ds = bench::build_reference(cfg);
    const auto frames = bench::robot_only_suite(cfg, cfg.self_detection_frames, 2);

    for (int factor = 1; factor <= 4; ++factor) {
        const ReferenceDataset sub = bench::subsample_reference(ds, factor);
        for (const InterpolationMode mode :
             {InterpolationMode::Barycentric, InterpolationMode::NearestNeighbor}) {
            const BackgroundModel model = build_model(sub, mode);
            const std::string cond =
                std::string(mode == InterpolationMode::Barycentric ? "barycentric" : "nearest") +
                "_" + std::to_string(factor) + "x";
            long id = 0;
            for (const auto& lf : frames) {
                FrameOutcome fo;
                fo.condition = cond;
                fo.frame_id = id++;
                fo.q = lf.q;
                bench::record_detection_outcome(
                    fo, detect(lf.frame, lf.q, model, cfg.detector), cfg.match_window_m);
                report.frames.push_back(std::move(fo));
            }
            EvalRow row = bench::aggregate(cond, report.frames);
            row.params["factor"] = std::to_string(factor);
            row.params["mode"] =
                mode == InterpolationMode::Barycentric ? "barycentric" : "nearest";
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

// Detection and distance accuracy on the labeled suite.
inline EvalReport eval_detection(const BenchmarkConfig& cfg) {
    EvalReport report;
    report.experiment = "detection";
    report.snapshot = cfg.snapshot();

    const BackgroundModel model = build_model(bench::build_reference(cfg),
                                              InterpolationMode::Barycentric);
    const auto frames = bench::labeled_suite(cfg, model);
    long id = 0;
    for (const auto& lf : frames) {
        FrameOutcome fo;
        fo.condition = "base";
        fo.frame_id = id++;
        fo.q = lf.q;
        fo.has_object = lf.has_object;
        fo.true_distance = lf.true_distance;
        bench::record_detection_outcome(fo, detect(lf.frame, lf.q, model, cfg.detector),
                                        cfg.match_window_m);
        report.frames.push_back(std::move(fo));
    }
    EvalRow row = bench::aggregate("base", report.frames);
    row.params["t"] = io::fmt(cfg.detector.t);
    row.params["c"] = std::to_string(cfg.detector.c);
    report.rows.push_back(std::move(row));
    return report;
}

// On-sensor style baseline: scenes whose object sits beyond the farthest
// robot surface. The baseline reports the best of the two tallest raw peaks;
// the full method runs the normal pipeline on the same frames.
inline EvalReport eval_baseline_onsensor(const BenchmarkConfig& cfg) {
    EvalReport report;
    report.experiment = "baseline";
    report.snapshot = cfg.snapshot();

    const BackgroundModel model = build_model(bench::build_reference(cfg),
                                              InterpolationMode::Barycentric);
    std::mt19937_64 rng(mix_seed(cfg.seed, 4));
    const double d_max = cfg.sensor.bin_to_distance(static_cast<double>(cfg.detector.trim_hi) - 6.0);

    long id = 0;
    for (int i = 0; i < cfg.baseline_frames; ++i) {
        const JointState q = bench::random_joint_state(rng, cfg.grid_lo, cfg.grid_hi);
        const double robot_d = cfg.arm.max_surface_distance(q, cfg.sensor);
        std::uniform_real_distribution<double> dd(robot_d + cfg.baseline_min_clearance_m, d_max);
        const double d_true = dd(rng);
        ObjectSpec obj{d_true, bench::albedo_for_contrast(cfg, model, q, d_true, cfg.object_contrast),
                       cfg.object_width_bins, cfg.object_taper};
        const LabeledFrame lf = generate_eval_scene(cfg.arm, q, obj, cfg.sensor,
                                                    mix_seed(cfg.seed, 4, static_cast<std::uint64_t>(i)));

        const auto estimates = bench::onsensor_estimates(lf.frame, cfg.detector);
        double best = std::numeric_limits<double>::quiet_NaN();
        for (double e : estimates)
            if (std::isnan(best) || std::abs(e - d_true) < std::abs(best - d_true)) best = e;

        FrameOutcome fb;
        fb.condition = "onsensor";
        fb.frame_id = id;
        fb.q = q;
        fb.has_object = true;
        fb.true_distance = d_true;
        fb.n_detections = static_cast<int>(estimates.size());
        if (!std::isnan(best)) {
            fb.closest_distance = best;
            fb.outcome = std::abs(best - d_true) <= cfg.match_window_m ? "TP" : "FN";
        } else {
            fb.outcome = "FN";
        }
        fb.aux["robot_surface_distance_m"] = robot_d;
        if (!estimates.empty()) fb.aux["baseline_best_m"] = best;
        report.frames.push_back(std::move(fb));

        FrameOutcome ff;
        ff.condition = "full";
        ff.frame_id = id;
        ff.q = q;
        ff.has_object = true;
        ff.true_distance = d_true;
        bench::record_detection_outcome(ff, detect(lf.frame, q, model, cfg.detector),
                                        cfg.match_window_m);
        ff.aux["robot_surface_distance_m"] = robot_d;
        report.frames.push_back(std::move(ff));
        ++id;
    }

    for (const char* cond : {"onsensor", "full"}) {
        EvalRow row = bench::aggregate(cond, report.frames);
        // For the baseline the interesting error is unconditional, not
        // TP-gated: the mean |error| of its best estimate.
        if (std::string(cond) == "onsensor") {
            double err = 0.0;
            int n = 0;
            for (const auto& fo : report.frames)
                if (fo.condition == cond && fo.closest_distance) {
                    err += std::abs(*fo.closest_distance - fo.true_distance);
                    ++n;
                }
            if (n > 0) row.mean_abs_error_m = err / n;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ROC sweep over (t, c). Likelihood vectors are computed once per frame; each
// operating point re-runs only the gate and segment search. TPR here is
// detection presence on object frames (no distance matching), which makes the
// monotonicity properties exact.
inline EvalReport eval_roc(const BenchmarkConfig& cfg) {
    EvalReport report;
    report.experiment = "roc";
    report.snapshot = cfg.snapshot();

    const BackgroundModel model = build_model(bench::build_reference(cfg),
                                              InterpolationMode::Barycentric);
    const auto robot_frames = bench::robot_only_suite(cfg, cfg.self_detection_frames, 2);
    const auto labeled = bench::labeled_suite(cfg, model);

    struct Prepared {
        std::vector<double> p;
        bool object = false;
        bool usable = true;
        JointState q;
    };
    std::vector<Prepared> prepared;
    auto prepare = [&](const LabeledFrame& lf, bool object) {
        Prepared pr;
        pr.object = object;
        pr.q = lf.q;
        try {
            const ProcessedHistogram ph = preprocess(lf.frame, cfg.kde);
            pr.p = likelihood(ph, model.query(lf.q));
        } catch (const DegenerateSignal&) {
            pr.usable = false;
        }
        prepared.push_back(std::move(pr));
    };
    for (const auto& lf : robot_frames) prepare(lf, false);
    for (const auto& lf : labeled)
        if (lf.has_object) prepare(lf, true);

    for (double t : cfg.roc_t) {
        for (int c : cfg.roc_c) {
            DetectorConfig dc = cfg.detector;
            dc.t = t;
            dc.c = c;
            const std::string cond = "t=" + io::fmt(t) + ",c=" + std::to_string(c);
            long id = 0;
            for (const auto& pr : prepared) {
                FrameOutcome fo;
                fo.condition = cond;
                fo.frame_id = id++;
                fo.q = pr.q;
                fo.has_object = pr.object;
                fo.no_decision = !pr.usable;
                bool det = false;
                if (pr.usable) {
                    auto g = gate(pr.p, t);
                    for (int i = 0; i < dc.trim_lo; ++i) g[static_cast<std::size_t>(i)] = 0;
                    for (int i = dc.trim_hi; i < static_cast<int>(g.size()); ++i)
                        g[static_cast<std::size_t>(i)] = 0;
                    const auto segs = find_segments(g, c);
                    det = !segs.empty();
                    fo.n_detections = static_cast<int>(segs.size());
                }
                if (pr.object)
                    fo.outcome = det ? "TP" : "FN";
                else
                    fo.outcome = det ? "FP" : "TN";
                report.frames.push_back(std::move(fo));
            }
            EvalRow row = bench::aggregate(cond, report.frames);
            row.params["t"] = io::fmt(t);
            row.params["c"] = std::to_string(c);
            report.rows.push_back(std::move(row));
        }
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const EvalRow& a, const EvalRow& b) {
        const double fa = a.fpr.value_or(0.0), fb = b.fpr.value_or(0.0);
        return fa < fb;
    });
    return report;
}

// Component ablations, each against the frame set that exposes it:
//   full / no_preprocessing   - the labeled detection suite
//   no_calibration / restored - robot-only frames under an injected power bias
//   trim_base / no_trimming   - robot-only frames with a drifted near-field artifact
inline EvalReport eval_ablation(const BenchmarkConfig& cfg) {
    EvalReport report;
    report.experiment = "ablation";
    report.snapshot = cfg.snapshot();

    const ReferenceDataset ds_proc = bench::build_reference(cfg, StatsDomain::Processed);
    const ReferenceDataset ds_raw = bench::build_reference(cfg, StatsDomain::Raw);
    const BackgroundModel model = build_model(ds_proc, InterpolationMode::Barycentric);
    const BackgroundModel model_raw = build_model(ds_raw, InterpolationMode::Barycentric);

    auto run_condition = [&](const std::string& cond, const std::vector<LabeledFrame>& frames,
                             const BackgroundModel& m, const DetectorConfig& dc,
                             const CalibrationOffset& calib,
                             std::map<std::string, std::string> params) {
        long id = 0;
        for (const auto& lf : frames) {
            FrameOutcome fo;
            fo.condition = cond;
            fo.frame_id = id++;
            fo.q = lf.q;
            fo.has_object = lf.has_object;
            fo.true_distance = lf.true_distance;
            bench::record_detection_outcome(fo, detect(lf.frame, lf.q, m, dc, calib),
                                            cfg.match_window_m);
            report.frames.push_back(std::move(fo));
        }
        EvalRow row = bench::aggregate(cond, report.frames);
        row.params = std::move(params);
        report.rows.push_back(std::move(row));
    };

    const CalibrationOffset none = CalibrationOffset::zeros(
        static_cast<std::size_t>(cfg.sensor.bin_count));

    // Full pipeline and the pre-processing ablation share the detection suite.
    const auto labeled = bench::labeled_suite(cfg, model);
    run_condition("full", labeled, model, cfg.detector, none, {{"pipeline", "full"}});
    DetectorConfig raw_cfg = cfg.detector;
    raw_cfg.use_preprocessing = false;
    run_condition("no_preprocessing", labeled, model_raw, raw_cfg, none,
                  {{"pipeline", "raw_observations"}});

    // Power-cycle bias: reference captured unbiased at the bias experiment's
    // ambient level, then the sensor adds a smooth non-negative per-bin bias.
    SensorSpec bias_sensor = cfg.sensor;
    bias_sensor.ambient_rate = cfg.bias_ambient_rate;
    const ReferenceDataset ds_bias =
        bench::build_reference(cfg, StatsDomain::Processed, nullptr, &bias_sensor);
    const BackgroundModel model_bias = build_model(ds_bias, InterpolationMode::Barycentric);

    SensorSpec biased = bias_sensor;
    biased.power_bias.resize(static_cast<std::size_t>(cfg.sensor.bin_count));
    for (int i = 0; i < cfg.sensor.bin_count; ++i)
        biased.power_bias[static_cast<std::size_t>(i)] =
            0.5 * cfg.bias_amplitude *
            (1.0 + std::sin(2.0 * 3.14159265358979323846 * i / cfg.bias_period_bins));
    const auto biased_frames = bench::robot_only_suite(cfg, cfg.ablation_frames, 6, nullptr, &biased);

    const JointState& first_pose = ds_bias.poses.front().q;
    std::vector<TransientHistogram> fresh;
    const std::vector<double> fresh_expected =
        render_expected(cfg.arm.surface(first_pose, biased), biased);
    for (int i = 0; i < cfg.calibration_frames; ++i)
        fresh.push_back(sample_frame(fresh_expected, mix_seed(cfg.seed, 8, static_cast<std::uint64_t>(i))));
    const CalibrationOffset calib =
        compute_calibration(ds_bias.raw_mean_first_pose, fresh, first_pose);

    run_condition("no_calibration", biased_frames, model_bias, cfg.detector, none,
                  {{"bias_amplitude", io::fmt(cfg.bias_amplitude)}, {"calibration", "off"}});
    run_condition("restored_calibration", biased_frames, model_bias, cfg.detector, calib,
                  {{"bias_amplitude", io::fmt(cfg.bias_amplitude)}, {"calibration", "on"}});

    // Near-field artifact drift: the cover-glass return brightens after
    // reference capture. Its bins sit below trim_lo, so only the untrimmed
    // pipeline sees it.
    SimArm drifted = cfg.arm;
    drifted.glass_photons *= cfg.artifact_drift_factor;
    const auto drift_frames =
        bench::robot_only_suite(cfg, cfg.ablation_frames, 9, &drifted, nullptr);
    run_condition("trim_base", drift_frames, model, cfg.detector, none,
                  {{"artifact_drift", io::fmt(cfg.artifact_drift_factor)}, {"trimming", "on"}});
    DetectorConfig untrimmed = cfg.detector;
    untrimmed.trim_lo = 0;
    untrimmed.trim_hi = cfg.sensor.bin_count;
    run_condition("no_trimming", drift_frames, model, untrimmed, none,
                  {{"artifact_drift", io::fmt(cfg.artifact_drift_factor)}, {"trimming", "off"}});

    return report;
}

// Robot-only false positive rate under scaled ambient light, with and without
// pre-processing. Poses are shared across levels so the comparison is paired.
inline EvalReport eval_ambient(const BenchmarkConfig& cfg) {
    EvalReport report;
    report.experiment = "ambient";
    report.snapshot = cfg.snapshot();

    const BackgroundModel model = build_model(bench::build_reference(cfg, StatsDomain::Processed),
                                              InterpolationMode::Barycentric);
    const BackgroundModel model_raw = build_model(bench::build_reference(cfg, StatsDomain::Raw),
                                                  InterpolationMode::Barycentric);
    DetectorConfig raw_cfg = cfg.detector;
    raw_cfg.use_preprocessing = false;

    for (std::size_t li = 0; li < cfg.ambient_factors.size(); ++li) {
        const double factor = cfg.ambient_factors[li];
        SensorSpec level_sensor = cfg.sensor;
        level_sensor.ambient_rate = cfg.sensor.ambient_rate * factor;
        const auto frames = bench::robot_only_suite(cfg, cfg.ambient_frames, 7, nullptr, &level_sensor);

        for (const bool preproc : {true, false}) {
            const std::string cond = "ambient_" + io::fmt(factor) + "x_" +
                                     (preproc ? "preprocessed" : "raw");
            long id = 0;
            for (const auto& lf : frames) {
                FrameOutcome fo;
                fo.condition = cond;
                fo.frame_id = id++;
                fo.q = lf.q;
                bench::record_detection_outcome(
                    fo,
                    preproc ? detect(lf.frame, lf.q, model, cfg.detector)
                            : detect(lf.frame, lf.q, model_raw, raw_cfg),
                    cfg.match_window_m);
                report.frames.push_back(std::move(fo));
            }
            EvalRow row = bench::aggregate(cond, report.frames);
            row.params["ambient_factor"] = io::fmt(factor);
            row.params["preprocessing"] = preproc ? "on" : "off";
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

inline EvalReport run_experiment(const std::string& name, const BenchmarkConfig& cfg) {
    if (name == "self-detection") return eval_self_detection(cfg);
    if (name == "detection") return eval_detection(cfg);
    if (name == "baseline") return eval_baseline_onsensor(cfg);
    if (name == "roc") return eval_roc(cfg);
    if (name == "ablation") return eval_ablation(cfg);
    if (name == "ambient") return eval_ambient(cfg);
    throw std::invalid_argument("unknown experiment: " + name);
}

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"self-detection", "detection", "baseline",
                                                   "roc",            "ablation",  "ambient"};
    return names;
}

}  // namespace tofprox
