// Command-line front end: simulate reference datasets and evaluation frames,
// compute power-on calibrations, run per-frame detection, and run the
// benchmark experiments.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tofprox/tofprox.hpp"

namespace {

tofprox::BenchmarkConfig load_benchmark_config(const std::string& path) {
    tofprox::BenchmarkConfig cfg;
    if (!path.empty()) cfg.apply(tofprox::KeyValueConfig::load(path));
    return cfg;
}

int cmd_simulate_reference(const std::string& config_path, const std::string& out_path) {
    const auto cfg = load_benchmark_config(config_path);
    const auto ds = tofprox::bench::build_reference(cfg);
    tofprox::save_reference_dataset(ds, out_path);
    std::cout << "wrote " << ds.poses.size() << " poses (" << ds.bin_count << " bins, " << ds.dof
              << " dof) to " << out_path << "\n";
    return 0;
}

int cmd_simulate_eval(const std::string& config_path, const std::string& out_path,
                      const std::string& labels_path, int count, bool objects,
                      bool calibration_capture) {
    auto cfg = load_benchmark_config(config_path);

    std::vector<tofprox::LabeledFrame> frames;
    if (calibration_capture) {
        // Robot-only captures pinned to the first reference pose, the input
        // the power-on calibration step expects.
        const tofprox::JointState q0{cfg.grid().pose_at(0)};
        const auto expected =
            tofprox::render_scene_expected(cfg.arm, q0, std::nullopt, cfg.sensor);
        const int n = count > 0 ? count : cfg.calibration_frames;
        for (int i = 0; i < n; ++i) {
            tofprox::LabeledFrame lf;
            lf.frame = tofprox::sample_frame(
                expected, tofprox::mix_seed(cfg.seed, 8, static_cast<std::uint64_t>(i)));
            lf.q = q0;
            frames.push_back(std::move(lf));
        }
    } else {
        if (count > 0) {
            cfg.detection_object_frames = objects ? count : 0;
            cfg.detection_clean_frames = objects ? 0 : count;
        }
        const auto model = tofprox::build_model(tofprox::bench::build_reference(cfg),
                                                tofprox::InterpolationMode::Barycentric);
        frames = tofprox::bench::labeled_suite(cfg, model);
    }

    std::vector<tofprox::FrameRecord> records;
    std::vector<std::pair<long, std::optional<double>>> labels;
    long id = 0;
    for (const auto& lf : frames) {
        records.push_back({id, lf.q, lf.frame});
        labels.emplace_back(id, lf.has_object ? std::optional<double>(lf.true_distance)
                                              : std::nullopt);
        ++id;
    }
    tofprox::save_frames(records, cfg.dof, cfg.sensor.bin_count, out_path);
    if (!labels_path.empty()) tofprox::save_labels(labels, labels_path);
    std::cout << "wrote " << records.size() << " frames to " << out_path << "\n";
    return 0;
}

int cmd_calibrate(const std::string& model_path, const std::string& frames_path,
                  const std::string& out_path) {
    const auto ds = tofprox::load_reference_dataset(model_path);
    if (ds.raw_mean_first_pose.empty()) {
        std::cerr << "model file has no raw-domain mean for the first pose; cannot calibrate\n";
        return 1;
    }
    const auto records = tofprox::load_frames(frames_path);
    std::vector<tofprox::TransientHistogram> fresh;
    fresh.reserve(records.size());
    for (const auto& r : records) fresh.push_back(r.h);
    const auto calib =
        tofprox::compute_calibration(ds.raw_mean_first_pose, fresh, ds.poses.front().q);
    tofprox::save_calibration(calib, out_path);
    std::cout << "wrote calibration (" << calib.correction.size() << " bins) to " << out_path
              << "\n";
    return 0;
}

int cmd_detect(const std::string& model_path, const std::string& frames_path,
               const std::string& calib_path, std::optional<double> t, std::optional<int> c,
               const std::string& mode_name) {
    const auto ds = tofprox::load_reference_dataset(model_path);
    const auto mode = mode_name == "nearest" ? tofprox::InterpolationMode::NearestNeighbor
                                             : tofprox::InterpolationMode::Barycentric;
    const auto model = tofprox::build_model(ds, mode);

    tofprox::DetectorConfig det;
    if (t) det.t = *t;
    if (c) det.c = *c;
    det.trim_hi = std::min(det.trim_hi, ds.bin_count);
    det.use_preprocessing = ds.domain == tofprox::StatsDomain::Processed;

    tofprox::CalibrationOffset calib =
        tofprox::CalibrationOffset::zeros(static_cast<std::size_t>(ds.bin_count));
    if (!calib_path.empty()) calib = tofprox::load_calibration(calib_path);

    const auto records = tofprox::load_frames(frames_path);
    std::cout << "frame_id, n_detections, closest_bin, closest_distance_m, extrapolated_flag\n";
    for (const auto& r : records) {
        const auto res = tofprox::detect(r.h, r.q, model, det, calib);
        std::cout << r.frame_id << ", ";
        if (res.no_decision) {
            // Degenerate frame: no decision, which is distinct from no object.
            std::cout << ", , , " << (res.extrapolated ? 1 : 0) << "\n";
            continue;
        }
        std::cout << res.detections.size() << ", ";
        if (!res.detections.empty()) {
            std::cout << res.detections.front().peak_bin << ", "
                      << tofprox::io::fmt(res.detections.front().distance);
        } else {
            std::cout << ", ";
        }
        std::cout << ", " << (res.extrapolated ? 1 : 0) << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& experiment, const std::string& config_path,
             const std::string& out_dir) {
    const auto cfg = load_benchmark_config(config_path);
    std::vector<std::string> names;
    if (experiment == "all")
        names = tofprox::experiment_names();
    else
        names.push_back(experiment);
    for (const auto& name : names) {
        const auto report = tofprox::run_experiment(name, cfg);
        const std::string dir = names.size() > 1 ? out_dir + "/" + name : out_dir;
        report.write(dir);
        std::cout << name << ": " << report.rows.size() << " conditions, "
                  << report.frames.size() << " frame records -> " << dir << "\n";
        for (const auto& row : report.rows) {
            std::cout << "  " << row.condition;
            if (row.tpr) std::cout << "  tpr=" << *row.tpr;
            if (row.fpr) std::cout << "  fpr=" << *row.fpr;
            if (row.mean_abs_error_m) std::cout << "  err=" << *row.mean_abs_error_m << "m";
            std::cout << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Object detection near a robot arm from raw ToF transient histograms"};
    app.require_subcommand(1);

    std::string config_path, out_path, labels_path, model_path, frames_path, calib_path;
    std::string experiment, mode_name = "barycentric";
    int count = 0;
    bool objects = true;
    bool calibration_capture = false;
    std::optional<double> t;
    std::optional<int> c;

    auto* sim_ref = app.add_subcommand("simulate-reference",
                                       "Generate a reference dataset from the synthetic arm");
    sim_ref->add_option("--config", config_path, "benchmark config file (key = value)");
    sim_ref->add_option("--out", out_path, "output reference dataset file")->required();

    auto* sim_eval = app.add_subcommand("simulate-eval", "Generate labeled evaluation frames");
    sim_eval->add_option("--config", config_path, "benchmark config file");
    sim_eval->add_option("--out", out_path, "output frame file")->required();
    sim_eval->add_option("--labels", labels_path, "optional ground-truth sidecar file");
    sim_eval->add_option("--count", count, "override frame count");
    sim_eval->add_flag("--objects,!--no-objects", objects, "include objects (default on)");
    sim_eval->add_flag("--calibration-capture", calibration_capture,
                       "robot-only frames at the first reference pose, for `calibrate`");

    auto* calibrate = app.add_subcommand("calibrate", "Compute a power-on calibration offset");
    calibrate->add_option("--model", model_path, "reference dataset file")->required();
    calibrate->add_option("--frames", frames_path, "fresh frames captured at the first pose")
        ->required();
    calibrate->add_option("--out", out_path, "output calibration file")->required();

    auto* detect = app.add_subcommand("detect", "Run detection over a frame file");
    detect->add_option("--model", model_path, "reference dataset file")->required();
    detect->add_option("--frames", frames_path, "frame file")->required();
    detect->add_option("--calib", calib_path, "calibration file");
    detect->add_option("--t", t, "detection threshold");
    detect->add_option("--c", c, "minimum segment length");
    detect->add_option("--mode", mode_name, "barycentric|nearest")
        ->check(CLI::IsMember({"barycentric", "nearest"}));

    auto* eval = app.add_subcommand("eval", "Run a benchmark experiment");
    eval->add_option("experiment", experiment, "experiment name or 'all'")
        ->required()
        ->check(CLI::IsMember({"self-detection", "detection", "baseline", "roc", "ablation",
                               "ambient", "all"}));
    eval->add_option("--config", config_path, "benchmark config file");
    eval->add_option("--out", out_path, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_ref->parsed()) return cmd_simulate_reference(config_path, out_path);
        if (sim_eval->parsed())
            return cmd_simulate_eval(config_path, out_path, labels_path, count, objects,
                                     calibration_capture);
        if (calibrate->parsed()) return cmd_calibrate(model_path, frames_path, out_path);
        if (detect->parsed())
            return cmd_detect(model_path, frames_path, calib_path, t, c, mode_name);
        if (eval->parsed()) return cmd_eval(experiment, config_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
