#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "tofprox/histogram.hpp"
#include "tofprox/reference.hpp"

namespace tofprox {

// Deterministic seed derivation for independent streams (splitmix64 mixing).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    };
    return mix(mix(mix(a) + b) + c);
}

enum class PatchLabel { Robot, Object };

// One reflective surface element: distance from the sensor origin and an
// effective albedo that folds the true albedo together with the visible-area
// geometry factor.
struct ScenePatch {
    double distance = 0.0;
    double effective_albedo = 0.0;
    PatchLabel label = PatchLabel::Robot;
};

struct SensorSpec {
    int bin_count = 128;
    double slope = 0.01387;      // m per bin
    double intercept = -0.1825;  // m
    double pulse_sigma = 2.0;    // bins
    double signal_photons = 2000.0;  // expected return for unit albedo at 0.1 m
    double ambient_rate = 0.0;       // photons per bin
    std::vector<double> power_bias;  // per-bin additive counts; empty = none

    double distance_to_bin(double r) const { return (r - intercept) / slope; }
    double bin_to_distance(double i) const { return slope * i + intercept; }

    // Two-way inverse-square falloff for a co-located emitter/receiver, with a
    // near-field floor that keeps the model finite at contact.
    double patch_photons(const ScenePatch& p) const {
        const double r = std::max(p.distance, 0.02);
        const double f = 0.1 / r;
        return signal_photons * p.effective_albedo * f * f * f * f;
    }

    // Effective albedo that makes a patch at distance r deposit the given
    // expected photon total.
    double albedo_for_photons(double photons, double r) const {
        const double rf = std::max(r, 0.02);
        const double f = 0.1 / rf;
        return photons / (signal_photons * f * f * f * f);
    }
};

// Expected (noise-free) histogram for a set of patches: each patch deposits
// its photon total as a Gaussian of width pulse_sigma centered at its
// distance-equivalent bin, then ambient and the power bias are added and the
// result is clamped at zero.
inline std::vector<double> render_expected(const std::vector<ScenePatch>& patches,
                                           const SensorSpec& spec) {
    if (spec.bin_count <= 0) throw std::invalid_argument("render_expected: bin_count must be > 0");
    if (!(spec.pulse_sigma > 0.0))
        throw std::invalid_argument("render_expected: pulse_sigma must be > 0");
    std::vector<double> expected(static_cast<std::size_t>(spec.bin_count), 0.0);
    const double ps = spec.pulse_sigma;
    const double norm = 1.0 / (ps * std::sqrt(2.0 * 3.14159265358979323846));
    for (const auto& p : patches) {
        if (p.distance < 0.0) throw std::invalid_argument("render_expected: negative distance");
        const double amp = spec.patch_photons(p);
        const double x = spec.distance_to_bin(p.distance);
        int i0 = static_cast<int>(std::ceil(x - 8.0 * ps));
        int i1 = static_cast<int>(std::floor(x + 8.0 * ps));
        i0 = std::max(i0, 0);
        i1 = std::min(i1, spec.bin_count - 1);
        for (int i = i0; i <= i1; ++i) {
            const double z = (static_cast<double>(i) - x) / ps;
            expected[static_cast<std::size_t>(i)] += amp * norm * std::exp(-0.5 * z * z);
        }
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        expected[i] += spec.ambient_rate;
        if (!spec.power_bias.empty()) {
            if (spec.power_bias.size() != expected.size())
                throw std::invalid_argument("render_expected: power_bias length mismatch");
            expected[i] += spec.power_bias[i];
        }
        expected[i] = std::max(expected[i], 0.0);
    }
    return expected;
}

// Independent Poisson draw per bin. Callers own the random state; one stream
// per sampling sequence.
inline TransientHistogram sample_frame(const std::vector<double>& expected,
                                       std::mt19937_64& rng) {
    TransientHistogram h;
    h.counts.resize(expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (!(expected[i] >= 0.0))
            throw std::invalid_argument("sample_frame: expected values must be >= 0");
        if (expected[i] == 0.0) {
            h.counts[i] = 0.0;
        } else {
            std::poisson_distribution<long> dist(expected[i]);
            h.counts[i] = static_cast<double>(dist(rng));
        }
    }
    return h;
}

inline TransientHistogram sample_frame(const std::vector<double>& expected, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_frame(expected, rng);
}

// Parametric 1-3 DoF arm with the sensor peering down a link toward the
// wrist. Surfaces move smoothly with the joint state: a static link surface
// close to the sensor, a slowly swinging forearm edge, a wrist plate whose
// distance and brightness respond to every joint, and a cover-glass return at
// distance zero that lands below the detector's trim range.
struct SimArm {
    int dof = 2;

    double link_distance = 0.053;
    double link_photons = 25000.0;

    double glass_distance = 0.0;
    double glass_photons = 800.0;

    double forearm_base = 0.22;
    double forearm_swing = 0.008;
    double forearm_photons = 8000.0;

    double wrist_base = 0.48;
    double wrist_swing = 0.012;  // per joint, m
    double wrist_photons = 15000.0;

    static SimArm standard(int dof_) {
        if (dof_ < 1 || dof_ > 3) throw std::invalid_argument("SimArm: dof must be 1..3");
        SimArm arm;
        arm.dof = dof_;
        return arm;
    }

    std::vector<ScenePatch> surface(const JointState& q, const SensorSpec& spec) const {
        if (static_cast<int>(q.dof()) != dof)
            throw std::invalid_argument("SimArm::surface: joint state dimension mismatch");
        static constexpr double omega[3] = {1.0, 1.3, 0.7};
        static constexpr double phase[3] = {0.0, 0.7, -0.5};

        double wrist_offset = 0.0;
        for (int j = 0; j < dof && j < 3; ++j)
            wrist_offset += wrist_swing * std::sin(omega[j] * q.angles[static_cast<std::size_t>(j)] +
                                                   phase[j]);
        const double wrist_r = wrist_base + wrist_offset;
        const double wrist_gain = 0.9 + 0.1 * std::cos(1.1 * q.angles[0] + 0.3);

        const double fore_r = forearm_base + forearm_swing * std::sin(0.9 * q.angles[0] - 0.4);
        const double fore_gain = 0.95 + 0.05 * std::cos(q.angles[0]);

        std::vector<ScenePatch> patches;
        if (glass_photons > 0.0)
            patches.push_back({glass_distance,
                               spec.albedo_for_photons(glass_photons, glass_distance),
                               PatchLabel::Robot});
        patches.push_back({link_distance, spec.albedo_for_photons(link_photons, link_distance),
                           PatchLabel::Robot});
        patches.push_back({fore_r,
                           spec.albedo_for_photons(forearm_photons * fore_gain, fore_r),
                           PatchLabel::Robot});
        patches.push_back({wrist_r,
                           spec.albedo_for_photons(wrist_photons * wrist_gain, wrist_r),
                           PatchLabel::Robot});
        return patches;
    }

    // Farthest robot surface visible at this pose (the wrist plate).
    double max_surface_distance(const JointState& q, const SensorSpec& spec) const {
        double r = 0.0;
        for (const auto& p : surface(q, spec)) r = std::max(r, p.distance);
        return r;
    }
};

// Intruding object: width_bins point patches starting at `distance`, one bin
// apart, with per-bin albedo decaying by `taper` so the closest surface stays
// the brightest.
struct ObjectSpec {
    double distance = 0.3;
    double albedo = 0.01;
    int width_bins = 5;
    double taper = 0.75;

    std::vector<ScenePatch> patches(const SensorSpec& spec) const {
        if (width_bins < 1) throw std::invalid_argument("ObjectSpec: width_bins must be >= 1");
        std::vector<ScenePatch> out;
        out.reserve(static_cast<std::size_t>(width_bins));
        double a = albedo;
        for (int j = 0; j < width_bins; ++j) {
            out.push_back({distance + static_cast<double>(j) * spec.slope, a, PatchLabel::Object});
            a *= taper;
        }
        return out;
    }
};

// One synthetic capture with ground truth.
struct LabeledFrame {
    TransientHistogram frame;
    JointState q;
    bool has_object = false;
    double true_distance = 0.0;
};

inline std::vector<double> render_scene_expected(const SimArm& arm, const JointState& q,
                                                 const std::optional<ObjectSpec>& object,
                                                 const SensorSpec& spec) {
    std::vector<ScenePatch> patches = arm.surface(q, spec);
    if (object) {
        const auto obj = object->patches(spec);
        patches.insert(patches.end(), obj.begin(), obj.end());
    }
    return render_expected(patches, spec);
}

inline LabeledFrame generate_eval_scene(const SimArm& arm, const JointState& q,
                                        const std::optional<ObjectSpec>& object,
                                        const SensorSpec& spec, std::uint64_t seed) {
    LabeledFrame out;
    out.frame = sample_frame(render_scene_expected(arm, q, object, spec), seed);
    out.q = q;
    out.has_object = object.has_value();
    out.true_distance = object ? object->distance : 0.0;
    return out;
}

inline double default_sigma_floor(StatsDomain domain) {
    return domain == StatsDomain::Processed ? 1e-4 : 0.5;
}

// Samples frames_per_pose robot-only frames at every lattice pose and
// summarizes them into a ReferenceDataset. Each pose draws from its own
// derived seed, so generation may be distributed without changing output.
// Also records the raw-count mean at the first pose as the calibration anchor.
inline ReferenceDataset generate_reference(const SimArm& arm, const GridSpec& grid,
                                           int frames_per_pose, const SensorSpec& spec,
                                           const KdeConfig& kde, std::uint64_t seed,
                                           StatsDomain domain = StatsDomain::Processed,
                                           double sigma_floor = -1.0) {
    if (frames_per_pose < 2)
        throw std::invalid_argument("generate_reference: need >= 2 frames per pose");
    ReferenceDataset ds;
    ds.bin_count = spec.bin_count;
    ds.dof = static_cast<int>(grid.dof());
    ds.kde = kde;
    ds.grid = grid;
    ds.domain = domain;
    ds.sigma_floor = sigma_floor > 0.0 ? sigma_floor : default_sigma_floor(domain);

    const std::size_t n_poses = grid.pose_count();
    ds.poses.reserve(n_poses);
    for (std::size_t pi = 0; pi < n_poses; ++pi) {
        JointState q(grid.pose_at(pi));
        const std::vector<double> expected = render_expected(arm.surface(q, spec), spec);
        std::vector<TransientHistogram> frames;
        frames.reserve(static_cast<std::size_t>(frames_per_pose));
        for (int f = 0; f < frames_per_pose; ++f)
            frames.push_back(sample_frame(expected, mix_seed(seed, pi, static_cast<std::uint64_t>(f))));
        if (pi == 0) {
            ds.raw_mean_first_pose.assign(static_cast<std::size_t>(spec.bin_count), 0.0);
            for (const auto& f : frames)
                for (std::size_t i = 0; i < f.counts.size(); ++i)
                    ds.raw_mean_first_pose[i] += f.counts[i];
            for (double& v : ds.raw_mean_first_pose) v /= static_cast<double>(frames.size());
        }
        ds.poses.push_back(summarize_pose(q, frames, kde, domain));
    }
    return ds;
}

}  // namespace tofprox
