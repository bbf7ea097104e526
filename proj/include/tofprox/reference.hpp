#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tofprox/histogram.hpp"

namespace tofprox {

// Robot joint state, radians.
struct JointState {
    std::vector<double> angles;

    JointState() = default;
    explicit JointState(std::vector<double> a) : angles(std::move(a)) {}

    std::size_t dof() const { return angles.size(); }
};

// Per-joint-state statistics: per-bin mean and per-bin sample standard
// deviation of the frames captured at that pose.
struct ReferencePose {
    JointState q;
    std::vector<double> mean;
    std::vector<double> spread;
    int sample_count = 0;
};

// Axis-aligned sampling lattice in joint space. Axis a holds count[a] values
// lo[a], lo[a]+step[a], ... (count[a] >= 1). Pose order is row-major with
// axis 0 slowest.
struct GridSpec {
    std::vector<double> lo;
    std::vector<double> step;
    std::vector<int> count;

    std::size_t dof() const { return lo.size(); }

    std::size_t pose_count() const {
        std::size_t n = 1;
        for (int c : count) n *= static_cast<std::size_t>(c);
        return n;
    }

    double axis_value(std::size_t axis, int index) const {
        return lo[axis] + static_cast<double>(index) * step[axis];
    }

    double axis_hi(std::size_t axis) const { return axis_value(axis, count[axis] - 1); }

    std::vector<double> pose_at(std::size_t flat_index) const {
        std::vector<double> q(dof());
        std::size_t rem = flat_index;
        for (std::size_t a = dof(); a-- > 0;) {
            const std::size_t c = static_cast<std::size_t>(count[a]);
            q[a] = axis_value(a, static_cast<int>(rem % c));
            rem /= c;
        }
        return q;
    }
};

// Number of lattice points on [lo, hi] at the given step, endpoints included
// when the span is an integral number of steps (up to rounding slack).
inline int grid_axis_count(double lo, double hi, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("grid_axis_count: step must be > 0");
    if (hi < lo) throw std::invalid_argument("grid_axis_count: hi < lo");
    return static_cast<int>(std::floor((hi - lo) / step + 1e-7)) + 1;
}

inline GridSpec make_grid(const std::vector<double>& lo, const std::vector<double>& hi,
                          const std::vector<double>& step) {
    if (lo.size() != hi.size() || lo.size() != step.size())
        throw std::invalid_argument("make_grid: axis vectors must share length");
    GridSpec g;
    g.lo = lo;
    g.step = step;
    g.count.reserve(lo.size());
    for (std::size_t a = 0; a < lo.size(); ++a)
        g.count.push_back(grid_axis_count(lo[a], hi[a], step[a]));
    return g;
}

// Whether pose statistics live in the pre-processed (normalized) domain or in
// raw counts. Raw-domain datasets exist to ablate pre-processing; the
// detector requires the observation pipeline and the statistics to agree.
enum class StatsDomain { Processed, Raw };

// Joint states J with per-bin mean M and spread V statistics, plus everything
// needed to reproduce the processing that built them.
struct ReferenceDataset {
    std::vector<ReferencePose> poses;
    int bin_count = 0;
    int dof = 0;
    KdeConfig kde;
    std::optional<GridSpec> grid;
    StatsDomain domain = StatsDomain::Processed;
    double sigma_floor = 1e-4;
    // Raw-count per-bin mean at poses[0]; anchors the power-cycle calibration,
    // which must act before pre-processing and therefore needs raw units.
    std::vector<double> raw_mean_first_pose;
};

// Per-bin mean and sample standard deviation (ddof=1) over the frames
// captured at one pose. Frames are pre-processed first unless domain is Raw.
// Degenerate frames are dropped; throws DegenerateSignal when fewer than two
// frames survive.
inline ReferencePose summarize_pose(const JointState& q,
                                    const std::vector<TransientHistogram>& raw_frames,
                                    const KdeConfig& cfg,
                                    StatsDomain domain = StatsDomain::Processed) {
    if (raw_frames.size() < 2)
        throw std::invalid_argument("summarize_pose: need at least 2 frames");
    const std::size_t b = raw_frames.front().bin_count();

    std::vector<std::vector<double>> rows;
    rows.reserve(raw_frames.size());
    for (const auto& f : raw_frames) {
        if (f.bin_count() != b)
            throw std::invalid_argument("summarize_pose: inconsistent bin counts");
        if (domain == StatsDomain::Processed) {
            try {
                rows.push_back(preprocess(f, cfg).values);
            } catch (const DegenerateSignal&) {
                // information-free frame, skip
            }
        } else {
            rows.push_back(f.counts);
        }
    }
    if (rows.size() < 2)
        throw DegenerateSignal("summarize_pose: fewer than 2 usable frames");

    ReferencePose pose;
    pose.q = q;
    pose.sample_count = static_cast<int>(rows.size());
    pose.mean.assign(b, 0.0);
    pose.spread.assign(b, 0.0);
    const long double n = static_cast<long double>(rows.size());
    // Extended-precision accumulation keeps the mean of identical frames
    // exact, which in turn keeps their spread exactly zero.
    std::vector<long double> acc(b, 0.0L);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < b; ++i) acc[i] += r[i];
    for (std::size_t i = 0; i < b; ++i) pose.mean[i] = static_cast<double>(acc[i] / n);
    std::fill(acc.begin(), acc.end(), 0.0L);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < b; ++i) {
            const long double d = static_cast<long double>(r[i]) - pose.mean[i];
            acc[i] += d * d;
        }
    for (std::size_t i = 0; i < b; ++i)
        pose.spread[i] = static_cast<double>(std::sqrt(acc[i] / (n - 1.0L)));
    return pose;
}

}  // namespace tofprox
