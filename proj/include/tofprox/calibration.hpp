#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tofprox/histogram.hpp"
#include "tofprox/reference.hpp"

namespace tofprox {

// Additive per-bin correction compensating the bias the sensor picks up
// across power cycles. Raw-count units; applied before any pre-processing.
struct CalibrationOffset {
    std::vector<double> correction;
    JointState source_pose;

    static CalibrationOffset zeros(std::size_t bin_count, JointState pose = {}) {
        CalibrationOffset c;
        c.correction.assign(bin_count, 0.0);
        c.source_pose = std::move(pose);
        return c;
    }
};

// One-off power-on calibration: average the fresh captures taken at the first
// reference pose and correct toward the stored raw-domain mean of that pose.
inline CalibrationOffset compute_calibration(const std::vector<double>& reference_mean_raw,
                                             const std::vector<TransientHistogram>& fresh_frames,
                                             JointState source_pose = {}) {
    if (fresh_frames.empty())
        throw std::invalid_argument("compute_calibration: need at least 1 fresh frame");
    const std::size_t b = reference_mean_raw.size();
    std::vector<double> href(b, 0.0);
    for (const auto& f : fresh_frames) {
        if (f.bin_count() != b)
            throw std::invalid_argument("compute_calibration: frame length mismatch");
        for (std::size_t i = 0; i < b; ++i) href[i] += f.counts[i];
    }
    const double n = static_cast<double>(fresh_frames.size());
    CalibrationOffset out;
    out.correction.resize(b);
    for (std::size_t i = 0; i < b; ++i) out.correction[i] = reference_mean_raw[i] - href[i] / n;
    out.source_pose = std::move(source_pose);
    return out;
}

// Adds the correction, clamping at zero: negative photon counts are
// unphysical and destabilize the offset estimate.
inline TransientHistogram apply_calibration(const TransientHistogram& h,
                                            const CalibrationOffset& calib) {
    if (h.bin_count() != calib.correction.size())
        throw std::invalid_argument("apply_calibration: length mismatch");
    TransientHistogram out;
    out.counts.resize(h.bin_count());
    for (std::size_t i = 0; i < h.bin_count(); ++i)
        out.counts[i] = std::max(0.0, h.counts[i] + calib.correction[i]);
    return out;
}

}  // namespace tofprox
