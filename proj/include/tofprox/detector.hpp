#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tofprox/background_model.hpp"
#include "tofprox/calibration.hpp"
#include "tofprox/histogram.hpp"

namespace tofprox {

struct DetectorConfig {
    double t = 0.001;     // per-bin likelihood threshold for gating
    int c = 4;            // minimum contiguous gated bins per detection
    int trim_lo = 15;     // first bin considered, inclusive
    int trim_hi = 80;     // last bin considered, exclusive
    double slope = 0.01387;      // m per bin
    double intercept = -0.1825;  // m
    // When false the likelihood consumes calibrated raw counts instead of the
    // pre-processed histogram; the model statistics must be raw-domain too.
    bool use_preprocessing = true;

    void validate(std::size_t bin_count) const {
        if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("DetectorConfig: t must be in (0,1)");
        if (c < 1) throw std::invalid_argument("DetectorConfig: c must be >= 1");
        if (trim_lo < 0 || trim_lo >= trim_hi || trim_hi > static_cast<int>(bin_count))
            throw std::invalid_argument("DetectorConfig: trim range invalid for bin count");
    }
};

// One detected object: the gated bin segment (inclusive), the peak bin inside
// it, the metric distance for that bin, and the segment's lowest likelihood.
struct Detection {
    int start_bin = 0;
    int end_bin = 0;
    int peak_bin = 0;
    double distance = 0.0;
    double min_likelihood = 1.0;
};

// Outcome for one frame. no_decision marks a degenerate (information-free)
// frame, which is distinct from "no object detected".
struct FrameResult {
    std::vector<Detection> detections;
    bool no_decision = false;
    bool extrapolated = false;

    bool has_detection() const { return !no_decision && !detections.empty(); }
};

// Per-bin likelihood that the observation is explained by the background
// alone: p_i = exp(-(h_i - mu_i)^2 / (2 sigma_i^2)), so p_i = 1 where the
// observation sits on the interpolated mean.
inline std::vector<double> likelihood(const std::vector<double>& values,
                                      const BackgroundQuery& bg) {
    if (values.size() != bg.mu.size() || values.size() != bg.sigma.size())
        throw std::invalid_argument("likelihood: length mismatch");
    std::vector<double> p(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double z = (values[i] - bg.mu[i]) / bg.sigma[i];
        p[i] = std::exp(-0.5 * z * z);
    }
    return p;
}

inline std::vector<double> likelihood(const ProcessedHistogram& h, const BackgroundQuery& bg) {
    return likelihood(h.values, bg);
}

// Binary gate: g_i = 1 iff p_i < t (strict).
inline std::vector<std::uint8_t> gate(const std::vector<double>& p, double t) {
    std::vector<std::uint8_t> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) g[i] = p[i] < t ? 1 : 0;
    return g;
}

// Maximal runs of 1s spanning at least c bins, ascending, inclusive bounds.
inline std::vector<std::pair<int, int>> find_segments(const std::vector<std::uint8_t>& g, int c) {
    std::vector<std::pair<int, int>> segments;
    const int n = static_cast<int>(g.size());
    int i = 0;
    while (i < n) {
        if (!g[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && g[j + 1]) ++j;
        if (j - i + 1 >= c) segments.emplace_back(i, j);
        i = j + 1;
    }
    return segments;
}

// Index of the maximum value within the inclusive segment; ties break toward
// the lower bin (the closer object).
inline int extract_peak(const std::vector<double>& values, std::pair<int, int> segment) {
    if (segment.first < 0 || segment.second >= static_cast<int>(values.size()) ||
        segment.first > segment.second)
        throw std::invalid_argument("extract_peak: segment out of range");
    int best = segment.first;
    for (int i = segment.first + 1; i <= segment.second; ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

inline int extract_peak(const ProcessedHistogram& h, std::pair<int, int> segment) {
    return extract_peak(h.values, segment);
}

// Bin index to metric distance for the sensor's fixed timing calibration.
// Negative results are returned as-is.
inline double bin_to_distance(int peak_bin, const DetectorConfig& cfg = {}) {
    return cfg.slope * static_cast<double>(peak_bin) + cfg.intercept;
}

// Full per-frame pipeline: calibration, pre-processing, background query,
// likelihood, gating (masked to the trim range so bin indices stay global),
// segment search, peak extraction, distance conversion. Detections come back
// sorted by ascending distance.
inline FrameResult detect(const TransientHistogram& h_raw, const JointState& q,
                          const BackgroundModel& model, const DetectorConfig& cfg,
                          const CalibrationOffset& calib) {
    const std::size_t b = h_raw.bin_count();
    cfg.validate(b);
    if (static_cast<int>(b) != model.dataset().bin_count)
        throw std::invalid_argument("detect: histogram length does not match model");
    const bool model_processed = model.dataset().domain == StatsDomain::Processed;
    if (cfg.use_preprocessing != model_processed)
        throw std::invalid_argument(
            "detect: use_preprocessing disagrees with the model's statistics domain");

    const TransientHistogram calibrated = apply_calibration(h_raw, calib);

    FrameResult result;
    std::vector<double> values;
    if (cfg.use_preprocessing) {
        try {
            values = preprocess(calibrated, model.dataset().kde).values;
        } catch (const DegenerateSignal&) {
            result.no_decision = true;
            return result;
        }
    } else {
        values = calibrated.counts;
    }

    const BackgroundQuery bg = model.query(q);
    result.extrapolated = bg.extrapolated;

    const std::vector<double> p = likelihood(values, bg);
    std::vector<std::uint8_t> g = gate(p, cfg.t);
    for (int i = 0; i < cfg.trim_lo; ++i) g[static_cast<std::size_t>(i)] = 0;
    for (int i = cfg.trim_hi; i < static_cast<int>(b); ++i) g[static_cast<std::size_t>(i)] = 0;

    for (const auto& seg : find_segments(g, cfg.c)) {
        Detection d;
        d.start_bin = seg.first;
        d.end_bin = seg.second;
        d.peak_bin = extract_peak(values, seg);
        d.distance = bin_to_distance(d.peak_bin, cfg);
        d.min_likelihood = *std::min_element(p.begin() + seg.first, p.begin() + seg.second + 1);
        result.detections.push_back(d);
    }
    std::sort(result.detections.begin(), result.detections.end(),
              [](const Detection& a, const Detection& b_) { return a.distance < b_.distance; });
    return result;
}

inline FrameResult detect(const TransientHistogram& h_raw, const JointState& q,
                          const BackgroundModel& model, const DetectorConfig& cfg = {}) {
    return detect(h_raw, q, model, cfg,
                  CalibrationOffset::zeros(h_raw.bin_count()));
}

}  // namespace tofprox
