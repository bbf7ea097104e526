#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tofprox {

// Raised when a frame carries no usable signal after offset removal.
struct DegenerateSignal : std::runtime_error {
    explicit DegenerateSignal(const std::string& msg) : std::runtime_error(msg) {}
};

// Raw per-bin photon counts from one sensor zone for one frame. Counts are
// reals so calibration corrections and per-pose averaging compose without
// truncation.
struct TransientHistogram {
    std::vector<double> counts;

    TransientHistogram() = default;
    explicit TransientHistogram(std::vector<double> c) : counts(std::move(c)) {}

    std::size_t bin_count() const { return counts.size(); }

    bool valid() const {
        return !counts.empty() &&
               std::all_of(counts.begin(), counts.end(),
                           [](double c) { return std::isfinite(c) && c >= 0.0; });
    }
};

// Ambient-corrected, L1-normalized histogram. Values may dip below zero where
// the offset subtraction undershoots.
struct ProcessedHistogram {
    std::vector<double> values;
    double offset = 0.0;

    std::size_t bin_count() const { return values.size(); }
};

// Parameters of the kernel-density mode search used for the ambient (DC)
// offset estimate.
struct KdeConfig {
    double bandwidth = 5.0;           // kernel sigma, in counts
    double search_resolution = 0.25;  // grid step of the argmax search, in counts
    double search_margin = 0.0;       // extension beyond [min, max], in counts

    void validate() const {
        if (!(bandwidth > 0.0)) throw std::invalid_argument("KdeConfig: bandwidth must be > 0");
        if (!(search_resolution > 0.0))
            throw std::invalid_argument("KdeConfig: search_resolution must be > 0");
        if (!(search_margin >= 0.0))
            throw std::invalid_argument("KdeConfig: search_margin must be >= 0");
    }
};

namespace detail {

// Offset split into the winning grid point and the in-cell refinement so that
// callers can form residuals (count - anchor) - refine without ever adding the
// two parts together. For histograms whose counts shift by a common constant k
// with all sums exactly representable (integer counts, integer k), every
// intermediate of that arrangement is bit-identical to the unshifted run.
struct OffsetEstimate {
    double anchor = 0.0;
    double refine = 0.0;

    double value() const { return anchor + refine; }
};

inline OffsetEstimate estimate_dc_offset_detail(const TransientHistogram& h,
                                                const KdeConfig& cfg) {
    if (h.counts.empty())
        throw std::invalid_argument("estimate_dc_offset: empty histogram");
    cfg.validate();

    const double res = cfg.search_resolution;
    const double sigma = cfg.bandwidth;
    const auto [mn, mx] = std::minmax_element(h.counts.begin(), h.counts.end());
    const double lo = *mn - cfg.search_margin;
    const double span = (*mx + cfg.search_margin) - lo;
    const std::size_t grid_n = static_cast<std::size_t>(std::floor(span / res)) + 1;

    // Kernel sum on the grid. Each count deposits its kernel over a +-8 sigma
    // window using the incremental identity
    //   exp(-(u+res)^2/2s^2) = exp(-u^2/2s^2) * exp(-(2*u*res+res^2)/2s^2),
    // two multiplies per grid step instead of one exp. All positions are kept
    // relative to the grid origin. The grid buffer is reused across calls on
    // each thread; estimation stays safe for concurrent use.
    thread_local std::vector<double> density;
    density.assign(grid_n, 0.0);
    const double cut = 8.0 * sigma;
    const double step_decay = std::exp(-(res * res) / (sigma * sigma));
    for (double c : h.counts) {
        const double d = c - lo;
        long j0 = static_cast<long>(std::ceil((d - cut) / res));
        long j1 = static_cast<long>(std::floor((d + cut) / res));
        j0 = std::max<long>(j0, 0);
        j1 = std::min<long>(j1, static_cast<long>(grid_n) - 1);
        if (j0 > j1) continue;
        const double u0 = static_cast<double>(j0) * res - d;
        double e = std::exp(-0.5 * (u0 / sigma) * (u0 / sigma));
        double t = std::exp(-(2.0 * u0 * res + res * res) / (2.0 * sigma * sigma));
        for (long j = j0; j <= j1; ++j) {
            density[static_cast<std::size_t>(j)] += e;
            e *= t;
            t *= step_decay;
        }
    }

    // Smallest grid point wins ties.
    std::size_t best = 0;
    for (std::size_t j = 1; j < grid_n; ++j)
        if (density[j] > density[best]) best = j;

    const double anchor = lo + static_cast<double>(best) * res;

    // Ternary refinement over the two cells adjacent to the winner, expressed
    // in the cell-local coordinate u (kernel argument u - (count - anchor)).
    double ulo = best > 0 ? -res : 0.0;
    double uhi = best + 1 < grid_n ? res : 0.0;
    double refine = 0.0;
    if (uhi > ulo) {
        std::vector<double> rel;
        rel.reserve(h.counts.size());
        for (double c : h.counts) {
            const double d = c - anchor;
            if (std::abs(d) <= cut + res) rel.push_back(d);
        }
        auto f = [&](double u) {
            double s = 0.0;
            for (double d : rel) {
                const double z = (u - d) / sigma;
                s += std::exp(-0.5 * z * z);
            }
            return s;
        };
        for (int it = 0; it < 40; ++it) {
            const double m1 = ulo + (uhi - ulo) / 3.0;
            const double m2 = uhi - (uhi - ulo) / 3.0;
            if (f(m1) < f(m2))
                ulo = m1;
            else
                uhi = m2;
        }
        refine = ulo + (uhi - ulo) / 2.0;
    }

    return OffsetEstimate{anchor, refine};
}

}  // namespace detail

// Ambient DC level of a histogram: the argmax over x of sum_i N(x; h_i, sigma),
// searched on a uniform grid of step cfg.search_resolution over
// [min(h) - margin, max(h) + margin] and refined inside the winning cell.
// Deterministic; ties resolve toward the smallest x.
inline double estimate_dc_offset(const TransientHistogram& h, const KdeConfig& cfg = {}) {
    return detail::estimate_dc_offset_detail(h, cfg).value();
}

// Subtracts the estimated DC offset and normalizes the area under the signal
// to one (L1). Throws DegenerateSignal when the residual signal is below
// eps_norm, which marks an information-free frame; callers must skip
// detection for that frame.
inline ProcessedHistogram preprocess(const TransientHistogram& h, const KdeConfig& cfg = {},
                                     double eps_norm = 1e-6) {
    const auto est = detail::estimate_dc_offset_detail(h, cfg);

    ProcessedHistogram out;
    out.values.resize(h.counts.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double v = (h.counts[i] - est.anchor) - est.refine;
        out.values[i] = v;
        l1 += std::abs(v);
    }
    if (l1 < eps_norm)
        throw DegenerateSignal("preprocess: offset-corrected histogram has no signal (L1 " +
                               std::to_string(l1) + ")");
    for (double& v : out.values) v /= l1;
    out.offset = est.value();
    return out;
}

}  // namespace tofprox
