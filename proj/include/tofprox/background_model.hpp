#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tofprox/delaunay.hpp"
#include "tofprox/reference.hpp"

namespace tofprox {

enum class InterpolationMode { Barycentric, NearestNeighbor };

// Interpolated background statistics for one joint state. sigma is floored at
// the dataset's sigma_floor; sigma_prefloor keeps the unfloored interpolation
// for diagnostics. support lists the contributing poses and their weights.
struct BackgroundQuery {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> sigma_prefloor;
    bool extrapolated = false;
    std::vector<std::pair<std::size_t, double>> support;
};

// Immutable query structure over a ReferenceDataset. Grid-structured datasets
// use the Kuhn (coordinate-permutation) decomposition of each lattice cell;
// scattered datasets use a simplicial decomposition built at construction.
// Queries outside the sampled hull fall back to the nearest pose and are
// flagged extrapolated. Joint-space distance is unweighted Euclidean on
// radians; angle wrap-around is not handled.
class BackgroundModel {
public:
    static BackgroundModel build(ReferenceDataset ds, InterpolationMode mode) {
        if (ds.poses.empty()) throw std::invalid_argument("build_model: empty dataset");
        for (const auto& p : ds.poses) {
            if (static_cast<int>(p.q.dof()) != ds.dof ||
                static_cast<int>(p.mean.size()) != ds.bin_count ||
                static_cast<int>(p.spread.size()) != ds.bin_count)
                throw std::invalid_argument("build_model: inconsistent pose shapes");
        }
        if (!(ds.sigma_floor > 0.0))
            throw std::invalid_argument("build_model: sigma_floor must be > 0");

        BackgroundModel m;
        m.mode_ = mode;
        if (mode == InterpolationMode::Barycentric) {
            if (ds.grid) {
                const GridSpec& g = *ds.grid;
                if (g.dof() != static_cast<std::size_t>(ds.dof))
                    throw std::invalid_argument("build_model: grid dof mismatch");
                if (g.pose_count() != ds.poses.size())
                    throw std::invalid_argument("build_model: grid size does not match poses");
                for (std::size_t a = 0; a < g.dof(); ++a)
                    if (g.count[a] >= 2) m.active_axes_.push_back(a);
                if (m.active_axes_.empty())
                    throw DegenerateGeometry(
                        "build_model: grid has a single pose; poses are affinely dependent");
            } else {
                std::vector<std::vector<double>> pts;
                pts.reserve(ds.poses.size());
                for (const auto& p : ds.poses) pts.push_back(p.q.angles);
                m.tri_ = DelaunayTriangulation::build(pts);
            }
        }
        m.ds_ = std::move(ds);
        return m;
    }

    const ReferenceDataset& dataset() const { return ds_; }
    InterpolationMode mode() const { return mode_; }

    // Number of simplexes in the decomposition (0 in NearestNeighbor mode).
    std::size_t simplex_count() const {
        if (mode_ == InterpolationMode::NearestNeighbor) return 0;
        if (tri_) return tri_->simplex_count();
        const GridSpec& g = *ds_.grid;
        std::size_t cells = 1;
        for (std::size_t a : active_axes_) cells *= static_cast<std::size_t>(g.count[a] - 1);
        std::size_t fact = 1;
        for (std::size_t k = 2; k <= active_axes_.size(); ++k) fact *= k;
        return cells * fact;
    }

    BackgroundQuery query(const JointState& q) const {
        if (static_cast<int>(q.dof()) != ds_.dof)
            throw std::invalid_argument("query: joint state dimension mismatch");

        // A query at a stored pose reproduces that pose's statistics exactly.
        for (std::size_t i = 0; i < ds_.poses.size(); ++i)
            if (std::equal(q.angles.begin(), q.angles.end(), ds_.poses[i].q.angles.begin()))
                return from_single_pose(i, false);

        if (mode_ == InterpolationMode::NearestNeighbor)
            return from_single_pose(nearest_pose(q), false);
        if (tri_) return query_scattered(q);
        return query_grid(q);
    }

    std::size_t nearest_pose(const JointState& q) const {
        std::size_t best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ds_.poses.size(); ++i) {
            double d2 = 0.0;
            for (std::size_t a = 0; a < q.angles.size(); ++a) {
                const double d = q.angles[a] - ds_.poses[i].q.angles[a];
                d2 += d * d;
            }
            if (d2 < best_d2) {
                best_d2 = d2;
                best = i;
            }
        }
        return best;
    }

private:
    ReferenceDataset ds_;
    InterpolationMode mode_ = InterpolationMode::Barycentric;
    std::vector<std::size_t> active_axes_;        // grid axes with >= 2 samples
    std::optional<DelaunayTriangulation> tri_;    // scattered datasets only

    BackgroundQuery from_single_pose(std::size_t i, bool extrapolated) const {
        const ReferencePose& p = ds_.poses[i];
        BackgroundQuery out;
        out.mu = p.mean;
        out.sigma_prefloor = p.spread;
        out.sigma = p.spread;
        for (double& s : out.sigma) s = std::max(s, ds_.sigma_floor);
        out.extrapolated = extrapolated;
        out.support = {{i, 1.0}};
        return out;
    }

    BackgroundQuery blend(const std::vector<std::pair<std::size_t, double>>& support,
                          bool extrapolated) const {
        const std::size_t b = static_cast<std::size_t>(ds_.bin_count);
        BackgroundQuery out;
        out.mu.assign(b, 0.0);
        out.sigma_prefloor.assign(b, 0.0);
        for (const auto& [idx, w] : support) {
            const ReferencePose& p = ds_.poses[idx];
            for (std::size_t i = 0; i < b; ++i) {
                out.mu[i] += w * p.mean[i];
                out.sigma_prefloor[i] += w * p.spread[i];
            }
        }
        out.sigma = out.sigma_prefloor;
        for (double& s : out.sigma) s = std::max(s, ds_.sigma_floor);
        out.extrapolated = extrapolated;
        out.support = support;
        return out;
    }

    BackgroundQuery query_grid(const JointState& q) const {
        const GridSpec& g = *ds_.grid;
        const double tol = 1e-10;

        for (std::size_t a = 0; a < g.dof(); ++a) {
            if (q.angles[a] < g.lo[a] - tol || q.angles[a] > g.axis_hi(a) + tol)
                return from_single_pose(nearest_pose(q), true);
        }

        // Cell index and fractional coordinate per active axis.
        std::vector<int> base(g.dof(), 0);
        std::vector<double> frac(g.dof(), 0.0);
        for (std::size_t a : active_axes_) {
            const double u = (q.angles[a] - g.lo[a]) / g.step[a];
            int cell = static_cast<int>(std::floor(u));
            cell = std::clamp(cell, 0, g.count[a] - 2);
            base[a] = cell;
            frac[a] = std::clamp(u - static_cast<double>(cell), 0.0, 1.0);
        }

        // Kuhn simplex: axes ordered by descending fractional coordinate
        // (axis index ascending on ties, which fixes boundary cases).
        std::vector<std::size_t> order(active_axes_.begin(), active_axes_.end());
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (frac[x] != frac[y]) return frac[x] > frac[y];
            return x < y;
        });

        const std::size_t m = order.size();
        std::vector<std::pair<std::size_t, double>> support;
        support.reserve(m + 1);
        std::vector<int> corner = base;
        support.emplace_back(flat_index(corner), 1.0 - frac[order[0]]);
        for (std::size_t k = 0; k < m; ++k) {
            corner[order[k]] += 1;
            const double w =
                (k + 1 < m) ? frac[order[k]] - frac[order[k + 1]] : frac[order[m - 1]];
            support.emplace_back(flat_index(corner), w);
        }
        return blend(support, false);
    }

    std::size_t flat_index(const std::vector<int>& idx) const {
        const GridSpec& g = *ds_.grid;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < g.dof(); ++a)
            flat = flat * static_cast<std::size_t>(g.count[a]) + static_cast<std::size_t>(idx[a]);
        return flat;
    }

    BackgroundQuery query_scattered(const JointState& q) const {
        std::vector<double> w;
        const std::size_t s = tri_->locate(q.angles, w);
        if (s == DelaunayTriangulation::npos)
            return from_single_pose(nearest_pose(q), true);
        const auto& verts = tri_->simplex_vertices(s);
        // Clamp the tiny negatives the containment tolerance admits, then
        // renormalize so the weights stay a convex combination.
        double sum = 0.0;
        for (double& x : w) {
            x = std::max(x, 0.0);
            sum += x;
        }
        std::vector<std::pair<std::size_t, double>> support;
        support.reserve(verts.size());
        for (std::size_t k = 0; k < verts.size(); ++k) support.emplace_back(verts[k], w[k] / sum);
        return blend(support, false);
    }
};

// Spec-facing aliases: the build/query entry points as free functions.
inline BackgroundModel build_model(ReferenceDataset ds, InterpolationMode mode) {
    return BackgroundModel::build(std::move(ds), mode);
}

inline BackgroundQuery query(const BackgroundModel& model, const JointState& q) {
    return model.query(q);
}

}  // namespace tofprox
