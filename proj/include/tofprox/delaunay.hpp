#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tofprox {

// Raised when a pose set cannot support simplex interpolation (all poses
// affinely dependent).
struct DegenerateGeometry : std::runtime_error {
    explicit DegenerateGeometry(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

// Solves A x = rhs in-place with partial pivoting. Returns false when the
// system is singular at the given tolerance.
inline bool solve_linear(std::vector<std::vector<long double>> a, std::vector<long double> rhs,
                         std::vector<long double>& x, long double pivot_tol) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) <= pivot_tol) return false;
        std::swap(a[piv], a[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    x.assign(n, 0.0L);
    for (std::size_t r = n; r-- > 0;) {
        long double s = rhs[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

// Rank of the affine span of a point set, via Gaussian elimination on the
// difference vectors.
inline std::size_t affine_rank(const std::vector<std::vector<double>>& pts, double tol) {
    if (pts.size() < 2) return 0;
    const std::size_t n = pts.front().size();
    std::vector<std::vector<long double>> rows;
    rows.reserve(pts.size() - 1);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        std::vector<long double> r(n);
        for (std::size_t j = 0; j < n; ++j) r[j] = static_cast<long double>(pts[i][j]) - pts[0][j];
        rows.push_back(std::move(r));
    }
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        for (std::size_t r = rank + 1; r < rows.size(); ++r)
            if (std::abs(rows[r][col]) > std::abs(rows[piv][col])) piv = r;
        if (std::abs(rows[piv][col]) <= tol) continue;
        std::swap(rows[piv], rows[rank]);
        for (std::size_t r = rank + 1; r < rows.size(); ++r) {
            const long double f = rows[r][col] / rows[rank][col];
            for (std::size_t c = col; c < n; ++c) rows[r][c] -= f * rows[rank][c];
        }
        ++rank;
    }
    return rank;
}

}  // namespace detail

// Simplicial decomposition of a scattered point set by incremental insertion
// (Bowyer-Watson) against a bounding super-simplex. Vertex indices refer to
// the input point order; simplexes touching the super-simplex are dropped at
// the end, leaving a triangulation of the convex hull.
class DelaunayTriangulation {
public:
    static DelaunayTriangulation build(const std::vector<std::vector<double>>& points) {
        if (points.empty()) throw std::invalid_argument("DelaunayTriangulation: no points");
        const std::size_t dim = points.front().size();
        if (dim == 0) throw std::invalid_argument("DelaunayTriangulation: zero-dimensional points");
        for (const auto& p : points)
            if (p.size() != dim)
                throw std::invalid_argument("DelaunayTriangulation: inconsistent dimensions");

        double extent = 0.0;
        for (const auto& p : points)
            for (double v : p) extent = std::max(extent, std::abs(v));
        const double rank_tol = 1e-9 * (extent + 1.0);
        if (detail::affine_rank(points, rank_tol) < dim)
            throw DegenerateGeometry(
                "DelaunayTriangulation: poses are affinely dependent (do not span joint space)");

        DelaunayTriangulation tri;
        tri.dim_ = dim;
        tri.points_ = points;

        // Bounding super-simplex around the data box.
        std::vector<double> c(dim, 0.0), mn(dim, 1e300), mx(dim, -1e300);
        for (const auto& p : points)
            for (std::size_t j = 0; j < dim; ++j) {
                mn[j] = std::min(mn[j], p[j]);
                mx[j] = std::max(mx[j], p[j]);
            }
        double w = 1.0;
        for (std::size_t j = 0; j < dim; ++j) {
            c[j] = 0.5 * (mn[j] + mx[j]);
            w = std::max(w, mx[j] - mn[j]);
        }
        const double scale = 64.0 * static_cast<double>(dim) * w;
        const std::size_t super_base = points.size();
        for (std::size_t k = 0; k <= dim; ++k) {
            std::vector<double> v = c;
            if (k == 0) {
                for (double& x : v) x -= scale;
            } else {
                for (double& x : v) x -= scale;
                v[k - 1] += scale * static_cast<double>(dim + 2);
            }
            tri.points_.push_back(std::move(v));
        }

        std::vector<std::size_t> first(dim + 1);
        for (std::size_t k = 0; k <= dim; ++k) first[k] = super_base + k;
        tri.add_simplex(first);

        for (std::size_t p = 0; p < super_base; ++p) tri.insert(p);

        // Drop everything touching the super-simplex.
        std::vector<Cell> kept;
        for (auto& s : tri.cells_) {
            if (!s.alive) continue;
            bool touches_super = false;
            for (std::size_t v : s.verts)
                if (v >= super_base) touches_super = true;
            if (!touches_super) kept.push_back(std::move(s));
        }
        tri.cells_ = std::move(kept);
        tri.points_.resize(super_base);
        if (tri.cells_.empty())
            throw DegenerateGeometry("DelaunayTriangulation: empty triangulation");
        return tri;
    }

    std::size_t dimension() const { return dim_; }
    std::size_t simplex_count() const { return cells_.size(); }

    const std::vector<std::size_t>& simplex_vertices(std::size_t s) const {
        return cells_[s].verts;
    }

    // Barycentric coordinates of q within simplex s; weights follow the
    // vertex order of simplex_vertices(s).
    bool barycentric(std::size_t s, const std::vector<double>& q,
                     std::vector<double>& weights) const {
        const Cell& cell = cells_[s];
        std::vector<std::vector<long double>> a(dim_, std::vector<long double>(dim_));
        std::vector<long double> rhs(dim_);
        const auto& v0 = points_[cell.verts[0]];
        for (std::size_t r = 0; r < dim_; ++r) {
            for (std::size_t col = 0; col < dim_; ++col)
                a[r][col] =
                    static_cast<long double>(points_[cell.verts[col + 1]][r]) - v0[r];
            rhs[r] = static_cast<long double>(q[r]) - v0[r];
        }
        std::vector<long double> lam;
        if (!detail::solve_linear(std::move(a), std::move(rhs), lam, 0.0L)) return false;
        weights.assign(dim_ + 1, 0.0);
        long double sum = 0.0L;
        for (std::size_t k = 0; k < dim_; ++k) {
            weights[k + 1] = static_cast<double>(lam[k]);
            sum += lam[k];
        }
        weights[0] = static_cast<double>(1.0L - sum);
        return true;
    }

    // Index of a simplex containing q (lowest index on boundary ties), or
    // npos when q lies outside the triangulated hull.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t locate(const std::vector<double>& q, std::vector<double>& weights,
                       double tol = 1e-9) const {
        for (std::size_t s = 0; s < cells_.size(); ++s) {
            if (!barycentric(s, q, weights)) continue;
            bool inside = true;
            for (double w : weights)
                if (w < -tol) inside = false;
            if (inside) return s;
        }
        return npos;
    }

private:
    struct Cell {
        std::vector<std::size_t> verts;  // sorted, dim_+1 entries
        std::vector<double> center;      // circumcenter
        double radius2 = 0.0;
        bool degenerate = false;  // zero-volume cell: treat as always-bad
        bool alive = true;
    };

    std::size_t dim_ = 0;
    std::vector<std::vector<double>> points_;
    std::vector<Cell> cells_;

    void add_simplex(std::vector<std::size_t> verts) {
        std::sort(verts.begin(), verts.end());
        Cell cell;
        cell.verts = std::move(verts);
        compute_circumsphere(cell);
        cells_.push_back(std::move(cell));
    }

    void compute_circumsphere(Cell& cell) {
        // 2 (v_i - v_0) . x = |v_i|^2 - |v_0|^2
        const auto& v0 = points_[cell.verts[0]];
        long double v0n = 0.0L;
        for (double x : v0) v0n += static_cast<long double>(x) * x;
        std::vector<std::vector<long double>> a(dim_, std::vector<long double>(dim_));
        std::vector<long double> rhs(dim_);
        for (std::size_t r = 0; r < dim_; ++r) {
            const auto& vi = points_[cell.verts[r + 1]];
            long double vin = 0.0L;
            for (std::size_t j = 0; j < dim_; ++j) {
                a[r][j] = 2.0L * (static_cast<long double>(vi[j]) - v0[j]);
                vin += static_cast<long double>(vi[j]) * vi[j];
            }
            rhs[r] = vin - v0n;
        }
        std::vector<long double> x;
        if (!detail::solve_linear(std::move(a), std::move(rhs), x, 1e-30L)) {
            cell.degenerate = true;
            return;
        }
        cell.center.resize(dim_);
        long double r2 = 0.0L;
        for (std::size_t j = 0; j < dim_; ++j) {
            cell.center[j] = static_cast<double>(x[j]);
            const long double d = x[j] - static_cast<long double>(v0[j]);
            r2 += d * d;
        }
        cell.radius2 = static_cast<double>(r2);
    }

    bool in_circumsphere(const Cell& cell, const std::vector<double>& p) const {
        if (cell.degenerate) return true;
        long double d2 = 0.0L;
        for (std::size_t j = 0; j < dim_; ++j) {
            const long double d = static_cast<long double>(p[j]) - cell.center[j];
            d2 += d * d;
        }
        return static_cast<double>(d2) <= cell.radius2 * (1.0 + 1e-12);
    }

    void insert(std::size_t point_index) {
        const auto& p = points_[point_index];
        std::vector<std::size_t> bad;
        for (std::size_t s = 0; s < cells_.size(); ++s)
            if (cells_[s].alive && in_circumsphere(cells_[s], p)) bad.push_back(s);

        // Boundary facets of the carved cavity appear on exactly one bad cell.
        std::map<std::vector<std::size_t>, int> facet_count;
        for (std::size_t s : bad) {
            const auto& verts = cells_[s].verts;
            for (std::size_t skip = 0; skip < verts.size(); ++skip) {
                std::vector<std::size_t> facet;
                facet.reserve(dim_);
                for (std::size_t k = 0; k < verts.size(); ++k)
                    if (k != skip) facet.push_back(verts[k]);
                ++facet_count[facet];
            }
        }
        for (std::size_t s : bad) cells_[s].alive = false;
        for (const auto& [facet, cnt] : facet_count) {
            if (cnt != 1) continue;
            std::vector<std::size_t> verts = facet;
            verts.push_back(point_index);
            add_simplex(std::move(verts));
        }
        compact();
    }

    void compact() {
        if (cells_.size() < 64) return;
        std::size_t dead = 0;
        for (const auto& s : cells_)
            if (!s.alive) ++dead;
        if (dead * 2 < cells_.size()) return;
        std::vector<Cell> kept;
        kept.reserve(cells_.size() - dead);
        for (auto& s : cells_)
            if (s.alive) kept.push_back(std::move(s));
        cells_ = std::move(kept);
    }
};

}  // namespace tofprox
