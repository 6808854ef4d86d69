// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "teso/core/types.hpp"

namespace teso {

struct Aabb {
    Vec3 lo;
    Vec3 hi;  // exclusive

    bool contains(const Vec3& p) const noexcept {
        return p[0] >= lo[0] && p[1] >= lo[1] && p[2] >= lo[2] && p[0] < hi[0] && p[1] < hi[1] &&
               p[2] < hi[2];
    }
};

/// Uniform cell grid over a point set for nearest-neighbor queries. Cells are
/// stored densely when the bounding box is small and in an open-addressing
/// hash table otherwise. Queries walk Chebyshev shells of cells outward from
/// the query cell and stop once no unvisited cell can hold a closer point.
class PointGrid {
public:
    struct Neighbor {
        std::uint32_t index = 0;  // into the span given at construction
        double dist2 = std::numeric_limits<double>::infinity();
    };

    PointGrid() = default;
    PointGrid(std::span<const Vec3> points, double cell_size);

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    double cell_size() const noexcept { return cell_; }

    /// Nearest point; dist2 is +inf when the grid is empty.
    Neighbor nearest(const Vec3& q) const {
        Neighbor best;
        knn(q, 1, &best, [](std::uint32_t) { return true; });
        return best;
    }

    /// Up to k nearest points accepted by `accept(index)` and, when `box` is
    /// given, lying inside it. Results are written to out[0..n) ascending by
    /// distance (ties by index); returns n.
    template <typename Accept>
    std::size_t knn(const Vec3& q, std::size_t k, Neighbor* out, Accept&& accept,
                    const Aabb* box = nullptr) const;

private:
    using CellCoord = std::array<std::int64_t, 3>;

    CellCoord cell_of(const Vec3& p) const noexcept {
        return {static_cast<std::int64_t>(std::floor((p[0] - origin_[0]) * inv_cell_)),
                static_cast<std::int64_t>(std::floor((p[1] - origin_[1]) * inv_cell_)),
                static_cast<std::int64_t>(std::floor((p[2] - origin_[2]) * inv_cell_))};
    }
    /// [begin, end) into points_ for a cell inside [0, dims_).
    std::pair<std::uint32_t, std::uint32_t> cell_range(std::int64_t x, std::int64_t y,
                                                       std::int64_t z) const noexcept;
    std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
        return (static_cast<std::uint64_t>(x) << 42) | (static_cast<std::uint64_t>(y) << 21) |
               static_cast<std::uint64_t>(z);
    }

    double cell_ = 1.0;
    double inv_cell_ = 1.0;
    Vec3 origin_ = Vec3::Zero();
    CellCoord dims_{0, 0, 0};
    std::vector<Vec3> points_;            // sorted by cell
    std::vector<std::uint32_t> indices_;  // original index of points_[i]
    bool dense_ = true;
    std::vector<std::uint32_t> dense_start_;  // size cells + 1
    // Open addressing: key + 1 (0 = empty slot), begin, end.
    std::vector<std::uint64_t> hash_keys_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> hash_ranges_;
    std::uint64_t hash_mask_ = 0;
};

template <typename Accept>
std::size_t PointGrid::knn(const Vec3& q, std::size_t k, Neighbor* out, Accept&& accept,
                           const Aabb* box) const {
    if (k == 0 || points_.empty()) return 0;
    std::size_t n = 0;
    auto consider = [&](std::uint32_t slot) {
        const Vec3& p = points_[slot];
        const double d2 = (p - q).squaredNorm();
        if (n == k && !(d2 < out[k - 1].dist2 ||
                        (d2 == out[k - 1].dist2 && indices_[slot] < out[k - 1].index)))
            return;
        if (box && !box->contains(p)) return;
        const std::uint32_t idx = indices_[slot];
        if (!accept(idx)) return;
        std::size_t pos = n < k ? n++ : k - 1;
        while (pos > 0 && (out[pos - 1].dist2 > d2 ||
                           (out[pos - 1].dist2 == d2 && out[pos - 1].index > idx))) {
            out[pos] = out[pos - 1];
            --pos;
        }
        out[pos] = Neighbor{idx, d2};
    };

    CellCoord lo{0, 0, 0};
    CellCoord hi{dims_[0] - 1, dims_[1] - 1, dims_[2] - 1};
    if (box) {
        const CellCoord a = cell_of(box->lo);
        const CellCoord b = cell_of(box->hi);
        for (int d = 0; d < 3; ++d) {
            lo[d] = std::max(lo[d], a[d]);
            hi[d] = std::min(hi[d], b[d]);
            if (lo[d] > hi[d]) return 0;
        }
    }
    CellCoord c = cell_of(q);
    // Extra distance from q to the clamped start cell lowers the shell bound.
    double outside2 = 0.0;
    for (int d = 0; d < 3; ++d) {
        const std::int64_t cc = std::clamp(c[d], lo[d], hi[d]);
        if (cc != c[d]) {
            const double face = origin_[d] + static_cast<double>(cc < c[d] ? cc + 1 : cc) * cell_;
            outside2 += (q[d] - face) * (q[d] - face);
        }
        c[d] = cc;
    }
    const std::int64_t max_ring = std::max({c[0] - lo[0], hi[0] - c[0], c[1] - lo[1],
                                            hi[1] - c[1], c[2] - lo[2], hi[2] - c[2]});

    auto scan = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
        const auto [b, e] = cell_range(x, y, z);
        for (std::uint32_t s = b; s < e; ++s) consider(s);
    };

    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
        const std::int64_t x0 = std::max(lo[0], c[0] - ring), x1 = std::min(hi[0], c[0] + ring);
        const std::int64_t y0 = std::max(lo[1], c[1] - ring), y1 = std::min(hi[1], c[1] + ring);
        for (std::int64_t x = x0; x <= x1; ++x) {
            const bool x_edge = (x == c[0] - ring || x == c[0] + ring);
            for (std::int64_t y = y0; y <= y1; ++y) {
                const bool y_edge = (y == c[1] - ring || y == c[1] + ring);
                if (x_edge || y_edge) {
                    const std::int64_t z0 = std::max(lo[2], c[2] - ring);
                    const std::int64_t z1 = std::min(hi[2], c[2] + ring);
                    for (std::int64_t z = z0; z <= z1; ++z) scan(x, y, z);
                } else {
                    if (c[2] - ring >= lo[2]) scan(x, y, c[2] - ring);
                    if (ring > 0 && c[2] + ring <= hi[2]) scan(x, y, c[2] + ring);
                }
            }
        }
        if (n == k) {
            // Unvisited cells are at least `ring` cells away from q's cell.
            const double bound = static_cast<double>(ring) * cell_;
            if (out[k - 1].dist2 <= bound * bound + outside2) break;
        }
    }
    return n;
}

}  // namespace teso
