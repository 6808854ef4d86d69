// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/core/spatial_index.hpp"

#include <bit>
#include <numeric>

#include "teso/core/errors.hpp"

namespace teso {
namespace {
constexpr std::uint64_t kDenseCellLimit = std::uint64_t{1} << 21;

std::uint64_t mix(std::uint64_t k) noexcept {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    return k;
}
}  // namespace

PointGrid::PointGrid(std::span<const Vec3> points, double cell_size)
    : cell_(cell_size), inv_cell_(1.0 / cell_size) {
    if (!(cell_size > 0.0)) throw PreconditionError("grid cell size must be positive");
    if (points.size() >= std::numeric_limits<std::uint32_t>::max())
        throw PreconditionError("too many points for a grid index");
    if (points.empty()) return;

    Vec3 mn = points[0], mx = points[0];
    for (const auto& p : points) {
        mn = mn.cwiseMin(p);
        mx = mx.cwiseMax(p);
    }
    origin_ = mn;
    for (int d = 0; d < 3; ++d) {
        dims_[d] = static_cast<std::int64_t>(std::floor((mx[d] - mn[d]) * inv_cell_)) + 1;
        if (dims_[d] >= (std::int64_t{1} << 21))
            throw PreconditionError("grid extent too large for the cell size");
    }
    const std::uint64_t cells = static_cast<std::uint64_t>(dims_[0]) *
                                static_cast<std::uint64_t>(dims_[1]) *
                                static_cast<std::uint64_t>(dims_[2]);
    dense_ = cells <= std::max<std::uint64_t>(kDenseCellLimit, points.size() * 4);

    std::vector<std::uint64_t> keys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const CellCoord c = cell_of(points[i]);
        keys[i] = dense_ ? static_cast<std::uint64_t>((c[0] * dims_[1] + c[1]) * dims_[2] + c[2])
                         : pack(c[0], c[1], c[2]);
    }
    std::vector<std::uint32_t> order(points.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
    });
    points_.resize(points.size());
    indices_ = order;
    for (std::size_t i = 0; i < order.size(); ++i) points_[i] = points[order[i]];

    if (dense_) {
        dense_start_.assign(cells + 1, 0);
        for (auto k : keys) ++dense_start_[k + 1];
        std::partial_sum(dense_start_.begin(), dense_start_.end(), dense_start_.begin());
    } else {
        std::size_t distinct = 0;
        for (std::size_t i = 0; i < order.size(); ++i)
            if (i == 0 || keys[order[i]] != keys[order[i - 1]]) ++distinct;
        const std::uint64_t cap = std::bit_ceil(distinct * 2 + 1);
        hash_mask_ = cap - 1;
        hash_keys_.assign(cap, 0);
        hash_ranges_.assign(cap, {0, 0});
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            const std::uint64_t key = keys[order[i]];
            while (j < order.size() && keys[order[j]] == key) ++j;
            std::uint64_t slot = mix(key) & hash_mask_;
            while (hash_keys_[slot] != 0) slot = (slot + 1) & hash_mask_;
            hash_keys_[slot] = key + 1;
            hash_ranges_[slot] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
            i = j;
        }
    }
}

std::pair<std::uint32_t, std::uint32_t> PointGrid::cell_range(std::int64_t x, std::int64_t y,
                                                              std::int64_t z) const noexcept {
    if (dense_) {
        const auto k = static_cast<std::size_t>((x * dims_[1] + y) * dims_[2] + z);
        return {dense_start_[k], dense_start_[k + 1]};
    }
    const std::uint64_t key = pack(x, y, z) + 1;
    std::uint64_t slot = mix(key - 1) & hash_mask_;
    while (hash_keys_[slot] != 0) {
        if (hash_keys_[slot] == key) return hash_ranges_[slot];
        slot = (slot + 1) & hash_mask_;
    }
    return {0, 0};
}

}  // namespace teso
