// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "teso/core/types.hpp"

namespace teso {

/// True iff the surfel plane separates or touches the corners of the closed
/// cube and the surfel center P lies within r of the cube.
bool cube_surfel_intersects(const OctreeCube& cube, int depth, const Vec3& center,
                            const Vec3& normal, double radius);

/// Child-level placeholder carrying an ancestor leaf's surfel.
struct VirtualNode {
    std::uint64_t key = 0;
    Vec3 center = Vec3::Zero();  // world space, same as the ancestor's P
    Vec3 normal = Vec3::UnitZ();
    double radius = 0.0;
    Vec3 offset = Vec3::Zero();  // P relative to this cube's anchor; may leave [0, b)
};

/// Coding context for one level.
struct LevelContext {
    int level = 0;
    std::vector<std::uint64_t> unknown;      // children of split nodes at level - 1
    std::vector<VirtualNode> virtual_nodes;  // ascending key
    std::vector<std::uint64_t> split;        // split nodes at level - 1

    bool is_virtual(std::uint64_t key) const {
        auto it = std::lower_bound(
            virtual_nodes.begin(), virtual_nodes.end(), key,
            [](const VirtualNode& v, std::uint64_t k) { return v.key < k; });
        return it != virtual_nodes.end() && it->key == key;
    }
};

/// Context for `level` from the tree's levels below it; levels >= `level`
/// are ignored, so a partially decoded tree gives the same result as the
/// complete one. For level 0 everything is empty except unknown = {root}.
LevelContext rasterize_context(const SurfelOctree& tree, int level);

/// Keys of the six face neighbors of `key` at `level` that lie inside the
/// grid, written to out; returns their count.
int face_neighbors(std::uint64_t key, int level, std::uint64_t out[6]);

/// Sorted-vector membership.
inline bool contains_key(const std::vector<std::uint64_t>& sorted, std::uint64_t key) {
    return std::binary_search(sorted.begin(), sorted.end(), key);
}

}  // namespace teso
