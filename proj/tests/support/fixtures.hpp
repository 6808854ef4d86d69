// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "teso/core/types.hpp"

namespace teso::fixtures {

inline const Vec3 kCenter{512.0, 512.0, 512.0};

/// Integer voxels with |p - c| in [R - 0.5, R + 0.5), radial normals and a
/// smooth color field. R = 89 gives about 100k points, R = 282 about 1M.
PointCloud sphere_shell(double radius, const Vec3& center = kCenter, int depth = 10);

/// Voxelized plane z = 0.3x + 0.2y + c over a square of `side` voxels.
PointCloud tilted_plane(int side = 316, int depth = 10);

/// Voxels within half a voxel of a torus around the z axis.
PointCloud torus(double major = 120.0, double minor = 21.0, const Vec3& center = kCenter,
                 int depth = 10);

/// Colors with structure at several scales; a pure function of position.
Color pattern_color(const Vec3& p);

/// Structurally random quantized tree. Each node at a leaf level below
/// l_max becomes a leaf with probability `leaf_prob`; split nodes get
/// between 1 and `max_children` random children.
SurfelOctree random_tree(std::uint64_t seed, int depth = 10, int max_children = 3,
                         double leaf_prob = 0.4, bool patches = false);

/// Random quantized surfel for a cube of width b (every index in range).
Surfel random_quantized_surfel(std::uint64_t& state, double b);

}  // namespace teso::fixtures
