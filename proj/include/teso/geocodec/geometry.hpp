// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "teso/core/container.hpp"
#include "teso/core/types.hpp"
#include "teso/geocodec/context.hpp"

namespace teso {

/// Ideal code lengths (sum of -log2 p) per syntax element, in bits.
struct GeometryStats {
    double base = 0.0;
    double occupancy = 0.0;
    double flags = 0.0;
    double offset = 0.0;
    double normal = 0.0;
    double radius = 0.0;

    double attributes() const { return offset + normal + radius; }
    double total() const { return base + occupancy + flags + attributes(); }
};

struct GeometryCodingOptions {
    GeometryModelId model = GeometryModelId::Adaptive;
    Conditioning conditioning = Conditioning::OffsetNormal;
};

// Per-element coders. The decode_* functions extend a tree holding the
// already decoded levels; the encoders read the same levels from the full
// tree, so both sides see identical contexts.

/// Breadth-first 8-bit child patterns from the root down to l_min. An empty
/// tree gives an empty payload; otherwise the stream starts with a root bit.
Bytes encode_base_octree(const SurfelOctree& tree, GeometryModelId model,
                         double* bits = nullptr);
/// Fills levels 0..l_min of an empty tree with split nodes (leaf flags at
/// l_min are left unset).
void decode_base_octree(std::span<const std::uint8_t> bytes, SurfelOctree& tree,
                        GeometryModelId model);

/// Occupancy bit of every unknown node of ctx.level, in Morton order.
Bytes encode_occupancy_level(const SurfelOctree& tree, const LevelContext& ctx,
                             GeometryModelId model, double* bits = nullptr);
void decode_occupancy_level(std::span<const std::uint8_t> bytes, SurfelOctree& tree,
                            const LevelContext& ctx, GeometryModelId model);

/// One flag per occupied node at a leaf level below l_max; other levels
/// code nothing. Decoding marks every node at l_max as a leaf.
Bytes encode_leaf_flags(const SurfelOctree& tree, int level, GeometryModelId model,
                        double* bits = nullptr);
void decode_leaf_flags(std::span<const std::uint8_t> bytes, SurfelOctree& tree, int level,
                       GeometryModelId model);

/// Quantized offsets, then normals, then radii of the level's leaves.
Bytes encode_attributes(const SurfelOctree& tree, const LevelContext& ctx,
                        const GeometryCodingOptions& options, GeometryStats* stats = nullptr);
void decode_attributes(std::span<const std::uint8_t> bytes, SurfelOctree& tree,
                       const LevelContext& ctx, const GeometryCodingOptions& options);

/// Geometry sections in container order: base octree, occupancy for levels
/// (l_min, l_max], leaf flags for leaf levels in [l_min, l_max), attributes
/// for leaf levels. Fills the geometry fields of `header` (depth, levels,
/// model, conditioning, steps; point_count when zero). The tree must be
/// quantized.
std::vector<Section> encode_geometry(const SurfelOctree& tree, BitstreamHeader& header,
                                     const GeometryCodingOptions& options = {},
                                     GeometryStats* stats = nullptr);
/// Rebuilds the quantized tree (no patches). Throws FormatError when a
/// section is missing and StreamError on corrupt payloads.
SurfelOctree decode_geometry(const Bitstream& stream);

}  // namespace teso
