// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "teso/builder/builder.hpp"
#include "teso/core/container.hpp"
#include "teso/geocodec/geometry.hpp"
#include "teso/texture/texture.hpp"

namespace teso {

struct EncodeOptions {
    BuildConfig build;
    GeometryCodingOptions geometry;
    TextureCodecId texture = TextureCodecId::InternalDct;
    int qt = 8;
    PatchSampling sampling;
    /// Neighbors used when the input has no normals.
    int normal_k = 16;
};

struct EncodeResult {
    Bytes bytes;
    /// Quantized tree with the source patches, i.e. what the stream describes
    /// before texture coding loss.
    SurfelOctree tree;
    GeometryStats stats;
    std::size_t geometry_bytes = 0;  // geometry section payloads
    std::size_t texture_bytes = 0;   // texture section payloads
    std::size_t point_count = 0;

    double bits_per_point() const {
        return point_count ? 8.0 * static_cast<double>(bytes.size()) / point_count : 0.0;
    }
};

/// Estimates normals when missing, builds the octree, quantizes it and
/// samples a patch per leaf.
SurfelOctree prepare_tree(const PointCloud& cloud, const EncodeOptions& options,
                          NormalEstimationReport* report = nullptr);

/// Codes a quantized tree. Patches are required unless the texture codec is
/// None. `point_count` goes into the header.
EncodeResult encode_tree(const SurfelOctree& tree, const EncodeOptions& options,
                         std::size_t point_count);

EncodeResult encode_cloud(const PointCloud& cloud, const EncodeOptions& options,
                          NormalEstimationReport* report = nullptr);

/// Geometry and, when present, texture. A stream holding a raw tree section
/// is returned as stored.
SurfelOctree decode_stream(std::span<const std::uint8_t> bytes);

/// Lossless tree dump (all nodes, double-precision surfels, float patches)
/// used between the build and encode steps.
Bytes encode_raw_tree(const SurfelOctree& tree);
SurfelOctree decode_raw_tree(std::span<const std::uint8_t> payload, const BitstreamHeader& header);

/// Container with only the raw tree section.
Bytes serialize_raw_tree(const SurfelOctree& tree, std::size_t point_count = 0, double tau_db = 0.0);

}  // namespace teso
