// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "teso/core/image.hpp"
#include "teso/core/spatial_index.hpp"
#include "teso/core/types.hpp"
#include "teso/texture/frame.hpp"

namespace teso {

struct PatchSampling {
    int k = 3;
    /// Maximum distance to the surfel plane for a candidate point; <= 0
    /// selects half the finest cube width.
    double plane_distance = 0.0;
    double epsilon = 1e-6;
};

/// Colored points plus a grid index over their positions.
class ColorIndex {
public:
    explicit ColorIndex(const PointCloud& cloud, double cell_size = 2.0)
        : cloud_(&cloud), grid_(cloud.positions, cell_size) {}
    const PointCloud& cloud() const { return *cloud_; }
    const PointGrid& grid() const { return grid_; }

private:
    const PointCloud* cloud_;
    PointGrid grid_;
};

/// Pixel (i, j) center, in world space.
Vec3 patch_pixel_center(const Surfel& surfel, const TangentFrame& frame, const Vec3& center,
                        int side, int i, int j);

/// M x M patch. Each pixel blends its K nearest points lying within
/// plane_distance of the surfel plane inside the cube and its 26 neighbors,
/// weighted by 1 / (eps + dist). Falls back to the nearest point of that
/// neighborhood when no candidate passes the plane filter.
TexturePatch sample_patch(const Surfel& surfel, const TangentFrame& frame, const OctreeCube& cube,
                          int depth, const ColorIndex& index, int side,
                          const PatchSampling& params);

/// Samples a patch for every leaf, using the level's configured side.
void sample_patches(SurfelOctree& tree, const PointCloud& cloud, const PatchSampling& params = {});

/// One level's patches in Morton-ordered slots of an S_g x S_g grid.
struct PackedTextureImage {
    int level = 0;
    int patch_side = 0;
    int grid_side = 0;  // S_g, a power of two; 0 when the level has no leaves
    std::size_t leaf_count = 0;
    Image image;
};

/// Smallest power of two whose square holds `count` slots; 0 for none.
int slot_grid_side(std::size_t count);

/// Throws PreconditionError when a leaf lacks a patch of the level's side.
PackedTextureImage pack_patches(const SurfelOctree& tree, int level);
/// Patches of the level's leaves in Morton order. Throws FormatError when
/// the image does not match the layout.
std::vector<TexturePatch> unpack_patches(const PackedTextureImage& packed);
/// Assigns unpacked patches to the tree's leaves at packed.level.
void assign_patches(SurfelOctree& tree, const PackedTextureImage& packed);
/// Empty image with the layout the tree implies for `level`.
PackedTextureImage packed_layout(const SurfelOctree& tree, int level);

/// Writes level_<l>.png per non-empty level and manifest.txt with lines
/// "level M grid_side leaf_count".
void export_external(const std::vector<PackedTextureImage>& images,
                     const std::filesystem::path& dir);
/// Reads the PNGs listed in the manifest back and assigns the patches.
/// Throws FormatError when the manifest or image sizes disagree with the
/// tree's layout.
void import_external(SurfelOctree& tree, const std::filesystem::path& dir);

}  // namespace teso
