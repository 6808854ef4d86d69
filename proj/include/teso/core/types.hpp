// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace teso {

using Vec3 = Eigen::Vector3d;
using Color = Eigen::Vector3f;
using Coord = std::array<std::uint32_t, 3>;

/// Deepest supported octree; 3 * 21 bits fit a 64-bit Morton key.
inline constexpr int kMaxDepth = 21;

/// Colored points on the integer voxel grid [0, 2^depth)^3.
/// `normals` is either empty or parallel to `positions`.
struct PointCloud {
    int depth = 10;
    std::vector<Vec3> positions;
    std::vector<Color> colors;
    std::vector<Vec3> normals;

    std::size_t size() const noexcept { return positions.size(); }
    bool empty() const noexcept { return positions.empty(); }
    bool has_normals() const noexcept { return !normals.empty(); }

    /// Throws PreconditionError when sizes disagree, a position leaves the
    /// grid or a normal is not unit length.
    void validate() const;
};

struct OctreeCube {
    int level = 0;
    Coord coords{0, 0, 0};

    double width(int depth) const noexcept;
    Vec3 anchor(int depth) const noexcept;
    std::uint64_t key() const;
    static OctreeCube from_key(int level, std::uint64_t key);
    /// Half-open containment test [A, A + b)^3.
    bool contains(const Vec3& p, int depth) const noexcept;
    /// Euclidean distance from p to the closed cube; zero inside.
    double distance(const Vec3& p, int depth) const noexcept;
};

/// Cube-bounded planar element. The offset is relative to the owning cube's
/// anchor, so the world-space center is anchor + offset.
struct Surfel {
    Vec3 offset = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    double radius = 0.0;

    Vec3 center(const OctreeCube& cube, int depth) const { return cube.anchor(depth) + offset; }
    bool operator==(const Surfel&) const = default;
};

/// M x M colors covering the tangent-plane square [-r, r]^2. Pixel (i, j)
/// has i along the tangent u axis and j along v; storage is row-major in j.
struct TexturePatch {
    int side = 0;
    std::vector<Color> pixels;

    TexturePatch() = default;
    explicit TexturePatch(int m, const Color& fill = Color::Zero())
        : side(m), pixels(static_cast<std::size_t>(m) * m, fill) {}

    bool empty() const noexcept { return side == 0; }
    Color& at(int i, int j) { return pixels[static_cast<std::size_t>(j) * side + i]; }
    const Color& at(int i, int j) const { return pixels[static_cast<std::size_t>(j) * side + i]; }
    bool operator==(const TexturePatch&) const = default;
};

/// Which levels may hold leaves and the patch side used at each of them.
struct LevelConfig {
    std::vector<int> leaf_levels;                    // ascending
    std::array<int, kMaxDepth + 1> patch_side{};     // indexed by level; 0 when unused

    int l_min() const { return leaf_levels.front(); }
    int l_max() const { return leaf_levels.back(); }
    bool is_leaf_level(int level) const;

    /// Leaf levels {depth-4, depth-3, depth-2} with patch sides (12, 8, 4).
    static LevelConfig defaults(int depth);
    /// Arbitrary leaf levels; patch side 12 at the coarsest level, 4 fewer per
    /// level below it, never less than 2.
    static LevelConfig with_levels(std::vector<int> levels);

    /// Throws PreconditionError unless levels are sorted, unique and <= depth.
    void validate(int depth) const;
    bool operator==(const LevelConfig&) const = default;
};

struct OctreeNode {
    std::uint64_t key = 0;
    bool leaf = false;
    Surfel surfel;
    TexturePatch patch;

    bool operator==(const OctreeNode&) const = default;
};

/// Textured surfel octree. Nodes are stored per level in ascending Morton
/// order; only occupied nodes are kept.
class SurfelOctree {
public:
    struct LeafEntry {
        std::uint64_t key;
        Surfel surfel;
    };

    SurfelOctree() = default;
    SurfelOctree(int depth, LevelConfig config);

    /// Builds the tree from leaves grouped by level (index = level); every
    /// ancestor of a leaf becomes a split node.
    static SurfelOctree from_leaves(int depth, LevelConfig config,
                                    std::vector<std::vector<LeafEntry>> leaves_by_level);

    int depth() const noexcept { return depth_; }
    const LevelConfig& config() const noexcept { return config_; }
    int l_min() const { return config_.l_min(); }
    int l_max() const { return config_.l_max(); }
    /// Soft-blend scale: width of the finest-level cube.
    double sigma() const;
    bool empty() const noexcept;

    std::span<const OctreeNode> level(int l) const;
    std::vector<OctreeNode>& level_nodes(int l);
    const OctreeNode* find(int l, std::uint64_t key) const;
    OctreeNode* find(int l, std::uint64_t key);

    std::size_t leaf_count() const;
    std::size_t leaf_count(int l) const;
    OctreeCube cube(int l, std::uint64_t key) const { return OctreeCube::from_key(l, key); }

    /// Visits leaves level by level in Morton order.
    template <typename Fn>
    void for_each_leaf(Fn&& fn) const {
        for (int l = 0; l < static_cast<int>(levels_.size()); ++l)
            for (const auto& node : levels_[l])
                if (node.leaf) fn(l, node);
    }

    /// Throws PreconditionError on a violated structural invariant.
    void validate() const;

    bool operator==(const SurfelOctree&) const = default;

private:
    int depth_ = 0;
    LevelConfig config_;
    std::vector<std::vector<OctreeNode>> levels_;
};

}  // namespace teso
