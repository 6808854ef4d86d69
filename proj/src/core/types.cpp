// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "teso/core/errors.hpp"
#include "teso/core/morton.hpp"

namespace teso {

void PointCloud::validate() const {
    if (depth < 1 || depth > kMaxDepth)
        throw PreconditionError("point cloud depth " + std::to_string(depth) + " unsupported");
    if (colors.size() != positions.size())
        throw PreconditionError("point cloud: color count differs from position count");
    if (!normals.empty() && normals.size() != positions.size())
        throw PreconditionError("point cloud: normal count differs from position count");
    const double limit = std::ldexp(1.0, depth);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const Vec3& p = positions[i];
        if (!(p.minCoeff() >= 0.0 && p.maxCoeff() < limit))
            throw PreconditionError("point " + std::to_string(i) + " outside the voxel grid");
    }
    for (std::size_t i = 0; i < normals.size(); ++i)
        if (std::abs(normals[i].norm() - 1.0) > 1e-6)
            throw PreconditionError("normal " + std::to_string(i) + " is not unit length");
}

double OctreeCube::width(int depth) const noexcept { return std::ldexp(1.0, depth - level); }

Vec3 OctreeCube::anchor(int depth) const noexcept {
    const double b = width(depth);
    return {coords[0] * b, coords[1] * b, coords[2] * b};
}

std::uint64_t OctreeCube::key() const { return morton_encode(coords, level); }

OctreeCube OctreeCube::from_key(int level, std::uint64_t key) {
    return {level, morton_decode_unchecked(key)};
}

bool OctreeCube::contains(const Vec3& p, int depth) const noexcept {
    const Vec3 a = anchor(depth);
    const double b = width(depth);
    for (int k = 0; k < 3; ++k)
        if (p[k] < a[k] || p[k] >= a[k] + b) return false;
    return true;
}

double OctreeCube::distance(const Vec3& p, int depth) const noexcept {
    const Vec3 a = anchor(depth);
    const double b = width(depth);
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double lo = a[k] - p[k];
        const double hi = p[k] - (a[k] + b);
        const double e = std::max({lo, hi, 0.0});
        d2 += e * e;
    }
    return std::sqrt(d2);
}

bool LevelConfig::is_leaf_level(int level) const {
    return std::binary_search(leaf_levels.begin(), leaf_levels.end(), level);
}

LevelConfig LevelConfig::defaults(int depth) {
    LevelConfig cfg;
    const int base = std::max(0, depth - 4);
    cfg.leaf_levels = {base, std::min(depth, base + 1), std::min(depth, base + 2)};
    cfg.leaf_levels.erase(std::unique(cfg.leaf_levels.begin(), cfg.leaf_levels.end()),
                          cfg.leaf_levels.end());
    const int sides[] = {12, 8, 4};
    for (std::size_t i = 0; i < cfg.leaf_levels.size(); ++i)
        cfg.patch_side[cfg.leaf_levels[i]] = sides[i];
    return cfg;
}

LevelConfig LevelConfig::with_levels(std::vector<int> levels) {
    LevelConfig cfg;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.empty()) throw PreconditionError("at least one leaf level is required");
    cfg.leaf_levels = std::move(levels);
    for (int l : cfg.leaf_levels) {
        if (l < 0 || l > kMaxDepth) throw PreconditionError("leaf level out of range");
        cfg.patch_side[l] = std::max(2, 12 - 4 * (l - cfg.leaf_levels.front()));
    }
    return cfg;
}

void LevelConfig::validate(int depth) const {
    if (leaf_levels.empty()) throw PreconditionError("at least one leaf level is required");
    for (std::size_t i = 0; i < leaf_levels.size(); ++i) {
        if (leaf_levels[i] < 0 || leaf_levels[i] > depth)
            throw PreconditionError("leaf level " + std::to_string(leaf_levels[i]) +
                                    " outside [0, depth]");
        if (i > 0 && leaf_levels[i] <= leaf_levels[i - 1])
            throw PreconditionError("leaf levels must be strictly ascending");
        if (patch_side[leaf_levels[i]] < 1)
            throw PreconditionError("patch side missing for level " +
                                    std::to_string(leaf_levels[i]));
    }
}

SurfelOctree::SurfelOctree(int depth, LevelConfig config)
    : depth_(depth), config_(std::move(config)) {
    if (depth_ < 1 || depth_ > kMaxDepth) throw PreconditionError("unsupported depth");
    config_.validate(depth_);
    levels_.resize(static_cast<std::size_t>(config_.l_max()) + 1);
}

SurfelOctree SurfelOctree::from_leaves(int depth, LevelConfig config,
                                       std::vector<std::vector<LeafEntry>> leaves_by_level) {
    SurfelOctree tree(depth, std::move(config));
    const int lmax = tree.l_max();
    if (static_cast<int>(leaves_by_level.size()) > lmax + 1)
        throw PreconditionError("leaves deeper than l_max");
    leaves_by_level.resize(static_cast<std::size_t>(lmax) + 1);

    std::vector<std::vector<std::uint64_t>> split_keys(static_cast<std::size_t>(lmax) + 1);
    for (int l = 0; l <= lmax; ++l) {
        if (!leaves_by_level[l].empty() && !tree.config_.is_leaf_level(l))
            throw PreconditionError("leaf at level " + std::to_string(l) +
                                    " which is not a leaf level");
        for (const auto& e : leaves_by_level[l]) {
            std::uint64_t k = e.key;
            for (int a = l - 1; a >= 0; --a) {
                k >>= 3;
                split_keys[a].push_back(k);
            }
        }
    }
    for (int l = 0; l <= lmax; ++l) {
        auto& sk = split_keys[l];
        std::sort(sk.begin(), sk.end());
        sk.erase(std::unique(sk.begin(), sk.end()), sk.end());
        auto& leaves = leaves_by_level[l];
        std::sort(leaves.begin(), leaves.end(),
                  [](const LeafEntry& a, const LeafEntry& b) { return a.key < b.key; });

        auto& nodes = tree.levels_[l];
        nodes.reserve(sk.size() + leaves.size());
        std::size_t i = 0, j = 0;
        while (i < sk.size() || j < leaves.size()) {
            if (j == leaves.size() || (i < sk.size() && sk[i] < leaves[j].key)) {
                nodes.push_back(OctreeNode{sk[i++], false, {}, {}});
            } else {
                if (i < sk.size() && sk[i] == leaves[j].key)
                    throw PreconditionError("node is both a leaf and an ancestor of a leaf");
                if (j + 1 < leaves.size() && leaves[j + 1].key == leaves[j].key)
                    throw PreconditionError("duplicate leaf key");
                nodes.push_back(OctreeNode{leaves[j].key, true, leaves[j].surfel, {}});
                ++j;
            }
        }
    }
    return tree;
}

double SurfelOctree::sigma() const { return std::ldexp(1.0, depth_ - l_max()); }

bool SurfelOctree::empty() const noexcept { return levels_.empty() || levels_[0].empty(); }

std::span<const OctreeNode> SurfelOctree::level(int l) const {
    if (l < 0 || l >= static_cast<int>(levels_.size())) return {};
    return levels_[l];
}

std::vector<OctreeNode>& SurfelOctree::level_nodes(int l) {
    if (l < 0 || l >= static_cast<int>(levels_.size()))
        throw RangeError("level " + std::to_string(l) + " outside tree");
    return levels_[l];
}

const OctreeNode* SurfelOctree::find(int l, std::uint64_t key) const {
    if (l < 0 || l >= static_cast<int>(levels_.size())) return nullptr;
    const auto& nodes = levels_[l];
    auto it = std::lower_bound(nodes.begin(), nodes.end(), key,
                               [](const OctreeNode& n, std::uint64_t k) { return n.key < k; });
    return (it != nodes.end() && it->key == key) ? &*it : nullptr;
}

OctreeNode* SurfelOctree::find(int l, std::uint64_t key) {
    return const_cast<OctreeNode*>(std::as_const(*this).find(l, key));
}

std::size_t SurfelOctree::leaf_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < levels_.size(); ++l) n += leaf_count(static_cast<int>(l));
    return n;
}

std::size_t SurfelOctree::leaf_count(int l) const {
    const auto nodes = level(l);
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const OctreeNode& n) { return n.leaf; }));
}

void SurfelOctree::validate() const {
    const int lmax = l_max();
    if (static_cast<int>(levels_.size()) != lmax + 1)
        throw PreconditionError("level table size mismatch");
    if (levels_[0].size() > 1 || (levels_[0].size() == 1 && levels_[0][0].key != 0))
        throw PreconditionError("invalid root");
    // Largest radius index in the alphabet reconstructs at ceil(..) + 0.5 steps.
    const double max_radius_slack = 1.5 / 16.0;
    for (int l = 0; l <= lmax; ++l) {
        const auto& nodes = levels_[l];
        const std::uint64_t limit = l == 0 ? 1 : (std::uint64_t{1} << (3 * l));
        const double b = std::ldexp(1.0, depth_ - l);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const OctreeNode& n = nodes[i];
            if (n.key >= limit) throw PreconditionError("node key outside its level");
            if (i > 0 && nodes[i - 1].key >= n.key)
                throw PreconditionError("nodes not in strictly ascending Morton order");
            if (l > 0) {
                const OctreeNode* p = find(l - 1, n.key >> 3);
                if (!p || p->leaf)
                    throw PreconditionError("node at level " + std::to_string(l) +
                                            " lacks a split parent");
            }
            if (n.leaf) {
                if (!config_.is_leaf_level(l))
                    throw PreconditionError("leaf at non-leaf level " + std::to_string(l));
                const Surfel& s = n.surfel;
                for (int k = 0; k < 3; ++k)
                    if (!(s.offset[k] >= 0.0 && s.offset[k] < b))
                        throw PreconditionError("surfel offset outside its cube");
                if (!(std::abs(s.normal.norm() - 1.0) <= 1e-6))
                    throw PreconditionError("surfel normal not unit length");
                if (!(s.radius > 0.0 && s.radius <= std::sqrt(3.0) / 2.0 * b + max_radius_slack))
                    throw PreconditionError("surfel radius out of range");
                if (!n.patch.empty() && n.patch.side != config_.patch_side[l])
                    throw PreconditionError("patch side does not match level configuration");
            } else {
                if (l == lmax) throw PreconditionError("split node at l_max");
                const auto& children = levels_[l + 1];
                auto it = std::lower_bound(
                    children.begin(), children.end(), n.key << 3,
                    [](const OctreeNode& c, std::uint64_t k) { return c.key < k; });
                if (it == children.end() || (it->key >> 3) != n.key)
                    throw PreconditionError("split node without children");
            }
        }
    }
}

}  // namespace teso
