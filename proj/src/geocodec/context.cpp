// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/geocodec/context.hpp"

#include <cmath>

#include "teso/core/morton.hpp"

namespace teso {

bool cube_surfel_intersects(const OctreeCube& cube, int depth, const Vec3& center,
                            const Vec3& normal, double radius) {
    if (cube.distance(center, depth) > radius) return false;
    const Vec3 a = cube.anchor(depth);
    const double b = cube.width(depth);
    double lo = 0.0, hi = 0.0;
    for (int c = 0; c < 8; ++c) {
        const Vec3 corner(a[0] + ((c >> 2) & 1) * b, a[1] + ((c >> 1) & 1) * b,
                          a[2] + (c & 1) * b);
        const double s = normal.dot(corner - center);
        if (c == 0) lo = hi = s;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return lo <= 0.0 && hi >= 0.0;
}

int face_neighbors(std::uint64_t key, int level, std::uint64_t out[6]) {
    const Coord c = morton_decode_unchecked(key);
    const std::uint32_t limit = level >= 32 ? 0xFFFFFFFFu : (1u << level);
    int n = 0;
    for (int axis = 0; axis < 3; ++axis) {
        for (int dir = -1; dir <= 1; dir += 2) {
            const std::int64_t v = static_cast<std::int64_t>(c[axis]) + dir;
            if (v < 0 || v >= limit) continue;
            Coord d = c;
            d[axis] = static_cast<std::uint32_t>(v);
            out[n++] = morton_encode_unchecked(d);
        }
    }
    return n;
}

namespace {

// Children of `parent` that the surfel (center, normal, radius) crosses.
void emit_children(std::uint64_t parent, int child_level, int depth, const Vec3& center,
                   const Vec3& normal, double radius, std::vector<VirtualNode>& out) {
    for (int d = 0; d < 8; ++d) {
        const std::uint64_t k = (parent << 3) | static_cast<std::uint64_t>(d);
        const OctreeCube cube = OctreeCube::from_key(child_level, k);
        if (!cube_surfel_intersects(cube, depth, center, normal, radius)) continue;
        VirtualNode v;
        v.key = k;
        v.center = center;
        v.normal = normal;
        v.radius = radius;
        v.offset = center - cube.anchor(depth);
        out.push_back(v);
    }
}

}  // namespace

LevelContext rasterize_context(const SurfelOctree& tree, int level) {
    LevelContext ctx;
    ctx.level = level;
    if (tree.empty() && level == 0) return ctx;
    if (level == 0) {
        ctx.unknown.push_back(0);
        return ctx;
    }
    const int depth = tree.depth();
    // Virtual nodes of level k are the crossing children of level k - 1's
    // virtual nodes and leaves; crossing is monotone under refinement.
    std::vector<VirtualNode> current;
    for (int k = 1; k <= level; ++k) {
        std::vector<VirtualNode> next;
        const auto nodes = tree.level(k - 1);
        std::size_t vi = 0, ni = 0;
        while (vi < current.size() || ni < nodes.size()) {
            if (ni == nodes.size() || (vi < current.size() && current[vi].key < nodes[ni].key)) {
                const VirtualNode& v = current[vi++];
                emit_children(v.key, k, depth, v.center, v.normal, v.radius, next);
            } else {
                const OctreeNode& n = nodes[ni++];
                if (!n.leaf) continue;
                const OctreeCube cube = OctreeCube::from_key(k - 1, n.key);
                emit_children(n.key, k, depth, n.surfel.center(cube, depth), n.surfel.normal,
                              n.surfel.radius, next);
            }
        }
        current = std::move(next);
    }
    ctx.virtual_nodes = std::move(current);
    for (const auto& n : tree.level(level - 1)) {
        if (n.leaf) continue;
        ctx.split.push_back(n.key);
        for (std::uint64_t d = 0; d < 8; ++d) ctx.unknown.push_back((n.key << 3) | d);
    }
    return ctx;
}

}  // namespace teso
