// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/texture/texture.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "teso/core/errors.hpp"
#include "teso/core/morton.hpp"
#include "teso/core/parallel.hpp"

namespace teso {

Vec3 patch_pixel_center(const Surfel& surfel, const TangentFrame& frame, const Vec3& center,
                        int side, int i, int j) {
    const double r = surfel.radius;
    const double step = 2.0 * r / side;
    return center + frame.u * (-r + (i + 0.5) * step) + frame.v * (-r + (j + 0.5) * step);
}

TexturePatch sample_patch(const Surfel& surfel, const TangentFrame& frame, const OctreeCube& cube,
                          int depth, const ColorIndex& index, int side,
                          const PatchSampling& params) {
    if (side < 1) throw PreconditionError("patch side must be positive");
    if (params.k < 1) throw PreconditionError("K must be positive");
    const PointCloud& cloud = index.cloud();
    const Vec3 p = surfel.center(cube, depth);
    const double b = cube.width(depth);
    const Vec3 a = cube.anchor(depth);
    const Aabb box{a - Vec3::Constant(b), a + Vec3::Constant(2.0 * b)};
    const double dt = params.plane_distance;

    TexturePatch patch(side);
    std::vector<PointGrid::Neighbor> nb(static_cast<std::size_t>(params.k));
    auto near_plane = [&](std::uint32_t idx) {
        return std::abs(surfel.normal.dot(cloud.positions[idx] - p)) <= dt;
    };
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            const Vec3 q = patch_pixel_center(surfel, frame, p, side, i, j);
            std::size_t found = index.grid().knn(q, nb.size(), nb.data(), near_plane, &box);
            if (found == 0)
                found = index.grid().knn(q, 1, nb.data(), [](std::uint32_t) { return true; }, &box);
            if (found == 0) throw PreconditionError("no points near a leaf surfel");
            Color c = Color::Zero();
            const double d0 = std::sqrt(nb[0].dist2);
            if (d0 < params.epsilon) {
                c = cloud.colors[nb[0].index];
            } else {
                double wsum = 0.0;
                Eigen::Vector3d acc = Eigen::Vector3d::Zero();
                for (std::size_t n = 0; n < found; ++n) {
                    const double w = 1.0 / (params.epsilon + std::sqrt(nb[n].dist2));
                    acc += w * cloud.colors[nb[n].index].cast<double>();
                    wsum += w;
                }
                c = (acc / wsum).cast<float>();
            }
            patch.at(i, j) = c;
        }
    }
    return patch;
}

void sample_patches(SurfelOctree& tree, const PointCloud& cloud, const PatchSampling& params) {
    if (tree.empty()) return;
    PatchSampling p = params;
    if (p.plane_distance <= 0.0) p.plane_distance = tree.sigma() / 2.0;
    const ColorIndex index(cloud);
    const int depth = tree.depth();
    for (int l : tree.config().leaf_levels) {
        auto& nodes = tree.level_nodes(l);
        const int side = tree.config().patch_side[l];
        parallel_for(nodes.size(), 16, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                if (!nodes[i].leaf) continue;
                const OctreeCube cube = OctreeCube::from_key(l, nodes[i].key);
                nodes[i].patch = sample_patch(nodes[i].surfel, tangent_frame(nodes[i].surfel.normal),
                                              cube, depth, index, side, p);
            }
        });
    }
}

int slot_grid_side(std::size_t count) {
    if (count == 0) return 0;
    int s = 1;
    while (static_cast<std::size_t>(s) * static_cast<std::size_t>(s) < count) s *= 2;
    return s;
}

PackedTextureImage packed_layout(const SurfelOctree& tree, int level) {
    PackedTextureImage out;
    out.level = level;
    out.patch_side = tree.config().patch_side[level];
    out.leaf_count = tree.leaf_count(level);
    out.grid_side = slot_grid_side(out.leaf_count);
    const int w = out.grid_side * out.patch_side;
    out.image = Image(w, w);
    return out;
}

PackedTextureImage pack_patches(const SurfelOctree& tree, int level) {
    PackedTextureImage out = packed_layout(tree, level);
    const int m = out.patch_side;
    std::vector<const TexturePatch*> patches;
    for (const auto& n : tree.level(level)) {
        if (!n.leaf) continue;
        if (n.patch.side != m)
            throw PreconditionError("leaf patch side differs from the level's configured side");
        patches.push_back(&n.patch);
    }
    if (patches.empty()) return out;

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto* p : patches)
        for (const auto& c : p->pixels) mean += c.cast<double>();
    mean /= static_cast<double>(patches.size() * static_cast<std::size_t>(m) * m);
    const Color fill = mean.cast<float>();
    for (auto& px : out.image.pixels) px = fill;

    for (std::size_t k = 0; k < patches.size(); ++k) {
        const Slot2d s = morton_decode_2d(k);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i)
                out.image.at(static_cast<int>(s.col) * m + i, static_cast<int>(s.row) * m + j) =
                    patches[k]->at(i, j);
    }
    return out;
}

std::vector<TexturePatch> unpack_patches(const PackedTextureImage& packed) {
    const int m = packed.patch_side;
    const int w = packed.grid_side * m;
    if (packed.grid_side != slot_grid_side(packed.leaf_count) || packed.image.width != w ||
        packed.image.height != w)
        throw FormatError("packed image does not match its layout");
    std::vector<TexturePatch> out(packed.leaf_count, TexturePatch(m));
    for (std::size_t k = 0; k < out.size(); ++k) {
        const Slot2d s = morton_decode_2d(k);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i)
                out[k].at(i, j) =
                    packed.image.at(static_cast<int>(s.col) * m + i, static_cast<int>(s.row) * m + j);
    }
    return out;
}

void assign_patches(SurfelOctree& tree, const PackedTextureImage& packed) {
    if (packed.leaf_count != tree.leaf_count(packed.level) ||
        packed.patch_side != tree.config().patch_side[packed.level])
        throw FormatError("texture layout disagrees with the decoded geometry");
    auto patches = unpack_patches(packed);
    std::size_t k = 0;
    for (auto& n : tree.level_nodes(packed.level))
        if (n.leaf) n.patch = std::move(patches[k++]);
}

void export_external(const std::vector<PackedTextureImage>& images,
                     const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw Error("cannot write manifest in '" + dir.string() + "'");
    for (const auto& img : images) {
        if (img.leaf_count == 0) continue;
        manifest << img.level << ' ' << img.patch_side << ' ' << img.grid_side << ' '
                 << img.leaf_count << '\n';
        write_png(img.image, dir / ("level_" + std::to_string(img.level) + ".png"));
    }
    if (!manifest) throw Error("manifest write failed");
}

void import_external(SurfelOctree& tree, const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw FormatError("missing manifest in '" + dir.string() + "'");
    std::map<int, PackedTextureImage> listed;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        PackedTextureImage p;
        if (!(ss >> p.level >> p.patch_side >> p.grid_side >> p.leaf_count))
            throw FormatError("malformed manifest line '" + line + "'");
        listed[p.level] = p;
    }
    for (int l : tree.config().leaf_levels) {
        const PackedTextureImage expect = packed_layout(tree, l);
        if (expect.leaf_count == 0) {
            if (listed.count(l)) throw FormatError("manifest lists a level without leaves");
            continue;
        }
        auto it = listed.find(l);
        if (it == listed.end())
            throw FormatError("manifest lacks level " + std::to_string(l));
        const PackedTextureImage& m = it->second;
        if (m.leaf_count != expect.leaf_count || m.patch_side != expect.patch_side ||
            m.grid_side != expect.grid_side)
            throw FormatError("manifest disagrees with the geometry at level " + std::to_string(l));
        PackedTextureImage packed = expect;
        packed.image = read_png(dir / ("level_" + std::to_string(l) + ".png"));
        if (packed.image.width != expect.image.width || packed.image.height != expect.image.height)
            throw FormatError("image size disagrees with the manifest at level " +
                              std::to_string(l));
        assign_patches(tree, packed);
        listed.erase(it);
    }
    if (!listed.empty()) throw FormatError("manifest lists levels the geometry lacks");
}

}  // namespace teso
