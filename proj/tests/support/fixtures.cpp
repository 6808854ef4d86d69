// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "teso/quant/quant.hpp"

namespace teso::fixtures {

Color pattern_color(const Vec3& p) {
    const double a = 0.5 + 0.5 * std::sin(p.x() * 0.05) * std::cos(p.y() * 0.07);
    const double b = 0.5 + 0.5 * std::sin(p.z() * 0.11 + p.x() * 0.03);
    const double c = ((static_cast<long>(std::floor(p.x() / 24.0)) +
                       static_cast<long>(std::floor(p.y() / 24.0)) +
                       static_cast<long>(std::floor(p.z() / 24.0))) & 1)
                         ? 0.8
                         : 0.2;
    return {static_cast<float>(a), static_cast<float>(b), static_cast<float>(c)};
}

PointCloud sphere_shell(double radius, const Vec3& center, int depth) {
    PointCloud cloud;
    cloud.depth = depth;
    const double lo = radius - 0.5, hi = radius + 0.5;
    const long x0 = static_cast<long>(std::floor(center.x() - hi));
    const long x1 = static_cast<long>(std::ceil(center.x() + hi));
    for (long x = x0; x <= x1; ++x)
        for (long y = static_cast<long>(std::floor(center.y() - hi));
             y <= static_cast<long>(std::ceil(center.y() + hi)); ++y)
            for (long z = static_cast<long>(std::floor(center.z() - hi));
                 z <= static_cast<long>(std::ceil(center.z() + hi)); ++z) {
                const Vec3 p(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z));
                const Vec3 d = p - center;
                const double r2 = d.squaredNorm();
                if (r2 < lo * lo || r2 >= hi * hi) continue;
                cloud.positions.push_back(p);
                cloud.normals.push_back(d.normalized());
                cloud.colors.push_back(pattern_color(p));
            }
    return cloud;
}

PointCloud tilted_plane(int side, int depth) {
    PointCloud cloud;
    cloud.depth = depth;
    const Vec3 n = Vec3(-0.3, -0.2, 1.0).normalized();
    for (int x = 0; x < side; ++x)
        for (int y = 0; y < side; ++y) {
            const Vec3 p(x + 300.0, y + 300.0, std::round(0.3 * x + 0.2 * y + 400.0));
            cloud.positions.push_back(p);
            cloud.normals.push_back(n);
            cloud.colors.push_back(pattern_color(p));
        }
    return cloud;
}

PointCloud torus(double major, double minor, const Vec3& center, int depth) {
    PointCloud cloud;
    cloud.depth = depth;
    const double ext = major + minor + 1.0;
    for (long x = static_cast<long>(center.x() - ext); x <= static_cast<long>(center.x() + ext); ++x)
        for (long y = static_cast<long>(center.y() - ext); y <= static_cast<long>(center.y() + ext);
             ++y) {
            const double dx = x - center.x(), dy = y - center.y();
            const double rho = std::hypot(dx, dy);
            if (std::abs(rho - major) > minor + 1.0) continue;
            for (long z = static_cast<long>(center.z() - minor - 1.0);
                 z <= static_cast<long>(center.z() + minor + 1.0); ++z) {
                const double dz = z - center.z();
                const double q = std::hypot(rho - major, dz);
                if (q < minor - 0.5 || q >= minor + 0.5 || rho == 0.0) continue;
                const Vec3 p(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z));
                const Vec3 ring(center.x() + dx / rho * major, center.y() + dy / rho * major,
                                center.z());
                cloud.positions.push_back(p);
                cloud.normals.push_back((p - ring).normalized());
                cloud.colors.push_back(pattern_color(p));
            }
        }
    return cloud;
}


Surfel random_quantized_surfel(std::uint64_t& state, double b) {
    std::mt19937_64 rng(state++);
    const Alphabets a = alphabets(0, 0);  // normal alphabet is level independent
    QuantizedSurfel q;
    for (auto& o : q.offset) o = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * b));
    for (auto& n : q.normal) n = static_cast<int>(rng() % static_cast<std::uint64_t>(a.normal));
    const int rmax = static_cast<int>(std::ceil(std::sqrt(3.0) / 2.0 * b * 16.0));
    q.radius = static_cast<int>(rng() % static_cast<std::uint64_t>(rmax + 1));
    // Lattice normals are not all fixed points of oct quantization; one more
    // round trip lands on one that is.
    return dequantize(quantize(dequantize(q), b));
}

SurfelOctree random_tree(std::uint64_t seed, int depth, int max_children, double leaf_prob,
                         bool patches) {
    const LevelConfig cfg = LevelConfig::defaults(depth);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uint64_t surfel_state = seed * 7919 + 1;
    std::vector<std::vector<SurfelOctree::LeafEntry>> leaves(cfg.l_max() + 1);

    std::vector<std::uint64_t> frontier{0};
    for (int l = 0; l <= cfg.l_max() && !frontier.empty(); ++l) {
        std::vector<std::uint64_t> next;
        for (std::uint64_t key : frontier) {
            const bool leaf = cfg.is_leaf_level(l) && (l == cfg.l_max() || unit(rng) < leaf_prob);
            if (leaf) {
                const double b = std::ldexp(1.0, depth - l);
                leaves[l].push_back({key, random_quantized_surfel(surfel_state, b)});
                continue;
            }
            const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_children));
            std::vector<int> digits{0, 1, 2, 3, 4, 5, 6, 7};
            std::shuffle(digits.begin(), digits.end(), rng);
            std::sort(digits.begin(), digits.begin() + n);
            for (int i = 0; i < n; ++i) next.push_back((key << 3) | static_cast<std::uint64_t>(digits[i]));
        }
        std::sort(next.begin(), next.end());
        frontier = std::move(next);
    }
    for (auto& v : leaves)
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    SurfelOctree tree = SurfelOctree::from_leaves(depth, cfg, std::move(leaves));
    if (patches) {
        for (int l : cfg.leaf_levels)
            for (auto& node : tree.level_nodes(l)) {
                if (!node.leaf) continue;
                node.patch = TexturePatch(cfg.patch_side[l]);
                for (auto& c : node.patch.pixels)
                    c = Color(static_cast<float>(unit(rng)), static_cast<float>(unit(rng)),
                              static_cast<float>(unit(rng)));
            }
    }
    return tree;
}

}  // namespace teso::fixtures
