// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "teso/core/errors.hpp"
#include "teso/texture/frame.hpp"
#include "teso/texture/texture.hpp"

using namespace teso;

namespace {

void check_frame(const TangentFrame& f, const Vec3& n) {
    CHECK(std::abs(f.u.dot(f.v)) < 1e-6);
    CHECK(std::abs(f.u.dot(f.n)) < 1e-6);
    CHECK(std::abs(f.v.dot(f.n)) < 1e-6);
    CHECK(std::abs(f.u.norm() - 1) < 1e-6);
    CHECK(std::abs(f.v.norm() - 1) < 1e-6);
    CHECK((f.q * Vec3::UnitZ() - n).norm() < 1e-6);
    CHECK(f.u.cross(f.v).dot(f.n) == doctest::Approx(1.0).epsilon(1e-6));
}

// Horizontal plane z = 100 over [64, 192)^2, colored by a gentle ramp in x.
PointCloud ramp_plane() {
    PointCloud c;
    c.depth = 10;
    for (int x = 64; x < 192; ++x)
        for (int y = 64; y < 192; ++y) {
            c.positions.emplace_back(x, y, 100);
            c.normals.emplace_back(0, 0, 1);
            c.colors.emplace_back(static_cast<float>(x) / 1024.0f, 0.5f, 0.25f);
        }
    return c;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("teso_unit_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("tangent frame examples") {
    TangentFrame f = tangent_frame(Vec3(0, 0, 1));
    CHECK(f.q.w() == 1.0);
    CHECK(f.u == Vec3::UnitX());
    CHECK(f.v == Vec3::UnitY());

    f = tangent_frame(Vec3(0, 0, -1));
    CHECK(f.q.w() == doctest::Approx(0.0));
    CHECK(f.q.x() == doctest::Approx(1.0));
    CHECK((f.u - Vec3::UnitX()).norm() < 1e-12);
    CHECK((f.v + Vec3::UnitY()).norm() < 1e-12);

    f = tangent_frame(Vec3(1, 0, 0));
    const double h = std::sqrt(2.0) / 2;
    CHECK(f.q.w() == doctest::Approx(h));
    CHECK(f.q.x() == doctest::Approx(0.0));
    CHECK(f.q.y() == doctest::Approx(h));
    CHECK(f.q.z() == doctest::Approx(0.0));
    CHECK(f.theta == doctest::Approx(M_PI / 2));
    CHECK((f.q * Vec3::UnitZ() - Vec3(1, 0, 0)).norm() < 1e-12);

    CHECK_THROWS_AS(tangent_frame(Vec3(0, 0, 2)), PreconditionError);
}

TEST_CASE("tangent frames are orthonormal and right handed") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int i = 0; i < 2000; ++i) {
        const Vec3 n = Vec3(g(rng), g(rng), g(rng)).normalized();
        check_frame(tangent_frame(n), n);
    }
    check_frame(tangent_frame(Vec3(0, 0, 1)), Vec3(0, 0, 1));
    check_frame(tangent_frame(Vec3(0, 0, -1)), Vec3(0, 0, -1));
    const Vec3 n = Vec3(0.3, -0.4, 0.2).normalized();
    const TangentFrame a = tangent_frame(n), b = tangent_frame(n);
    CHECK(a.u == b.u);
    CHECK(a.v == b.v);
}

TEST_CASE("patch of a single colored set") {
    PointCloud c = ramp_plane();
    for (auto& col : c.colors) col = Color(0.2f, 0.4f, 0.6f);
    const ColorIndex index(c);
    const OctreeCube cube{6, {7, 7, 6}};  // [112, 128) x [112, 128) x [96, 112)
    Surfel s;
    s.offset = Vec3(8, 8, 4);
    s.normal = Vec3::UnitZ();
    s.radius = 8;
    const TexturePatch p = sample_patch(s, tangent_frame(s.normal), cube, 10, index, 8, {});
    for (const auto& px : p.pixels) CHECK((px - Color(0.2f, 0.4f, 0.6f)).norm() < 1e-6);
}

TEST_CASE("patch from a single point") {
    PointCloud c;
    c.depth = 10;
    c.positions.emplace_back(20, 20, 20);
    c.colors.emplace_back(0.9f, 0.1f, 0.3f);
    c.normals.emplace_back(0, 0, 1);
    const ColorIndex index(c);
    const OctreeCube cube{8, {5, 5, 5}};
    Surfel s;
    s.offset = Vec3(0, 0, 0);
    s.normal = Vec3::UnitZ();
    s.radius = 2;
    const TexturePatch p = sample_patch(s, tangent_frame(s.normal), cube, 10, index, 4, {});
    for (const auto& px : p.pixels) CHECK(px == Color(0.9f, 0.1f, 0.3f));
}

TEST_CASE("ramp patch matches direct interpolation") {
    const PointCloud c = ramp_plane();
    const ColorIndex index(c);
    const OctreeCube cube{7, {15, 15, 12}};  // [120, 128)^2 x [96, 104)
    Surfel s;
    s.offset = Vec3(4, 4, 4);
    s.normal = Vec3::UnitZ();
    s.radius = 4;
    const TangentFrame f = tangent_frame(s.normal);
    const int m = 8;
    const TexturePatch p = sample_patch(s, f, cube, 10, index, m, {});
    const Vec3 center = s.center(cube, 10);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            const Vec3 q = patch_pixel_center(s, f, center, m, i, j);
            // Brute-force inverse-distance blend of the three nearest points.
            std::vector<std::pair<double, std::size_t>> d;
            for (std::size_t k = 0; k < c.size(); ++k)
                d.emplace_back((c.positions[k] - q).norm(), k);
            std::partial_sort(d.begin(), d.begin() + 3, d.end());
            Eigen::Vector3d acc = Eigen::Vector3d::Zero();
            double wsum = 0;
            for (int k = 0; k < 3; ++k) {
                const double w = 1.0 / (1e-6 + d[k].first);
                acc += w * c.colors[d[k].second].cast<double>();
                wsum += w;
            }
            const Color oracle = (acc / wsum).cast<float>();
            CHECK((p.at(i, j) - oracle).cwiseAbs().maxCoeff() < 1e-5);
            CHECK(std::abs(p.at(i, j)[0] - q.x() / 1024.0) <= 1.0 / 255.0);
        }
}

TEST_CASE("plane filter rejects the opposite surface") {
    PointCloud c = ramp_plane();
    const std::size_t n = c.size();
    for (std::size_t k = 0; k < n; ++k) {
        c.positions.push_back(c.positions[k] + Vec3(0, 0, 3));
        c.colors.emplace_back(1.0f, 0.0f, 0.0f);
        c.normals.emplace_back(0, 0, 1);
    }
    const ColorIndex index(c);
    const OctreeCube cube{7, {15, 15, 12}};
    Surfel s;
    s.offset = Vec3(4, 4, 4);
    s.normal = Vec3::UnitZ();
    s.radius = 4;
    const TexturePatch p = sample_patch(s, tangent_frame(s.normal), cube, 10, index, 8, {});
    for (const auto& px : p.pixels) CHECK(px[0] < 0.2f);
}

TEST_CASE("slot grid side") {
    CHECK(slot_grid_side(0) == 0);
    CHECK(slot_grid_side(1) == 1);
    CHECK(slot_grid_side(4) == 2);
    CHECK(slot_grid_side(5) == 4);
    CHECK(slot_grid_side(17) == 8);
}

TEST_CASE("pack layout follows the 2d morton order") {
    std::vector<std::vector<SurfelOctree::LeafEntry>> leaves(9);
    for (std::uint64_t k = 0; k < 4; ++k) leaves[8].push_back({k, Surfel{Vec3::Constant(1), Vec3::UnitZ(), 1.0}});
    SurfelOctree t = SurfelOctree::from_leaves(10, LevelConfig::defaults(10), leaves);
    float shade = 0.1f;
    for (auto& n : t.level_nodes(8)) {
        n.patch = TexturePatch(4, Color::Constant(shade));
        shade += 0.2f;
    }
    const PackedTextureImage img = pack_patches(t, 8);
    CHECK(img.grid_side == 2);
    CHECK(img.image.width == 8);
    CHECK(img.image.height == 8);
    // Slot 3 is the fourth leaf, at column 1, row 1.
    CHECK(img.image.at(4, 4)[0] == doctest::Approx(0.7f));
    CHECK(img.image.at(4, 0)[0] == doctest::Approx(0.3f));
    CHECK(img.image.at(0, 4)[0] == doctest::Approx(0.5f));

    const PackedTextureImage one = pack_patches(t, 7);
    CHECK(one.grid_side == 0);
}

TEST_CASE("unused slots hold the mean color") {
    std::vector<std::vector<SurfelOctree::LeafEntry>> leaves(9);
    for (std::uint64_t k = 0; k < 3; ++k) leaves[8].push_back({k, Surfel{Vec3::Constant(1), Vec3::UnitZ(), 1.0}});
    SurfelOctree t = SurfelOctree::from_leaves(10, LevelConfig::defaults(10), leaves);
    const float shades[3] = {0.0f, 0.3f, 0.9f};
    int i = 0;
    for (auto& n : t.level_nodes(8)) n.patch = TexturePatch(4, Color::Constant(shades[i++]));
    const PackedTextureImage img = pack_patches(t, 8);
    CHECK(img.image.at(7, 7)[0] == doctest::Approx(0.4f));
}

TEST_CASE("pack and unpack are inverse") {
    const SurfelOctree t = fixtures::random_tree(21, 10, 4, 0.4, true);
    for (int l : t.config().leaf_levels) {
        const PackedTextureImage img = pack_patches(t, l);
        CHECK(img.grid_side * img.grid_side >= static_cast<int>(img.leaf_count));
        const auto patches = unpack_patches(img);
        std::size_t k = 0;
        for (const auto& n : t.level(l))
            if (n.leaf) CHECK(patches[k++] == n.patch);
        SurfelOctree copy = t;
        for (auto& n : copy.level_nodes(l)) n.patch = {};
        assign_patches(copy, img);
        CHECK(copy == t);
    }
    SurfelOctree mixed = t;
    for (auto& n : mixed.level_nodes(8))
        if (n.leaf) {
            n.patch = TexturePatch(3);
            break;
        }
    CHECK_THROWS_AS(pack_patches(mixed, 8), PreconditionError);
}

TEST_CASE("external export round trip and manifest checks") {
    const SurfelOctree t = fixtures::random_tree(4, 10, 3, 0.4, true);
    std::vector<PackedTextureImage> images;
    for (int l : t.config().leaf_levels) images.push_back(pack_patches(t, l));
    const auto dir = temp_dir("external");
    export_external(images, dir);
    SurfelOctree back = t;
    for (int l : t.config().leaf_levels)
        for (auto& n : back.level_nodes(l)) n.patch = {};
    import_external(back, dir);
    // PNG stores 8 bits per channel.
    for (int l : t.config().leaf_levels)
        for (std::size_t i = 0; i < t.level(l).size(); ++i) {
            const auto& a = t.level(l)[i].patch;
            const auto& b = back.level(l)[i].patch;
            REQUIRE(a.side == b.side);
            for (std::size_t p = 0; p < a.pixels.size(); ++p)
                CHECK((a.pixels[p] - b.pixels[p]).cwiseAbs().maxCoeff() <= 0.5f / 255.0f + 1e-6f);
        }
    // Second import of the exported files is exact.
    SurfelOctree again = back;
    import_external(again, dir);
    CHECK(again == back);

    std::ifstream in(dir / "manifest.txt");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find('\n');
    std::string bad = text;
    std::ofstream(dir / "manifest.txt") << "8 4 2 99999\n" << text.substr(pos + 1);
    CHECK_THROWS_AS(import_external(again, dir), FormatError);
    std::filesystem::remove_all(dir);
}
