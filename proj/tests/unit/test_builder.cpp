// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "teso/builder/builder.hpp"
#include "teso/core/errors.hpp"
#include "teso/core/parallel.hpp"
#include "teso/evalkit/evalkit.hpp"

using namespace teso;

namespace {

PointCloud flat_cloud(int x0, int y0, int side, int z) {
    PointCloud c;
    c.depth = 10;
    for (int x = x0; x < x0 + side; ++x)
        for (int y = y0; y < y0 + side; ++y) {
            c.positions.emplace_back(x, y, z);
            c.colors.emplace_back(0.5f, 0.5f, 0.5f);
            c.normals.emplace_back(0, 0, 1);
        }
    return c;
}

double degrees(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(a.dot(b), -1.0, 1.0)) * 180.0 / M_PI;
}

// Leaf cube lookup for the partition check.
bool covered_once(const SurfelOctree& t, const Vec3& p) {
    int hits = 0;
    t.for_each_leaf([&](int l, const OctreeNode& n) {
        if (OctreeCube::from_key(l, n.key).contains(p, t.depth())) ++hits;
    });
    return hits == 1;
}

}  // namespace

TEST_CASE("normals on a plane") {
    PointCloud c = flat_cloud(10, 10, 30, 5);
    c.normals.clear();
    NormalEstimationReport rep;
    const PointCloud n = estimate_normals(c, 8, &rep);
    for (const auto& v : n.normals) CHECK((v - Vec3::UnitZ()).norm() < 1e-9);
    CHECK(rep.degenerate == 0);
    CHECK(rep.components == 1);
}

TEST_CASE("normals on a sphere point outwards") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    PointCloud c;
    c.depth = 10;
    const Vec3 center(500, 500, 500);
    for (int i = 0; i < 10000; ++i) {
        c.positions.push_back(center + 100.0 * Vec3(g(rng), g(rng), g(rng)).normalized());
        c.colors.emplace_back(0, 0, 0);
    }
    const PointCloud n = estimate_normals(c, 16);
    double worst = 0;
    for (std::size_t i = 0; i < n.size(); ++i)
        worst = std::max(worst, degrees(n.normals[i], (n.positions[i] - center).normalized()));
    CHECK(worst <= 5.0);
}

TEST_CASE("degenerate neighborhoods") {
    PointCloud c;
    c.depth = 10;
    for (int i = 0; i < 3; ++i) {
        c.positions.emplace_back(10 + i, 10, 10);
        c.colors.emplace_back(0, 0, 0);
    }
    NormalEstimationReport rep;
    const PointCloud n = estimate_normals(c, 2, &rep);
    for (const auto& v : n.normals) CHECK(v == Vec3::UnitZ());
    CHECK(rep.degenerate == 3);
    CHECK_THROWS_AS(estimate_normals(c, 3), PreconditionError);
}

TEST_CASE("fit_surfel examples") {
    const OctreeCube cube{6, {2, 3, 4}};
    const double b = 16, sigma = 4;
    const Vec3 a = cube.anchor(10);
    {
        const std::vector<Vec3> pts{a + Vec3(8, 8, 8)};
        const std::vector<Vec3> nrm{Vec3::UnitZ()};
        const Surfel s = fit_surfel(pts, nrm, cube, 10, sigma);
        CHECK(s.offset == Vec3(8, 8, 8));
        CHECK(s.radius == sigma / 2);
    }
    {
        const std::vector<Vec3> pts{a + Vec3(3, 8, 8), a + Vec3(13, 8, 8)};
        const std::vector<Vec3> nrm{Vec3::UnitY(), Vec3::UnitY()};
        const Surfel s = fit_surfel(pts, nrm, cube, 10, sigma);
        CHECK(s.offset == Vec3(8, 8, 8));
        CHECK(s.radius == 5.0);
        CHECK(s.normal == Vec3::UnitY());
    }
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0, b);
        std::normal_distribution<double> g(0, 0.05);
        const Vec3 pn = Vec3(0.2, -0.3, 1).normalized();
        const Vec3 t1 = pn.unitOrthogonal(), t2 = pn.cross(t1);
        std::vector<Vec3> pts, nrm;
        const Vec3 mid = a + Vec3::Constant(b / 2);
        while (pts.size() < 1000) {
            const Vec3 p = mid + (u(rng) - b / 2) * t1 + (u(rng) - b / 2) * t2;
            if (!cube.contains(p, 10)) continue;
            pts.push_back(p);
            nrm.push_back((pn + Vec3(g(rng), g(rng), g(rng))).normalized());
        }
        const Surfel s = fit_surfel(pts, nrm, cube, 10, sigma);
        CHECK(degrees(s.normal, pn) <= 2.0);
        CHECK(s.radius <= std::sqrt(3.0) / 2 * b);
    }
    {
        // Opposite normals cancel; the covariance fallback finds the plane.
        std::vector<Vec3> pts, nrm;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                pts.push_back(a + Vec3(i, j, 5));
                nrm.push_back((i + j) % 2 ? Vec3::UnitZ() : Vec3(-Vec3::UnitZ()));
            }
        const Surfel s = fit_surfel(pts, nrm, cube, 10, sigma);
        CHECK((s.normal - Vec3::UnitZ()).norm() < 1e-9);
    }
}

TEST_CASE("split decision examples") {
    const OctreeCube cube{6, {10, 10, 10}};
    const Vec3 a = cube.anchor(10);
    std::vector<Vec3> flat, two;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            flat.push_back(a + Vec3(i, j, 8));
            two.push_back(a + Vec3(i, j, 6));
            two.push_back(a + Vec3(i, j, 10));
        }
    Surfel s;
    s.offset = Vec3(7.5, 7.5, 8);
    s.normal = Vec3::UnitZ();
    s.radius = 11;
    CHECK(split_decision(flat, s, cube, 10, 66));
    CHECK(surfel_d1_mse(flat, s, cube, 10, 1.0) <= 0.5);
    CHECK_FALSE(split_decision(two, s, cube, 10, 66));
    CHECK(surfel_d1_mse(two, s, cube, 10, 1.0) >= 4.0);
    CHECK(split_decision(two, s, cube, 10, 40));
    const std::vector<Vec3> one{a + Vec3(3, 3, 3)};
    const Surfel lone{Vec3(3, 3, 3), Vec3::UnitZ(), 2};
    CHECK_FALSE(split_decision(one, lone, cube, 10, 66));
    CHECK(split_decision(one, lone, cube, 10, 50));
}

TEST_CASE("grid samples stay on the disk and in the cube") {
    const OctreeCube cube{7, {3, 3, 3}};
    const Surfel s{Vec3(4, 4, 4), Vec3(1, 1, 1).normalized(), 6.0};
    const auto pts = surfel_grid_samples(s, cube, 10, 1.0);
    CHECK(!pts.empty());
    const Vec3 p = s.center(cube, 10);
    for (const auto& q : pts) {
        CHECK(std::abs((q - p).dot(s.normal)) < 1e-9);
        CHECK((q - p).norm() <= s.radius + 1e-9);
        CHECK(cube.distance(q, 10) == 0.0);
    }
}

TEST_CASE("build edge cases") {
    PointCloud empty;
    empty.depth = 10;
    CHECK(build_teso(empty, BuildConfig::defaults(10)).empty());
    PointCloud c = flat_cloud(0, 0, 4, 4);
    c.normals.clear();
    CHECK_THROWS_AS(build_teso(c, BuildConfig::defaults(10)), PreconditionError);
}

TEST_CASE("a flat level-6 cube stays one leaf") {
    const PointCloud c = flat_cloud(64, 128, 16, 200);
    const SurfelOctree t = build_teso(c, BuildConfig::defaults(10, 60));
    CHECK(t.leaf_count() == 1);
    CHECK(t.leaf_count(6) == 1);
}

TEST_CASE("build invariants on fixtures") {
    const PointCloud c = fixtures::torus(60, 12);
    std::size_t last = 0;
    for (double tau : {60.0, 62.0, 64.0, 66.0}) {
        const SurfelOctree t = build_teso(c, BuildConfig::defaults(10, tau));
        CHECK_NOTHROW(t.validate());
        CHECK(t.leaf_count() >= last);
        last = t.leaf_count();
        for (std::size_t i = 0; i < c.size(); i += 7) REQUIRE(covered_once(t, c.positions[i]));
        // No empty leaf and every leaf above l_max passes its own decision.
        t.for_each_leaf([&](int l, const OctreeNode& n) {
            const OctreeCube cube = OctreeCube::from_key(l, n.key);
            std::vector<Vec3> pts;
            for (const auto& p : c.positions)
                if (cube.contains(p, 10)) pts.push_back(p);
            // Points claimed by a coarser leaf do not count for finer cubes.
            if (l < t.l_max()) CHECK(split_decision(pts, n.surfel, cube, 10, tau));
            CHECK(!pts.empty());
        });
    }
}

TEST_CASE("build is independent of the worker count") {
    const PointCloud c = fixtures::sphere_shell(60);
    set_thread_count(1);
    const SurfelOctree a = build_teso(c, BuildConfig::defaults(10, 64));
    set_thread_count(4);
    const SurfelOctree b = build_teso(c, BuildConfig::defaults(10, 64));
    set_thread_count(0);
    CHECK(a == b);
    CHECK(build_teso(c, BuildConfig::defaults(10, 64)) == a);
}

TEST_CASE("large sphere leaves meet the threshold") {
    const PointCloud c = fixtures::sphere_shell(400);
    const SurfelOctree t = build_teso(c, BuildConfig::defaults(10, 66));
    std::size_t checked = 0;
    t.for_each_leaf([&](int l, const OctreeNode& n) {
        if (l == t.l_max()) return;
        const OctreeCube cube = OctreeCube::from_key(l, n.key);
        const auto samples = surfel_grid_samples(n.surfel, cube, 10, 1.0);
        std::vector<Vec3> pts;
        const Vec3 lo = cube.anchor(10);
        const double b = cube.width(10);
        for (double x = lo.x(); x < lo.x() + b; ++x)
            for (double y = lo.y(); y < lo.y() + b; ++y)
                for (double z = lo.z(); z < lo.z() + b; ++z) {
                    const Vec3 p(x, y, z);
                    const double r = (p - fixtures::kCenter).norm();
                    if (r >= 399.5 && r < 400.5) pts.push_back(p);
                }
        REQUIRE(!pts.empty());
        CHECK(d1_psnr(samples, pts, 1023.0) >= 66.0);
        ++checked;
    });
    MESSAGE("leaves above l_max: " << checked);
}
