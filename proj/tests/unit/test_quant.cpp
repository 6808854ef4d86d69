// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "teso/core/errors.hpp"
#include "teso/quant/quant.hpp"

using namespace teso;

TEST_CASE("offset quantizer") {
    CHECK(quantize_offset(Vec3(0, 0, 0), 16)[0] == 0);
    CHECK(dequantize_offset({0, 0, 0})[0] == 0.25);
    CHECK(quantize_offset(Vec3(3.2, 0, 0), 16)[0] == 6);
    CHECK(dequantize_offset({6, 0, 0})[0] == 3.25);
    const double b = 16;
    const double edge = std::nextafter(b, 0.0);
    CHECK(quantize_offset(Vec3(edge, 0, 0), b)[0] == 2 * b - 1);
    CHECK(dequantize_offset({31, 0, 0})[0] == b - 0.25);
    CHECK_THROWS_AS(quantize_offset(Vec3(b, 0, 0), b), PreconditionError);
    CHECK_THROWS_AS(quantize_offset(Vec3(-0.1, 0, 0), b), PreconditionError);
}

TEST_CASE("octahedral mapping examples") {
    Eigen::Vector2d uv = oct_encode(Vec3(0, 0, 1));
    CHECK(uv[0] == 0.0);
    CHECK(uv[1] == 0.0);
    CHECK((oct_decode(0, 0) - Vec3(0, 0, 1)).norm() < 1e-12);

    const Vec3 diag(1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0);
    uv = oct_encode(diag);
    CHECK(uv[0] == doctest::Approx(0.5));
    CHECK(uv[1] == doctest::Approx(0.5));
    CHECK((oct_decode(uv[0], uv[1]) - diag).norm() < 1e-9);

    uv = oct_encode(Vec3(0, 0, -1));
    CHECK(uv[0] == 1.0);
    CHECK(uv[1] == 1.0);
    CHECK((oct_decode(1, 1) - Vec3(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("normal component quantizer") {
    CHECK(quantize_normal_component(-1.0) == 0);
    CHECK(dequantize_normal_component(0) == -1.0);
    CHECK(quantize_normal_component(0.013) == 65);
    CHECK(dequantize_normal_component(65) == 0.015625);
    CHECK(quantize_normal_component(1.0) == 128);
    CHECK(dequantize_normal_component(128) == 1.0);
    CHECK(alphabets(6, 10).normal == 129);
}

TEST_CASE("radius quantizer") {
    CHECK(quantize_radius(0.5, 16) == 8);
    CHECK(dequantize_radius(8) == 0.53125);
    CHECK(quantize_radius(1e-9, 16) == 0);
    CHECK(dequantize_radius(0) == 1.0 / 32);
    CHECK(quantize_radius(std::sqrt(3.0) / 2 * 16, 16) == 221);
    CHECK(alphabets(6, 10).radius == 223);
    CHECK(alphabets(6, 10).offset == 32);
    CHECK(alphabets(8, 10).offset == 8);
}

TEST_CASE("quantizers are idempotent") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20000; ++i) {
        const double b = std::ldexp(1.0, 2 + static_cast<int>(rng() % 4));
        Surfel s;
        s.offset = Vec3(u(rng), u(rng), u(rng)) * b * 0.999999;
        s.normal = Vec3(g(rng), g(rng), g(rng)).normalized();
        if (i % 7 == 0) s.normal = Vec3(0, (i % 2) ? 1.0 : -1.0, i % 3 ? -0.0 : 0.0).normalized();
        s.radius = 1e-3 + u(rng) * std::sqrt(3.0) / 2 * b;
        const QuantizedSurfel q = quantize(s, b);
        const Surfel d = dequantize(q);
        REQUIRE(quantize(d, b) == q);
        REQUIRE(std::abs(d.normal.norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("octahedral angular error over random normals") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const Vec3 n = Vec3(g(rng), g(rng), g(rng)).normalized();
        const auto q = quantize_normal(n);
        const Vec3 r = oct_decode(dequantize_normal_component(q[0]), dequantize_normal_component(q[1]));
        worst = std::max(worst, std::acos(std::clamp(n.dot(r), -1.0, 1.0)) * 180.0 / M_PI);
    }
    CHECK(worst <= 1.5);
}

TEST_CASE("quantize_tree keeps structure") {
    const SurfelOctree t = fixtures::random_tree(8, 10, 3, 0.4, true);
    const SurfelOctree q = quantize_tree(t);
    CHECK(q == t);  // already on the lattice
    CHECK_NOTHROW(q.validate());
}
