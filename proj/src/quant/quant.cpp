// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/quant/quant.hpp"

#include <algorithm>
#include <cmath>

#include "teso/core/errors.hpp"

namespace teso {
namespace {

constexpr int kNormalMaxIndex = 128;

double sgn(double x) { return std::signbit(x) ? -1.0 : 1.0; }

int radius_max_index(double b) {
    return static_cast<int>(std::ceil(std::sqrt(3.0) / 2.0 * b / kRadiusStep));
}

}  // namespace

Alphabets alphabets(int level, int depth) {
    const double b = std::ldexp(1.0, depth - level);
    return {static_cast<int>(2 * b), kNormalMaxIndex + 1, radius_max_index(b) + 1};
}

std::array<int, 3> quantize_offset(const Vec3& offset, double b) {
    std::array<int, 3> idx{};
    for (int k = 0; k < 3; ++k) {
        if (!(offset[k] >= 0.0 && offset[k] < b))
            throw PreconditionError("offset component outside [0, b)");
        idx[k] = std::min(static_cast<int>(std::floor(offset[k] / kOffsetStep)),
                          static_cast<int>(2 * b) - 1);
    }
    return idx;
}

Vec3 dequantize_offset(const std::array<int, 3>& index) {
    return {(index[0] + 0.5) * kOffsetStep, (index[1] + 0.5) * kOffsetStep,
            (index[2] + 0.5) * kOffsetStep};
}

Eigen::Vector2d oct_encode(const Vec3& n) {
    const double l1 = std::abs(n[0]) + std::abs(n[1]) + std::abs(n[2]);
    const double px = n[0] / l1, py = n[1] / l1;
    if (n[2] >= 0.0) return {px, py};
    return {(1.0 - std::abs(py)) * sgn(px), (1.0 - std::abs(px)) * sgn(py)};
}

Vec3 oct_decode(double u, double v) {
    Vec3 n(u, v, 1.0 - std::abs(u) - std::abs(v));
    if (n[2] < 0.0) {
        n[0] = (1.0 - std::abs(v)) * sgn(u);
        n[1] = (1.0 - std::abs(u)) * sgn(v);
    }
    return n / n.norm();
}

int quantize_normal_component(double u) {
    const long i = std::lround((u + 1.0) / kNormalStep);
    return static_cast<int>(std::clamp(i, 0L, static_cast<long>(kNormalMaxIndex)));
}

double dequantize_normal_component(int index) { return index * kNormalStep - 1.0; }

int quantize_radius(double r, double b) {
    const int i = static_cast<int>(std::floor(r / kRadiusStep));
    return std::clamp(i, 0, radius_max_index(b));
}

double dequantize_radius(int index) { return (index + 0.5) * kRadiusStep; }

std::array<int, 2> quantize_normal(const Vec3& n) {
    const Eigen::Vector2d uv = oct_encode(n);
    std::array<int, 2> best{quantize_normal_component(uv[0]), quantize_normal_component(uv[1])};
    double best_dot = n.dot(oct_decode(dequantize_normal_component(best[0]),
                                       dequantize_normal_component(best[1])));
    int lo[2];
    for (int k = 0; k < 2; ++k)
        lo[k] = std::clamp(static_cast<int>(std::floor((uv[k] + 1.0) / kNormalStep)), 0,
                           kNormalMaxIndex);
    for (int c = 0; c < 4; ++c) {
        const std::array<int, 2> cand{std::min(lo[0] + (c & 1), kNormalMaxIndex),
                                      std::min(lo[1] + (c >> 1), kNormalMaxIndex)};
        const double d = n.dot(oct_decode(dequantize_normal_component(cand[0]),
                                          dequantize_normal_component(cand[1])));
        if (d > best_dot) {
            best_dot = d;
            best = cand;
        }
    }
    return best;
}

QuantizedSurfel quantize(const Surfel& s, double b) {
    QuantizedSurfel q;
    q.offset = quantize_offset(s.offset, b);
    q.normal = quantize_normal(s.normal);
    q.radius = quantize_radius(s.radius, b);
    return q;
}

Surfel dequantize(const QuantizedSurfel& q) {
    Surfel s;
    s.offset = dequantize_offset(q.offset);
    s.normal = oct_decode(dequantize_normal_component(q.normal[0]),
                          dequantize_normal_component(q.normal[1]));
    s.radius = dequantize_radius(q.radius);
    return s;
}

SurfelOctree quantize_tree(const SurfelOctree& tree) {
    SurfelOctree out = tree;
    if (tree.empty()) return out;
    for (int l = 0; l <= tree.l_max(); ++l) {
        const double b = std::ldexp(1.0, tree.depth() - l);
        for (auto& node : out.level_nodes(l))
            if (node.leaf) node.surfel = dequantize(quantize(node.surfel, b));
    }
    return out;
}

}  // namespace teso
