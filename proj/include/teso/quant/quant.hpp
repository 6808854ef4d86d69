// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include <Eigen/Core>

#include "teso/core/types.hpp"

namespace teso {

inline constexpr double kOffsetStep = 0.5;
inline constexpr double kNormalStep = 1.0 / 64.0;
inline constexpr double kRadiusStep = 1.0 / 16.0;

/// Integer-coded leaf attributes.
struct QuantizedSurfel {
    std::array<int, 3> offset{0, 0, 0};
    std::array<int, 2> normal{0, 0};  // octahedral (u, v) lattice indices
    int radius = 0;

    bool operator==(const QuantizedSurfel&) const = default;
};

/// Alphabet sizes for one level: 2b offset bins, 129 normal lattice points
/// and ceil(16 * sqrt(3)/2 * b) + 1 radius bins.
struct Alphabets {
    int offset = 0;
    int normal = 0;
    int radius = 0;
};
Alphabets alphabets(int level, int depth);

/// floor(delta / 0.5) per component. Throws PreconditionError unless every
/// component lies in [0, b).
std::array<int, 3> quantize_offset(const Vec3& offset, double b);
Vec3 dequantize_offset(const std::array<int, 3>& index);

/// Octahedral projection onto [-1, 1]^2. The sign function follows the sign
/// bit, so -0 maps to -1; this keeps encode(decode(u, v)) on the same lattice
/// point at the folded edges.
Eigen::Vector2d oct_encode(const Vec3& n);
Vec3 oct_decode(double u, double v);

/// round((u + 1) * 64) clamped to [0, 128].
int quantize_normal_component(double u);
double dequantize_normal_component(int index);

/// floor(16 r), clamped to the level's alphabet.
int quantize_radius(double r, double b);
double dequantize_radius(int index);

/// Lattice indices of the four around oct_encode(n) whose decoded normal is
/// closest in angle; plain rounding is kept on ties.
std::array<int, 2> quantize_normal(const Vec3& n);

QuantizedSurfel quantize(const Surfel& s, double b);
Surfel dequantize(const QuantizedSurfel& q);

/// Replaces every leaf surfel by dequantize(quantize(.)); patches are kept.
SurfelOctree quantize_tree(const SurfelOctree& tree);

}  // namespace teso
