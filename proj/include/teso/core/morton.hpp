// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "teso/core/types.hpp"

namespace teso {

/// Interleaves coords into a Morton key. Each level contributes one octal
/// digit (x_bit << 2) | (y_bit << 1) | z_bit, most significant level first.
/// Throws RangeError for level > kMaxDepth or coords outside [0, 2^level).
std::uint64_t morton_encode(const Coord& coords, int level);
Coord morton_decode(std::uint64_t index, int level);

/// Unchecked variants for hot loops.
std::uint64_t morton_encode_unchecked(const Coord& coords) noexcept;
Coord morton_decode_unchecked(std::uint64_t index) noexcept;

/// 2D Morton de-interleave used for slot layouts: even bits -> col,
/// odd bits -> row.
struct Slot2d {
    std::uint32_t col;
    std::uint32_t row;
};
Slot2d morton_decode_2d(std::uint64_t index) noexcept;
std::uint64_t morton_encode_2d(std::uint32_t col, std::uint32_t row) noexcept;

inline std::uint64_t parent_key(std::uint64_t key) noexcept { return key >> 3; }
inline int child_digit(std::uint64_t key) noexcept { return static_cast<int>(key & 7u); }

}  // namespace teso
