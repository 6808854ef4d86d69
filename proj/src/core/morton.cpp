// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/core/morton.hpp"

#include <string>

#include "teso/core/errors.hpp"

namespace teso {
namespace {

// Spreads the low 21 bits of v so that bit i lands on bit 3i.
std::uint64_t spread3(std::uint64_t v) noexcept {
    v &= 0x1fffff;
    v = (v | v << 32) & 0x1f00000000ffffULL;
    v = (v | v << 16) & 0x1f0000ff0000ffULL;
    v = (v | v << 8) & 0x100f00f00f00f00fULL;
    v = (v | v << 4) & 0x10c30c30c30c30c3ULL;
    v = (v | v << 2) & 0x1249249249249249ULL;
    return v;
}

std::uint64_t compact3(std::uint64_t v) noexcept {
    v &= 0x1249249249249249ULL;
    v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ULL;
    v = (v ^ (v >> 4)) & 0x100f00f00f00f00fULL;
    v = (v ^ (v >> 8)) & 0x1f0000ff0000ffULL;
    v = (v ^ (v >> 16)) & 0x1f00000000ffffULL;
    v = (v ^ (v >> 32)) & 0x1fffff;
    return v;
}

std::uint64_t spread2(std::uint64_t v) noexcept {
    v &= 0xffffffff;
    v = (v | v << 16) & 0x0000ffff0000ffffULL;
    v = (v | v << 8) & 0x00ff00ff00ff00ffULL;
    v = (v | v << 4) & 0x0f0f0f0f0f0f0f0fULL;
    v = (v | v << 2) & 0x3333333333333333ULL;
    v = (v | v << 1) & 0x5555555555555555ULL;
    return v;
}

std::uint32_t compact2(std::uint64_t v) noexcept {
    v &= 0x5555555555555555ULL;
    v = (v ^ (v >> 1)) & 0x3333333333333333ULL;
    v = (v ^ (v >> 2)) & 0x0f0f0f0f0f0f0f0fULL;
    v = (v ^ (v >> 4)) & 0x00ff00ff00ff00ffULL;
    v = (v ^ (v >> 8)) & 0x0000ffff0000ffffULL;
    v = (v ^ (v >> 16)) & 0x00000000ffffffffULL;
    return static_cast<std::uint32_t>(v);
}

void check_level(int level) {
    if (level < 0 || level > kMaxDepth)
        throw RangeError("morton: level " + std::to_string(level) + " outside [0, 21]");
}

}  // namespace

std::uint64_t morton_encode_unchecked(const Coord& c) noexcept {
    return (spread3(c[0]) << 2) | (spread3(c[1]) << 1) | spread3(c[2]);
}

Coord morton_decode_unchecked(std::uint64_t index) noexcept {
    return {static_cast<std::uint32_t>(compact3(index >> 2)),
            static_cast<std::uint32_t>(compact3(index >> 1)),
            static_cast<std::uint32_t>(compact3(index))};
}

std::uint64_t morton_encode(const Coord& coords, int level) {
    check_level(level);
    const std::uint64_t limit = std::uint64_t{1} << level;
    for (auto c : coords)
        if (c >= limit)
            throw RangeError("morton: coordinate " + std::to_string(c) + " outside level " +
                             std::to_string(level));
    return morton_encode_unchecked(coords);
}

Coord morton_decode(std::uint64_t index, int level) {
    check_level(level);
    if (level < kMaxDepth && (index >> (3 * level)) != 0)
        throw RangeError("morton: index " + std::to_string(index) + " outside level " +
                         std::to_string(level));
    return morton_decode_unchecked(index);
}

Slot2d morton_decode_2d(std::uint64_t index) noexcept {
    return {compact2(index), compact2(index >> 1)};
}

std::uint64_t morton_encode_2d(std::uint32_t col, std::uint32_t row) noexcept {
    return spread2(col) | (spread2(row) << 1);
}

}  // namespace teso
