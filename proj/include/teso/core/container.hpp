// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "teso/core/bytes.hpp"
#include "teso/core/types.hpp"

namespace teso {

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 62;
inline constexpr std::size_t kSectionEntrySize = 10;

enum class TextureCodecId : std::uint8_t { None = 0, InternalDct = 1, ExternalRaw = 2 };

/// Probability model family used by every geometry stream.
enum class GeometryModelId : std::uint8_t { Adaptive = 0, Uniform = 1 };

/// Which previously coded attributes condition normals and radii.
enum class Conditioning : std::uint8_t { None = 0, Offset = 1, OffsetNormal = 2 };

namespace section {
inline constexpr std::uint16_t kBaseOctree = 0x0001;
inline constexpr std::uint16_t kRawTree = 0x0F00;
inline constexpr std::uint16_t occupancy(int level) { return 0x0100 | level; }
inline constexpr std::uint16_t leaf_flags(int level) { return 0x0200 | level; }
inline constexpr std::uint16_t attributes(int level) { return 0x0300 | level; }
inline constexpr std::uint16_t texture(int level) { return 0x0400 | level; }
}  // namespace section

struct BitstreamHeader {
    std::uint16_t version = kFormatVersion;
    std::uint8_t depth = 10;
    std::uint8_t l_min = 6;
    std::uint8_t l_max = 8;
    GeometryModelId geometry_model = GeometryModelId::Adaptive;
    Conditioning conditioning = Conditioning::OffsetNormal;
    TextureCodecId texture_codec = TextureCodecId::None;
    std::uint8_t qt = 0;
    std::uint32_t leaf_level_mask = 0;
    float tau_db = 0.0f;
    float offset_step = 0.5f;
    float normal_step = 1.0f / 64.0f;
    float radius_step = 1.0f / 16.0f;
    std::uint32_t point_count = 0;
    std::array<std::uint8_t, kMaxDepth + 1> patch_side{};

    /// Header for a tree configuration; geometry/texture fields keep defaults.
    static BitstreamHeader for_config(int depth, const LevelConfig& config);
    /// Level configuration described by the header; throws FormatError when
    /// inconsistent.
    LevelConfig level_config() const;

    bool operator==(const BitstreamHeader&) const = default;
};

struct Section {
    std::uint16_t id = 0;
    Bytes data;

    bool operator==(const Section&) const = default;
};

struct Bitstream {
    BitstreamHeader header;
    std::vector<Section> sections;

    const Section* find(std::uint16_t id) const;
    /// Empty span when the section is absent.
    std::span<const std::uint8_t> payload(std::uint16_t id) const;
};

/// Fixed header, section table (id, offset, length) and concatenated
/// payloads. Throws PreconditionError on duplicate ids.
Bytes serialize(const BitstreamHeader& header, std::span<const Section> sections);
inline Bytes serialize(const Bitstream& b) { return serialize(b.header, b.sections); }

/// Inverse of serialize. Unknown section ids are kept as opaque payloads.
/// Throws FormatError on bad magic, unsupported version, truncation or a
/// section table that disagrees with the payload size.
Bitstream parse(std::span<const std::uint8_t> bytes);

}  // namespace teso
