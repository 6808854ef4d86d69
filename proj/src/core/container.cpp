// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/core/container.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include "teso/core/errors.hpp"

namespace teso {
namespace {
constexpr std::array<std::uint8_t, 4> kMagic{'T', 'E', 'S', 'O'};
}

BitstreamHeader BitstreamHeader::for_config(int depth, const LevelConfig& config) {
    config.validate(depth);
    BitstreamHeader h;
    h.depth = static_cast<std::uint8_t>(depth);
    h.l_min = static_cast<std::uint8_t>(config.l_min());
    h.l_max = static_cast<std::uint8_t>(config.l_max());
    h.leaf_level_mask = 0;
    for (int l : config.leaf_levels) {
        h.leaf_level_mask |= 1u << l;
        h.patch_side[l] = static_cast<std::uint8_t>(config.patch_side[l]);
    }
    return h;
}

LevelConfig BitstreamHeader::level_config() const {
    if (depth < 1 || depth > kMaxDepth) throw FormatError("header: unsupported depth");
    if (leaf_level_mask == 0 || (leaf_level_mask >> (depth + 1)) != 0)
        throw FormatError("header: invalid leaf level mask");
    LevelConfig cfg;
    for (int l = 0; l <= depth; ++l) {
        if (leaf_level_mask & (1u << l)) {
            if (patch_side[l] == 0) throw FormatError("header: missing patch side");
            cfg.leaf_levels.push_back(l);
            cfg.patch_side[l] = patch_side[l];
        }
    }
    if (cfg.l_min() != l_min || cfg.l_max() != l_max)
        throw FormatError("header: l_min/l_max disagree with the leaf level mask");
    return cfg;
}

const Section* Bitstream::find(std::uint16_t id) const {
    for (const auto& s : sections)
        if (s.id == id) return &s;
    return nullptr;
}

std::span<const std::uint8_t> Bitstream::payload(std::uint16_t id) const {
    const Section* s = find(id);
    return s ? std::span<const std::uint8_t>(s->data) : std::span<const std::uint8_t>();
}

Bytes serialize(const BitstreamHeader& h, std::span<const Section> sections) {
    std::set<std::uint16_t> ids;
    for (const auto& s : sections)
        if (!ids.insert(s.id).second)
            throw PreconditionError("duplicate section id " + std::to_string(s.id));
    if (sections.size() > std::numeric_limits<std::uint16_t>::max())
        throw PreconditionError("too many sections");

    Bytes out;
    ByteWriter w(out);
    w.put_bytes(kMagic);
    w.put<std::uint16_t>(h.version);
    w.put<std::uint8_t>(h.depth);
    w.put<std::uint8_t>(h.l_min);
    w.put<std::uint8_t>(h.l_max);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(h.geometry_model));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(h.conditioning));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(h.texture_codec));
    w.put<std::uint8_t>(h.qt);
    w.put<std::uint8_t>(0);
    w.put<std::uint32_t>(h.leaf_level_mask);
    w.put<float>(h.tau_db);
    w.put<float>(h.offset_step);
    w.put<float>(h.normal_step);
    w.put<float>(h.radius_step);
    w.put<std::uint32_t>(h.point_count);
    w.put_bytes(h.patch_side);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(sections.size()));

    std::uint64_t offset = 0;
    for (const auto& s : sections) {
        if (s.data.size() > std::numeric_limits<std::uint32_t>::max() ||
            offset > std::numeric_limits<std::uint32_t>::max())
            throw PreconditionError("section too large");
        w.put<std::uint16_t>(s.id);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(offset));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(s.data.size()));
        offset += s.data.size();
    }
    for (const auto& s : sections) w.put_bytes(s.data);
    return out;
}

Bitstream parse(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < kMagic.size() ||
        !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw FormatError("bad magic");
    r.get_bytes(4);

    Bitstream b;
    BitstreamHeader& h = b.header;
    h.version = r.get<std::uint16_t>();
    if (h.version != kFormatVersion)
        throw FormatError("unsupported version " + std::to_string(h.version));
    h.depth = r.get<std::uint8_t>();
    h.l_min = r.get<std::uint8_t>();
    h.l_max = r.get<std::uint8_t>();
    const auto model = r.get<std::uint8_t>();
    const auto cond = r.get<std::uint8_t>();
    const auto tex = r.get<std::uint8_t>();
    if (model > 1) throw FormatError("unknown geometry model id");
    if (cond > 2) throw FormatError("unknown conditioning mode");
    if (tex > 2) throw FormatError("unknown texture codec id");
    h.geometry_model = static_cast<GeometryModelId>(model);
    h.conditioning = static_cast<Conditioning>(cond);
    h.texture_codec = static_cast<TextureCodecId>(tex);
    h.qt = r.get<std::uint8_t>();
    r.get<std::uint8_t>();
    h.leaf_level_mask = r.get<std::uint32_t>();
    h.tau_db = r.get<float>();
    h.offset_step = r.get<float>();
    h.normal_step = r.get<float>();
    h.radius_step = r.get<float>();
    h.point_count = r.get<std::uint32_t>();
    const auto sides = r.get_bytes(h.patch_side.size());
    std::copy(sides.begin(), sides.end(), h.patch_side.begin());
    const auto count = r.get<std::uint16_t>();

    struct Entry {
        std::uint16_t id;
        std::uint32_t offset;
        std::uint32_t length;
    };
    std::vector<Entry> table(count);
    std::set<std::uint16_t> ids;
    std::uint64_t expected = 0;
    for (auto& e : table) {
        e.id = r.get<std::uint16_t>();
        e.offset = r.get<std::uint32_t>();
        e.length = r.get<std::uint32_t>();
        if (!ids.insert(e.id).second) throw FormatError("duplicate section id");
        if (e.offset != expected) throw FormatError("section table is not contiguous");
        expected += e.length;
    }
    if (expected != r.remaining())
        throw FormatError("section lengths (" + std::to_string(expected) +
                          ") disagree with payload size (" + std::to_string(r.remaining()) + ")");
    b.sections.reserve(count);
    for (const auto& e : table) {
        const auto data = r.get_bytes(e.length);
        b.sections.push_back(Section{e.id, Bytes(data.begin(), data.end())});
    }
    return b;
}

}  // namespace teso
