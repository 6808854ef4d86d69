// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/pipeline/pipeline.hpp"

#include <limits>
#include <string>

#include "teso/core/errors.hpp"
#include "teso/quant/quant.hpp"
#include "teso/texcodec/texcodec.hpp"

namespace teso {
namespace {

std::uint32_t clamp_count(std::size_t n) {
    return static_cast<std::uint32_t>(
        std::min<std::size_t>(n, std::numeric_limits<std::uint32_t>::max()));
}

}  // namespace

SurfelOctree prepare_tree(const PointCloud& cloud, const EncodeOptions& options,
                          NormalEstimationReport* report) {
    cloud.validate();
    SurfelOctree tree;
    if (cloud.has_normals()) {
        tree = build_teso(cloud, options.build);
    } else {
        tree = build_teso(estimate_normals(cloud, options.normal_k, report), options.build);
    }
    tree = quantize_tree(tree);
    if (options.texture != TextureCodecId::None) sample_patches(tree, cloud, options.sampling);
    return tree;
}

EncodeResult encode_tree(const SurfelOctree& tree, const EncodeOptions& options,
                         std::size_t point_count) {
    EncodeResult r;
    r.tree = tree;
    r.point_count = point_count;
    BitstreamHeader header = BitstreamHeader::for_config(tree.depth(), tree.config());
    header.texture_codec = options.texture;
    header.qt = options.texture == TextureCodecId::InternalDct
                    ? static_cast<std::uint8_t>(options.qt)
                    : 0;
    header.tau_db = static_cast<float>(options.build.tau_db);
    header.point_count = clamp_count(point_count);

    std::vector<Section> sections = encode_geometry(tree, header, options.geometry, &r.stats);
    for (const auto& s : sections) r.geometry_bytes += s.data.size();
    if (options.texture != TextureCodecId::None) {
        std::vector<PackedTextureImage> images;
        for (int l : tree.config().leaf_levels) images.push_back(pack_patches(tree, l));
        for (auto& s : encode_texture(images, options.texture, options.qt)) {
            r.texture_bytes += s.data.size();
            sections.push_back(std::move(s));
        }
    }
    r.bytes = serialize(header, sections);
    return r;
}

EncodeResult encode_cloud(const PointCloud& cloud, const EncodeOptions& options,
                          NormalEstimationReport* report) {
    return encode_tree(prepare_tree(cloud, options, report), options, cloud.size());
}

SurfelOctree decode_stream(std::span<const std::uint8_t> bytes) {
    const Bitstream stream = parse(bytes);
    if (const Section* raw = stream.find(section::kRawTree))
        return decode_raw_tree(raw->data, stream.header);
    SurfelOctree tree = decode_geometry(stream);
    decode_texture(stream, tree);
    return tree;
}

Bytes encode_raw_tree(const SurfelOctree& tree) {
    Bytes out;
    ByteWriter w(out);
    if (tree.empty()) return out;
    for (int l = 0; l <= tree.l_max(); ++l) {
        const auto nodes = tree.level(l);
        w.put<std::uint32_t>(clamp_count(nodes.size()));
        for (const auto& n : nodes) {
            w.put<std::uint64_t>(n.key);
            w.put<std::uint8_t>(n.leaf ? 1 : 0);
            if (!n.leaf) continue;
            for (int k = 0; k < 3; ++k) w.put<double>(n.surfel.offset[k]);
            for (int k = 0; k < 3; ++k) w.put<double>(n.surfel.normal[k]);
            w.put<double>(n.surfel.radius);
            w.put<std::uint16_t>(static_cast<std::uint16_t>(n.patch.side));
            for (const auto& c : n.patch.pixels)
                for (int k = 0; k < 3; ++k) w.put<float>(c[k]);
        }
    }
    return out;
}

SurfelOctree decode_raw_tree(std::span<const std::uint8_t> payload, const BitstreamHeader& header) {
    const LevelConfig config = header.level_config();
    SurfelOctree tree(header.depth, config);
    if (payload.empty()) return tree;
    ByteReader r(payload);
    for (int l = 0; l <= config.l_max(); ++l) {
        const auto count = r.get<std::uint32_t>();
        // Every node needs at least 9 bytes.
        if (count > r.remaining() / 9) throw FormatError("raw tree: node count exceeds payload");
        auto& nodes = tree.level_nodes(l);
        nodes.resize(count);
        for (auto& n : nodes) {
            n.key = r.get<std::uint64_t>();
            n.leaf = r.get<std::uint8_t>() != 0;
            if (!n.leaf) continue;
            for (int k = 0; k < 3; ++k) n.surfel.offset[k] = r.get<double>();
            for (int k = 0; k < 3; ++k) n.surfel.normal[k] = r.get<double>();
            n.surfel.radius = r.get<double>();
            const int side = r.get<std::uint16_t>();
            if (side != 0) {
                if (static_cast<std::size_t>(side) * side * 12 > r.remaining())
                    throw FormatError("raw tree: patch exceeds payload");
                n.patch = TexturePatch(side);
                for (auto& c : n.patch.pixels)
                    for (int k = 0; k < 3; ++k) c[k] = r.get<float>();
            }
        }
    }
    if (r.remaining() != 0) throw FormatError("raw tree: trailing bytes");
    try {
        tree.validate();
    } catch (const PreconditionError& e) {
        throw FormatError(std::string("raw tree: ") + e.what());
    }
    return tree;
}

Bytes serialize_raw_tree(const SurfelOctree& tree, std::size_t point_count, double tau_db) {
    BitstreamHeader header = BitstreamHeader::for_config(tree.depth(), tree.config());
    header.point_count = clamp_count(point_count);
    header.tau_db = static_cast<float>(tau_db);
    const Section s{section::kRawTree, encode_raw_tree(tree)};
    return serialize(header, std::span<const Section>(&s, 1));
}

}  // namespace teso
