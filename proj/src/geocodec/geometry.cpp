// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/geocodec/geometry.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "teso/core/errors.hpp"
#include "teso/core/morton.hpp"
#include "teso/geocodec/models.hpp"
#include "teso/quant/quant.hpp"

namespace teso {
namespace {

// Hard cap on occupied nodes per decoded level, independent of the header.
constexpr std::size_t kMaxLevelNodes = std::size_t{1} << 26;

template <typename Io>
double ideal_bits(const Io& io) {
    if constexpr (Io::kEncoding) return io.ideal_bits();
    else return 0.0;
}

int count_ones(const std::vector<std::uint64_t>& sorted_keys, const std::uint64_t* keys, int n) {
    int c = 0;
    for (int i = 0; i < n; ++i) c += contains_key(sorted_keys, keys[i]) ? 1 : 0;
    return c;
}

// ---- base octree ----------------------------------------------------------

template <typename Io, typename Tree>
void code_base(Io& io, Tree& tree, GeometryModelId kind) {
    const int l_min = tree.l_min();
    ModelBank root_bank(GeometryModelId::Uniform, 2);
    ModelBank bank(kind, 2);
    std::vector<std::uint64_t> prev;
    if constexpr (Io::kEncoding) {
        io.code(root_bank.at(0), 1);
        for (const auto& n : tree.level(0)) prev.push_back(n.key);
    } else {
        io.code(root_bank.at(0));
        tree.level_nodes(0).push_back(OctreeNode{0, false, {}, {}});
        prev.push_back(0);
    }
    for (int a = 0; a < l_min; ++a) {
        std::vector<std::uint64_t> coded;  // child-level keys, ascending
        for (std::uint64_t parent : prev) {
            int ones = 0;
            for (std::uint64_t d = 0; d < 8; ++d) {
                const std::uint64_t k = (parent << 3) | d;
                std::uint64_t nb[6];
                const int nn = face_neighbors(k, a + 1, nb);
                const int faces = count_ones(coded, nb, nn);
                const auto ctx = static_cast<std::uint32_t>((a * 8 + ones) * 7 + faces);
                int bit = 0;
                if constexpr (Io::kEncoding) bit = tree.find(a + 1, k) ? 1 : 0;
                bit = io.code(bank.at(ctx), bit);
                if (bit) {
                    coded.push_back(k);
                    ++ones;
                }
            }
            if (ones == 0) throw StreamError("base octree: split node without children");
        }
        if constexpr (!Io::kEncoding) {
            if (coded.size() > kMaxLevelNodes) throw StreamError("base octree too large");
            auto& nodes = tree.level_nodes(a + 1);
            for (auto k : coded) nodes.push_back(OctreeNode{k, false, {}, {}});
        }
        prev = std::move(coded);
    }
}

// ---- occupancy ------------------------------------------------------------

template <typename Io, typename Tree>
void code_occupancy(Io& io, Tree& tree, const LevelContext& ctx, GeometryModelId kind) {
    const int l = ctx.level;
    ModelBank bank(kind, 2);
    std::vector<std::uint64_t> virtual_keys;
    virtual_keys.reserve(ctx.virtual_nodes.size());
    for (const auto& v : ctx.virtual_nodes) virtual_keys.push_back(v.key);

    std::vector<std::uint64_t> coded;
    int ones = 0;
    for (std::size_t i = 0; i < ctx.unknown.size(); ++i) {
        const std::uint64_t k = ctx.unknown[i];
        if ((k & 7u) == 0) ones = 0;
        std::uint64_t nb[6];
        const int nn = face_neighbors(k, l, nb);
        const int virt = count_ones(virtual_keys, nb, nn);
        int bit = 0;
        if constexpr (Io::kEncoding) bit = tree.find(l, k) ? 1 : 0;
        bit = io.code(bank.at(static_cast<std::uint32_t>(virt * 8 + ones)), bit);
        if (bit) {
            coded.push_back(k);
            ++ones;
        }
        if ((k & 7u) == 7 && ones == 0)
            throw StreamError("occupancy: split node without children");
    }
    if constexpr (!Io::kEncoding) {
        if (coded.size() > kMaxLevelNodes) throw StreamError("occupancy: level too large");
        auto& nodes = tree.level_nodes(l);
        nodes.clear();
        for (auto k : coded) nodes.push_back(OctreeNode{k, false, {}, {}});
    }
}

// ---- leaf flags -----------------------------------------------------------

template <typename Io, typename Tree>
void code_flags(Io& io, Tree& tree, int level, GeometryModelId kind) {
    if (level == tree.l_max()) {
        if constexpr (!Io::kEncoding)
            for (auto& n : tree.level_nodes(level)) n.leaf = true;
        return;
    }
    if (!tree.config().is_leaf_level(level)) return;
    ModelBank bank(kind, 2);
    Model& m = bank.at(0);
    if constexpr (Io::kEncoding) {
        for (const auto& n : tree.level(level)) io.code(m, n.leaf ? 1 : 0);
    } else {
        for (auto& n : tree.level_nodes(level)) n.leaf = io.code(m) != 0;
    }
}

// ---- attributes -----------------------------------------------------------

int bucket4(int index, int alphabet) { return index * 4 / alphabet; }

int neighbor_bucket(int count) { return count <= 2 ? 0 : count <= 4 ? 1 : count == 5 ? 2 : 3; }

template <typename Io, typename Tree>
void code_attributes(Io& io, Tree& tree, const LevelContext& ctx,
                     const GeometryCodingOptions& options, GeometryStats* stats) {
    const int l = ctx.level;
    if (!tree.config().is_leaf_level(l)) return;
    const int depth = tree.depth();
    const double b = std::ldexp(1.0, depth - l);
    const Alphabets alpha = alphabets(l, depth);

    std::vector<std::size_t> leaves;
    const auto nodes = tree.level(l);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].leaf) leaves.push_back(i);
    if (leaves.empty()) return;

    std::vector<std::uint64_t> present;  // real or virtual nodes of this level
    present.reserve(nodes.size() + ctx.virtual_nodes.size());
    {
        std::size_t i = 0, j = 0;
        while (i < nodes.size() || j < ctx.virtual_nodes.size()) {
            if (j == ctx.virtual_nodes.size() ||
                (i < nodes.size() && nodes[i].key < ctx.virtual_nodes[j].key))
                present.push_back(nodes[i++].key);
            else
                present.push_back(ctx.virtual_nodes[j++].key);
        }
    }

    // Neighbor presence per leaf: bit (2 * axis + (dir > 0)).
    std::vector<std::uint8_t> mask(leaves.size(), 0);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const Coord c = morton_decode_unchecked(nodes[leaves[i]].key);
        const std::int64_t limit = std::int64_t{1} << l;
        for (int axis = 0; axis < 3; ++axis) {
            for (int dir = 0; dir < 2; ++dir) {
                const std::int64_t v = static_cast<std::int64_t>(c[axis]) + (dir ? 1 : -1);
                if (v < 0 || v >= limit) continue;
                Coord d = c;
                d[axis] = static_cast<std::uint32_t>(v);
                if (contains_key(present, morton_encode_unchecked(d)))
                    mask[i] |= static_cast<std::uint8_t>(1u << (2 * axis + dir));
            }
        }
    }

    std::vector<QuantizedSurfel> q(leaves.size());
    if constexpr (Io::kEncoding)
        for (std::size_t i = 0; i < leaves.size(); ++i) q[i] = quantize(nodes[leaves[i]].surfel, b);

    const auto kind = options.model;
    const bool by_offset = options.conditioning != Conditioning::None;
    const bool by_normal = options.conditioning == Conditioning::OffsetNormal;

    double mark = ideal_bits(io);
    auto account = [&](double GeometryStats::*field) {
        const double now = ideal_bits(io);
        if (stats) stats->*field += now - mark;
        mark = now;
    };

    ModelBank offset_bank(kind, alpha.offset);
    for (std::size_t i = 0; i < leaves.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            const auto ctx_o = static_cast<std::uint32_t>(c * 4 + ((mask[i] >> (2 * c)) & 3u));
            q[i].offset[c] = io.code(offset_bank.at(ctx_o), q[i].offset[c]);
        }
    account(&GeometryStats::offset);

    auto offset_ctx = [&](std::size_t i) {
        return static_cast<std::uint32_t>(bucket4(q[i].offset[0], alpha.offset) * 16 +
                                          bucket4(q[i].offset[1], alpha.offset) * 4 +
                                          bucket4(q[i].offset[2], alpha.offset));
    };
    auto base_ctx = [&](std::size_t i) {
        std::uint32_t c = static_cast<std::uint32_t>(neighbor_bucket(std::popcount(mask[i])));
        if (by_offset) c = c * 64 + offset_ctx(i);
        return c;
    };

    ModelBank normal_bank(kind, alpha.normal);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const std::uint32_t c = base_ctx(i);
        q[i].normal[0] = io.code(normal_bank.at(c * 2), q[i].normal[0]);
        q[i].normal[1] = io.code(normal_bank.at(c * 2 + 1), q[i].normal[1]);
    }
    account(&GeometryStats::normal);

    ModelBank radius_bank(kind, alpha.radius);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        std::uint32_t c = base_ctx(i);
        if (by_normal)
            c = c * 16 + static_cast<std::uint32_t>(bucket4(q[i].normal[0], alpha.normal) * 4 +
                                                    bucket4(q[i].normal[1], alpha.normal));
        q[i].radius = io.code(radius_bank.at(c), q[i].radius);
    }
    account(&GeometryStats::radius);

    if constexpr (!Io::kEncoding) {
        auto& out = tree.level_nodes(l);
        for (std::size_t i = 0; i < leaves.size(); ++i) out[leaves[i]].surfel = dequantize(q[i]);
    }
}

void check_alphabets(int depth, const LevelConfig& config) {
    for (int l : config.leaf_levels) {
        const Alphabets a = alphabets(l, depth);
        if (a.radius > AdaptiveCategoricalModel::kMaxSize)
            throw PreconditionError("level " + std::to_string(l) +
                                    " cubes are too wide for the attribute alphabets");
    }
}

}  // namespace

Bytes encode_base_octree(const SurfelOctree& tree, GeometryModelId model, double* bits) {
    if (tree.empty()) return {};
    SymbolEncoder enc;
    code_base(enc, tree, model);
    if (bits) *bits += enc.ideal_bits();
    return enc.finish();
}

void decode_base_octree(std::span<const std::uint8_t> bytes, SurfelOctree& tree,
                        GeometryModelId model) {
    if (bytes.empty()) return;
    SymbolDecoder dec(bytes);
    code_base(dec, tree, model);
}

Bytes encode_occupancy_level(const SurfelOctree& tree, const LevelContext& ctx,
                             GeometryModelId model, double* bits) {
    SymbolEncoder enc;
    code_occupancy(enc, tree, ctx, model);
    if (bits) *bits += enc.ideal_bits();
    return enc.finish();
}

void decode_occupancy_level(std::span<const std::uint8_t> bytes, SurfelOctree& tree,
                            const LevelContext& ctx, GeometryModelId model) {
    SymbolDecoder dec(bytes);
    code_occupancy(dec, tree, ctx, model);
}

Bytes encode_leaf_flags(const SurfelOctree& tree, int level, GeometryModelId model,
                        double* bits) {
    SymbolEncoder enc;
    code_flags(enc, tree, level, model);
    if (bits) *bits += enc.ideal_bits();
    return enc.finish();
}

void decode_leaf_flags(std::span<const std::uint8_t> bytes, SurfelOctree& tree, int level,
                       GeometryModelId model) {
    SymbolDecoder dec(bytes);
    code_flags(dec, tree, level, model);
}

Bytes encode_attributes(const SurfelOctree& tree, const LevelContext& ctx,
                        const GeometryCodingOptions& options, GeometryStats* stats) {
    SymbolEncoder enc;
    code_attributes(enc, tree, ctx, options, stats);
    return enc.finish();
}

void decode_attributes(std::span<const std::uint8_t> bytes, SurfelOctree& tree,
                       const LevelContext& ctx, const GeometryCodingOptions& options) {
    SymbolDecoder dec(bytes);
    code_attributes(dec, tree, ctx, options, nullptr);
}

std::vector<Section> encode_geometry(const SurfelOctree& tree, BitstreamHeader& header,
                                     const GeometryCodingOptions& options,
                                     GeometryStats* stats) {
    const int depth = tree.depth();
    const LevelConfig& cfg = tree.config();
    if (cfg.leaf_levels.empty()) throw PreconditionError("tree has no level configuration");
    check_alphabets(depth, cfg);
    const auto tex = header.texture_codec;
    const auto qt = header.qt;
    const auto tau = header.tau_db;
    const auto points = header.point_count;
    header = BitstreamHeader::for_config(depth, cfg);
    header.texture_codec = tex;
    header.qt = qt;
    header.tau_db = tau;
    header.point_count = points != 0 ? points : static_cast<std::uint32_t>(tree.leaf_count());
    header.geometry_model = options.model;
    header.conditioning = options.conditioning;

    GeometryStats local;
    GeometryStats& st = stats ? *stats : local;
    const int l_min = cfg.l_min(), l_max = cfg.l_max();

    std::vector<Section> occupancy, flags, attributes;
    std::vector<Section> out;
    out.push_back({section::kBaseOctree, encode_base_octree(tree, options.model, &st.base)});
    for (int l = l_min; l <= l_max; ++l) {
        const LevelContext ctx = rasterize_context(tree, l);
        if (l > l_min)
            occupancy.push_back({section::occupancy(l),
                                 encode_occupancy_level(tree, ctx, options.model, &st.occupancy)});
        if (l < l_max && cfg.is_leaf_level(l))
            flags.push_back({section::leaf_flags(l),
                             encode_leaf_flags(tree, l, options.model, &st.flags)});
        if (cfg.is_leaf_level(l))
            attributes.push_back({section::attributes(l), encode_attributes(tree, ctx, options, &st)});
    }
    for (auto* group : {&occupancy, &flags, &attributes})
        for (auto& s : *group) out.push_back(std::move(s));
    return out;
}

SurfelOctree decode_geometry(const Bitstream& stream) {
    const BitstreamHeader& h = stream.header;
    const LevelConfig cfg = h.level_config();
    check_alphabets(h.depth, cfg);
    SurfelOctree tree(h.depth, cfg);
    const GeometryCodingOptions options{h.geometry_model, h.conditioning};
    auto need = [&](std::uint16_t id) {
        const Section* s = stream.find(id);
        if (!s) throw FormatError("missing geometry section " + std::to_string(id));
        return std::span<const std::uint8_t>(s->data);
    };

    const auto base = need(section::kBaseOctree);
    if (base.empty()) return tree;
    decode_base_octree(base, tree, options.model);
    const int l_min = cfg.l_min(), l_max = cfg.l_max();
    for (int l = l_min; l <= l_max; ++l) {
        const LevelContext ctx = rasterize_context(tree, l);
        if (l > l_min) decode_occupancy_level(need(section::occupancy(l)), tree, ctx, options.model);
        if (l < l_max && cfg.is_leaf_level(l))
            decode_leaf_flags(need(section::leaf_flags(l)), tree, l, options.model);
        else
            decode_leaf_flags({}, tree, l, options.model);
        if (h.point_count != 0 && tree.level(l).size() > h.point_count)
            throw StreamError("more occupied nodes than input points at level " +
                              std::to_string(l));
        if (cfg.is_leaf_level(l)) decode_attributes(need(section::attributes(l)), tree, ctx, options);
    }
    try {
        tree.validate();
    } catch (const PreconditionError& e) {
        throw StreamError(std::string("decoded tree is invalid: ") + e.what());
    }
    return tree;
}

}  // namespace teso
