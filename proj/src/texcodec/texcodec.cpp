// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/texcodec/texcodec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <string>

#include "teso/core/errors.hpp"
#include "teso/geocodec/models.hpp"

namespace teso {
namespace {

constexpr int kBlock = 8;

constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

constexpr int kEob = 0x00;
constexpr int kZrl = 0xF0;
constexpr int kMaxCategory = 15;

struct DctTable {
    std::array<double, 64> c{};  // c[u * 8 + x]
    DctTable() {
        for (int u = 0; u < kBlock; ++u)
            for (int x = 0; x < kBlock; ++x) {
                const double a = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
                c[u * kBlock + x] = a * std::cos((2 * x + 1) * u * M_PI / (2.0 * kBlock));
            }
    }
};

const DctTable& dct_table() {
    static const DctTable t;
    return t;
}

void forward_dct(const double in[64], double out[64]) {
    const auto& c = dct_table().c;
    double tmp[64];
    for (int y = 0; y < kBlock; ++y)
        for (int u = 0; u < kBlock; ++u) {
            double s = 0.0;
            for (int x = 0; x < kBlock; ++x) s += c[u * kBlock + x] * in[y * kBlock + x];
            tmp[y * kBlock + u] = s;
        }
    for (int v = 0; v < kBlock; ++v)
        for (int u = 0; u < kBlock; ++u) {
            double s = 0.0;
            for (int y = 0; y < kBlock; ++y) s += c[v * kBlock + y] * tmp[y * kBlock + u];
            out[v * kBlock + u] = s;
        }
}

void inverse_dct(const double in[64], double out[64]) {
    const auto& c = dct_table().c;
    double tmp[64];
    for (int v = 0; v < kBlock; ++v)
        for (int x = 0; x < kBlock; ++x) {
            double s = 0.0;
            for (int u = 0; u < kBlock; ++u) s += c[u * kBlock + x] * in[v * kBlock + u];
            tmp[v * kBlock + x] = s;
        }
    for (int y = 0; y < kBlock; ++y)
        for (int x = 0; x < kBlock; ++x) {
            double s = 0.0;
            for (int v = 0; v < kBlock; ++v) s += c[v * kBlock + y] * tmp[v * kBlock + x];
            out[y * kBlock + x] = s;
        }
}

int category(int v) { return v == 0 ? 0 : std::bit_width(static_cast<unsigned>(std::abs(v))); }

// Adaptive models shared by all blocks of one image.
struct BlockModels {
    // [luma/chroma]
    std::array<AdaptiveCategoricalModel, 2> dc{AdaptiveCategoricalModel(kMaxCategory + 1),
                                               AdaptiveCategoricalModel(kMaxCategory + 1)};
    // [luma/chroma][position band]
    std::array<std::array<AdaptiveCategoricalModel, 3>, 2> ac{
        {{AdaptiveCategoricalModel(256), AdaptiveCategoricalModel(256),
          AdaptiveCategoricalModel(256)},
         {AdaptiveCategoricalModel(256), AdaptiveCategoricalModel(256),
          AdaptiveCategoricalModel(256)}}};
    std::array<AdaptiveBinaryModel, 2> sign;
};

int band(int zz) { return zz < 6 ? 0 : zz < 20 ? 1 : 2; }

// Sign and magnitude bits below the leading one of a category-c value.
template <typename Io>
int code_magnitude(Io& io, AdaptiveBinaryModel& sign_model, int cat, int value) {
    if (cat == 0) return 0;
    int neg = 0, low = 0;
    if constexpr (Io::kEncoding) {
        neg = value < 0 ? 1 : 0;
        low = std::abs(value) - (1 << (cat - 1));
    }
    neg = io.code(sign_model, neg);
    if (cat > 1) {
        UniformModel bits(1 << (cat - 1));
        low = io.code(bits, low);
    }
    const int mag = (1 << (cat - 1)) + low;
    return neg ? -mag : mag;
}

template <typename Io>
void code_block(Io& io, BlockModels& m, int chroma, int& prev_dc, int q[64]) {
    // DC
    int diff = 0;
    if constexpr (Io::kEncoding) diff = q[0] - prev_dc;
    const int dc_cat = io.code(m.dc[chroma], category(diff));
    diff = code_magnitude(io, m.sign[chroma], dc_cat, diff);
    q[0] = std::clamp(prev_dc + diff, -(1 << 20), 1 << 20);
    prev_dc = q[0];

    // AC
    int last = 0;
    if constexpr (Io::kEncoding)
        for (int k = 63; k > 0; --k)
            if (q[kZigzag[k]] != 0) {
                last = k;
                break;
            }
    int k = 1;
    while (k < 64) {
        auto& model = m.ac[chroma][band(k)];
        int sym = 0, value = 0;
        if constexpr (Io::kEncoding) {
            if (k > last) {
                sym = kEob;
            } else {
                int run = 0;
                while (q[kZigzag[k + run]] == 0) ++run;
                if (run >= 16) {
                    sym = kZrl;
                } else {
                    value = q[kZigzag[k + run]];
                    sym = run * 16 + category(value);
                }
            }
        }
        sym = io.code(model, sym);
        if (sym == kEob) {
            if constexpr (!Io::kEncoding)
                for (; k < 64; ++k) q[kZigzag[k]] = 0;
            return;
        }
        if (sym == kZrl) {
            if (k + 16 > 63) throw StreamError("texture: run past the end of a block");
            if constexpr (!Io::kEncoding)
                for (int i = 0; i < 16; ++i) q[kZigzag[k + i]] = 0;
            k += 16;
            continue;
        }
        const int run = sym >> 4, cat = sym & 15;
        if (cat == 0 || k + run > 63) throw StreamError("texture: invalid AC symbol");
        if constexpr (!Io::kEncoding)
            for (int i = 0; i < run; ++i) q[kZigzag[k + i]] = 0;
        k += run;
        value = code_magnitude(io, m.sign[chroma], cat, value);
        if constexpr (!Io::kEncoding) q[kZigzag[k]] = value;
        ++k;
    }
}

double step_for(int qt) { return 2.0 * qt; }

std::uint8_t to_u8(float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0f), 0L, 255L));
}

}  // namespace

Color rgb_to_ycbcr(const Color& c) {
    const float r = c[0], g = c[1], b = c[2];
    return {0.299f * r + 0.587f * g + 0.114f * b,
            -0.168736f * r - 0.331264f * g + 0.5f * b + 0.5f,
            0.5f * r - 0.418688f * g - 0.081312f * b + 0.5f};
}

Color ycbcr_to_rgb(const Color& c) {
    const float y = c[0], cb = c[1] - 0.5f, cr = c[2] - 0.5f;
    return {y + 1.402f * cr, y - 0.344136f * cb - 0.714136f * cr, y + 1.772f * cb};
}

Image rgb_to_ycbcr(const Image& rgb) {
    Image out = rgb;
    for (auto& p : out.pixels) p = rgb_to_ycbcr(p);
    return out;
}

Image ycbcr_to_rgb(const Image& ycc) {
    Image out = ycc;
    for (auto& p : out.pixels) p = ycbcr_to_rgb(p);
    return out;
}

Bytes encode_image_dct(const Image& image, int qt) {
    if (qt < kMinQt || qt > kMaxQt) throw PreconditionError("Qt must be in [1, 63]");
    if (image.width <= 0 || image.height <= 0) return {};
    const Image ycc = rgb_to_ycbcr(image);
    const int bw = (image.width + kBlock - 1) / kBlock;
    const int bh = (image.height + kBlock - 1) / kBlock;
    const double step = step_for(qt);

    SymbolEncoder enc;
    BlockModels models;
    std::array<int, 3> prev{0, 0, 0};
    double in[64], coef[64];
    Bytes out{static_cast<std::uint8_t>(qt)};
    int q[64];
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx)
            for (int ch = 0; ch < 3; ++ch) {
                for (int y = 0; y < kBlock; ++y)
                    for (int x = 0; x < kBlock; ++x) {
                        const int sx = std::min(bx * kBlock + x, image.width - 1);
                        const int sy = std::min(by * kBlock + y, image.height - 1);
                        in[y * kBlock + x] = ycc.at(sx, sy)[ch] * 255.0 - 128.0;
                    }
                forward_dct(in, coef);
                for (int i = 0; i < 64; ++i)
                    q[i] = static_cast<int>(std::lround(coef[i] / step));
                code_block(enc, models, ch == 0 ? 0 : 1, prev[ch], q);
            }
    const Bytes body = enc.finish();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Image decode_image_dct(std::span<const std::uint8_t> bytes, int width, int height) {
    if (width <= 0 || height <= 0) return Image(std::max(width, 0), std::max(height, 0));
    // The quantizer step is carried in the first payload byte.
    if (bytes.empty()) throw StreamError("texture: empty payload");
    const int qt = bytes[0];
    if (qt < kMinQt || qt > kMaxQt) throw StreamError("texture: invalid Qt byte");
    const double step = step_for(qt);
    const int bw = (width + kBlock - 1) / kBlock;
    const int bh = (height + kBlock - 1) / kBlock;
    SymbolDecoder dec(bytes.subspan(1));
    BlockModels models;
    std::array<int, 3> prev{0, 0, 0};
    Image ycc(width, height);
    double coef[64], out[64];
    int q[64] = {};
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx)
            for (int ch = 0; ch < 3; ++ch) {
                code_block(dec, models, ch == 0 ? 0 : 1, prev[ch], q);
                for (int i = 0; i < 64; ++i) coef[i] = q[i] * step;
                inverse_dct(coef, out);
                for (int y = 0; y < kBlock; ++y)
                    for (int x = 0; x < kBlock; ++x) {
                        const int sx = bx * kBlock + x, sy = by * kBlock + y;
                        if (sx >= width || sy >= height) continue;
                        ycc.at(sx, sy)[ch] = static_cast<float>((out[y * kBlock + x] + 128.0) / 255.0);
                    }
            }
    Image rgb = ycbcr_to_rgb(ycc);
    for (auto& p : rgb.pixels) p = p.cwiseMax(0.0f).cwiseMin(1.0f);
    return rgb;
}

Bytes encode_image_raw(const Image& image) {
    Bytes out;
    out.reserve(image.pixels.size() * 3);
    for (const auto& p : image.pixels)
        for (int c = 0; c < 3; ++c) out.push_back(to_u8(p[c]));
    return out;
}

Image decode_image_raw(std::span<const std::uint8_t> bytes, int width, int height) {
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() != n * 3) throw FormatError("raw texture size disagrees with its layout");
    Image img(width, height);
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) img.pixels[i][c] = bytes[i * 3 + c] / 255.0f;
    return img;
}

std::vector<Section> encode_texture(const std::vector<PackedTextureImage>& images,
                                    TextureCodecId codec, int qt) {
    std::vector<Section> out;
    if (codec == TextureCodecId::None) return out;
    if (codec == TextureCodecId::InternalDct && (qt < kMinQt || qt > kMaxQt))
        throw PreconditionError("Qt must be in [1, 63]");
    for (const auto& img : images) {
        if (img.leaf_count == 0) continue;
        Section s;
        s.id = section::texture(img.level);
        if (codec == TextureCodecId::InternalDct) {
            s.data = encode_image_dct(img.image, qt);
        } else {
            s.data = encode_image_raw(img.image);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void decode_texture(const Bitstream& stream, SurfelOctree& tree) {
    const TextureCodecId codec = stream.header.texture_codec;
    if (codec == TextureCodecId::None || tree.empty()) return;
    for (int l : tree.config().leaf_levels) {
        PackedTextureImage packed = packed_layout(tree, l);
        if (packed.leaf_count == 0) continue;
        const Section* s = stream.find(section::texture(l));
        if (!s) throw FormatError("missing texture section for level " + std::to_string(l));
        const int w = packed.image.width, h = packed.image.height;
        packed.image = codec == TextureCodecId::InternalDct ? decode_image_dct(s->data, w, h)
                                                            : decode_image_raw(s->data, w, h);
        assign_patches(tree, packed);
    }
}

PointCloud rasterize_patches(const SurfelOctree& tree) {
    PointCloud out;
    out.depth = tree.depth();
    if (tree.empty()) return out;
    const double hi = std::nextafter(std::ldexp(1.0, tree.depth()), 0.0);
    tree.for_each_leaf([&](int l, const OctreeNode& n) {
        if (n.patch.empty()) return;
        const OctreeCube cube = OctreeCube::from_key(l, n.key);
        const TangentFrame f = tangent_frame(n.surfel.normal);
        const Vec3 p = n.surfel.center(cube, tree.depth());
        for (int j = 0; j < n.patch.side; ++j)
            for (int i = 0; i < n.patch.side; ++i) {
                const Vec3 q = patch_pixel_center(n.surfel, f, p, n.patch.side, i, j);
                out.positions.push_back(q.cwiseMax(0.0).cwiseMin(hi));
                out.colors.push_back(n.patch.at(i, j));
            }
    });
    return out;
}

}  // namespace teso
