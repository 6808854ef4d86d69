// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "teso/core/bytes.hpp"
#include "teso/core/container.hpp"
#include "teso/core/image.hpp"
#include "teso/texture/texture.hpp"

namespace teso {

inline constexpr int kMinQt = 1;
inline constexpr int kMaxQt = 63;

/// BT.601 full range; chroma centered on 0.5.
Color rgb_to_ycbcr(const Color& rgb);
Color ycbcr_to_rgb(const Color& ycc);
Image rgb_to_ycbcr(const Image& rgb);
Image ycbcr_to_rgb(const Image& ycc);

/// 8x8 block DCT codec on YCbCr 4:4:4. Coefficients on the 0..255 scale are
/// quantized with a flat step of 2 * qt, zigzag scanned and coded as DPCM DC
/// plus (run, size) AC symbols with adaptive models. Images whose sides are
/// not multiples of 8 are padded by edge replication. The payload starts
/// with one byte holding qt.
Bytes encode_image_dct(const Image& image, int qt);
/// Throws StreamError on truncated or corrupt payloads.
Image decode_image_dct(std::span<const std::uint8_t> bytes, int width, int height);

/// Raw 8-bit RGB, row major.
Bytes encode_image_raw(const Image& image);
Image decode_image_raw(std::span<const std::uint8_t> bytes, int width, int height);

/// One texture section per non-empty packed level.
std::vector<Section> encode_texture(const std::vector<PackedTextureImage>& images,
                                    TextureCodecId codec, int qt);
/// Decodes the texture sections against the tree's layout and assigns the
/// patches. Throws FormatError when a section is missing.
void decode_texture(const Bitstream& stream, SurfelOctree& tree);

/// Every patch pixel center as a colored point (the color-on-geometry
/// route). Positions are clamped into the voxel grid.
PointCloud rasterize_patches(const SurfelOctree& tree);

}  // namespace teso
