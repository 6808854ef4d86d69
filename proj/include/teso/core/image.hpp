// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "teso/core/types.hpp"

namespace teso {

/// Row-major RGB image with channels in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Color> pixels;

    Image() = default;
    Image(int w, int h, const Color& fill = Color::Zero())
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    Color& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Color& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const Image&) const = default;
};

/// 8-bit RGB PNG. Channels are clamped and rounded on write.
void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

}  // namespace teso
