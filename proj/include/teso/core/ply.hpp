// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "teso/core/types.hpp"

namespace teso {

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Reads x/y/z, red/green/blue and optional nx/ny/nz from the vertex
/// element. Integer colors are rescaled to [0, 1] by their type maximum.
/// When `depth` is absent it is inferred as the smallest grid holding every
/// position. Throws ParseError with a line number (header/ASCII body) or a
/// byte offset (binary body).
PointCloud read_ply(const std::filesystem::path& path, std::optional<int> depth = {});
PointCloud parse_ply(std::string_view bytes, std::optional<int> depth = {});

/// Positions and normals are written as float when every value round-trips
/// through float exactly, otherwise as double; colors as uchar.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian);
std::string format_ply(const PointCloud& cloud, PlyFormat format = PlyFormat::BinaryLittleEndian);

}  // namespace teso
