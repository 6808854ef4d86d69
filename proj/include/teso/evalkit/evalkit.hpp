// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "teso/core/container.hpp"
#include "teso/core/image.hpp"
#include "teso/core/types.hpp"
#include "teso/renderer/renderer.hpp"

namespace teso {

/// Mean squared nearest-neighbor distance from every point of `from` to `to`.
double directed_d1_mse(std::span<const Vec3> from, std::span<const Vec3> to);

/// Symmetric point-to-point PSNR: the larger directed MSE against peak^2.
/// +inf when the MSE is zero. Throws PreconditionError on empty input.
double d1_psnr(std::span<const Vec3> a, std::span<const Vec3> b, double peak);

/// Grid samples of every leaf surfel, as used by the split decision.
std::vector<Vec3> tree_surface_samples(const SurfelOctree& tree, double grid_step = 1.0);

/// PSNR over RGB with peak 1; +inf for identical images.
double image_psnr(const Image& a, const Image& b);
/// Mean SSIM over the RGB channels with an 11x11 Gaussian window
/// (sigma 1.5, C1 = 0.01^2, C2 = 0.03^2), evaluated where the window fits.
double image_ssim(const Image& a, const Image& b);

struct RDPoint {
    double tau_db = 0.0;
    int qt = 0;
    TextureCodecId codec = TextureCodecId::InternalDct;
    double geometry_bits = 0.0;
    double texture_bits = 0.0;
    double total_bits = 0.0;
    double bpp = 0.0;
    double psnr = 0.0;  // averaged over the trajectory
    double ssim = 0.0;

    double distortion() const { return 1.0 - ssim; }
};

struct SweepOptions {
    std::vector<double> taus{60.0, 62.0, 64.0, 66.0};
    std::vector<int> qts{10, 25, 40};
    TextureCodecId codec = TextureCodecId::InternalDct;
    std::vector<Camera> cameras;
    int normal_k = 16;
};

struct SweepResult {
    std::vector<RDPoint> points;
    std::vector<RDPoint> hull;
};

/// Encodes and decodes every (tau, Qt) setting and renders the trajectory.
/// The reference images come from a tree split down to the finest level,
/// unquantized, with uncompressed patches. Raw texture ignores the Qt set.
SweepResult rd_sweep(const PointCloud& cloud, const SweepOptions& options);

/// Lower-left Pareto staircase in (bpp, 1 - SSIM): sorted by bpp with
/// strictly decreasing distortion.
std::vector<RDPoint> pareto_hull(std::vector<RDPoint> points);

const char* codec_name(TextureCodecId codec);
/// Header line starting with '#', then one comma-separated row per point.
std::string format_rd_csv(std::span<const RDPoint> points);
void write_rd_csv(std::span<const RDPoint> points, const std::filesystem::path& path);

}  // namespace teso
