// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "teso/core/image.hpp"
#include "teso/core/types.hpp"
#include "teso/texture/frame.hpp"

namespace teso {

/// Pinhole camera in voxel units; fov is vertical, in degrees.
struct Camera {
    Vec3 position = Vec3::Zero();
    Vec3 target = Vec3::UnitZ();
    Vec3 up = Vec3::UnitY();
    double fov_deg = 45.0;
    int width = 512;
    int height = 512;

    /// Throws PreconditionError on a degenerate setup.
    void validate() const;
};

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
};

/// Ray through the center of pixel (x, y); y grows downwards.
Ray camera_ray(const Camera& cam, double x, double y);

enum class HitKind { Miss, Solid, Soft };

struct HitRecord {
    HitKind kind = HitKind::Miss;
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    double s = 0.0;  // patch coordinates in [0, 1]
    double v = 0.0;
    double alpha = 0.0;
};

/// Surfel placed in world space, with its frame and owning cube.
struct PlacedSurfel {
    Vec3 center;
    TangentFrame frame;
    double radius = 0.0;
    Vec3 cube_lo;
    double cube_width = 0.0;
    const TexturePatch* patch = nullptr;
};

PlacedSurfel place_surfel(const Surfel& s, const OctreeCube& cube, int depth,
                          const TexturePatch* patch = nullptr);

/// Solid inside the closed cube within r of P; Soft outside the cube when
/// the hit is within soft_extent of the cube and r + soft_extent of P, with
/// alpha = exp(-d^2 / sigma^2); Miss otherwise (including a hit inside the
/// cube beyond r).
HitRecord intersect(const Ray& ray, const PlacedSurfel& surfel, double sigma, double soft_extent);

/// Bilinear lookup over pixel centers, clamped at the edges.
Color shade(const TexturePatch& patch, double s, double t);

struct RenderOutput {
    Image image;
    /// Transmittance left for the background at each pixel.
    std::vector<float> transmittance;
};

/// Front-to-back ray casting. Candidates per 16x16 tile come from the
/// projected bounding sphere (P, r + 3 sigma) of every leaf and are visited
/// in ascending camera-to-center distance, ties by leaf order.
RenderOutput render(const SurfelOctree& tree, const Camera& cam,
                    const Color& background = Color::Zero());

struct TrajectoryOptions {
    int frames = 8;
    double radius_m = 2.75;
    double perturb_m = 1.0;
    double fov_deg = 45.0;
    double voxels_per_meter = 1024.0 / 1.8;
    Vec3 center = Vec3(512.0, 512.0, 512.0);
    std::uint64_t seed = 1;
    int width = 1024;
    int height = 1024;
};

/// Cameras on a horizontal circle (y up) around the center, equally spaced
/// in angle, looking at the center. Frame 0 sits at the nominal radius;
/// every later frame moves radially by a seeded uniform offset in
/// [-perturb, +perturb].
std::vector<Camera> make_trajectory(const TrajectoryOptions& options);

/// One line per frame: "index px py pz tx ty tz ux uy uz fov".
void write_trajectory(const std::vector<Camera>& cams, const std::filesystem::path& path);
/// Lines starting with '#' are skipped. Width and height are set to the
/// given resolution. Throws ParseError with the line number.
std::vector<Camera> read_trajectory(const std::filesystem::path& path, int width, int height);

}  // namespace teso
