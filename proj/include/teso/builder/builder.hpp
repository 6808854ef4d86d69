// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "teso/core/types.hpp"

namespace teso {

struct BuildConfig {
    LevelConfig levels;
    /// D1-PSNR threshold for accepting a surfel above the finest level.
    double tau_db = 66.0;
    /// Spacing of the decision grid in voxels. The grid has
    /// G = max(2, 2 * ceil(r / grid_step)) samples per side.
    double grid_step = 1.0;

    /// Default leaf levels and patch sides for `depth`.
    static BuildConfig defaults(int depth, double tau_db = 66.0);
};

struct NormalEstimationReport {
    std::size_t degenerate = 0;  // neighborhoods that fell back to +z
    std::size_t components = 0;  // connected parts of the k-NN graph
};

/// PCA normals from the k nearest neighbors (self included), oriented by
/// propagation along a minimum spanning tree of the symmetric k-NN graph
/// with weights 1 - |ni . nj|. Each connected part is seeded at its highest
/// point with a normal pointing to +z. Throws PreconditionError when the
/// cloud has fewer than k + 1 points.
PointCloud estimate_normals(const PointCloud& cloud, int k,
                            NormalEstimationReport* report = nullptr);

/// Centroid, normalized mean normal (smallest covariance eigenvector when
/// the mean is shorter than 1e-3) and max distance clamped to
/// [sigma / 2, sqrt(3)/2 * b].
Surfel fit_surfel(std::span<const Vec3> points, std::span<const Vec3> normals,
                  const OctreeCube& cube, int depth, double sigma);

/// Samples of the surfel used by the split decision: a G x G grid over the
/// tangent square, keeping samples inside the disk and the closed cube. The
/// center is used when nothing survives.
std::vector<Vec3> surfel_grid_samples(const Surfel& surfel, const OctreeCube& cube, int depth,
                                      double grid_step);

/// Symmetric grid-sampled D1 mean squared error between the surfel and the
/// points.
double surfel_d1_mse(std::span<const Vec3> points, const Surfel& surfel, const OctreeCube& cube,
                     int depth, double grid_step);

/// True when the grid-sampled D1-PSNR (peak 2^depth - 1) reaches tau_db.
/// A single point gets no special case: its r_min disk samples lie up to
/// sigma / 2 away from it.
bool split_decision(std::span<const Vec3> points, const Surfel& surfel, const OctreeCube& cube,
                    int depth, double tau_db, double grid_step = 1.0);

/// Surfel octree construction: leaf levels are visited in ascending order,
/// cubes of unvisited points fit a surfel and become leaves when the split
/// decision accepts them or the level is the finest. Patches are left
/// empty. Throws PreconditionError when the cloud has no normals.
SurfelOctree build_teso(const PointCloud& cloud, const BuildConfig& config);

}  // namespace teso
