// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "teso/core/image.hpp"
#include "teso/core/types.hpp"
#include "teso/renderer/renderer.hpp"

namespace teso::oracle {

/// Patch whose bilinear lookup is linear in both axes: (i/(m-1), j/(m-1), 0.25).
TexturePatch ramp_patch(int m);

/// Scene of one +z-facing surfel carrying ramp_patch(m) in the cube [lo, lo + b).
struct SingleSurfelScene {
    Vec3 center;
    double radius;
    Vec3 lo;
    double b;
    double sigma;
    int m;
};

/// Traces the scene with plain geometry, independent of the renderer.
Image trace_single_surfel(const SingleSurfelScene& scene, const Camera& cam, const Color& bg);

/// Largest per-channel difference between the renderer and the tracer over
/// a few fixed viewpoints; `covered` receives the number of non-background
/// oracle pixels.
double single_surfel_error(std::size_t* covered = nullptr);

}  // namespace teso::oracle
