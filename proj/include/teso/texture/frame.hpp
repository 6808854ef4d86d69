// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Geometry>

#include "teso/core/types.hpp"

namespace teso {

/// Orthonormal surfel frame. q rotates +z onto n; u and v are the rotated
/// x and y axes.
struct TangentFrame {
    Vec3 u = Vec3::UnitX();
    Vec3 v = Vec3::UnitY();
    Vec3 n = Vec3::UnitZ();
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    double theta = 0.0;        // arccos(n . z)
    Vec3 axis = Vec3::UnitX();  // normalize(z x n); +x for n = +-z
};

/// Frame that depends on n only. n = +z gives the identity and n = -z a
/// half turn about +x. Throws PreconditionError unless |n| = 1 within 1e-6.
TangentFrame tangent_frame(const Vec3& n);

}  // namespace teso
