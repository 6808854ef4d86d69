// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/texture/frame.hpp"

#include <algorithm>
#include <cmath>

#include "teso/core/errors.hpp"

namespace teso {

TangentFrame tangent_frame(const Vec3& n) {
    if (!(std::abs(n.norm() - 1.0) <= 1e-6)) throw PreconditionError("tangent frame needs a unit normal");
    TangentFrame f;
    f.n = n;
    const double c = std::clamp(n.z(), -1.0, 1.0);
    f.theta = std::acos(c);
    const Vec3 cross = Vec3::UnitZ().cross(n);
    const double s = cross.norm();
    if (s < 1e-12) {
        f.axis = Vec3::UnitX();
        if (c < 0.0) f.theta = M_PI;
        else f.theta = 0.0;
    } else {
        f.axis = cross / s;
    }
    const double h = 0.5 * f.theta;
    f.q = Eigen::Quaterniond(std::cos(h), f.axis.x() * std::sin(h), f.axis.y() * std::sin(h),
                             f.axis.z() * std::sin(h));
    if (f.theta == 0.0) f.q = Eigen::Quaterniond::Identity();
    if (f.theta == M_PI && s < 1e-12) f.q = Eigen::Quaterniond(0.0, 1.0, 0.0, 0.0);
    const Eigen::Matrix3d r = f.q.toRotationMatrix();
    f.u = r.col(0);
    f.v = r.col(1);
    // The rotated z axis equals n up to rounding; keep the exact input.
    f.n = n;
    return f;
}

}  // namespace teso
