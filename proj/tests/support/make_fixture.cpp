// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
// Writes one of the synthetic test clouds as a binary PLY.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fixtures.hpp"
#include "teso/core/ply.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Synthetic point cloud generator"};
    std::string shape, out;
    double radius = 89.0;
    bool with_normals = false;
    app.add_option("shape", shape, "sphere, plane or torus")
        ->required()
        ->check(CLI::IsMember({"sphere", "plane", "torus"}));
    app.add_option("output", out, "Output PLY")->required();
    app.add_option("--radius", radius, "Sphere radius in voxels")->capture_default_str();
    app.add_flag("--normals", with_normals, "Keep the analytic normals");
    CLI11_PARSE(app, argc, argv);

    teso::PointCloud cloud = shape == "sphere" ? teso::fixtures::sphere_shell(radius)
                             : shape == "plane" ? teso::fixtures::tilted_plane()
                                                : teso::fixtures::torus();
    if (!with_normals) cloud.normals.clear();
    teso::write_ply(cloud, out);
    std::cout << cloud.size() << " points\n";
    return 0;
}
