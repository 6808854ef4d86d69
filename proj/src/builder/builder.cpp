// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/builder/builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include <Eigen/Eigenvalues>

#include "teso/core/errors.hpp"
#include "teso/core/morton.hpp"
#include "teso/core/parallel.hpp"
#include "teso/core/spatial_index.hpp"
#include "teso/texture/frame.hpp"

namespace teso {
namespace {

struct Pca {
    Vec3 smallest = Vec3::UnitZ();
    Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();  // ascending
};

template <typename Get>
Pca pca(std::size_t n, Get&& get) {
    Vec3 mean = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) mean += get(i);
    mean /= static_cast<double>(n);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d = get(i) - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    return {es.eigenvectors().col(0), es.eigenvalues()};
}

double peak_mse_threshold(int depth, double tau_db) {
    const double peak = std::ldexp(1.0, depth) - 1.0;
    return peak * peak / std::pow(10.0, tau_db / 10.0);
}

// Mean squared nearest distance from `from` to `to`; stops early and
// returns +inf once the mean is certain to exceed `limit`.
double directed_mse(std::span<const Vec3> from, std::span<const Vec3> to, double limit) {
    const PointGrid grid(to, 1.0);
    const double budget = limit * static_cast<double>(from.size());
    double sum = 0.0;
    for (const auto& p : from) {
        sum += grid.nearest(p).dist2;
        if (sum > budget) return std::numeric_limits<double>::infinity();
    }
    return sum / static_cast<double>(from.size());
}

}  // namespace

BuildConfig BuildConfig::defaults(int depth, double tau_db) {
    BuildConfig c;
    c.levels = LevelConfig::defaults(depth);
    c.tau_db = tau_db;
    return c;
}

PointCloud estimate_normals(const PointCloud& cloud, int k, NormalEstimationReport* report) {
    if (k < 2) throw PreconditionError("normal estimation needs k >= 2");
    const std::size_t n = cloud.size();
    if (n < static_cast<std::size_t>(k) + 1)
        throw PreconditionError("normal estimation needs at least k + 1 points");
    if (n >= std::numeric_limits<std::uint32_t>::max())
        throw PreconditionError("too many points");

    PointCloud out = cloud;
    out.normals.assign(n, Vec3::UnitZ());
    const PointGrid grid(cloud.positions, 2.0);
    const std::size_t kk = static_cast<std::size_t>(k) + 1;  // self plus k neighbors
    std::vector<std::uint32_t> knn(n * kk);
    std::vector<std::uint8_t> degenerate(n, 0);

    parallel_for(n, 1024, [&](std::size_t begin, std::size_t end) {
        std::vector<PointGrid::Neighbor> nb(kk);
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t found =
                grid.knn(cloud.positions[i], kk, nb.data(), [](std::uint32_t) { return true; });
            for (std::size_t j = 0; j < kk; ++j)
                knn[i * kk + j] = nb[std::min(j, found - 1)].index;
            const Pca p = pca(found, [&](std::size_t j) -> const Vec3& {
                return cloud.positions[nb[j].index];
            });
            const double scale = std::max(p.eigenvalues[2], 1e-300);
            if (p.eigenvalues[1] <= 1e-9 * scale || p.eigenvalues[2] <= 1e-18) {
                degenerate[i] = 1;
                continue;
            }
            out.normals[i] = p.smallest.normalized();
        }
    });

    // Symmetric adjacency in CSR form.
    std::vector<std::uint32_t> start(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < kk; ++j) {
            const std::uint32_t o = knn[i * kk + j];
            if (o == i) continue;
            ++start[i + 1];
            ++start[o + 1];
        }
    std::partial_sum(start.begin(), start.end(), start.begin());
    std::vector<std::uint32_t> adj(start[n]);
    {
        std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < kk; ++j) {
                const std::uint32_t o = knn[i * kk + j];
                if (o == i) continue;
                adj[fill[i]++] = o;
                adj[fill[o]++] = static_cast<std::uint32_t>(i);
            }
    }
    knn.clear();
    knn.shrink_to_fit();

    // Prim's algorithm per connected component, seeded at the highest point.
    std::vector<std::uint32_t> by_height(n);
    std::iota(by_height.begin(), by_height.end(), 0u);
    std::stable_sort(by_height.begin(), by_height.end(), [&](std::uint32_t a, std::uint32_t b) {
        return cloud.positions[a].z() > cloud.positions[b].z();
    });
    std::vector<std::uint8_t> done(n, 0);
    struct Item {
        double w;
        std::uint32_t v;
        std::uint32_t parent;
        bool operator>(const Item& o) const { return w != o.w ? w > o.w : v > o.v; }
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::size_t components = 0;
    auto& normals = out.normals;
    for (std::uint32_t seed : by_height) {
        if (done[seed]) continue;
        ++components;
        if (normals[seed].z() < 0.0) normals[seed] = -normals[seed];
        heap.push({0.0, seed, seed});
        while (!heap.empty()) {
            const Item it = heap.top();
            heap.pop();
            if (done[it.v]) continue;
            done[it.v] = 1;
            if (it.v != it.parent && normals[it.v].dot(normals[it.parent]) < 0.0)
                normals[it.v] = -normals[it.v];
            for (std::uint32_t e = start[it.v]; e < start[it.v + 1]; ++e) {
                const std::uint32_t o = adj[e];
                if (done[o]) continue;
                heap.push({1.0 - std::abs(normals[it.v].dot(normals[o])), o, it.v});
            }
        }
    }
    if (report) {
        report->degenerate = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
        report->components = components;
    }
    return out;
}

Surfel fit_surfel(std::span<const Vec3> points, std::span<const Vec3> normals,
                  const OctreeCube& cube, int depth, double sigma) {
    if (points.empty()) throw PreconditionError("fit_surfel needs at least one point");
    if (normals.size() != points.size()) throw PreconditionError("fit_surfel needs one normal per point");
    const double b = cube.width(depth);
    Vec3 centroid = Vec3::Zero();
    Vec3 mean_normal = Vec3::Zero();
    for (std::size_t i = 0; i < points.size(); ++i) {
        centroid += points[i];
        mean_normal += normals[i];
    }
    centroid /= static_cast<double>(points.size());
    mean_normal /= static_cast<double>(points.size());

    Surfel s;
    if (mean_normal.norm() >= 1e-3) {
        s.normal = mean_normal.normalized();
    } else {
        Vec3 e = pca(points.size(), [&](std::size_t i) -> const Vec3& { return points[i]; })
                     .smallest.normalized();
        if (e.z() < 0.0) e = -e;
        s.normal = e;
    }
    double r2 = 0.0;
    for (const auto& p : points) r2 = std::max(r2, (p - centroid).squaredNorm());
    s.radius = std::clamp(std::sqrt(r2), sigma / 2.0, std::sqrt(3.0) / 2.0 * b);
    s.offset = centroid - cube.anchor(depth);
    for (int k = 0; k < 3; ++k) s.offset[k] = std::clamp(s.offset[k], 0.0, std::nextafter(b, 0.0));
    return s;
}

std::vector<Vec3> surfel_grid_samples(const Surfel& surfel, const OctreeCube& cube, int depth,
                                      double grid_step) {
    const TangentFrame f = tangent_frame(surfel.normal);
    const Vec3 p = surfel.center(cube, depth);
    const Vec3 lo = cube.anchor(depth);
    const double b = cube.width(depth);
    const double r = surfel.radius;
    const int g = std::max(2, 2 * static_cast<int>(std::ceil(r / grid_step)));
    const double step = 2.0 * r / g;
    constexpr double eps = 1e-9;
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(g) * g);
    for (int j = 0; j < g; ++j) {
        const double y = -r + (j + 0.5) * step;
        for (int i = 0; i < g; ++i) {
            const double x = -r + (i + 0.5) * step;
            if (x * x + y * y > r * r) continue;
            const Vec3 q = p + x * f.u + y * f.v;
            bool inside = true;
            for (int k = 0; k < 3; ++k)
                inside = inside && q[k] >= lo[k] - eps && q[k] <= lo[k] + b + eps;
            if (inside) out.push_back(q);
        }
    }
    if (out.empty()) out.push_back(p);
    return out;
}

double surfel_d1_mse(std::span<const Vec3> points, const Surfel& surfel, const OctreeCube& cube,
                     int depth, double grid_step) {
    if (points.empty()) throw PreconditionError("surfel_d1_mse needs points");
    const auto samples = surfel_grid_samples(surfel, cube, depth, grid_step);
    const double inf = std::numeric_limits<double>::infinity();
    return std::max(directed_mse(samples, points, inf), directed_mse(points, samples, inf));
}

bool split_decision(std::span<const Vec3> points, const Surfel& surfel, const OctreeCube& cube,
                    int depth, double tau_db, double grid_step) {
    if (points.empty()) return true;
    const double limit = peak_mse_threshold(depth, tau_db);
    const auto samples = surfel_grid_samples(surfel, cube, depth, grid_step);
    if (directed_mse(samples, points, limit) > limit) return false;
    return directed_mse(points, samples, limit) <= limit;
}

SurfelOctree build_teso(const PointCloud& cloud, const BuildConfig& config) {
    cloud.validate();
    const int depth = cloud.depth;
    config.levels.validate(depth);
    if (!(config.grid_step > 0.0)) throw PreconditionError("grid step must be positive");
    if (cloud.empty()) return SurfelOctree(depth, config.levels);
    if (!cloud.has_normals()) throw PreconditionError("build_teso needs normals; estimate them first");

    const std::size_t n = cloud.size();
    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = cloud.positions[i];
        keys[i] = morton_encode_unchecked({static_cast<std::uint32_t>(std::floor(p[0])),
                                           static_cast<std::uint32_t>(std::floor(p[1])),
                                           static_cast<std::uint32_t>(std::floor(p[2]))});
    }
    std::vector<std::uint32_t> active(n);
    std::iota(active.begin(), active.end(), 0u);
    std::sort(active.begin(), active.end(), [&](std::uint32_t a, std::uint32_t b) {
        return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
    });

    const double sigma = std::ldexp(1.0, depth - config.levels.l_max());
    std::vector<std::vector<SurfelOctree::LeafEntry>> leaves(config.levels.l_max() + 1);
    for (int l : config.levels.leaf_levels) {
        const int shift = 3 * (depth - l);
        const bool last = l == config.levels.l_max();
        std::vector<std::size_t> group_start;
        for (std::size_t i = 0; i < active.size(); ++i)
            if (i == 0 || (keys[active[i]] >> shift) != (keys[active[i - 1]] >> shift))
                group_start.push_back(i);
        group_start.push_back(active.size());
        const std::size_t groups = group_start.size() - 1;

        std::vector<Surfel> surfels(groups);
        std::vector<std::uint8_t> accept(groups, 0);
        parallel_for(groups, 8, [&](std::size_t gb, std::size_t ge) {
            std::vector<Vec3> pts, nrm;
            for (std::size_t g = gb; g < ge; ++g) {
                pts.clear();
                nrm.clear();
                for (std::size_t i = group_start[g]; i < group_start[g + 1]; ++i) {
                    pts.push_back(cloud.positions[active[i]]);
                    nrm.push_back(cloud.normals[active[i]]);
                }
                const OctreeCube cube =
                    OctreeCube::from_key(l, keys[active[group_start[g]]] >> shift);
                surfels[g] = fit_surfel(pts, nrm, cube, depth, sigma);
                accept[g] = last || split_decision(pts, surfels[g], cube, depth, config.tau_db,
                                                   config.grid_step);
            }
        });

        std::vector<std::uint32_t> rest;
        for (std::size_t g = 0; g < groups; ++g) {
            if (accept[g]) {
                leaves[l].push_back({keys[active[group_start[g]]] >> shift, surfels[g]});
            } else {
                rest.insert(rest.end(), active.begin() + static_cast<std::ptrdiff_t>(group_start[g]),
                            active.begin() + static_cast<std::ptrdiff_t>(group_start[g + 1]));
            }
        }
        active = std::move(rest);
    }
    return SurfelOctree::from_leaves(depth, config.levels, std::move(leaves));
}

}  // namespace teso
