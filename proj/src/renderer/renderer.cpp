// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/renderer/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

#include "teso/core/errors.hpp"
#include "teso/core/parallel.hpp"

namespace teso {
namespace {

constexpr int kTile = 16;

struct Basis {
    Vec3 right, up, forward;
    double tan_half;
    double aspect;
};

Basis camera_basis(const Camera& cam) {
    Basis b;
    b.forward = (cam.target - cam.position).normalized();
    b.right = b.forward.cross(cam.up).normalized();
    b.up = b.right.cross(b.forward);
    b.tan_half = std::tan(cam.fov_deg * M_PI / 360.0);
    b.aspect = static_cast<double>(cam.width) / cam.height;
    return b;
}

// Screen-space interval [lo, hi] (normalized image-plane units) covered by
// a circle of radius R centered at lateral offset a and depth z; false when
// the circle reaches the camera plane.
bool tangent_extent(double a, double z, double r, double& lo, double& hi) {
    const double den = z * z - r * r;
    if (z <= r || den <= 0.0) return false;
    const double root = r * std::sqrt(a * a + den);
    lo = (a * z - root) / den;
    hi = (a * z + root) / den;
    return true;
}

}  // namespace

void Camera::validate() const {
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw PreconditionError("fov must be in (0, 180)");
    if ((target - position).norm() == 0.0) throw PreconditionError("camera target equals position");
    if (width < 1 || height < 1) throw PreconditionError("image size must be positive");
    const Vec3 f = (target - position).normalized();
    if (f.cross(up).norm() < 1e-9) throw PreconditionError("camera up is parallel to the view");
}

Ray camera_ray(const Camera& cam, double x, double y) {
    const Basis b = camera_basis(cam);
    const double px = (2.0 * (x + 0.5) / cam.width - 1.0) * b.tan_half * b.aspect;
    const double py = (1.0 - 2.0 * (y + 0.5) / cam.height) * b.tan_half;
    return {cam.position, (b.forward + px * b.right + py * b.up).normalized()};
}

PlacedSurfel place_surfel(const Surfel& s, const OctreeCube& cube, int depth,
                          const TexturePatch* patch) {
    PlacedSurfel p;
    p.center = s.center(cube, depth);
    p.frame = tangent_frame(s.normal);
    p.radius = s.radius;
    p.cube_lo = cube.anchor(depth);
    p.cube_width = cube.width(depth);
    p.patch = patch;
    return p;
}

HitRecord intersect(const Ray& ray, const PlacedSurfel& sf, double sigma, double soft_extent) {
    HitRecord h;
    const Vec3& n = sf.frame.n;
    const double denom = n.dot(ray.dir);
    if (std::abs(denom) < 1e-9) return h;
    const double t = n.dot(sf.center - ray.origin) / denom;
    if (!(t > 0.0)) return h;
    const Vec3 p = ray.origin + t * ray.dir;
    const Vec3 local = p - sf.center;
    const double x = local.dot(sf.frame.u), y = local.dot(sf.frame.v);
    const double rho = std::sqrt(x * x + y * y);

    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double e = std::max({sf.cube_lo[k] - p[k], p[k] - (sf.cube_lo[k] + sf.cube_width), 0.0});
        d2 += e * e;
    }
    const double r = sf.radius;
    h.t = t;
    h.point = p;
    h.s = std::clamp((x + r) / (2.0 * r), 0.0, 1.0);
    h.v = std::clamp((y + r) / (2.0 * r), 0.0, 1.0);
    if (d2 == 0.0) {
        if (rho <= r) {
            h.kind = HitKind::Solid;
            h.alpha = 1.0;
        }
        return h;
    }
    if (d2 <= soft_extent * soft_extent && rho <= r + soft_extent) {
        h.kind = HitKind::Soft;
        h.alpha = std::exp(-d2 / (sigma * sigma));
    }
    return h;
}

Color shade(const TexturePatch& patch, double s, double t) {
    const int m = patch.side;
    const double fx = std::clamp(s * m - 0.5, 0.0, m - 1.0);
    const double fy = std::clamp(t * m - 0.5, 0.0, m - 1.0);
    const int i0 = static_cast<int>(std::floor(fx)), j0 = static_cast<int>(std::floor(fy));
    const int i1 = std::min(i0 + 1, m - 1), j1 = std::min(j0 + 1, m - 1);
    const float ax = static_cast<float>(fx - i0), ay = static_cast<float>(fy - j0);
    const Color top = (1.0f - ax) * patch.at(i0, j0) + ax * patch.at(i1, j0);
    const Color bottom = (1.0f - ax) * patch.at(i0, j1) + ax * patch.at(i1, j1);
    return (1.0f - ay) * top + ay * bottom;
}

RenderOutput render(const SurfelOctree& tree, const Camera& cam, const Color& background) {
    cam.validate();
    RenderOutput out;
    out.image = Image(cam.width, cam.height, background);
    out.transmittance.assign(static_cast<std::size_t>(cam.width) * cam.height, 1.0f);
    if (tree.empty()) return out;

    const int depth = tree.depth();
    const double sigma = tree.sigma();
    const double soft = 3.0 * sigma;
    std::vector<PlacedSurfel> surfels;
    tree.for_each_leaf([&](int l, const OctreeNode& n) {
        surfels.push_back(place_surfel(n.surfel, OctreeCube::from_key(l, n.key), depth,
                                       n.patch.empty() ? nullptr : &n.patch));
    });

    const Basis basis = camera_basis(cam);
    const int tiles_x = (cam.width + kTile - 1) / kTile;
    const int tiles_y = (cam.height + kTile - 1) / kTile;
    std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(tiles_x) * tiles_y);
    std::vector<double> distance(surfels.size());
    const double sx = 1.0 / (basis.tan_half * basis.aspect), sy = 1.0 / basis.tan_half;
    for (std::size_t i = 0; i < surfels.size(); ++i) {
        const Vec3 rel = surfels[i].center - cam.position;
        distance[i] = rel.norm();
        const double bound = surfels[i].radius + soft;
        const double z = rel.dot(basis.forward);
        if (z < -bound) continue;
        int x0 = 0, x1 = tiles_x - 1, y0 = 0, y1 = tiles_y - 1;
        double lo, hi;
        if (tangent_extent(rel.dot(basis.right), z, bound, lo, hi)) {
            const double a = (lo * sx + 1.0) * 0.5 * cam.width, b = (hi * sx + 1.0) * 0.5 * cam.width;
            x0 = std::max(x0, static_cast<int>(std::floor(a)) / kTile);
            x1 = std::min(x1, static_cast<int>(std::floor(std::min(b, 1e9))) / kTile);
            if (b < 0.0 || a >= cam.width) continue;
        }
        if (tangent_extent(rel.dot(basis.up), z, bound, lo, hi)) {
            const double a = (1.0 - hi * sy) * 0.5 * cam.height, b = (1.0 - lo * sy) * 0.5 * cam.height;
            y0 = std::max(y0, static_cast<int>(std::floor(a)) / kTile);
            y1 = std::min(y1, static_cast<int>(std::floor(std::min(b, 1e9))) / kTile);
            if (b < 0.0 || a >= cam.height) continue;
        }
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx)
                tiles[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(
                    static_cast<std::uint32_t>(i));
    }

    parallel_for(tiles.size(), 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t ti = begin; ti < end; ++ti) {
            auto& list = tiles[ti];
            std::sort(list.begin(), list.end(), [&](std::uint32_t a, std::uint32_t b) {
                return distance[a] != distance[b] ? distance[a] < distance[b] : a < b;
            });
            const int tx = static_cast<int>(ti % tiles_x), ty = static_cast<int>(ti / tiles_x);
            for (int y = ty * kTile; y < std::min(cam.height, (ty + 1) * kTile); ++y)
                for (int x = tx * kTile; x < std::min(cam.width, (tx + 1) * kTile); ++x) {
                    const double px = (2.0 * (x + 0.5) / cam.width - 1.0) * basis.tan_half * basis.aspect;
                    const double py = (1.0 - 2.0 * (y + 0.5) / cam.height) * basis.tan_half;
                    const Ray ray{cam.position,
                                  (basis.forward + px * basis.right + py * basis.up).normalized()};
                    Color c = Color::Zero();
                    float trans = 1.0f;
                    for (std::uint32_t idx : list) {
                        const PlacedSurfel& s = surfels[idx];
                        const HitRecord h = intersect(ray, s, sigma, soft);
                        if (h.kind == HitKind::Miss) continue;
                        const Color col = s.patch ? shade(*s.patch, h.s, h.v) : Color::Constant(0.5f);
                        if (h.kind == HitKind::Solid) {
                            c += trans * col;
                            trans = 0.0f;
                            break;
                        }
                        const auto a = static_cast<float>(h.alpha);
                        c += trans * a * col;
                        trans *= 1.0f - a;
                    }
                    c += trans * background;
                    const std::size_t pi = static_cast<std::size_t>(y) * cam.width + x;
                    out.image.pixels[pi] = c.cwiseMax(0.0f).cwiseMin(1.0f);
                    out.transmittance[pi] = trans;
                }
        }
    });
    return out;
}

std::vector<Camera> make_trajectory(const TrajectoryOptions& o) {
    if (o.frames < 1) throw PreconditionError("trajectory needs at least one frame");
    std::mt19937_64 rng(o.seed);
    std::vector<Camera> cams;
    cams.reserve(static_cast<std::size_t>(o.frames));
    for (int i = 0; i < o.frames; ++i) {
        double s = 0.0;
        if (i > 0) {
            // 53 random bits mapped to [-1, 1); independent of the standard
            // library's distribution implementations.
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            s = (2.0 * u - 1.0) * o.perturb_m;
        }
        const double angle = 2.0 * M_PI * i / o.frames;
        const double dist = (o.radius_m + s) * o.voxels_per_meter;
        Camera c;
        c.position = o.center + dist * Vec3(std::sin(angle), 0.0, std::cos(angle));
        c.target = o.center;
        c.up = Vec3::UnitY();
        c.fov_deg = o.fov_deg;
        c.width = o.width;
        c.height = o.height;
        cams.push_back(c);
    }
    return cams;
}

void write_trajectory(const std::vector<Camera>& cams, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "# frame px py pz tx ty tz ux uy uz fov\n" << std::setprecision(17);
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const Camera& c = cams[i];
        out << i << ' ' << c.position.x() << ' ' << c.position.y() << ' ' << c.position.z() << ' '
            << c.target.x() << ' ' << c.target.y() << ' ' << c.target.z() << ' ' << c.up.x() << ' '
            << c.up.y() << ' ' << c.up.z() << ' ' << c.fov_deg << '\n';
    }
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::vector<Camera> read_trajectory(const std::filesystem::path& path, int width, int height) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::vector<Camera> cams;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        long index;
        Camera c;
        if (!(ss >> index >> c.position.x() >> c.position.y() >> c.position.z() >> c.target.x() >>
              c.target.y() >> c.target.z() >> c.up.x() >> c.up.y() >> c.up.z() >> c.fov_deg))
            throw ParseError("trajectory: malformed line", line_no);
        c.width = width;
        c.height = height;
        try {
            c.validate();
        } catch (const PreconditionError& e) {
            throw ParseError(std::string("trajectory: ") + e.what(), line_no);
        }
        cams.push_back(c);
    }
    return cams;
}

}  // namespace teso
