// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/evalkit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "teso/builder/builder.hpp"
#include "teso/core/errors.hpp"
#include "teso/core/parallel.hpp"
#include "teso/core/spatial_index.hpp"
#include "teso/pipeline/pipeline.hpp"

namespace teso {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_size(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw PreconditionError("image sizes differ");
    if (a.pixels.empty()) throw PreconditionError("empty image");
}

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size));
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double x = i - (size - 1) / 2.0;
        w[i] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Separable Gaussian filter, "valid" region only.
std::vector<double> filter_valid(const std::vector<double>& img, int width, int height,
                                 const std::vector<double>& w, int& out_w, int& out_h) {
    const int n = static_cast<int>(w.size());
    out_w = width - n + 1;
    out_h = height - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(out_w) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < out_w; ++x) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += w[k] * img[static_cast<std::size_t>(y) * width + x + k];
            tmp[static_cast<std::size_t>(y) * out_w + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += w[k] * tmp[static_cast<std::size_t>(y + k) * out_w + x];
            out[static_cast<std::size_t>(y) * out_w + x] = s;
        }
    return out;
}

}  // namespace

double directed_d1_mse(std::span<const Vec3> from, std::span<const Vec3> to) {
    if (from.empty() || to.empty()) throw PreconditionError("D1 needs non-empty point sets");
    const PointGrid grid(to, 1.0);
    std::vector<double> partial((from.size() + 4095) / 4096, 0.0);
    parallel_for(from.size(), 4096, [&](std::size_t begin, std::size_t end) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += grid.nearest(from[i]).dist2;
        partial[begin / 4096] = s;
    });
    double sum = 0.0;
    for (double s : partial) sum += s;
    return sum / static_cast<double>(from.size());
}

double d1_psnr(std::span<const Vec3> a, std::span<const Vec3> b, double peak) {
    const double mse = std::max(directed_d1_mse(a, b), directed_d1_mse(b, a));
    if (mse == 0.0) return kInf;
    return 10.0 * std::log10(peak * peak / mse);
}

std::vector<Vec3> tree_surface_samples(const SurfelOctree& tree, double grid_step) {
    std::vector<Vec3> out;
    tree.for_each_leaf([&](int l, const OctreeNode& n) {
        const auto s = surfel_grid_samples(n.surfel, OctreeCube::from_key(l, n.key), tree.depth(),
                                           grid_step);
        out.insert(out.end(), s.begin(), s.end());
    });
    return out;
}

double image_psnr(const Image& a, const Image& b) {
    check_same_size(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        sum += (a.pixels[i] - b.pixels[i]).cast<double>().squaredNorm();
    const double mse = sum / (3.0 * static_cast<double>(a.pixels.size()));
    if (mse == 0.0) return kInf;
    return -10.0 * std::log10(mse);
}

double image_ssim(const Image& a, const Image& b) {
    check_same_size(a, b);
    const int size = std::min({11, a.width, a.height});
    const auto w = gaussian_window(size, 1.5);
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const std::size_t n = a.pixels.size();
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.pixels[i][c];
            y[i] = b.pixels[i][c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        int ow, oh;
        const auto mx = filter_valid(x, a.width, a.height, w, ow, oh);
        const auto my = filter_valid(y, a.width, a.height, w, ow, oh);
        const auto mxx = filter_valid(xx, a.width, a.height, w, ow, oh);
        const auto myy = filter_valid(yy, a.width, a.height, w, ow, oh);
        const auto mxy = filter_valid(xy, a.width, a.height, w, ow, oh);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = mxx[i] - mx[i] * mx[i], vy = myy[i] - my[i] * my[i];
            const double cov = mxy[i] - mx[i] * my[i];
            sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += sum / static_cast<double>(mx.size());
    }
    return total / 3.0;
}

SweepResult rd_sweep(const PointCloud& cloud, const SweepOptions& options) {
    cloud.validate();
    if (cloud.empty()) throw PreconditionError("rate-distortion sweep needs points");
    if (options.cameras.empty()) throw PreconditionError("rate-distortion sweep needs cameras");
    if (options.taus.empty()) throw PreconditionError("rate-distortion sweep needs a tau set");
    if (options.codec == TextureCodecId::None)
        throw PreconditionError("rate-distortion sweep needs a texture codec");

    const PointCloud input =
        cloud.has_normals() ? cloud : estimate_normals(cloud, options.normal_k);

    BuildConfig ref_build = BuildConfig::defaults(cloud.depth, kInf);
    SurfelOctree reference = build_teso(input, ref_build);
    sample_patches(reference, input);
    std::vector<Image> ref_images;
    for (const auto& cam : options.cameras) ref_images.push_back(render(reference, cam).image);

    const std::vector<int> qts =
        options.codec == TextureCodecId::InternalDct ? options.qts : std::vector<int>{0};
    if (qts.empty()) throw PreconditionError("rate-distortion sweep needs a Qt set");

    SweepResult result;
    for (double tau : options.taus) {
        EncodeOptions enc;
        enc.build = BuildConfig::defaults(cloud.depth, tau);
        enc.texture = options.codec;
        const SurfelOctree tree = prepare_tree(input, enc);
        for (int qt : qts) {
            enc.qt = qt;
            const EncodeResult coded = encode_tree(tree, enc, cloud.size());
            const SurfelOctree decoded = decode_stream(coded.bytes);
            RDPoint p;
            p.tau_db = tau;
            p.qt = qt;
            p.codec = options.codec;
            p.geometry_bits = 8.0 * static_cast<double>(coded.geometry_bytes);
            p.texture_bits = 8.0 * static_cast<double>(coded.texture_bytes);
            p.total_bits = 8.0 * static_cast<double>(coded.bytes.size());
            p.bpp = coded.bits_per_point();
            for (std::size_t i = 0; i < options.cameras.size(); ++i) {
                const Image img = render(decoded, options.cameras[i]).image;
                p.psnr += image_psnr(ref_images[i], img);
                p.ssim += image_ssim(ref_images[i], img);
            }
            p.psnr /= static_cast<double>(options.cameras.size());
            p.ssim /= static_cast<double>(options.cameras.size());
            result.points.push_back(p);
        }
    }
    result.hull = pareto_hull(result.points);
    return result;
}

std::vector<RDPoint> pareto_hull(std::vector<RDPoint> points) {
    std::sort(points.begin(), points.end(), [](const RDPoint& a, const RDPoint& b) {
        if (a.bpp != b.bpp) return a.bpp < b.bpp;
        return a.distortion() < b.distortion();
    });
    std::vector<RDPoint> hull;
    for (const auto& p : points)
        if (hull.empty() || p.distortion() < hull.back().distortion()) hull.push_back(p);
    return hull;
}

const char* codec_name(TextureCodecId codec) {
    switch (codec) {
        case TextureCodecId::None: return "none";
        case TextureCodecId::InternalDct: return "dct";
        case TextureCodecId::ExternalRaw: return "raw";
    }
    return "unknown";
}

std::string format_rd_csv(std::span<const RDPoint> points) {
    std::ostringstream out;
    out.precision(10);
    out << "# tau,qt,codec,geometry_bits,texture_bits,bpp,psnr,ssim\n";
    for (const auto& p : points)
        out << p.tau_db << ',' << p.qt << ',' << codec_name(p.codec) << ',' << p.geometry_bits
            << ',' << p.texture_bits << ',' << p.bpp << ',' << p.psnr << ',' << p.ssim << '\n';
    return out.str();
}

void write_rd_csv(std::span<const RDPoint> points, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << format_rd_csv(points);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace teso
