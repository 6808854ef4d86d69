// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "teso/builder/builder.hpp"
#include "teso/core/container.hpp"
#include "teso/core/morton.hpp"
#include "teso/core/parallel.hpp"
#include "teso/evalkit/evalkit.hpp"
#include "teso/geocodec/geometry.hpp"
#include "teso/geocodec/models.hpp"
#include "teso/pipeline/pipeline.hpp"
#include "teso/quant/quant.hpp"
#include "teso/renderer/renderer.hpp"
#include "teso/texture/texture.hpp"

using namespace teso;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const PointCloud& sphere_fixture() {
    static const PointCloud c = fixtures::sphere_shell(89);
    return c;
}

// 1. Lossless geometry coding on plane, sphere and torus.
Outcome lossless_geometry() {
    struct Named {
        const char* name;
        PointCloud cloud;
    };
    const Named clouds[] = {{"plane", fixtures::tilted_plane(316)},
                            {"sphere", fixtures::sphere_shell(89)},
                            {"torus", fixtures::torus(120.0, 21.0)}};
    Outcome o{true, ""};
    for (const auto& [name, cloud] : clouds) {
        const auto t0 = Clock::now();
        bool exact = true;
        for (double tau : {60.0, 66.0}) {
            const SurfelOctree q = quantize_tree(build_teso(cloud, BuildConfig::defaults(10, tau)));
            Bitstream s;
            s.sections = encode_geometry(q, s.header);
            exact = exact && decode_geometry(parse(serialize(s))) == q;
        }
        const double secs = seconds_since(t0);
        o.pass = o.pass && exact && secs < 30.0 && cloud.size() >= 95000;
        o.detail += fmt("%s %zu pts %s %.1fs; ", name, cloud.size(), exact ? "exact" : "MISMATCH", secs);
    }
    return o;
}

// 2. Coded size within 2% + 64 bytes of the model cross-entropy.
Outcome coder_bound() {
    constexpr std::size_t n = 100000;
    std::mt19937_64 rng(2);
    const double skew[5] = {0.9, 0.05, 0.03, 0.015, 0.005};
    std::discrete_distribution<int> d(std::begin(skew), std::end(skew));
    std::vector<int> skewed(n), uniform(n), binary(n);
    for (auto& s : skewed) s = d(rng);
    for (auto& s : uniform) s = static_cast<int>(rng() % 129);
    for (auto& s : binary) s = rng() % 10 < 2;

    struct Case {
        const char* name;
        const std::vector<int>* symbols;
        std::function<std::unique_ptr<Model>()> make;
    };
    const Case cases[] = {
        {"uniform", &uniform, [] { return std::make_unique<UniformModel>(129); }},
        {"static-skewed", &skewed, [&] { return std::make_unique<StaticModel>(StaticModel::from_probabilities(skew)); }},
        {"adaptive-skewed", &skewed, [] { return std::make_unique<AdaptiveCategoricalModel>(5); }},
        {"adaptive-129", &uniform, [] { return std::make_unique<AdaptiveCategoricalModel>(129); }},
        {"adaptive-binary", &binary, [] { return std::make_unique<AdaptiveBinaryModel>(); }},
    };
    Outcome o{true, ""};
    for (const auto& c : cases) {
        auto est_model = c.make();
        const double est = estimate_rate(*c.symbols, *est_model);
        auto enc_model = c.make();
        const Bytes bytes = encode_symbols(*c.symbols, *enc_model);
        auto dec_model = c.make();
        const bool same = decode_symbols(bytes, n, *dec_model) == *c.symbols;
        const double bits = 8.0 * static_cast<double>(bytes.size());
        const double bound = est + 0.02 * static_cast<double>(n) + 64 * 8;
        o.pass = o.pass && same && bits <= bound;
        o.detail += fmt("%s %.0f/%.0f bits; ", c.name, bits, bound);
    }
    return o;
}

// Leaves at level 8 whose normal u index follows the x offset and whose
// radius follows both normal indices.
SurfelOctree correlated_tree() {
    const LevelConfig cfg = LevelConfig::defaults(10);
    const int level = cfg.l_max();
    const Alphabets a = alphabets(level, 10);
    std::mt19937_64 rng(33);
    std::vector<std::uint64_t> keys;
    const std::uint64_t cells = std::uint64_t{1} << (3 * level);
    for (int i = 0; i < 60000; ++i) keys.push_back(rng() % cells);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    std::vector<std::vector<SurfelOctree::LeafEntry>> leaves(level + 1);
    for (std::uint64_t key : keys) {
        QuantizedSurfel q;
        for (auto& c : q.offset) c = static_cast<int>(rng() % static_cast<std::uint64_t>(a.offset));
        const int noise = static_cast<int>(rng() % 13) - 6;
        q.normal[0] = std::clamp(8 + q.offset[0] * 104 / (a.offset - 1) + noise, 0, a.normal - 1);
        q.normal[1] = static_cast<int>(rng() % static_cast<std::uint64_t>(a.normal));
        q.radius = std::min(a.radius - 1, 3 + q.normal[0] * 20 / a.normal + q.normal[1] * 25 / a.normal +
                                              static_cast<int>(rng() % 3));
        leaves[level].push_back({key, dequantize(q)});
    }
    return SurfelOctree::from_leaves(10, cfg, std::move(leaves));
}

// 3. Conditioning lowers normal and radius rates.
Outcome conditioning_direction() {
    const SurfelOctree tree = correlated_tree();
    GeometryStats st[3];
    const Conditioning modes[3] = {Conditioning::None, Conditioning::Offset, Conditioning::OffsetNormal};
    for (int i = 0; i < 3; ++i) {
        BitstreamHeader h;
        encode_geometry(tree, h, {GeometryModelId::Adaptive, modes[i]}, &st[i]);
    }
    const bool normal_ok = st[1].normal < st[0].normal;
    const bool radius_ok = st[2].radius < st[1].radius && st[1].radius < st[0].radius;
    return {normal_ok && radius_ok,
            fmt("%zu leaves; normal bits none %.0f, offset %.0f; radius bits none %.0f, offset %.0f, "
                "offset+normal %.0f",
                tree.leaf_count(), st[0].normal, st[1].normal, st[0].radius, st[1].radius, st[2].radius)};
}

// 4. Building a 1M-point cloud.
Outcome build_speed() {
    const PointCloud cloud = fixtures::sphere_shell(282);
    const auto t0 = Clock::now();
    const SurfelOctree t = build_teso(cloud, BuildConfig::defaults(10, 66));
    const double secs = seconds_since(t0);
    return {cloud.size() >= 1000000 && secs < 10.0,
            fmt("%zu points, %zu leaves, %.2fs on %u threads", cloud.size(), t.leaf_count(), secs,
                thread_count())};
}

std::vector<Camera> trajectory(int res) {
    TrajectoryOptions t;
    t.width = t.height = res;
    return make_trajectory(t);
}

// 5. No holes inside the eroded silhouette of the sphere.
Outcome gap_free() {
    EncodeOptions opts;
    opts.build = BuildConfig::defaults(10, 66);
    const SurfelOctree tree = decode_stream(encode_cloud(sphere_fixture(), opts).bytes);
    const double radius = 89.0;
    std::size_t holes = 0, inside = 0, partial = 0;
    for (const Camera& cam : trajectory(1024)) {
        const RenderOutput out = render(tree, cam, Color(1, 0, 1));
        // Ray-sphere test per pixel center, then erode by a 2 px disk.
        std::vector<std::uint8_t> in(static_cast<std::size_t>(cam.width) * cam.height);
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                const Ray r = camera_ray(cam, x, y);
                const Vec3 oc = fixtures::kCenter - r.origin;
                const double along = oc.dot(r.dir);
                in[static_cast<std::size_t>(y) * cam.width + x] =
                    along > 0 && (oc - along * r.dir).norm() < radius;
            }
        for (int y = 2; y < cam.height - 2; ++y)
            for (int x = 2; x < cam.width - 2; ++x) {
                bool eroded = true;
                for (int dy = -2; dy <= 2 && eroded; ++dy)
                    for (int dx = -2; dx <= 2 && eroded; ++dx)
                        if (dx * dx + dy * dy <= 4)
                            eroded = in[static_cast<std::size_t>(y + dy) * cam.width + x + dx];
                if (!eroded) continue;
                ++inside;
                const float tr = out.transmittance[static_cast<std::size_t>(y) * cam.width + x];
                if (tr == 1.0f) ++holes;
                if (tr > 0.0f) ++partial;
            }
    }
    return {holes == 0 && inside > 0,
            fmt("%zu interior pixels over 8 views, %zu background, %zu partially covered", inside,
                holes, partial)};
}

// 6. Attribute quantization barely changes the renders.
Outcome quantization_transparency() {
    SurfelOctree original = build_teso(sphere_fixture(), BuildConfig::defaults(10, 66));
    sample_patches(original, sphere_fixture());
    const SurfelOctree quantized = quantize_tree(original);
    double worst = std::numeric_limits<double>::infinity();
    for (const Camera& cam : trajectory(1024))
        worst = std::min(worst, image_psnr(render(original, cam).image, render(quantized, cam).image));
    return {worst >= 40.0, fmt("lowest PSNR over 8 views %.2f dB", worst)};
}

// 7. Geometry fidelity per leaf and over the whole tree.
Outcome geometry_fidelity() {
    const PointCloud& cloud = sphere_fixture();
    Outcome o{true, ""};
    for (double tau : {60.0, 66.0}) {
        const SurfelOctree t = build_teso(cloud, BuildConfig::defaults(10, tau));
        // Group the input points by the leaf whose cube holds them.
        std::map<std::pair<int, std::uint64_t>, std::vector<Vec3>> groups;
        for (const Vec3& p : cloud.positions)
            for (int l = t.l_min(); l <= t.l_max(); ++l) {
                const double b = std::ldexp(1.0, 10 - l);
                const Coord c{static_cast<std::uint32_t>(p.x() / b), static_cast<std::uint32_t>(p.y() / b),
                              static_cast<std::uint32_t>(p.z() / b)};
                const std::uint64_t key = morton_encode(c, l);
                const OctreeNode* n = t.find(l, key);
                if (n && n->leaf) {
                    groups[{l, key}].push_back(p);
                    break;
                }
            }
        double leaf_min = std::numeric_limits<double>::infinity();
        std::size_t checked = 0;
        for (const auto& [id, pts] : groups) {
            if (id.first == t.l_max()) continue;
            const OctreeCube cube = OctreeCube::from_key(id.first, id.second);
            const auto samples = surfel_grid_samples(t.find(id.first, id.second)->surfel, cube, 10, 1.0);
            leaf_min = std::min(leaf_min, d1_psnr(samples, pts, 1023.0));
            ++checked;
        }
        const double whole = d1_psnr(tree_surface_samples(t), cloud.positions, 1023.0);
        o.pass = o.pass && leaf_min >= tau && whole >= tau - 1.0;
        o.detail += fmt("tau %.0f: %zu leaves above l_max, min leaf %.2f dB, tree %.2f dB; ", tau,
                        checked, leaf_min, whole);
    }
    return o;
}

// 8. Rate grows with tau, texture rate falls with Qt, hull is monotone.
Outcome rd_monotonicity() {
    SweepOptions s;
    s.cameras = trajectory(256);
    const SweepResult r = rd_sweep(sphere_fixture(), s);
    const std::size_t nq = s.qts.size();
    bool bpp_ok = true, tex_ok = true, hull_ok = true;
    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t t = 1; t < s.taus.size(); ++t)
            bpp_ok = bpp_ok && r.points[t * nq + q].bpp > r.points[(t - 1) * nq + q].bpp;
    for (std::size_t t = 0; t < s.taus.size(); ++t)
        for (std::size_t q = 1; q < nq; ++q)
            tex_ok = tex_ok && r.points[t * nq + q].texture_bits < r.points[t * nq + q - 1].texture_bits;
    for (std::size_t i = 1; i < r.hull.size(); ++i)
        hull_ok = hull_ok && r.hull[i].distortion() <= r.hull[i - 1].distortion() &&
                  r.hull[i].bpp >= r.hull[i - 1].bpp;
    std::string d = fmt("bpp by tau at Qt %d:", s.qts[0]);
    for (std::size_t t = 0; t < s.taus.size(); ++t) d += fmt(" %.3f", r.points[t * nq].bpp);
    d += fmt("; texture bits by Qt at tau %.0f:", s.taus[0]);
    for (std::size_t q = 0; q < nq; ++q) d += fmt(" %.0f", r.points[q].texture_bits);
    d += fmt("; hull %zu points; bpp rises with tau %s, texture falls with Qt %s, hull monotone %s",
             r.hull.size(), bpp_ok ? "yes" : "NO", tex_ok ? "yes" : "NO", hull_ok ? "yes" : "NO");
    return {bpp_ok && tex_ok && hull_ok && !r.hull.empty(), d};
}

// 9. Renderer against the analytic tracer; octahedral normal error.
Outcome renderer_oracle() {
    std::size_t covered = 0;
    const double err = oracle::single_surfel_error(&covered);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    double worst = 0;
    for (int i = 0; i < 100000; ++i) {
        Vec3 n(g(rng), g(rng), g(rng));
        if (n.norm() < 1e-9) continue;
        n.normalize();
        const auto q = quantize_normal(n);
        const Vec3 back = oct_decode(dequantize_normal_component(q[0]), dequantize_normal_component(q[1]));
        worst = std::max(worst, std::acos(std::clamp(n.dot(back), -1.0, 1.0)) * 180.0 / M_PI);
    }
    return {err <= 1.0 / 255 && covered > 0 && worst <= 1.5,
            fmt("max pixel error %.2e over %zu covered pixels; worst normal error %.3f deg", err,
                covered, worst)};
}

// 10. Streams and images independent of run and worker count.
Outcome determinism() {
    const PointCloud cloud = fixtures::sphere_shell(60);
    EncodeOptions opts;
    opts.build = BuildConfig::defaults(10, 64);
    TrajectoryOptions tr;
    tr.frames = 3;
    tr.width = tr.height = 256;
    const auto cams = make_trajectory(tr);
    auto run = [&](unsigned threads, Bytes& stream, std::vector<Image>& images) {
        set_thread_count(threads);
        stream = encode_cloud(cloud, opts).bytes;
        const SurfelOctree t = decode_stream(stream);
        images.clear();
        for (const auto& c : cams) images.push_back(render(t, c).image);
    };
    Bytes ref_stream;
    std::vector<Image> ref_images;
    run(1, ref_stream, ref_images);
    bool same = true;
    for (unsigned threads : {1u, 2u, 4u, 7u}) {
        Bytes s;
        std::vector<Image> im;
        run(threads, s, im);
        same = same && s == ref_stream;
        for (std::size_t i = 0; i < im.size(); ++i)
            same = same && im[i].pixels == ref_images[i].pixels;
    }
    set_thread_count(0);

    // Across processes and builds: the frozen stream in the test data.
    opts.build = BuildConfig::defaults(10, 62);
    opts.qt = 10;
    const Bytes now = encode_cloud(fixtures::sphere_shell(20), opts).bytes;
    std::ifstream in(std::string(TESO_TEST_DATA_DIR) + "/sphere20_tau62_qt10.teso", std::ios::binary);
    const Bytes golden((std::istreambuf_iterator<char>(in)), {});
    const bool frozen = !golden.empty() && golden == now;
    return {same && frozen, fmt("threads 1/2/4/7 %s; frozen stream %s", same ? "identical" : "DIFFER",
                                frozen ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
    const std::pair<const char*, Outcome (*)()> criteria[] = {
        {"lossless geometry codec", lossless_geometry},
        {"range coder efficiency", coder_bound},
        {"conditioning direction", conditioning_direction},
        {"construction speed", build_speed},
        {"gap-free rendering", gap_free},
        {"quantization transparency", quantization_transparency},
        {"geometry fidelity", geometry_fidelity},
        {"rate-distortion monotonicity", rd_monotonicity},
        {"renderer oracle", renderer_oracle},
        {"determinism", determinism},
    };
    int failed = 0, index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d %s: %s (%s) [%.1fs]\n", index, name, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed;
}
