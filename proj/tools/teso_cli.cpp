// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include <sys/resource.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "teso/builder/builder.hpp"
#include "teso/core/container.hpp"
#include "teso/core/errors.hpp"
#include "teso/core/image.hpp"
#include "teso/core/parallel.hpp"
#include "teso/core/ply.hpp"
#include "teso/evalkit/evalkit.hpp"
#include "teso/pipeline/pipeline.hpp"
#include "teso/quant/quant.hpp"
#include "teso/renderer/renderer.hpp"
#include "teso/texcodec/texcodec.hpp"
#include "teso/texture/texture.hpp"

namespace fs = std::filesystem;
using namespace teso;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Usage problem found after parsing (bad list syntax, conflicting flags).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        T v;
        if (!(is >> v) || !(is >> std::ws).eof())
            throw UsageError(std::string("invalid ") + what + " list '" + text + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
    return out;
}

Vec3 parse_vec3(const std::string& text, const char* what) {
    const auto v = parse_list<double>(text, what);
    if (v.size() != 3) throw UsageError(std::string(what) + " needs three values");
    return {v[0], v[1], v[2]};
}

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const Bytes& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write '" + path.string() + "'");
}

bool is_teso_path(const fs::path& p) { return p.extension() == ".teso"; }

// Options shared by build, encode and eval.
struct TreeFlags {
    double tau = 66.0;
    std::string levels;
    std::string patch_sides;
    int k = 16;
    double grid_step = 1.0;

    BuildConfig config(int depth) const {
        BuildConfig c = BuildConfig::defaults(depth, tau);
        c.grid_step = grid_step;
        if (!levels.empty()) c.levels = LevelConfig::with_levels(parse_list<int>(levels, "level"));
        if (!patch_sides.empty()) {
            const auto sides = parse_list<int>(patch_sides, "patch side");
            if (sides.size() != c.levels.leaf_levels.size())
                throw UsageError("--patch-sides needs one value per leaf level");
            for (std::size_t i = 0; i < sides.size(); ++i) {
                if (sides[i] < 1 || sides[i] > 255) throw UsageError("patch side must be in [1, 255]");
                c.levels.patch_side[c.levels.leaf_levels[i]] = sides[i];
            }
        }
        c.levels.validate(depth);
        return c;
    }
};

void add_tree_flags(CLI::App* app, TreeFlags& f) {
    app->add_option("--tau", f.tau, "D1-PSNR split threshold in dB")->capture_default_str();
    app->add_option("--levels", f.levels, "Comma-separated leaf levels (default depth-4..depth-2)");
    app->add_option("--patch-sides", f.patch_sides, "Patch side per leaf level");
    app->add_option("--k", f.k, "Neighbors for normal estimation")->capture_default_str()->check(
        CLI::Range(3, 256));
    app->add_option("--grid-step", f.grid_step, "Split-decision sample spacing in voxels")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

TextureCodecId parse_codec(const std::string& s) {
    if (s == "dct") return TextureCodecId::InternalDct;
    if (s == "raw") return TextureCodecId::ExternalRaw;
    if (s == "none") return TextureCodecId::None;
    throw UsageError("unknown codec '" + s + "'");
}

const char* model_name(GeometryModelId m) { return m == GeometryModelId::Adaptive ? "adaptive" : "uniform"; }

const char* conditioning_name(Conditioning c) {
    switch (c) {
        case Conditioning::None: return "none";
        case Conditioning::Offset: return "offset";
        case Conditioning::OffsetNormal: return "offset-normal";
    }
    return "unknown";
}

std::string section_name(std::uint16_t id) {
    const int l = id & 0xFF;
    switch (id & 0xFF00) {
        case 0x0000: return id == section::kBaseOctree ? "base" : "unknown";
        case 0x0100: return "occupancy[" + std::to_string(l) + "]";
        case 0x0200: return "leaf_flags[" + std::to_string(l) + "]";
        case 0x0300: return "attributes[" + std::to_string(l) + "]";
        case 0x0400: return "texture[" + std::to_string(l) + "]";
        case 0x0F00: return id == section::kRawTree ? "raw_tree" : "unknown";
        default: return "unknown";
    }
}

void report_normals(const NormalEstimationReport& r, bool estimated) {
    if (!estimated) return;
    std::cerr << "normals: estimated, " << r.components << " component(s)";
    if (r.degenerate) std::cerr << ", " << r.degenerate << " degenerate neighborhood(s)";
    std::cerr << '\n';
}

Vec3 leaf_center(const SurfelOctree& tree) {
    if (tree.empty()) return Vec3::Constant(std::ldexp(0.5, tree.depth()));
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    tree.for_each_leaf([&](int l, const OctreeNode& n) {
        const Vec3 p = n.surfel.center(OctreeCube::from_key(l, n.key), tree.depth());
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    });
    return 0.5 * (lo + hi);
}

Vec3 cloud_center(const PointCloud& cloud) {
    if (cloud.empty()) return Vec3::Constant(std::ldexp(0.5, cloud.depth));
    Vec3 lo = cloud.positions[0], hi = lo;
    for (const auto& p : cloud.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return 0.5 * (lo + hi);
}

struct TrajectoryFlags {
    int frames = 8;
    std::uint64_t seed = 1;
    double radius = 2.75;
    double perturb = 1.0;
    double fov = 45.0;
    std::string center;
};

void add_trajectory_flags(CLI::App* app, TrajectoryFlags& f) {
    app->add_option("--frames", f.frames, "Number of views")->capture_default_str()->check(
        CLI::PositiveNumber);
    app->add_option("--seed", f.seed, "Seed for the distance perturbation")->capture_default_str();
    app->add_option("--radius", f.radius, "Circle radius in meters")->capture_default_str();
    app->add_option("--perturb", f.perturb, "Maximum radial perturbation in meters")
        ->capture_default_str();
    app->add_option("--fov", f.fov, "Vertical field of view in degrees")->capture_default_str();
    app->add_option("--center", f.center, "Look-at point x,y,z in voxels");
}

TrajectoryOptions trajectory_options(const TrajectoryFlags& f, const Vec3& default_center, int res) {
    TrajectoryOptions o;
    o.frames = f.frames;
    o.seed = f.seed;
    o.radius_m = f.radius;
    o.perturb_m = f.perturb;
    o.fov_deg = f.fov;
    o.center = f.center.empty() ? default_center : parse_vec3(f.center, "center");
    o.width = o.height = res;
    if (!(o.fov_deg > 0.0 && o.fov_deg < 180.0)) throw UsageError("--fov must be in (0, 180)");
    return o;
}

void apply_memory_cap() {
    const char* env = std::getenv("TESO_MAX_MEMORY_MB");
    if (!env || !*env) return;
    char* end = nullptr;
    const unsigned long long mb = std::strtoull(env, &end, 10);
    if (*end != '\0' || mb == 0) throw UsageError("TESO_MAX_MEMORY_MB must be a positive integer");
    rlimit lim{};
    lim.rlim_cur = lim.rlim_max = static_cast<rlim_t>(mb) << 20;
    if (setrlimit(RLIMIT_AS, &lim) != 0) std::perror("setrlimit");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Textured surfel octree point cloud codec"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

    // normals
    std::string in_path, out_path;
    auto* normals = app.add_subcommand("normals", "Estimate and orient per-point normals");
    int normals_k = 16;
    bool ascii = false;
    normals->add_option("input", in_path, "Input PLY")->required()->check(CLI::ExistingFile);
    normals->add_option("output", out_path, "Output PLY")->required();
    normals->add_option("--k", normals_k, "Neighbors")->capture_default_str()->check(CLI::Range(3, 256));
    normals->add_flag("--ascii", ascii, "Write ASCII PLY");

    // build
    TreeFlags tree_flags;
    auto* build = app.add_subcommand("build", "Build a textured surfel octree (lossless dump)");
    build->add_option("input", in_path, "Input PLY")->required()->check(CLI::ExistingFile);
    build->add_option("output", out_path, "Output .teso")->required();
    add_tree_flags(build, tree_flags);

    // encode
    auto* encode = app.add_subcommand("encode", "Build, quantize and code a point cloud");
    std::string codec = "dct", model = "adaptive", conditioning = "offset-normal";
    int qt = 8;
    encode->add_option("input", in_path, "Input PLY or built .teso")->required()->check(
        CLI::ExistingFile);
    encode->add_option("output", out_path, "Output .teso")->required();
    add_tree_flags(encode, tree_flags);
    encode->add_option("--qt", qt, "Texture quantizer")->capture_default_str()->check(
        CLI::Range(kMinQt, kMaxQt));
    encode->add_option("--codec", codec, "Texture codec: dct, raw or none")
        ->capture_default_str()
        ->check(CLI::IsMember({"dct", "raw", "none"}));
    encode->add_option("--model", model, "Geometry models: adaptive or uniform")
        ->capture_default_str()
        ->check(CLI::IsMember({"adaptive", "uniform"}));
    encode->add_option("--conditioning", conditioning, "none, offset or offset-normal")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "offset", "offset-normal"}));

    // decode
    auto* decode = app.add_subcommand("decode", "Decode a stream into a directory");
    std::string out_dir;
    bool decode_ply = false;
    decode->add_option("input", in_path, "Input .teso")->required()->check(CLI::ExistingFile);
    decode->add_option("output", out_dir, "Output directory")->required();
    decode->add_flag("--ply", decode_ply, "Also write patch pixels as a colored point cloud");

    // render
    auto* render_cmd = app.add_subcommand("render", "Render a stream to PNG");
    std::string camera_spec, trajectory_path, background = "0,0,0";
    int res = 1024;
    TrajectoryFlags render_traj;
    render_cmd->add_option("input", in_path, "Input .teso")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("output", out_path, "PNG file (one view) or directory (trajectory)")
        ->required();
    auto* cam_opt = render_cmd->add_option(
        "--camera", camera_spec, "px,py,pz,tx,ty,tz[,ux,uy,uz[,fov]] in voxels");
    auto* traj_opt = render_cmd->add_option("--trajectory", trajectory_path, "Trajectory file")
                         ->check(CLI::ExistingFile);
    cam_opt->excludes(traj_opt);
    render_cmd->add_option("--res", res, "Image side in pixels")->capture_default_str()->check(
        CLI::Range(1, 16384));
    render_cmd->add_option("--background", background, "Background r,g,b in [0, 1]")
        ->capture_default_str();
    add_trajectory_flags(render_cmd, render_traj);

    // trajectory
    auto* traj = app.add_subcommand("trajectory", "Write an evaluation camera trajectory");
    TrajectoryFlags traj_flags;
    traj->add_option("output", out_path, "Output text file")->required();
    add_trajectory_flags(traj, traj_flags);

    // eval
    auto* eval = app.add_subcommand("eval", "Rate-distortion sweep to CSV");
    std::string tau_set = "60,62,64,66", qt_set = "10,25,40", hull_path;
    TrajectoryFlags eval_traj;
    int eval_res = 256;
    eval->add_option("input", in_path, "Input PLY")->required()->check(CLI::ExistingFile);
    eval->add_option("output", out_path, "Output CSV")->required();
    eval->add_option("--tau-set", tau_set, "Comma-separated thresholds")->capture_default_str();
    eval->add_option("--qt-set", qt_set, "Comma-separated texture quantizers")->capture_default_str();
    eval->add_option("--res", eval_res, "Render side in pixels")->capture_default_str()->check(
        CLI::Range(16, 16384));
    eval->add_option("--codec", codec, "Texture codec: dct or raw")
        ->capture_default_str()
        ->check(CLI::IsMember({"dct", "raw"}));
    eval->add_option("--hull", hull_path, "Also write the Pareto hull to this CSV");
    eval->add_option("--k", tree_flags.k, "Neighbors for normal estimation")
        ->capture_default_str()
        ->check(CLI::Range(3, 256));
    add_trajectory_flags(eval, eval_traj);

    // info
    auto* info = app.add_subcommand("info", "Print header and section sizes");
    info->add_option("input", in_path, "Input .teso")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        apply_memory_cap();
        set_thread_count(threads);

        if (*normals) {
            const PointCloud cloud = read_ply(in_path);
            NormalEstimationReport rep;
            const PointCloud out = estimate_normals(cloud, normals_k, &rep);
            report_normals(rep, true);
            write_ply(out, out_path, ascii ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian);
        } else if (*build) {
            const PointCloud cloud = read_ply(in_path);
            EncodeOptions opts;
            opts.build = tree_flags.config(cloud.depth);
            opts.normal_k = tree_flags.k;
            PointCloud input = cloud;
            NormalEstimationReport rep;
            if (!cloud.has_normals()) input = estimate_normals(cloud, tree_flags.k, &rep);
            report_normals(rep, !cloud.has_normals());
            SurfelOctree tree = build_teso(input, opts.build);
            // Patches follow the quantized geometry, as in encode.
            SurfelOctree quantized = quantize_tree(tree);
            sample_patches(quantized, cloud, opts.sampling);
            for (int l = 0; l <= tree.l_max(); ++l) {
                auto& dst = tree.level_nodes(l);
                auto& src = quantized.level_nodes(l);
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i].patch = std::move(src[i].patch);
            }
            write_file(out_path, serialize_raw_tree(tree, cloud.size(), opts.build.tau_db));
            std::cout << "leaves=" << tree.leaf_count() << '\n';
        } else if (*encode) {
            EncodeOptions opts;
            opts.texture = parse_codec(codec);
            opts.qt = qt;
            opts.geometry.model =
                model == "uniform" ? GeometryModelId::Uniform : GeometryModelId::Adaptive;
            opts.geometry.conditioning = conditioning == "none"     ? Conditioning::None
                                         : conditioning == "offset" ? Conditioning::Offset
                                                                    : Conditioning::OffsetNormal;
            opts.normal_k = tree_flags.k;
            EncodeResult r;
            if (is_teso_path(in_path)) {
                const Bitstream stream = parse(read_file(in_path));
                const Section* raw = stream.find(section::kRawTree);
                if (!raw) throw UsageError("input .teso is not a built tree");
                const SurfelOctree tree = quantize_tree(decode_raw_tree(raw->data, stream.header));
                opts.build.tau_db = stream.header.tau_db;
                r = encode_tree(tree, opts, stream.header.point_count);
            } else {
                const PointCloud cloud = read_ply(in_path);
                opts.build = tree_flags.config(cloud.depth);
                NormalEstimationReport rep;
                r = encode_cloud(cloud, opts, &rep);
                report_normals(rep, !cloud.has_normals());
            }
            write_file(out_path, r.bytes);
            std::cout << "leaves=" << r.tree.leaf_count() << " bytes=" << r.bytes.size()
                      << " geometry_bytes=" << r.geometry_bytes
                      << " texture_bytes=" << r.texture_bytes << " bpp=" << r.bits_per_point()
                      << '\n';
        } else if (*decode) {
            const Bitstream stream = parse(read_file(in_path));
            const SurfelOctree tree = decode_stream(read_file(in_path));
            fs::create_directories(out_dir);
            const fs::path dir(out_dir);
            write_file(dir / "tree.teso", serialize_raw_tree(tree, stream.header.point_count, stream.header.tau_db));
            bool textured = false;
            tree.for_each_leaf([&](int, const OctreeNode& n) { textured |= !n.patch.empty(); });
            if (textured) {
                std::vector<PackedTextureImage> images;
                for (int l : tree.config().leaf_levels) images.push_back(pack_patches(tree, l));
                export_external(images, dir);
                if (decode_ply) write_ply(rasterize_patches(tree), dir / "points.ply");
            } else if (decode_ply) {
                throw UsageError("--ply needs a textured stream");
            }
            std::cout << "leaves=" << tree.leaf_count() << '\n';
        } else if (*render_cmd) {
            const SurfelOctree tree = decode_stream(read_file(in_path));
            const Vec3 bgv = parse_vec3(background, "background");
            const Color bg = bgv.cast<float>();
            std::vector<Camera> cams;
            if (!camera_spec.empty()) {
                const auto v = parse_list<double>(camera_spec, "camera");
                if (v.size() != 6 && v.size() != 9 && v.size() != 10)
                    throw UsageError("--camera needs 6, 9 or 10 values");
                Camera c;
                c.position = {v[0], v[1], v[2]};
                c.target = {v[3], v[4], v[5]};
                if (v.size() >= 9) c.up = {v[6], v[7], v[8]};
                if (v.size() == 10) c.fov_deg = v[9];
                c.width = c.height = res;
                c.validate();
                cams.push_back(c);
            } else if (!trajectory_path.empty()) {
                cams = read_trajectory(trajectory_path, res, res);
            } else {
                cams = make_trajectory(trajectory_options(render_traj, leaf_center(tree), res));
            }
            if (cams.size() == 1 && fs::path(out_path).extension() == ".png") {
                write_png(render(tree, cams[0], bg).image, out_path);
            } else {
                fs::create_directories(out_path);
                for (std::size_t i = 0; i < cams.size(); ++i) {
                    char name[32];
                    std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
                    write_png(render(tree, cams[i], bg).image, fs::path(out_path) / name);
                }
            }
        } else if (*traj) {
            write_trajectory(make_trajectory(trajectory_options(
                                 traj_flags, Vec3(512.0, 512.0, 512.0), 1024)),
                             out_path);
        } else if (*eval) {
            const PointCloud cloud = read_ply(in_path);
            SweepOptions opts;
            opts.taus = parse_list<double>(tau_set, "tau");
            opts.qts = parse_list<int>(qt_set, "Qt");
            for (int q : opts.qts)
                if (q < kMinQt || q > kMaxQt) throw UsageError("Qt must be in [1, 63]");
            opts.codec = parse_codec(codec);
            opts.normal_k = tree_flags.k;
            opts.cameras = make_trajectory(trajectory_options(eval_traj, cloud_center(cloud), eval_res));
            const SweepResult r = rd_sweep(cloud, opts);
            write_rd_csv(r.points, out_path);
            if (!hull_path.empty()) write_rd_csv(r.hull, hull_path);
            std::cout << format_rd_csv(r.hull);
        } else if (*info) {
            const Bytes bytes = read_file(in_path);
            const Bitstream s = parse(bytes);
            const BitstreamHeader& h = s.header;
            const LevelConfig cfg = h.level_config();
            std::cout << "version=" << h.version << "\ndepth=" << int(h.depth)
                      << "\nl_min=" << int(h.l_min) << "\nl_max=" << int(h.l_max) << "\nleaf_levels=";
            for (std::size_t i = 0; i < cfg.leaf_levels.size(); ++i)
                std::cout << (i ? "," : "") << cfg.leaf_levels[i];
            std::cout << "\npatch_sides=";
            for (std::size_t i = 0; i < cfg.leaf_levels.size(); ++i)
                std::cout << (i ? "," : "") << cfg.patch_side[cfg.leaf_levels[i]];
            std::cout << "\ngeometry_model=" << model_name(h.geometry_model)
                      << "\nconditioning=" << conditioning_name(h.conditioning)
                      << "\ntexture_codec=" << codec_name(h.texture_codec) << "\nqt=" << int(h.qt)
                      << "\ntau=" << h.tau_db << "\npoint_count=" << h.point_count
                      << "\nsections=" << s.sections.size() << '\n';
            std::size_t geometry = 0, texture = 0;
            for (const auto& sec : s.sections) {
                char id[8];
                std::snprintf(id, sizeof(id), "0x%04X", sec.id);
                std::cout << "  " << id << ' ' << section_name(sec.id) << ' ' << sec.data.size()
                          << '\n';
                ((sec.id & 0xFF00) == 0x0400 ? texture : geometry) += sec.data.size();
            }
            std::cout << "header_bytes=" << kHeaderSize + kSectionEntrySize * s.sections.size()
                      << "\ngeometry_bytes=" << geometry << "\ntexture_bytes=" << texture
                      << "\ntotal_bytes=" << bytes.size() << '\n';
            if (h.point_count)
                std::cout << "bpp=" << 8.0 * static_cast<double>(bytes.size()) / h.point_count << '\n';
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
