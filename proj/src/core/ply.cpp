// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/core/ply.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "teso/core/errors.hpp"

namespace teso {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_type(std::string_view t) {
    if (t == "char" || t == "int8") return ScalarType::Int8;
    if (t == "uchar" || t == "uint8") return ScalarType::UInt8;
    if (t == "short" || t == "int16") return ScalarType::Int16;
    if (t == "ushort" || t == "uint16") return ScalarType::UInt16;
    if (t == "int" || t == "int32") return ScalarType::Int32;
    if (t == "uint" || t == "uint32") return ScalarType::UInt32;
    if (t == "float" || t == "float32") return ScalarType::Float32;
    if (t == "double" || t == "float64") return ScalarType::Float64;
    return std::nullopt;
}

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::Int8:
        case ScalarType::UInt8: return 1;
        case ScalarType::Int16:
        case ScalarType::UInt16: return 2;
        case ScalarType::Int32:
        case ScalarType::UInt32:
        case ScalarType::Float32: return 4;
        case ScalarType::Float64: return 8;
    }
    return 0;
}

double color_scale(ScalarType t) {
    switch (t) {
        case ScalarType::Float32:
        case ScalarType::Float64: return 1.0;
        case ScalarType::UInt16: return 65535.0;
        default: return 255.0;
    }
}

double read_scalar(const char* p, ScalarType t) {
    switch (t) {
        case ScalarType::Int8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
        case ScalarType::UInt8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
        case ScalarType::Int16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
        case ScalarType::UInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
        case ScalarType::Int32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
        case ScalarType::UInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
        case ScalarType::Float32: { float v; std::memcpy(&v, p, 4); return v; }
        case ScalarType::Float64: { double v; std::memcpy(&v, p, 8); return v; }
    }
    return 0.0;
}

struct Property {
    std::string name;
    ScalarType type;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

// Roles of the vertex properties we consume; -1 when absent.
struct Layout {
    std::array<int, 3> position{-1, -1, -1};
    std::array<int, 3> color{-1, -1, -1};
    std::array<int, 3> normal{-1, -1, -1};
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

int infer_depth(const std::vector<Vec3>& positions) {
    double mx = 0.0;
    for (const auto& p : positions) mx = std::max(mx, p.maxCoeff());
    int d = 1;
    while (d < kMaxDepth && std::ldexp(1.0, d) <= mx) ++d;
    return d;
}

bool float_exact(double v) { return static_cast<double>(static_cast<float>(v)) == v; }

}  // namespace

PointCloud parse_ply(std::string_view bytes, std::optional<int> depth) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::string_view {
        if (pos >= bytes.size()) throw ParseError("ply: unexpected end of header", line_no + 1);
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string_view::npos) end = bytes.size();
        std::string_view line = bytes.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = std::min(bytes.size(), end + 1);
        ++line_no;
        return line;
    };

    if (next_line() != "ply") throw ParseError("ply: missing magic line", line_no);
    std::optional<PlyFormat> format;
    std::vector<Element> elements;
    for (;;) {
        const std::string_view line = next_line();
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() != 3) throw ParseError("ply: malformed format line", line_no);
            if (tok[1] == "ascii") format = PlyFormat::Ascii;
            else if (tok[1] == "binary_little_endian") format = PlyFormat::BinaryLittleEndian;
            else throw ParseError("ply: unsupported format '" + std::string(tok[1]) + "'", line_no);
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError("ply: malformed element line", line_no);
            Element e;
            e.name = tok[1];
            const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
            if (r.ec != std::errc() || r.ptr != tok[2].data() + tok[2].size())
                throw ParseError("ply: bad element count", line_no);
            elements.push_back(std::move(e));
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError("ply: property before element", line_no);
            if (tok.size() >= 2 && tok[1] == "list") {
                if (elements.back().name == "vertex")
                    throw ParseError("ply: list properties are not supported", line_no);
                continue;
            }
            if (tok.size() != 3) throw ParseError("ply: malformed property line", line_no);
            const auto type = parse_type(tok[1]);
            if (!type) throw ParseError("ply: unknown type '" + std::string(tok[1]) + "'", line_no);
            elements.back().properties.push_back({std::string(tok[2]), *type});
        } else {
            throw ParseError("ply: unexpected header keyword '" + std::string(tok[0]) + "'",
                             line_no);
        }
    }
    if (!format) throw ParseError("ply: missing format line", line_no);

    const Element* vertex = nullptr;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            vertex = &e;
            break;
        }
        if (e.count > 0)
            throw ParseError("ply: element '" + e.name + "' before vertex is not supported",
                             line_no);
    }
    if (!vertex) throw ParseError("ply: no vertex element", line_no);

    Layout layout;
    for (int i = 0; i < static_cast<int>(vertex->properties.size()); ++i) {
        const std::string& n = vertex->properties[i].name;
        static const char* pos_names[] = {"x", "y", "z"};
        static const char* col_names[] = {"red", "green", "blue"};
        static const char* nrm_names[] = {"nx", "ny", "nz"};
        for (int k = 0; k < 3; ++k) {
            if (n == pos_names[k]) layout.position[k] = i;
            if (n == col_names[k]) layout.color[k] = i;
            if (n == nrm_names[k]) layout.normal[k] = i;
        }
    }
    for (int k = 0; k < 3; ++k) {
        if (layout.position[k] < 0) throw ParseError("ply: vertex lacks x/y/z", line_no);
        if (layout.color[k] < 0) throw ParseError("ply: vertex lacks red/green/blue", line_no);
    }
    const int normal_count = static_cast<int>(
        std::count_if(layout.normal.begin(), layout.normal.end(), [](int i) { return i >= 0; }));
    if (normal_count != 0 && normal_count != 3)
        throw ParseError("ply: partial normal properties", line_no);
    const bool has_normals = normal_count == 3;

    PointCloud cloud;
    const std::size_t n = vertex->count;
    cloud.positions.resize(n);
    cloud.colors.resize(n);
    if (has_normals) cloud.normals.resize(n);
    std::array<double, 3> cscale;
    for (int k = 0; k < 3; ++k) cscale[k] = color_scale(vertex->properties[layout.color[k]].type);

    std::vector<double> values(vertex->properties.size());
    auto store = [&](std::size_t i) {
        for (int k = 0; k < 3; ++k) {
            cloud.positions[i][k] = values[layout.position[k]];
            cloud.colors[i][k] = static_cast<float>(values[layout.color[k]] / cscale[k]);
            if (has_normals) cloud.normals[i][k] = values[layout.normal[k]];
        }
    };

    if (*format == PlyFormat::Ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::string_view line = next_line();
            const auto tok = split_ws(line);
            if (tok.size() < values.size())
                throw ParseError("ply: too few values on vertex line", line_no);
            for (std::size_t p = 0; p < values.size(); ++p) {
                double v = 0.0;
                const auto r = std::from_chars(tok[p].data(), tok[p].data() + tok[p].size(), v);
                if (r.ec != std::errc() || r.ptr != tok[p].data() + tok[p].size())
                    throw ParseError("ply: bad number '" + std::string(tok[p]) + "'", line_no);
                values[p] = v;
            }
            store(i);
        }
    } else {
        std::vector<std::size_t> offsets(vertex->properties.size());
        std::size_t stride = 0;
        for (std::size_t p = 0; p < offsets.size(); ++p) {
            offsets[p] = stride;
            stride += type_size(vertex->properties[p].type);
        }
        if (stride == 0 && n > 0) throw ParseError("ply: empty vertex layout", pos);
        if (n > 0 && (bytes.size() - pos) / stride < n)
            throw ParseError("ply: binary body truncated", bytes.size());
        for (std::size_t i = 0; i < n; ++i) {
            const char* rec = bytes.data() + pos + i * stride;
            for (std::size_t p = 0; p < offsets.size(); ++p)
                values[p] = read_scalar(rec + offsets[p], vertex->properties[p].type);
            store(i);
        }
    }

    cloud.depth = depth ? *depth : infer_depth(cloud.positions);
    return cloud;
}

PointCloud read_ply(const std::filesystem::path& path, std::optional<int> depth) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_ply(bytes, depth);
}

std::string format_ply(const PointCloud& cloud, PlyFormat format) {
    const bool has_normals = cloud.has_normals();
    bool pos_float = true, nrm_float = true;
    for (const auto& p : cloud.positions)
        for (int k = 0; k < 3; ++k) pos_float = pos_float && float_exact(p[k]);
    for (const auto& v : cloud.normals)
        for (int k = 0; k < 3; ++k) nrm_float = nrm_float && float_exact(v[k]);
    const char* pos_type = pos_float ? "float" : "double";
    const char* nrm_type = nrm_float ? "float" : "double";

    std::ostringstream out;
    out << "ply\nformat "
        << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property " << pos_type << " x\nproperty " << pos_type << " y\nproperty " << pos_type
        << " z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (has_normals)
        out << "property " << nrm_type << " nx\nproperty " << nrm_type << " ny\nproperty "
            << nrm_type << " nz\n";
    out << "end_header\n";

    auto to_u8 = [](float c) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(c * 255.0f), 0L, 255L));
    };
    std::string body;
    if (format == PlyFormat::Ascii) {
        std::ostringstream b;
        b.precision(17);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto& p = cloud.positions[i];
            b << p[0] << ' ' << p[1] << ' ' << p[2];
            for (int k = 0; k < 3; ++k) b << ' ' << static_cast<int>(to_u8(cloud.colors[i][k]));
            if (has_normals)
                for (int k = 0; k < 3; ++k) b << ' ' << cloud.normals[i][k];
            b << '\n';
        }
        body = b.str();
    } else {
        auto put = [&body](const void* p, std::size_t n) {
            body.append(static_cast<const char*>(p), n);
        };
        auto put_real = [&](double v, bool as_float) {
            if (as_float) {
                const float f = static_cast<float>(v);
                put(&f, 4);
            } else {
                put(&v, 8);
            }
        };
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            for (int k = 0; k < 3; ++k) put_real(cloud.positions[i][k], pos_float);
            for (int k = 0; k < 3; ++k) {
                const std::uint8_t c = to_u8(cloud.colors[i][k]);
                put(&c, 1);
            }
            if (has_normals)
                for (int k = 0; k < 3; ++k) put_real(cloud.normals[i][k], nrm_float);
        }
    }
    return out.str() + body;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    const std::string bytes = format_ply(cloud, format);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace teso
