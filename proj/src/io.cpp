#include "otflow/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace otflow {

namespace {

std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
    return std::string(buf, res.ptr);
}

template <typename T>
void write_le(std::ostream& out, T v) {
    // little-endian host assumed; bytes go out verbatim
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

enum class PropType { f32, f64, u8, i8, u16, i16, u32, i32 };

PropType parse_prop_type(const std::string& s) {
    if (s == "float" || s == "float32") return PropType::f32;
    if (s == "double" || s == "float64") return PropType::f64;
    if (s == "uchar" || s == "uint8") return PropType::u8;
    if (s == "char" || s == "int8") return PropType::i8;
    if (s == "ushort" || s == "uint16") return PropType::u16;
    if (s == "short" || s == "int16") return PropType::i16;
    if (s == "uint" || s == "uint32") return PropType::u32;
    if (s == "int" || s == "int32") return PropType::i32;
    throw std::runtime_error("ply: malformed header: unknown property type '" + s + "'");
}

bool integer_type(PropType t) { return t != PropType::f32 && t != PropType::f64; }

double read_binary_prop(std::istream& in, PropType t) {
    switch (t) {
        case PropType::f32: return read_le<float>(in);
        case PropType::f64: return read_le<double>(in);
        case PropType::u8: return read_le<std::uint8_t>(in);
        case PropType::i8: return read_le<std::int8_t>(in);
        case PropType::u16: return read_le<std::uint16_t>(in);
        case PropType::i16: return read_le<std::int16_t>(in);
        case PropType::u32: return read_le<std::uint32_t>(in);
        case PropType::i32: return read_le<std::int32_t>(in);
    }
    return 0.0;
}

double read_ascii_prop(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("ply: element count mismatch (truncated body)");
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("junk");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("ply: bad numeric value in body: " + tok);
    }
}

struct Property {
    PropType type;
    std::string name;
};

struct PlyHeader {
    bool binary = false;
    std::size_t vertex_count = 0;
    std::vector<Property> vertex_props;
};

std::string chomp(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    return line;
}

PlyHeader parse_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || chomp(line) != "ply")
        throw std::runtime_error("ply: malformed header: missing 'ply' magic");

    PlyHeader header;
    bool format_seen = false, vertex_seen = false, done = false;
    enum class Element { none, vertex, other } cur = Element::none;
    while (std::getline(in, line)) {
        std::istringstream ls(chomp(line));
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "comment" || tok == "obj_info") continue;
        if (tok == "format") {
            std::string kind, version;
            ls >> kind >> version;
            if (kind == "ascii")
                header.binary = false;
            else if (kind == "binary_little_endian")
                header.binary = true;
            else if (kind == "binary_big_endian")
                throw std::runtime_error("ply: binary_big_endian files are unsupported");
            else
                throw std::runtime_error("ply: malformed header: unknown format '" + kind + "'");
            format_seen = true;
        } else if (tok == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            if (name.empty() || count < 0)
                throw std::runtime_error("ply: malformed header: bad element line");
            if (name == "vertex") {
                if (vertex_seen)
                    throw std::runtime_error("ply: malformed header: duplicate vertex element");
                vertex_seen = true;
                header.vertex_count = static_cast<std::size_t>(count);
                cur = Element::vertex;
            } else {
                if (count != 0)
                    throw std::runtime_error("ply: unsupported element '" + name +
                                             "' with nonzero count");
                cur = Element::other;
            }
        } else if (tok == "property") {
            std::string type_name;
            ls >> type_name;
            if (cur == Element::none)
                throw std::runtime_error("ply: malformed header: property before any element");
            if (cur == Element::other) continue;  // zero-count element, never read
            if (type_name == "list")
                throw std::runtime_error(
                    "ply: malformed header: list property in the vertex element");
            std::string name;
            ls >> name;
            if (name.empty())
                throw std::runtime_error("ply: malformed header: property without a name");
            header.vertex_props.push_back({parse_prop_type(type_name), name});
        } else if (tok == "end_header") {
            done = true;
            break;
        } else {
            throw std::runtime_error("ply: malformed header: unexpected token '" + tok + "'");
        }
    }
    if (!done) throw std::runtime_error("ply: malformed header: missing end_header");
    if (!format_seen) throw std::runtime_error("ply: malformed header: missing format line");
    if (!vertex_seen) throw std::runtime_error("ply: malformed header: missing vertex element");
    return header;
}

constexpr std::size_t kMissing = static_cast<std::size_t>(-1);

std::size_t find_prop(const std::vector<Property>& props, const std::string& name) {
    for (std::size_t i = 0; i < props.size(); ++i)
        if (props[i].name == name) return i;
    return kMissing;
}

}  // namespace

PointCloud read_cloud(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("ply: cannot open " + path);
    const PlyHeader header = parse_header(in);

    const std::size_t xi = find_prop(header.vertex_props, "x");
    const std::size_t yi = find_prop(header.vertex_props, "y");
    const std::size_t zi = find_prop(header.vertex_props, "z");
    if (xi == kMissing || yi == kMissing || zi == kMissing)
        throw std::runtime_error("ply: malformed header: missing x/y/z properties");

    const std::size_t ri = find_prop(header.vertex_props, "red");
    const std::size_t gi = find_prop(header.vertex_props, "green");
    const std::size_t bi = find_prop(header.vertex_props, "blue");
    const bool any_color = ri != kMissing || gi != kMissing || bi != kMissing;
    const bool has_color = ri != kMissing && gi != kMissing && bi != kMissing;
    if (any_color && !has_color)
        throw std::runtime_error("ply: malformed header: partial red/green/blue set");

    const std::size_t nxi = find_prop(header.vertex_props, "nx");
    const std::size_t nyi = find_prop(header.vertex_props, "ny");
    const std::size_t nzi = find_prop(header.vertex_props, "nz");
    const bool any_normal = nxi != kMissing || nyi != kMissing || nzi != kMissing;
    const bool has_normal = nxi != kMissing && nyi != kMissing && nzi != kMissing;
    if (any_normal && !has_normal)
        throw std::runtime_error("ply: malformed header: partial nx/ny/nz set");

    PointCloud cloud;
    cloud.positions.resize(header.vertex_count);
    if (has_color) cloud.colors.resize(header.vertex_count);
    if (has_normal) {
        cloud.normals.resize(header.vertex_count);
        cloud.normal_valid.resize(header.vertex_count);
    }

    std::vector<double> row(header.vertex_props.size());
    for (std::size_t v = 0; v < header.vertex_count; ++v) {
        for (std::size_t pidx = 0; pidx < header.vertex_props.size(); ++pidx)
            row[pidx] = header.binary ? read_binary_prop(in, header.vertex_props[pidx].type)
                                      : read_ascii_prop(in);
        if (header.binary && !in)
            throw std::runtime_error("ply: element count mismatch (truncated body)");

        cloud.positions[v] = Vec3(row[xi], row[yi], row[zi]);
        if (has_color) {
            auto channel = [&](std::size_t idx) {
                return integer_type(header.vertex_props[idx].type) ? row[idx] / 255.0 : row[idx];
            };
            cloud.colors[v] = Vec3(channel(ri), channel(gi), channel(bi));
        }
        if (has_normal) {
            cloud.normals[v] = Vec3(row[nxi], row[nyi], row[nzi]);
            cloud.normal_valid[v] = std::abs(cloud.normals[v].norm() - 1.0) <= 1e-6 ? 1 : 0;
        }
    }
    return cloud;
}

void write_cloud(const std::string& path, const PointCloud& cloud, PlyFormat format) {
    if (cloud.has_colors() && cloud.colors.size() != cloud.size())
        throw std::invalid_argument("ply: color array length mismatch");
    const bool normals = cloud.has_normals();
    if (normals &&
        (cloud.normals.size() != cloud.size() || cloud.normal_valid.size() != cloud.size()))
        throw std::invalid_argument("ply: normal array length mismatch");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ply: cannot open " + path + " for writing");

    out << "ply\n"
        << (format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
        << "element vertex " << cloud.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n";
    if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        const Vec3 n = normals && cloud.normal_valid[i] ? cloud.normals[i] : Vec3::Zero();
        if (format == PlyFormat::ascii) {
            out << fmt(p.x()) << ' ' << fmt(p.y()) << ' ' << fmt(p.z());
            if (normals) out << ' ' << fmt(n.x()) << ' ' << fmt(n.y()) << ' ' << fmt(n.z());
            if (cloud.has_colors()) {
                const Vec3& c = cloud.colors[i];
                for (int ch = 0; ch < 3; ++ch)
                    out << ' ' << static_cast<int>(std::lround(std::clamp(c(ch), 0.0, 1.0) * 255.0));
            }
            out << '\n';
        } else {
            write_le(out, p.x());
            write_le(out, p.y());
            write_le(out, p.z());
            if (normals) {
                write_le(out, n.x());
                write_le(out, n.y());
                write_le(out, n.z());
            }
            if (cloud.has_colors()) {
                const Vec3& c = cloud.colors[i];
                for (int ch = 0; ch < 3; ++ch)
                    write_le(out, static_cast<std::uint8_t>(
                                      std::lround(std::clamp(c(ch), 0.0, 1.0) * 255.0)));
            }
        }
    }
    if (!out) throw std::runtime_error("ply: write failed: " + path);
}

namespace {

constexpr char kFlowMagic[4] = {'S', 'F', 'L', '1'};

void write_flow_impl(const std::string& path, const std::vector<Vec3>& vectors,
                     const std::vector<std::uint8_t>* valid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("flow: cannot open " + path + " for writing");
    out.write(kFlowMagic, 4);
    write_le(out, static_cast<std::uint32_t>(vectors.size()));
    write_le(out, static_cast<std::uint8_t>(valid ? 1 : 0));
    for (const Vec3& v : vectors) {
        write_le(out, static_cast<float>(v.x()));
        write_le(out, static_cast<float>(v.y()));
        write_le(out, static_cast<float>(v.z()));
    }
    if (valid)
        for (std::uint8_t flag : *valid) write_le(out, static_cast<std::uint8_t>(flag ? 1 : 0));
    if (!out) throw std::runtime_error("flow: write failed: " + path);
}

}  // namespace

void write_flow(const std::string& path, const FlowField& flow) {
    write_flow_impl(path, flow.vectors, nullptr);
}

void write_flow(const std::string& path, const PseudoLabelSet& labels) {
    if (labels.valid.size() != labels.labels.size())
        throw std::invalid_argument("flow: label/validity length mismatch");
    write_flow_impl(path, labels.labels, &labels.valid);
}

FlowFile read_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("flow: cannot open " + path);

    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kFlowMagic, 4))
        throw std::runtime_error("flow: bad magic in " + path);

    const std::uint32_t count = read_le<std::uint32_t>(in);
    const std::uint8_t flagged = read_le<std::uint8_t>(in);
    if (!in) throw std::runtime_error("flow: truncated header in " + path);

    FlowFile file;
    file.has_validity = flagged != 0;
    file.flow.vectors.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const float x = read_le<float>(in);
        const float y = read_le<float>(in);
        const float z = read_le<float>(in);
        file.flow.vectors[i] = Vec3(x, y, z);
    }
    if (file.has_validity) {
        file.valid.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) file.valid[i] = read_le<std::uint8_t>(in);
    }
    if (!in) throw std::runtime_error("flow: count mismatch vs file length in " + path);
    in.peek();
    if (!in.eof()) throw std::runtime_error("flow: count mismatch vs file length in " + path);
    return file;
}

}  // namespace otflow
