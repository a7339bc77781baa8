#include "imls/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "imls/shapes.hpp"

namespace imls {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are not supported");

namespace {

enum class PlyType { f32, f64, u8, i8, u16, i16, u32, i32 };

std::size_t ply_type_size(PlyType t) {
    switch (t) {
        case PlyType::f32: return 4;
        case PlyType::f64: return 8;
        case PlyType::u8:
        case PlyType::i8: return 1;
        case PlyType::u16:
        case PlyType::i16: return 2;
        case PlyType::u32:
        case PlyType::i32: return 4;
    }
    return 0;
}

PlyType parse_ply_type(const std::string& s) {
    if (s == "float" || s == "float32") return PlyType::f32;
    if (s == "double" || s == "float64") return PlyType::f64;
    if (s == "uchar" || s == "uint8") return PlyType::u8;
    if (s == "char" || s == "int8") return PlyType::i8;
    if (s == "ushort" || s == "uint16") return PlyType::u16;
    if (s == "short" || s == "int16") return PlyType::i16;
    if (s == "uint" || s == "uint32") return PlyType::u32;
    if (s == "int" || s == "int32") return PlyType::i32;
    throw ParseError("ply: unsupported property type '" + s + "'");
}

double decode_scalar(PlyType t, const unsigned char* p) {
    switch (t) {
        case PlyType::f32: {
            float v;
            std::memcpy(&v, p, 4);
            return v;
        }
        case PlyType::f64: {
            double v;
            std::memcpy(&v, p, 8);
            return v;
        }
        case PlyType::u8: return *p;
        case PlyType::i8: return static_cast<signed char>(*p);
        case PlyType::u16: {
            std::uint16_t v;
            std::memcpy(&v, p, 2);
            return v;
        }
        case PlyType::i16: {
            std::int16_t v;
            std::memcpy(&v, p, 2);
            return v;
        }
        case PlyType::u32: {
            std::uint32_t v;
            std::memcpy(&v, p, 4);
            return v;
        }
        case PlyType::i32: {
            std::int32_t v;
            std::memcpy(&v, p, 4);
            return v;
        }
    }
    return 0.0;
}

// color-like integer types are rescaled to [0,1]
double color_scale(PlyType t) {
    switch (t) {
        case PlyType::u8: return 1.0 / 255.0;
        case PlyType::u16: return 1.0 / 65535.0;
        default: return 1.0;
    }
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::f32;
    bool is_list = false;
    PlyType count_type = PlyType::u8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyHeader {
    bool binary = false;
    std::vector<PlyElement> elements;
    std::size_t header_bytes = 0;
};

PlyHeader parse_ply_header(const std::string& data) {
    PlyHeader h;
    std::istringstream in(data);
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw ParseError("ply: missing magic");
    bool format_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii")
                h.binary = false;
            else if (fmt == "binary_little_endian")
                h.binary = true;
            else
                throw ParseError("ply: unsupported format '" + fmt + "'");
            format_seen = true;
        } else if (tok == "element") {
            PlyElement el;
            ls >> el.name >> el.count;
            h.elements.push_back(el);
        } else if (tok == "property") {
            if (h.elements.empty()) throw ParseError("ply: property before element");
            PlyProperty p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, vt;
                ls >> ct >> vt >> p.name;
                p.is_list = true;
                p.count_type = parse_ply_type(ct);
                p.type = parse_ply_type(vt);
            } else {
                ls >> p.name;
                p.type = parse_ply_type(t);
            }
            h.elements.back().properties.push_back(p);
        } else if (tok == "end_header") {
            h.header_bytes = static_cast<std::size_t>(in.tellg());
            if (!format_seen) throw ParseError("ply: missing format line");
            return h;
        } else {
            throw ParseError("ply: unknown header token '" + tok + "'");
        }
    }
    throw ParseError("ply: missing end_header");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void require_finite(double v, const char* what, std::size_t element) {
    if (!std::isfinite(v))
        throw ParseError(std::string("non-finite ") + what + " at element " +
                         std::to_string(element));
}

// rows[r][p] = value of property p for vertex r
std::vector<std::vector<double>> read_ply_vertex_rows(const std::string& data,
                                                      const PlyHeader& header,
                                                      const PlyElement& vertex, std::size_t& cursor,
                                                      std::istringstream& ascii_in) {
    std::vector<std::vector<double>> rows(vertex.count,
                                          std::vector<double>(vertex.properties.size(), 0.0));
    if (header.binary) {
        std::size_t stride = 0;
        for (const auto& p : vertex.properties) {
            if (p.is_list) throw ParseError("ply: list property in vertex element");
            stride += ply_type_size(p.type);
        }
        if (cursor + stride * vertex.count > data.size())
            throw ParseError("ply: truncated vertex data");
        for (std::size_t r = 0; r < vertex.count; ++r) {
            const auto* base = reinterpret_cast<const unsigned char*>(data.data() + cursor);
            std::size_t off = 0;
            for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
                rows[r][p] = decode_scalar(vertex.properties[p].type, base + off);
                off += ply_type_size(vertex.properties[p].type);
            }
            cursor += stride;
        }
    } else {
        for (std::size_t r = 0; r < vertex.count; ++r) {
            for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
                if (!(ascii_in >> rows[r][p]))
                    throw ParseError("ply: malformed vertex data at element " + std::to_string(r));
            }
        }
    }
    return rows;
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& payload) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace {

PointCloud read_point_cloud_ply(const std::string& data) {
    const PlyHeader header = parse_ply_header(data);
    const auto vit = std::find_if(header.elements.begin(), header.elements.end(),
                                  [](const PlyElement& e) { return e.name == "vertex"; });
    if (vit == header.elements.end()) throw ParseError("ply: no vertex element");

    std::map<std::string, std::size_t> prop_index;
    for (std::size_t p = 0; p < vit->properties.size(); ++p)
        prop_index[vit->properties[p].name] = p;
    for (const char* req : {"x", "y", "z", "nx", "ny", "nz"})
        if (!prop_index.count(req))
            throw ParseError(std::string("ply: missing required property '") + req + "'");

    std::size_t cursor = header.header_bytes;
    std::istringstream ascii_in(header.binary ? std::string()
                                              : data.substr(header.header_bytes));
    // vertex must be the first element for the binary cursor to be right
    if (&header.elements.front() != &*vit && header.binary)
        throw ParseError("ply: vertex element must come first");
    const auto rows = read_ply_vertex_rows(data, header, *vit, cursor, ascii_in);

    const bool has_kernel = prop_index.count("k") && prop_index.count("m");
    const bool has_color =
        prop_index.count("red") && prop_index.count("green") && prop_index.count("blue");

    PointCloud cloud;
    cloud.feature_dim = has_color ? 3 : 0;
    cloud.points.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto& pt = cloud.points[r];
        pt.position = {rows[r][prop_index["x"]], rows[r][prop_index["y"]],
                       rows[r][prop_index["z"]]};
        pt.normal = {rows[r][prop_index["nx"]], rows[r][prop_index["ny"]],
                     rows[r][prop_index["nz"]]};
        for (int c = 0; c < 3; ++c) {
            require_finite(pt.position[c], "position", r);
            require_finite(pt.normal[c], "normal", r);
        }
        if (has_kernel) {
            pt.kernel.k = rows[r][prop_index["k"]];
            pt.kernel.m = rows[r][prop_index["m"]];
            require_finite(pt.kernel.k, "kernel k", r);
            require_finite(pt.kernel.m, "kernel m", r);
        }
        if (has_color) {
            pt.feature.resize(3);
            const char* names[3] = {"red", "green", "blue"};
            for (int c = 0; c < 3; ++c) {
                const std::size_t p = prop_index[names[c]];
                pt.feature[c] = rows[r][p] * color_scale(vit->properties[p].type);
                require_finite(pt.feature[c], "color", r);
            }
        }
    }
    return cloud;
}

PointCloud read_point_cloud_xyz(const std::string& data) {
    PointCloud cloud;
    cloud.feature_dim = 0;
    std::istringstream in(data);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double v[6];
        for (int c = 0; c < 6; ++c) {
            if (!(ls >> v[c]))
                throw ParseError("xyz: expected 6 columns at line " + std::to_string(line_no));
            if (!std::isfinite(v[c]))
                throw ParseError("xyz: non-finite value at line " + std::to_string(line_no));
        }
        OrientedPoint pt;
        pt.position = {v[0], v[1], v[2]};
        pt.normal = {v[3], v[4], v[5]};
        cloud.points.push_back(std::move(pt));
    }
    return cloud;
}

void normalize_cloud(PointCloud& cloud, bool had_kernel) {
    if (cloud.empty()) throw ParseError("point cloud file contains no points");

    Vec3 lo = cloud.points[0].position, hi = lo;
    for (const auto& pt : cloud.points) {
        lo = {std::min(lo.x, pt.position.x), std::min(lo.y, pt.position.y),
              std::min(lo.z, pt.position.z)};
        hi = {std::max(hi.x, pt.position.x), std::max(hi.y, pt.position.y),
              std::max(hi.z, pt.position.z)};
    }
    const bool inside_unit = lo.x >= 0.0 && lo.y >= 0.0 && lo.z >= 0.0 && hi.x <= 1.0 &&
                             hi.y <= 1.0 && hi.z <= 1.0;
    if (!inside_unit) {
        // uniform scale into [0.05,0.95]^3, centered, aspect preserved
        const double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
        const double scale = extent > 0.0 ? 0.9 / extent : 1.0;
        const Vec3 center = (lo + hi) * 0.5;
        for (auto& pt : cloud.points)
            pt.position = (pt.position - center) * scale + Vec3{0.5, 0.5, 0.5};
        // kernel extents are squared lengths
        if (had_kernel)
            for (auto& pt : cloud.points) pt.kernel.k *= scale * scale;
    }

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto& pt = cloud.points[i];
        const double n2 = norm_sq(pt.normal);
        if (n2 < 1e-20) throw ParseError("zero-length normal at element " + std::to_string(i));
        if (std::abs(n2 - 1.0) > 1e-12) pt.normal = pt.normal / std::sqrt(n2);
    }

    if (had_kernel) {
        for (auto& pt : cloud.points) {
            pt.kernel.k = std::max(pt.kernel.k, kKernelKFloor);
            pt.kernel.m = std::clamp(pt.kernel.m, kKernelMFloor, kKernelMCeil);
        }
    } else {
        assign_default_kernel_params(cloud);
    }
}

}  // namespace

PointCloud read_point_cloud(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    PointCloud cloud;
    bool had_kernel = false;
    if (path.extension() == ".ply" || data.rfind("ply", 0) == 0) {
        cloud = read_point_cloud_ply(data);
        // detected inside the reader: params left at defaults means absent
        const PlyHeader header = parse_ply_header(data);
        for (const auto& el : header.elements)
            if (el.name == "vertex")
                for (const auto& p : el.properties)
                    if (p.name == "k") had_kernel = true;
    } else {
        cloud = read_point_cloud_xyz(data);
    }
    normalize_cloud(cloud, had_kernel);
    return cloud;
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
    if (cloud.feature_dim > 3)
        throw std::invalid_argument("write_point_cloud: feature dim > 3 unsupported by PLY");
    std::ostringstream out(std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "k", "m"})
        out << "property double " << n << "\n";
    const char* color_names[3] = {"red", "green", "blue"};
    for (int c = 0; c < cloud.feature_dim; ++c) out << "property double " << color_names[c] << "\n";
    out << "end_header\n";

    const auto put = [&out](double v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    };
    for (const auto& pt : cloud.points) {
        put(pt.position.x);
        put(pt.position.y);
        put(pt.position.z);
        put(pt.normal.x);
        put(pt.normal.y);
        put(pt.normal.z);
        put(pt.kernel.k);
        put(pt.kernel.m);
        for (int c = 0; c < cloud.feature_dim; ++c) put(pt.feature[static_cast<std::size_t>(c)]);
    }
    atomic_write(path, out.str());
}

namespace {

void write_mesh_obj(const Mesh& mesh, const std::filesystem::path& path) {
    std::ostringstream out;
    out.precision(9);
    for (const auto& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& n : mesh.vertex_normals)
        out << "vn " << n.x << " " << n.y << " " << n.z << "\n";
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << "//" << t[0] + 1 << " " << t[1] + 1 << "//" << t[1] + 1 << " "
            << t[2] + 1 << "//" << t[2] + 1 << "\n";
    atomic_write(path, out.str());
}

void write_mesh_ply(const Mesh& mesh, const std::filesystem::path& path) {
    const bool with_color = mesh.feature_dim >= 3 && !mesh.vertex_features.empty();
    std::ostringstream out(std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    for (const char* n : {"x", "y", "z", "nx", "ny", "nz"}) out << "property float " << n << "\n";
    if (with_color)
        for (const char* n : {"red", "green", "blue"}) out << "property uchar " << n << "\n";
    out << "element face " << mesh.triangles.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";

    const auto putf = [&out](double v) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    };
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        putf(mesh.vertices[i].x);
        putf(mesh.vertices[i].y);
        putf(mesh.vertices[i].z);
        const Vec3 n = i < mesh.vertex_normals.size() ? mesh.vertex_normals[i] : Vec3{0, 0, 1};
        putf(n.x);
        putf(n.y);
        putf(n.z);
        if (with_color) {
            for (int c = 0; c < 3; ++c) {
                const double v =
                    std::clamp(mesh.vertex_features[i * static_cast<std::size_t>(mesh.feature_dim) + c], 0.0, 1.0);
                const auto byte = static_cast<unsigned char>(std::lround(v * 255.0));
                out.write(reinterpret_cast<const char*>(&byte), 1);
            }
        }
    }
    for (const auto& t : mesh.triangles) {
        const unsigned char n = 3;
        out.write(reinterpret_cast<const char*>(&n), 1);
        for (int c = 0; c < 3; ++c) {
            const std::int32_t idx = static_cast<std::int32_t>(t[static_cast<std::size_t>(c)]);
            out.write(reinterpret_cast<const char*>(&idx), sizeof(idx));
        }
    }
    atomic_write(path, out.str());
}

}  // namespace

void write_mesh(const Mesh& mesh, const std::filesystem::path& path, MeshFormat format) {
    Mesh tmp;
    const Mesh* m = &mesh;
    if (mesh.vertex_normals.size() != mesh.vertices.size() && !mesh.triangles.empty()) {
        tmp = mesh;
        compute_vertex_normals(tmp);
        m = &tmp;
    }
    for (const auto& t : m->triangles)
        for (const auto idx : t)
            if (idx >= m->vertices.size())
                throw std::invalid_argument("write_mesh: triangle index out of range");
    if (format == MeshFormat::obj)
        write_mesh_obj(*m, path);
    else
        write_mesh_ply(*m, path);
}

namespace {

Mesh read_mesh_obj(const std::string& data) {
    Mesh mesh;
    std::istringstream in(data);
    std::string line;
    std::size_t line_no = 0;
    std::vector<Vec3> normals;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw ParseError("obj: malformed vertex at line " + std::to_string(line_no));
            mesh.vertices.push_back(v);
        } else if (tok == "vn") {
            Vec3 n;
            if (!(ls >> n.x >> n.y >> n.z))
                throw ParseError("obj: malformed normal at line " + std::to_string(line_no));
            normals.push_back(n);
        } else if (tok == "f") {
            std::array<std::uint32_t, 3> tri{};
            for (int c = 0; c < 3; ++c) {
                std::string group;
                if (!(ls >> group))
                    throw ParseError("obj: face needs 3 vertices at line " + std::to_string(line_no));
                const long idx = std::strtol(group.c_str(), nullptr, 10);
                if (idx <= 0 || static_cast<std::size_t>(idx) > mesh.vertices.size())
                    throw ParseError("obj: face index out of range at line " +
                                     std::to_string(line_no));
                tri[static_cast<std::size_t>(c)] = static_cast<std::uint32_t>(idx - 1);
            }
            std::string extra;
            if (ls >> extra)
                throw ParseError("obj: only triangles supported, line " + std::to_string(line_no));
            mesh.triangles.push_back(tri);
        }
    }
    if (normals.size() == mesh.vertices.size()) mesh.vertex_normals = std::move(normals);
    mesh.vertex_flags.assign(mesh.vertices.size(), 0);
    return mesh;
}

Mesh read_mesh_ply(const std::string& data) {
    const PlyHeader header = parse_ply_header(data);
    if (header.elements.empty() || header.elements[0].name != "vertex")
        throw ParseError("ply: vertex element must come first");
    const PlyElement& vertex = header.elements[0];

    std::map<std::string, std::size_t> prop_index;
    std::size_t stride = 0;
    std::vector<std::size_t> offsets;
    for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
        if (vertex.properties[p].is_list) throw ParseError("ply: list property in vertex element");
        prop_index[vertex.properties[p].name] = p;
        offsets.push_back(stride);
        stride += ply_type_size(vertex.properties[p].type);
    }
    for (const char* req : {"x", "y", "z"})
        if (!prop_index.count(req))
            throw ParseError(std::string("ply: missing required property '") + req + "'");

    Mesh mesh;
    std::size_t cursor = header.header_bytes;
    std::istringstream ascii_in(header.binary ? std::string() : data.substr(header.header_bytes));
    const auto rows = read_ply_vertex_rows(data, header, vertex, cursor, ascii_in);

    const bool has_normals =
        prop_index.count("nx") && prop_index.count("ny") && prop_index.count("nz");
    const bool has_color =
        prop_index.count("red") && prop_index.count("green") && prop_index.count("blue");
    mesh.feature_dim = has_color ? 3 : 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        mesh.vertices.push_back(
            {rows[r][prop_index["x"]], rows[r][prop_index["y"]], rows[r][prop_index["z"]]});
        if (has_normals)
            mesh.vertex_normals.push_back({rows[r][prop_index["nx"]], rows[r][prop_index["ny"]],
                                           rows[r][prop_index["nz"]]});
        if (has_color) {
            const char* names[3] = {"red", "green", "blue"};
            for (const char* n : names) {
                const std::size_t p = prop_index[n];
                mesh.vertex_features.push_back(rows[r][p] * color_scale(vertex.properties[p].type));
            }
        }
    }

    // face element
    for (std::size_t e = 1; e < header.elements.size(); ++e) {
        const PlyElement& el = header.elements[e];
        if (el.name != "face") throw ParseError("ply: unexpected element '" + el.name + "'");
        if (el.properties.size() != 1 || !el.properties[0].is_list)
            throw ParseError("ply: face element must hold a single list property");
        const PlyType ct = el.properties[0].count_type;
        const PlyType vt = el.properties[0].type;
        for (std::size_t f = 0; f < el.count; ++f) {
            std::size_t n = 0;
            std::vector<std::uint32_t> idx;
            if (header.binary) {
                if (cursor + ply_type_size(ct) > data.size())
                    throw ParseError("ply: truncated face data");
                n = static_cast<std::size_t>(decode_scalar(
                    ct, reinterpret_cast<const unsigned char*>(data.data() + cursor)));
                cursor += ply_type_size(ct);
                for (std::size_t c = 0; c < n; ++c) {
                    if (cursor + ply_type_size(vt) > data.size())
                        throw ParseError("ply: truncated face data");
                    idx.push_back(static_cast<std::uint32_t>(decode_scalar(
                        vt, reinterpret_cast<const unsigned char*>(data.data() + cursor))));
                    cursor += ply_type_size(vt);
                }
            } else {
                double count_val;
                if (!(ascii_in >> count_val)) throw ParseError("ply: truncated face data");
                n = static_cast<std::size_t>(count_val);
                for (std::size_t c = 0; c < n; ++c) {
                    double v;
                    if (!(ascii_in >> v)) throw ParseError("ply: truncated face data");
                    idx.push_back(static_cast<std::uint32_t>(v));
                }
            }
            if (n < 3) throw ParseError("ply: face with fewer than 3 vertices");
            for (const auto i : idx)
                if (i >= mesh.vertices.size()) throw ParseError("ply: face index out of range");
            // fan-triangulate polygons
            for (std::size_t c = 2; c < n; ++c)
                mesh.triangles.push_back({idx[0], idx[c - 1], idx[c]});
        }
    }
    mesh.vertex_flags.assign(mesh.vertices.size(), 0);
    return mesh;
}

}  // namespace

Mesh read_mesh(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    if (path.extension() == ".ply" || data.rfind("ply", 0) == 0) return read_mesh_ply(data);
    return read_mesh_obj(data);
}

void write_grid_dump(const SplatGrid& grid, const std::filesystem::path& path) {
    if (!grid.finalized) throw std::invalid_argument("write_grid_dump: grid not finalized");
    std::string payload;
    payload.reserve(16 + grid.sdf.size() * sizeof(double));
    payload.append("IMLSGRID", 8);
    const std::uint32_t res = static_cast<std::uint32_t>(grid.resolution);
    const std::uint32_t reserved = 0;
    payload.append(reinterpret_cast<const char*>(&res), 4);
    payload.append(reinterpret_cast<const char*>(&reserved), 4);
    payload.append(reinterpret_cast<const char*>(grid.sdf.data()),
                   grid.sdf.size() * sizeof(double));
    atomic_write(path, payload);
}

std::vector<double> read_grid_dump(const std::filesystem::path& path, int& resolution) {
    const std::string data = read_file(path);
    if (data.size() < 16 || data.compare(0, 8, "IMLSGRID") != 0)
        throw ParseError("grid dump: bad magic");
    std::uint32_t res;
    std::memcpy(&res, data.data() + 8, 4);
    resolution = static_cast<int>(res);
    const std::size_t n = static_cast<std::size_t>(res) * res * res;
    if (data.size() != 16 + n * sizeof(double)) throw ParseError("grid dump: size mismatch");
    std::vector<double> sdf(n);
    std::memcpy(sdf.data(), data.data() + 16, n * sizeof(double));
    return sdf;
}

void write_loss_history_csv(std::span<const double> losses, std::span<const double> alphas,
                            const std::filesystem::path& path) {
    std::ostringstream out;
    out.precision(17);
    out << "step,loss,alpha\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        out << i << "," << losses[i] << "," << (i < alphas.size() ? alphas[i] : 0.0) << "\n";
    atomic_write(path, out.str());
}

std::vector<Vec3> sample_mesh_surface(const Mesh& mesh, int n, std::uint64_t seed) {
    if (mesh.triangles.empty())
        throw std::invalid_argument("sample_mesh_surface: mesh has no triangles");
    if (n < 1) throw std::invalid_argument("sample_mesh_surface: n must be >= 1");

    std::vector<double> cumulative;
    cumulative.reserve(mesh.triangles.size());
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        total += 0.5 * norm(cross(b - a, c - a));
        cumulative.push_back(total);
    }
    if (total <= 0.0) throw std::invalid_argument("sample_mesh_surface: zero surface area");

    Rng rng(seed);
    std::vector<Vec3> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double pick = rng.uniform() * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t ti = static_cast<std::size_t>(it - cumulative.begin());
        const auto& t = mesh.triangles[std::min(ti, mesh.triangles.size() - 1)];
        const double su = std::sqrt(rng.uniform());
        const double v = rng.uniform();
        const double wa = 1.0 - su;
        const double wb = su * (1.0 - v);
        const double wc = su * v;
        samples.push_back(mesh.vertices[t[0]] * wa + mesh.vertices[t[1]] * wb +
                          mesh.vertices[t[2]] * wc);
    }
    return samples;
}

}  // namespace imls
