#include "previz/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "previz/body_parts.hpp"

namespace previz {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) {
        fail("cannot open mesh file: " + path.string());
    }
    return in;
}

}  // namespace

Aabb TriMesh::bounds() const {
    Aabb box;
    for (const auto& v : vertices) {
        box.expand(v);
    }
    return box;
}

void TriMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (size_t f = 0; f < faces.size(); ++f) {
        const auto& face = faces[f];
        for (int idx : face) {
            if (idx < 0 || idx >= n) {
                throw std::invalid_argument("face " + std::to_string(f) +
                                            " references vertex " + std::to_string(idx) +
                                            " out of range");
            }
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw std::invalid_argument("face " + std::to_string(f) +
                                        " is degenerate (repeated vertex index)");
        }
    }
    if (part_labels) {
        if (part_labels->size() != vertices.size()) {
            throw std::invalid_argument("part_labels size does not match vertex count");
        }
        for (uint8_t label : *part_labels) {
            if (label != kNoPartLabel && label >= kBodyParts.size()) {
                throw std::invalid_argument("part label index " + std::to_string(label) +
                                            " outside the 15-part set");
            }
        }
    }
}

TriMesh load_mesh(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".obj" || ext == ".OBJ") {
        return load_obj(path);
    }
    if (ext == ".ply" || ext == ".PLY") {
        return load_ply(path);
    }
    fail("unsupported mesh format: " + path.string());
}

TriMesh load_obj(const std::filesystem::path& path) {
    auto in = open_input(path, false);
    TriMesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') {
            continue;
        }
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x() >> v.y() >> v.z())) {
                fail(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
            }
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // "i", "i/t", "i/t/n", "i//n"; negative indices are relative
                const size_t slash = tok.find('/');
                const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int i = 0;
                try {
                    i = std::stoi(head);
                } catch (const std::exception&) {
                    fail(path.string() + ":" + std::to_string(line_no) + ": malformed face index '" + tok + "'");
                }
                if (i < 0) {
                    i = static_cast<int>(mesh.vertices.size()) + i;
                } else {
                    i -= 1;
                }
                idx.push_back(i);
            }
            if (idx.size() < 3) {
                fail(path.string() + ":" + std::to_string(line_no) + ": face with fewer than 3 vertices");
            }
            for (size_t k = 2; k < idx.size(); ++k) {  // fan-triangulate polygons
                mesh.faces.push_back({idx[0], idx[static_cast<int>(k) - 1], idx[k]});
            }
        }
        // vn/vt/usemtl/o/g/s/mtllib are ignored
    }
    if (mesh.vertices.empty()) {
        fail(path.string() + ": no vertices");
    }
    mesh.validate();
    return mesh;
}

namespace {

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

PlyType ply_type_from_name(const std::string& name, const std::string& context) {
    static const std::map<std::string, PlyType> kTypes = {
        {"char", PlyType::kInt8},     {"int8", PlyType::kInt8},
        {"uchar", PlyType::kUint8},   {"uint8", PlyType::kUint8},
        {"short", PlyType::kInt16},   {"int16", PlyType::kInt16},
        {"ushort", PlyType::kUint16}, {"uint16", PlyType::kUint16},
        {"int", PlyType::kInt32},     {"int32", PlyType::kInt32},
        {"uint", PlyType::kUint32},   {"uint32", PlyType::kUint32},
        {"float", PlyType::kFloat32}, {"float32", PlyType::kFloat32},
        {"double", PlyType::kFloat64},{"float64", PlyType::kFloat64},
    };
    auto it = kTypes.find(name);
    if (it == kTypes.end()) {
        fail(context + ": unknown PLY type '" + name + "'");
    }
    return it->second;
}

size_t ply_type_size(PlyType t) {
    switch (t) {
        case PlyType::kInt8:
        case PlyType::kUint8: return 1;
        case PlyType::kInt16:
        case PlyType::kUint16: return 2;
        case PlyType::kInt32:
        case PlyType::kUint32:
        case PlyType::kFloat32: return 4;
        case PlyType::kFloat64: return 8;
    }
    return 0;
}

double read_binary_scalar(std::istream& in, PlyType t) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_type_size(t)));
    if (!in) {
        fail("unexpected end of binary PLY data");
    }
    // file is little-endian; so are the platforms we build for
    static_assert(std::endian::native == std::endian::little);
    switch (t) {
        case PlyType::kInt8: return static_cast<int8_t>(buf[0]);
        case PlyType::kUint8: return buf[0];
        case PlyType::kInt16: { int16_t v; std::memcpy(&v, buf, 2); return v; }
        case PlyType::kUint16: { uint16_t v; std::memcpy(&v, buf, 2); return v; }
        case PlyType::kInt32: { int32_t v; std::memcpy(&v, buf, 4); return v; }
        case PlyType::kUint32: { uint32_t v; std::memcpy(&v, buf, 4); return v; }
        case PlyType::kFloat32: { float v; std::memcpy(&v, buf, 4); return v; }
        case PlyType::kFloat64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0.0;
}

double read_ascii_scalar(std::istream& in) {
    double v;
    if (!(in >> v)) {
        fail("unexpected end of ASCII PLY data");
    }
    return v;
}

struct PlyProperty {
    std::string name;
    bool is_list = false;
    PlyType count_type = PlyType::kUint8;
    PlyType value_type = PlyType::kFloat32;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> properties;
};

}  // namespace

TriMesh load_ply(const std::filesystem::path& path) {
    auto in = open_input(path, true);
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
        fail(path.string() + ": not a PLY file");
    }
    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "comment" || tag == "obj_info" || tag.empty()) {
            continue;
        }
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                fail(path.string() + ": unsupported PLY format '" + fmt + "'");
            }
        } else if (tag == "element") {
            PlyElement el;
            ss >> el.name >> el.count;
            elements.push_back(el);
        } else if (tag == "property") {
            if (elements.empty()) {
                fail(path.string() + ": property before element");
            }
            PlyProperty prop;
            std::string t;
            ss >> t;
            if (t == "list") {
                prop.is_list = true;
                std::string ct, vt;
                ss >> ct >> vt >> prop.name;
                prop.count_type = ply_type_from_name(ct, path.string());
                prop.value_type = ply_type_from_name(vt, path.string());
            } else {
                prop.value_type = ply_type_from_name(t, path.string());
                ss >> prop.name;
            }
            elements.back().properties.push_back(prop);
        } else if (tag == "end_header") {
            break;
        } else {
            fail(path.string() + ": unknown header line '" + line + "'");
        }
    }

    TriMesh mesh;
    for (const auto& el : elements) {
        if (el.name == "vertex") {
            int xi = -1, yi = -1, zi = -1;
            for (size_t p = 0; p < el.properties.size(); ++p) {
                if (el.properties[p].name == "x") xi = static_cast<int>(p);
                if (el.properties[p].name == "y") yi = static_cast<int>(p);
                if (el.properties[p].name == "z") zi = static_cast<int>(p);
            }
            if (xi < 0 || yi < 0 || zi < 0) {
                fail(path.string() + ": vertex element lacks x/y/z");
            }
            mesh.vertices.reserve(el.count);
            std::vector<double> scalars(el.properties.size());
            for (size_t i = 0; i < el.count; ++i) {
                for (size_t p = 0; p < el.properties.size(); ++p) {
                    const auto& prop = el.properties[p];
                    if (prop.is_list) {
                        const size_t n = static_cast<size_t>(
                            binary ? read_binary_scalar(in, prop.count_type) : read_ascii_scalar(in));
                        for (size_t k = 0; k < n; ++k) {
                            binary ? read_binary_scalar(in, prop.value_type) : read_ascii_scalar(in);
                        }
                        scalars[p] = 0.0;
                    } else {
                        scalars[p] = binary ? read_binary_scalar(in, prop.value_type)
                                            : read_ascii_scalar(in);
                    }
                }
                mesh.vertices.emplace_back(scalars[xi], scalars[yi], scalars[zi]);
            }
        } else if (el.name == "face") {
            for (size_t i = 0; i < el.count; ++i) {
                for (const auto& prop : el.properties) {
                    if (prop.is_list &&
                        (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
                        const size_t n = static_cast<size_t>(
                            binary ? read_binary_scalar(in, prop.count_type) : read_ascii_scalar(in));
                        std::vector<int> idx(n);
                        for (size_t k = 0; k < n; ++k) {
                            idx[k] = static_cast<int>(
                                binary ? read_binary_scalar(in, prop.value_type) : read_ascii_scalar(in));
                        }
                        if (n < 3) {
                            fail(path.string() + ": face with fewer than 3 vertices");
                        }
                        for (size_t k = 2; k < n; ++k) {
                            mesh.faces.push_back({idx[0], idx[k - 1], idx[k]});
                        }
                    } else if (prop.is_list) {
                        const size_t n = static_cast<size_t>(
                            binary ? read_binary_scalar(in, prop.count_type) : read_ascii_scalar(in));
                        for (size_t k = 0; k < n; ++k) {
                            binary ? read_binary_scalar(in, prop.value_type) : read_ascii_scalar(in);
                        }
                    } else {
                        binary ? read_binary_scalar(in, prop.value_type) : read_ascii_scalar(in);
                    }
                }
            }
        } else {
            // skip unknown elements property by property
            for (size_t i = 0; i < el.count; ++i) {
                for (const auto& prop : el.properties) {
                    if (prop.is_list) {
                        const size_t n = static_cast<size_t>(
                            binary ? read_binary_scalar(in, prop.count_type) : read_ascii_scalar(in));
                        for (size_t k = 0; k < n; ++k) {
                            binary ? read_binary_scalar(in, prop.value_type) : read_ascii_scalar(in);
                        }
                    } else {
                        binary ? read_binary_scalar(in, prop.value_type) : read_ascii_scalar(in);
                    }
                }
            }
        }
    }
    if (mesh.vertices.empty()) {
        fail(path.string() + ": no vertices");
    }
    mesh.validate();
    return mesh;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        fail("cannot write " + path.string());
    }
    out.precision(17);
    for (const auto& v : mesh.vertices) {
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

void save_ply_binary(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail("cannot write " + path.string());
    }
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    for (const auto& v : mesh.vertices) {
        const float xyz[3] = {static_cast<float>(v.x()), static_cast<float>(v.y()),
                              static_cast<float>(v.z())};
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    for (const auto& f : mesh.faces) {
        const uint8_t n = 3;
        out.write(reinterpret_cast<const char*>(&n), 1);
        const int32_t idx[3] = {f[0], f[1], f[2]};
        out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
}

void load_part_labels(TriMesh& mesh, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail("cannot open part-label sidecar: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    std::vector<uint8_t> labels(mesh.vertices.size(), kNoPartLabel);
    for (const auto& part : doc.at("parts")) {
        const std::string name = part.at("name").get<std::string>();
        const auto id = body_part_index(name);
        if (!id) {
            fail(path.string() + ": '" + name + "' is not one of the 15 body parts");
        }
        for (const auto& range : part.at("ranges")) {
            const int64_t lo = range.at(0).get<int64_t>();
            const int64_t hi = range.at(1).get<int64_t>();
            if (lo < 0 || hi > static_cast<int64_t>(labels.size()) || lo > hi) {
                fail(path.string() + ": range [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + ") out of bounds");
            }
            std::fill(labels.begin() + lo, labels.begin() + hi, *id);
        }
    }
    mesh.part_labels = std::move(labels);
    mesh.validate();
}

void save_part_labels(const TriMesh& mesh, const std::filesystem::path& path) {
    if (!mesh.part_labels) {
        fail("mesh has no part labels to save");
    }
    const auto& labels = *mesh.part_labels;
    nlohmann::json parts = nlohmann::json::array();
    for (uint8_t id = 0; id < kBodyParts.size(); ++id) {
        nlohmann::json ranges = nlohmann::json::array();
        size_t i = 0;
        while (i < labels.size()) {
            if (labels[i] != id) {
                ++i;
                continue;
            }
            size_t j = i;
            while (j < labels.size() && labels[j] == id) {
                ++j;
            }
            ranges.push_back({i, j});
            i = j;
        }
        if (!ranges.empty()) {
            parts.push_back({{"name", body_part_name(id)}, {"ranges", ranges}});
        }
    }
    nlohmann::json doc = {{"version", 1}, {"parts", parts}};
    std::ofstream out(path);
    if (!out) {
        fail("cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

std::vector<int> vertices_with_parts(const TriMesh& mesh,
                                     const std::vector<uint8_t>& parts) {
    std::vector<int> out;
    if (!mesh.part_labels) {
        return out;
    }
    const auto& labels = *mesh.part_labels;
    for (size_t i = 0; i < labels.size(); ++i) {
        for (uint8_t p : parts) {
            if (labels[i] == p) {
                out.push_back(static_cast<int>(i));
                break;
            }
        }
    }
    return out;
}

double surface_area(const TriMesh& mesh) {
    double area = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
        const Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
        area += 0.5 * e1.cross(e2).norm();
    }
    return area;
}

std::vector<Vec3> sample_surface_points(const TriMesh& mesh, int count, uint64_t seed) {
    std::vector<double> cumulative;
    cumulative.reserve(mesh.faces.size());
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
        const Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
        total += 0.5 * e1.cross(e2).norm();
        cumulative.push_back(total);
    }
    if (total <= 0.0) {
        fail("sample_surface_points: zero-area mesh");
    }
    Rng rng(seed);
    std::vector<Vec3> points;
    points.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double r = rng.uniform() * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
        const auto& f = mesh.faces[std::distance(cumulative.begin(), it)];
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        points.push_back(mesh.vertices[f[0]] +
                         u * (mesh.vertices[f[1]] - mesh.vertices[f[0]]) +
                         v * (mesh.vertices[f[2]] - mesh.vertices[f[0]]));
    }
    return points;
}

}  // namespace previz
