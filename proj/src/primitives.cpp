#include "previz/primitives.hpp"

#include <cmath>
#include <map>

#include "previz/body_parts.hpp"

namespace previz {

TriMesh make_box(const Vec3& center, const Vec3& size) {
    const Vec3 h = 0.5 * size;
    TriMesh mesh;
    for (int k = 0; k < 8; ++k) {
        mesh.vertices.push_back(center + Vec3((k & 1) ? h.x() : -h.x(),
                                              (k & 2) ? h.y() : -h.y(),
                                              (k & 4) ? h.z() : -h.z()));
    }
    // outward-wound faces per axis pair
    const int quads[6][4] = {
        {0, 2, 6, 4},  // -x
        {1, 5, 7, 3},  // +x
        {0, 4, 5, 1},  // -y
        {2, 3, 7, 6},  // +y
        {0, 1, 3, 2},  // -z
        {4, 6, 7, 5},  // +z
    };
    for (const auto& q : quads) {
        mesh.faces.push_back({q[0], q[1], q[2]});
        mesh.faces.push_back({q[0], q[2], q[3]});
    }
    return mesh;
}

TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh mesh;
    mesh.vertices = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    mesh.faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (auto& v : mesh.vertices) {
        v.normalize();
    }
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        const auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) {
                return it->second;
            }
            const int idx = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> faces;
        faces.reserve(mesh.faces.size() * 4);
        for (const auto& f : mesh.faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            faces.push_back({f[0], ab, ca});
            faces.push_back({f[1], bc, ab});
            faces.push_back({f[2], ca, bc});
            faces.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(faces);
    }
    for (auto& v : mesh.vertices) {
        v = center + radius * v;
    }
    return mesh;
}

void append_mesh(TriMesh& mesh, const TriMesh& other, uint8_t part) {
    const int offset = static_cast<int>(mesh.vertices.size());
    if (part != kNoPartLabel && !mesh.part_labels) {
        mesh.part_labels = std::vector<uint8_t>(mesh.vertices.size(), kNoPartLabel);
    }
    mesh.vertices.insert(mesh.vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto& f : other.faces) {
        mesh.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    }
    if (mesh.part_labels) {
        const uint8_t label = part;
        mesh.part_labels->resize(mesh.vertices.size(), kNoPartLabel);
        if (label != kNoPartLabel) {
            std::fill(mesh.part_labels->begin() + offset, mesh.part_labels->end(), label);
        }
    }
}

TriMesh transformed(const TriMesh& mesh, const Mat3& rotation, const Vec3& translation,
                    double scale) {
    TriMesh out = mesh;
    for (auto& v : out.vertices) {
        v = rotation * (scale * v) + translation;
    }
    return out;
}

}  // namespace previz
