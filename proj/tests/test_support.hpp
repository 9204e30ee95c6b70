#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's internal code paths.

#include <cmath>
#include <optional>
#include <vector>

#include "previz/common.hpp"
#include "previz/mesh.hpp"
#include "previz/primitives.hpp"

namespace previz::testing {

// Moller-Trumbore; returns the ray parameter t of the intersection.
inline std::optional<double> ray_triangle(const Vec3& orig, const Vec3& dir, const Vec3& a,
                                          const Vec3& b, const Vec3& c) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pv = dir.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-14) {
        return std::nullopt;
    }
    const double inv = 1.0 / det;
    const Vec3 tv = orig - a;
    const double u = tv.dot(pv) * inv;
    if (u < 0.0 || u > 1.0) {
        return std::nullopt;
    }
    const Vec3 qv = tv.cross(e1);
    const double v = dir.dot(qv) * inv;
    if (v < 0.0 || u + v > 1.0) {
        return std::nullopt;
    }
    return e2.dot(qv) * inv;
}

// Single-ray crossing parity: odd number of forward hits means inside. The
// origin is nudged off the exact query point so rays from lattice positions
// cannot run through mesh edges or vertices (meshes with planar edge loops,
// e.g. icospheres, would otherwise double-count shared edges).
inline bool parity_inside_oracle(const TriMesh& mesh, const Vec3& point, const Vec3& dir) {
    const Vec3 origin = point + Vec3(3.9e-6, 6.1e-6, 9.3e-6);
    int crossings = 0;
    for (const auto& f : mesh.faces) {
        const auto t = ray_triangle(origin, dir, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                    mesh.vertices[f[2]]);
        if (t && *t > 0.0) {
            ++crossings;
        }
    }
    return (crossings & 1) != 0;
}

// Star-shaped closed mesh: icosphere with a smooth random radial field.
inline TriMesh random_blob(uint64_t seed, int subdivisions = 3) {
    Rng rng(seed);
    const double a1 = rng.uniform(0.05, 0.25);
    const double a2 = rng.uniform(0.05, 0.2);
    const double a3 = rng.uniform(0.0, 0.15);
    const double p1 = rng.uniform(0.0, 2.0 * M_PI);
    const double p2 = rng.uniform(0.0, 2.0 * M_PI);
    TriMesh mesh = make_icosphere(Vec3::Zero(), 1.0, subdivisions);
    for (auto& v : mesh.vertices) {
        const Vec3 n = v.normalized();
        const double r = 1.0 + a1 * std::sin(3.0 * n.x() + p1) +
                         a2 * std::cos(2.0 * n.y() + p2) + a3 * std::sin(4.0 * n.z());
        v = r * n;
    }
    return mesh;
}

}  // namespace previz::testing
