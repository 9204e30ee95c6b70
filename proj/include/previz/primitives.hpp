#pragma once

#include "previz/mesh.hpp"

namespace previz {

/// Axis-aligned box (12 triangles, 8 shared vertices).
TriMesh make_box(const Vec3& center, const Vec3& size);

/// Icosphere: icosahedron subdivided `subdivisions` times, vertices projected
/// to the sphere.
TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions = 3);

/// Appends `other`'s geometry, offsetting face indices. When `part` is not
/// kNoPartLabel, all appended vertices take that label (allocating unlabeled
/// slots for prior vertices if needed).
void append_mesh(TriMesh& mesh, const TriMesh& other, uint8_t part = 255);

TriMesh transformed(const TriMesh& mesh, const Mat3& rotation, const Vec3& translation,
                    double scale = 1.0);

}  // namespace previz
