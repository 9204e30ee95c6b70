#pragma once

#include <array>
#include <vector>

#include "previz/common.hpp"
#include "previz/mesh.hpp"

namespace previz {

/// Signed distances sampled on a regular node lattice. Node (i,j,k) sits at
/// origin + cell_size * (i,j,k); values are negative inside the surface.
struct SdfGrid {
    Vec3 origin = Vec3::Zero();
    double cell_size = 0.0;
    std::array<int, 3> dims = {0, 0, 0};  // node counts per axis
    std::vector<double> values;           // x-fastest, then y, then z

    size_t index(int i, int j, int k) const {
        return static_cast<size_t>(i) +
               static_cast<size_t>(dims[0]) * (static_cast<size_t>(j) +
                                               static_cast<size_t>(dims[1]) * k);
    }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }
    Vec3 node_position(int i, int j, int k) const {
        return origin + cell_size * Vec3(i, j, k);
    }
    Vec3 max_corner() const {
        return origin + cell_size * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
    }
    double min_value() const;
};

struct SdfSample {
    double value = 0.0;
    Vec3 gradient = Vec3::Zero();
};

/// Builds the SDF of `mesh` on a lattice with `resolution` cells along the
/// longest bounding-box axis, padded on every side by `padding` times that
/// axis length. Unsigned distances are exact point-to-triangle distances;
/// the sign is a majority vote over ray-crossing parity along the three
/// axis directions (rays are offset from the node lattice by a fixed
/// sub-cell perturbation so they cannot hit edges or vertices exactly).
/// Parallel over grid nodes; deterministic for a fixed input.
SdfGrid build_sdf(const TriMesh& mesh, int resolution = 128, double padding = 0.1);

/// Trilinear interpolation with the analytic gradient of the trilinear form.
/// Points outside the lattice clamp to the boundary; the clamped distance is
/// added to the boundary value so queries leaving the grid keep a useful
/// ascent direction.
SdfSample sample_sdf(const SdfGrid& grid, const Vec3& point);

/// Distance from `point` to the closest point on triangle (a, b, c).
double point_triangle_distance(const Vec3& point, const Vec3& a, const Vec3& b,
                               const Vec3& c);

namespace reference {
/// Brute-force single-threaded builder: every node against every triangle.
/// Same lattice, same distance primitive, same parity rays as build_sdf;
/// kept as the comparison baseline for tests and benchmarks.
SdfGrid build_sdf(const TriMesh& mesh, int resolution = 128, double padding = 0.1);
}  // namespace reference

}  // namespace previz
