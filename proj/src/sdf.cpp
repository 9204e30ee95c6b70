#include "previz/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace previz {

namespace {

// Offsets applied to parity rays in the two axes orthogonal to the ray
// direction, so a ray cannot pass exactly through a vertex or edge of a mesh
// aligned with the node lattice. Tiny relative to a cell (the sign belongs
// to the unperturbed node) yet far above double rounding noise.
constexpr double kRayJitterU = 1.2360679774997897e-4;  // (sqrt(5)-1)/2 * 4e-4
constexpr double kRayJitterV = 0.7320508075688772e-4;  // (sqrt(3)-1) * 1e-4

struct GridSpec {
    Vec3 origin;
    double cell = 0.0;
    std::array<int, 3> dims{};
};

GridSpec make_grid_spec(const TriMesh& mesh, int resolution, double padding) {
    if (mesh.empty()) {
        throw std::invalid_argument("build_sdf: empty mesh");
    }
    if (resolution < 8) {
        throw std::invalid_argument("build_sdf: resolution must be >= 8");
    }
    if (padding <= 0.0) {
        throw std::invalid_argument("build_sdf: padding must be positive");
    }
    const Aabb box = mesh.bounds();
    const double longest = box.extent().maxCoeff();
    if (!(longest > 0.0)) {
        throw std::invalid_argument("build_sdf: mesh has zero extent");
    }
    const double pad = padding * longest;
    GridSpec spec;
    spec.cell = (longest + 2.0 * pad) / resolution;
    spec.origin = box.lo - Vec3::Constant(pad);
    for (int a = 0; a < 3; ++a) {
        const double span = box.extent()[a] + 2.0 * pad;
        spec.dims[a] = static_cast<int>(std::ceil(span / spec.cell)) + 1;
    }
    return spec;
}

// Crossing parameters of the perturbed axis line through a lattice column.
// axis = ray direction; (u_axis, v_axis) = the other two axes. The line is
//   {pos[u_axis] = u0, pos[v_axis] = v0, pos[axis] = t}.
void collect_crossings(const TriMesh& mesh, int axis, double u0, double v0,
                       std::vector<double>& out) {
    out.clear();
    const int ua = (axis + 1) % 3;
    const int va = (axis + 2) % 3;
    for (const auto& f : mesh.faces) {
        const Vec3& p0 = mesh.vertices[f[0]];
        const Vec3& p1 = mesh.vertices[f[1]];
        const Vec3& p2 = mesh.vertices[f[2]];
        const double x0 = p0[ua] - u0, y0 = p0[va] - v0;
        const double x1 = p1[ua] - u0, y1 = p1[va] - v0;
        const double x2 = p2[ua] - u0, y2 = p2[va] - v0;
        const double d0 = x0 * y1 - x1 * y0;
        const double d1 = x1 * y2 - x2 * y1;
        const double d2 = x2 * y0 - x0 * y2;
        const bool pos = d0 > 0.0 && d1 > 0.0 && d2 > 0.0;
        const bool neg = d0 < 0.0 && d1 < 0.0 && d2 < 0.0;
        if (!pos && !neg) {
            continue;
        }
        const double area = d0 + d1 + d2;
        // barycentric interpolation of the axis coordinate at (u0, v0)
        const double t = (d1 * p0[axis] + d2 * p1[axis] + d0 * p2[axis]) / area;
        out.push_back(t);
    }
    std::sort(out.begin(), out.end());
}

// Crossings strictly beyond t0; odd count means inside.
bool parity_inside(const std::vector<double>& crossings, double t0) {
    const auto it = std::upper_bound(crossings.begin(), crossings.end(), t0);
    return (std::distance(it, crossings.end()) & 1) != 0;
}

// One vote per axis ray; ties cannot happen with three votes.
void fill_signs(const TriMesh& mesh, const GridSpec& spec, std::vector<uint8_t>& votes) {
    const auto& dims = spec.dims;
    votes.assign(static_cast<size_t>(dims[0]) * dims[1] * dims[2], 0);
    const auto node_index = [&](int i, int j, int k) {
        return static_cast<size_t>(i) +
               static_cast<size_t>(dims[0]) * (static_cast<size_t>(j) +
                                               static_cast<size_t>(dims[1]) * k);
    };
    for (int axis = 0; axis < 3; ++axis) {
        const int ua = (axis + 1) % 3;
        const int va = (axis + 2) % 3;
        const int nu = dims[ua], nv = dims[va], nt = dims[axis];
#ifdef _OPENMP
#pragma omp parallel
#endif
        {
            std::vector<double> crossings;
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
            for (int vi = 0; vi < nv; ++vi) {
                for (int ui = 0; ui < nu; ++ui) {
                    const double u0 =
                        spec.origin[ua] + spec.cell * (ui + kRayJitterU);
                    const double v0 =
                        spec.origin[va] + spec.cell * (vi + kRayJitterV);
                    collect_crossings(mesh, axis, u0, v0, crossings);
                    if (crossings.empty()) {
                        continue;
                    }
                    int ijk[3];
                    ijk[ua] = ui;
                    ijk[va] = vi;
                    for (int ti = 0; ti < nt; ++ti) {
                        const double t0 = spec.origin[axis] + spec.cell * ti;
                        if (parity_inside(crossings, t0)) {
                            ijk[axis] = ti;
                            votes[node_index(ijk[0], ijk[1], ijk[2])] += 1;
                        }
                    }
                }
            }
        }
    }
}

struct TriangleBins {
    Vec3 origin;
    double bin = 0.0;
    std::array<int, 3> dims{};
    std::vector<std::vector<int>> tris;

    int clamp_coord(double x, int axis) const {
        const int c = static_cast<int>(std::floor((x - origin[axis]) / bin));
        return std::clamp(c, 0, dims[axis] - 1);
    }
    size_t index(int i, int j, int k) const {
        return static_cast<size_t>(i) +
               static_cast<size_t>(dims[0]) * (static_cast<size_t>(j) +
                                               static_cast<size_t>(dims[1]) * k);
    }
};

TriangleBins bin_triangles(const TriMesh& mesh, const GridSpec& spec) {
    TriangleBins bins;
    bins.origin = spec.origin;
    const double span = spec.cell * (*std::max_element(spec.dims.begin(), spec.dims.end()) - 1);
    bins.bin = std::max(spec.cell, span / 48.0);
    for (int a = 0; a < 3; ++a) {
        const double extent = spec.cell * (spec.dims[a] - 1);
        bins.dims[a] = std::max(1, static_cast<int>(std::ceil(extent / bins.bin)));
    }
    bins.tris.resize(static_cast<size_t>(bins.dims[0]) * bins.dims[1] * bins.dims[2]);
    for (size_t t = 0; t < mesh.faces.size(); ++t) {
        const auto& f = mesh.faces[t];
        Aabb box;
        box.expand(mesh.vertices[f[0]]);
        box.expand(mesh.vertices[f[1]]);
        box.expand(mesh.vertices[f[2]]);
        int lo[3], hi[3];
        for (int a = 0; a < 3; ++a) {
            lo[a] = bins.clamp_coord(box.lo[a], a);
            hi[a] = bins.clamp_coord(box.hi[a], a);
        }
        for (int k = lo[2]; k <= hi[2]; ++k) {
            for (int j = lo[1]; j <= hi[1]; ++j) {
                for (int i = lo[0]; i <= hi[0]; ++i) {
                    bins.tris[bins.index(i, j, k)].push_back(static_cast<int>(t));
                }
            }
        }
    }
    return bins;
}

// Expanding-shell exact nearest-triangle distance. After finishing the shell
// at Chebyshev radius r, any unvisited bin is at least r*bin away, so the
// search stops as soon as best <= r*bin.
double nearest_distance(const TriMesh& mesh, const TriangleBins& bins, const Vec3& p) {
    const int ci = bins.clamp_coord(p.x(), 0);
    const int cj = bins.clamp_coord(p.y(), 1);
    const int ck = bins.clamp_coord(p.z(), 2);
    const int max_radius = *std::max_element(bins.dims.begin(), bins.dims.end());
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_radius; ++r) {
        for (int k = std::max(0, ck - r); k <= std::min(bins.dims[2] - 1, ck + r); ++k) {
            for (int j = std::max(0, cj - r); j <= std::min(bins.dims[1] - 1, cj + r); ++j) {
                for (int i = std::max(0, ci - r); i <= std::min(bins.dims[0] - 1, ci + r); ++i) {
                    const int cheb = std::max({std::abs(i - ci), std::abs(j - cj),
                                               std::abs(k - ck)});
                    if (cheb != r) {
                        continue;
                    }
                    for (int t : bins.tris[bins.index(i, j, k)]) {
                        const auto& f = mesh.faces[t];
                        const double d = point_triangle_distance(
                            p, mesh.vertices[f[0]], mesh.vertices[f[1]],
                            mesh.vertices[f[2]]);
                        best = std::min(best, d);
                    }
                }
            }
        }
        if (best <= r * bins.bin) {
            break;
        }
    }
    return best;
}

SdfGrid assemble(const TriMesh& mesh, const GridSpec& spec, bool parallel) {
    std::vector<uint8_t> votes;
    fill_signs(mesh, spec, votes);

    SdfGrid grid;
    grid.origin = spec.origin;
    grid.cell_size = spec.cell;
    grid.dims = spec.dims;
    grid.values.resize(votes.size());

    const int64_t total = static_cast<int64_t>(votes.size());
    if (parallel) {
        const TriangleBins bins = bin_triangles(mesh, spec);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 256)
#endif
        for (int64_t n = 0; n < total; ++n) {
            const int i = static_cast<int>(n % spec.dims[0]);
            const int j = static_cast<int>((n / spec.dims[0]) % spec.dims[1]);
            const int k = static_cast<int>(n / (static_cast<int64_t>(spec.dims[0]) * spec.dims[1]));
            const Vec3 p = grid.node_position(i, j, k);
            const double d = nearest_distance(mesh, bins, p);
            grid.values[n] = votes[n] >= 2 ? -d : d;
        }
    } else {
        for (int64_t n = 0; n < total; ++n) {
            const int i = static_cast<int>(n % spec.dims[0]);
            const int j = static_cast<int>((n / spec.dims[0]) % spec.dims[1]);
            const int k = static_cast<int>(n / (static_cast<int64_t>(spec.dims[0]) * spec.dims[1]));
            const Vec3 p = grid.node_position(i, j, k);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& f : mesh.faces) {
                best = std::min(best, point_triangle_distance(p, mesh.vertices[f[0]],
                                                              mesh.vertices[f[1]],
                                                              mesh.vertices[f[2]]));
            }
            grid.values[n] = votes[n] >= 2 ? -best : best;
        }
    }
    return grid;
}

}  // namespace

double SdfGrid::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

// Ericson, Real-Time Collision Detection, closest point on triangle.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) {
        return (p - a).norm();
    }
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) {
        return (p - b).norm();
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return (p - (a + v * ab)).norm();
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) {
        return (p - c).norm();
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return (p - (a + w * ac)).norm();
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return (p - (a + ab * v + ac * w)).norm();
}

SdfGrid build_sdf(const TriMesh& mesh, int resolution, double padding) {
    return assemble(mesh, make_grid_spec(mesh, resolution, padding), true);
}

namespace reference {
SdfGrid build_sdf(const TriMesh& mesh, int resolution, double padding) {
    return assemble(mesh, make_grid_spec(mesh, resolution, padding), false);
}
}  // namespace reference

SdfSample sample_sdf(const SdfGrid& grid, const Vec3& point) {
    const Vec3 hi = grid.max_corner();
    Vec3 q = point.cwiseMax(grid.origin).cwiseMin(hi);
    const Vec3 outside = point - q;
    const double outside_len = outside.norm();

    const Vec3 local = (q - grid.origin) / grid.cell_size;
    int idx[3];
    double frac[3];
    bool clamped[3];
    for (int a = 0; a < 3; ++a) {
        int i = static_cast<int>(std::floor(local[a]));
        i = std::clamp(i, 0, grid.dims[a] - 2);
        idx[a] = i;
        frac[a] = std::clamp(local[a] - i, 0.0, 1.0);
        clamped[a] = point[a] < grid.origin[a] || point[a] > hi[a];
    }

    double c[2][2][2];
    for (int dk = 0; dk < 2; ++dk) {
        for (int dj = 0; dj < 2; ++dj) {
            for (int di = 0; di < 2; ++di) {
                c[di][dj][dk] = grid.at(idx[0] + di, idx[1] + dj, idx[2] + dk);
            }
        }
    }
    const double u = frac[0], v = frac[1], w = frac[2];

    const auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    const double c00 = lerp(c[0][0][0], c[1][0][0], u);
    const double c10 = lerp(c[0][1][0], c[1][1][0], u);
    const double c01 = lerp(c[0][0][1], c[1][0][1], u);
    const double c11 = lerp(c[0][1][1], c[1][1][1], u);
    const double c0 = lerp(c00, c10, v);
    const double c1 = lerp(c01, c11, v);

    SdfSample out;
    out.value = lerp(c0, c1, w);

    // analytic derivative of the trilinear form
    const double du = (lerp(lerp(c[1][0][0] - c[0][0][0], c[1][1][0] - c[0][1][0], v),
                            lerp(c[1][0][1] - c[0][0][1], c[1][1][1] - c[0][1][1], v), w));
    const double dv = lerp(c10 - c00, c11 - c01, w);
    const double dw = c1 - c0;
    out.gradient = Vec3(du, dv, dw) / grid.cell_size;

    if (outside_len > 0.0) {
        out.value += outside_len;
        const Vec3 dir = outside / outside_len;
        for (int a = 0; a < 3; ++a) {
            if (clamped[a]) {
                out.gradient[a] = dir[a];
            }
        }
    }
    return out;
}

}  // namespace previz
