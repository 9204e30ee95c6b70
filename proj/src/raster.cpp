#include "previz/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace previz {

namespace {

constexpr double kNearPlane = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScreenTri {
    Vec2 p[3];
    double inv_z[3];
    int x0, x1, y0, y1;  // inclusive pixel bbox
};

void append_screen_tri(const Camera& cam, const Vec3 cam_pts[3],
                       std::vector<ScreenTri>& out) {
    ScreenTri tri;
    double min_x = kInf, max_x = -kInf, min_y = kInf, max_y = -kInf;
    for (int i = 0; i < 3; ++i) {
        tri.p[i] = cam.project(cam_pts[i]);
        tri.inv_z[i] = 1.0 / cam_pts[i].z();
        min_x = std::min(min_x, tri.p[i].x());
        max_x = std::max(max_x, tri.p[i].x());
        min_y = std::min(min_y, tri.p[i].y());
        max_y = std::max(max_y, tri.p[i].y());
    }
    tri.x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    tri.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    tri.y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    tri.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));
    if (tri.x0 > tri.x1 || tri.y0 > tri.y1) {
        return;
    }
    out.push_back(tri);
}

// Clip against z >= kNearPlane (Sutherland-Hodgman), then project. A clipped
// triangle yields at most one quad, fan-triangulated.
std::vector<ScreenTri> prepare_triangles(const TriMesh& mesh, const Camera& cam) {
    std::vector<ScreenTri> tris;
    tris.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
        Vec3 v[3] = {cam.to_camera(mesh.vertices[f[0]]),
                     cam.to_camera(mesh.vertices[f[1]]),
                     cam.to_camera(mesh.vertices[f[2]])};
        Vec3 poly[4];
        int n = 0;
        for (int i = 0; i < 3; ++i) {
            const Vec3& a = v[i];
            const Vec3& b = v[(i + 1) % 3];
            const bool a_in = a.z() >= kNearPlane;
            const bool b_in = b.z() >= kNearPlane;
            if (a_in) {
                poly[n++] = a;
            }
            if (a_in != b_in) {
                const double t = (kNearPlane - a.z()) / (b.z() - a.z());
                poly[n++] = a + t * (b - a);
            }
        }
        if (n < 3) {
            continue;
        }
        for (int k = 2; k < n; ++k) {
            const Vec3 fan[3] = {poly[0], poly[k - 1], poly[k]};
            append_screen_tri(cam, fan, tris);
        }
    }
    return tris;
}

inline double edge_fn(const Vec2& a, const Vec2& b, double px, double py) {
    return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Rasterizes rows [row_begin, row_end) of every triangle into the depth
// buffer (min inverse-depth wins). Coverage is inclusive of edges; no
// back-face culling.
void raster_rows(const std::vector<ScreenTri>& tris, int width, int row_begin,
                 int row_end, std::vector<double>& depth) {
    for (const auto& tri : tris) {
        const int y0 = std::max(tri.y0, row_begin);
        const int y1 = std::min(tri.y1, row_end - 1);
        if (y0 > y1) {
            continue;
        }
        const double area = edge_fn(tri.p[0], tri.p[1], tri.p[2].x(), tri.p[2].y());
        if (area == 0.0) {
            continue;
        }
        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = tri.x0; x <= tri.x1; ++x) {
                const double px = x + 0.5;
                const double w0 = edge_fn(tri.p[1], tri.p[2], px, py);
                const double w1 = edge_fn(tri.p[2], tri.p[0], px, py);
                const double w2 = edge_fn(tri.p[0], tri.p[1], px, py);
                const bool inside = (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0) ||
                                    (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
                if (!inside) {
                    continue;
                }
                const double inv_z =
                    (w0 * tri.inv_z[0] + w1 * tri.inv_z[1] + w2 * tri.inv_z[2]) / area;
                if (inv_z <= 0.0) {
                    continue;
                }
                const double z = 1.0 / inv_z;
                double& d = depth[static_cast<size_t>(y) * width + x];
                d = std::min(d, z);
            }
        }
    }
}

DepthMap finalize_depth(std::vector<double>&& buffer, int width, int height) {
    DepthMap out(width, height);
    for (size_t i = 0; i < buffer.size(); ++i) {
        out.values[i] = std::isfinite(buffer[i]) ? buffer[i] : 0.0;
    }
    return out;
}

// --- exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher) ---

void dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& z, int n) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s = 0.0;
        while (true) {
            s = ((f[q] + q * static_cast<double>(q)) -
                 (f[v[k]] + v[k] * static_cast<double>(v[k]))) /
                (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) {
            ++k;
        }
        const double dq = q - static_cast<double>(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

// Large finite stand-in for "no site"; keeps the parabola intersections in
// dt_1d finite (true infinities produce inf-inf = NaN there).
constexpr double kFar = 1e15;
constexpr double kFarThreshold = 1e14;

// squared distance to the nearest site (site[i] != 0); >= kFarThreshold when
// no site exists anywhere
std::vector<double> edt_squared(const std::vector<uint8_t>& sites, int width,
                                int height, bool parallel) {
    const size_t total = static_cast<size_t>(width) * height;
    std::vector<double> dist(total);
    for (size_t i = 0; i < total; ++i) {
        dist[i] = sites[i] ? 0.0 : kFar;
    }
    const int n_max = std::max(width, height);

#ifdef _OPENMP
#pragma omp parallel if (parallel)
#endif
    {
        std::vector<double> f(n_max), d(n_max), z(n_max + 1);
        std::vector<int> v(n_max);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int y = 0; y < height; ++y) {
            double* row = dist.data() + static_cast<size_t>(y) * width;
            bool any = false;
            for (int x = 0; x < width; ++x) {
                f[x] = row[x];
                any = any || f[x] == 0.0;
            }
            if (!any) {
                continue;  // stays kFar; the column pass propagates real sites
            }
            dt_1d(f, d, v, z, width);
            for (int x = 0; x < width; ++x) {
                row[x] = d[x];
            }
        }
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int x = 0; x < width; ++x) {
            for (int y = 0; y < height; ++y) {
                f[y] = dist[static_cast<size_t>(y) * width + x];
            }
            dt_1d(f, d, v, z, height);
            for (int y = 0; y < height; ++y) {
                dist[static_cast<size_t>(y) * width + x] = d[y];
            }
        }
    }
    return dist;
}

std::vector<double> signed_distance_impl(const BinaryMask& mask, bool parallel) {
    const size_t total = mask.bits.size();
    std::vector<uint8_t> inverse(total);
    for (size_t i = 0; i < total; ++i) {
        inverse[i] = mask.bits[i] ? 0 : 1;
    }
    const std::vector<double> d_to_set = edt_squared(mask.bits, mask.width, mask.height, parallel);
    const std::vector<double> d_to_unset = edt_squared(inverse, mask.width, mask.height, parallel);

    // Zero level sits on the set/unset interface: +-(d - 0.5) with d measured
    // between pixel centers. Out-of-image pixels count as neither class.
    const double clamp_at = mask.width + mask.height;
    std::vector<double> out(total);
    for (size_t i = 0; i < total; ++i) {
        if (mask.bits[i]) {
            const double d =
                d_to_unset[i] < kFarThreshold ? std::sqrt(d_to_unset[i]) : clamp_at;
            out[i] = std::min(d, clamp_at) - 0.5;
        } else {
            const double d = d_to_set[i] < kFarThreshold ? std::sqrt(d_to_set[i]) : clamp_at;
            out[i] = 0.5 - std::min(d, clamp_at);
        }
    }
    return out;
}

}  // namespace

DepthMap rasterize_depth(const TriMesh& mesh, const Camera& camera) {
    camera.validate();
    if (mesh.empty()) {
        throw std::invalid_argument("rasterize: empty mesh");
    }
    const auto tris = prepare_triangles(mesh, camera);
    std::vector<double> buffer(static_cast<size_t>(camera.width) * camera.height, kInf);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < camera.height; ++y) {
        raster_rows(tris, camera.width, y, y + 1, buffer);
    }
    return finalize_depth(std::move(buffer), camera.width, camera.height);
}

namespace reference {
DepthMap rasterize_depth(const TriMesh& mesh, const Camera& camera) {
    camera.validate();
    if (mesh.empty()) {
        throw std::invalid_argument("rasterize: empty mesh");
    }
    const auto tris = prepare_triangles(mesh, camera);
    std::vector<double> buffer(static_cast<size_t>(camera.width) * camera.height, kInf);
    raster_rows(tris, camera.width, 0, camera.height, buffer);
    return finalize_depth(std::move(buffer), camera.width, camera.height);
}

std::vector<double> signed_distance_field(const BinaryMask& mask) {
    return signed_distance_impl(mask, false);
}
}  // namespace reference

BinaryMask rasterize_silhouette(const TriMesh& mesh, const Camera& camera,
                                const TriMesh* occluder) {
    const DepthMap mesh_depth = rasterize_depth(mesh, camera);
    BinaryMask out(camera.width, camera.height);
    if (occluder == nullptr || occluder->empty()) {
        for (size_t i = 0; i < out.bits.size(); ++i) {
            out.bits[i] = mesh_depth.values[i] > 0.0 ? 1 : 0;
        }
        return out;
    }
    const DepthMap occ_depth = rasterize_depth(*occluder, camera);
    for (size_t i = 0; i < out.bits.size(); ++i) {
        const double zm = mesh_depth.values[i];
        const double zo = occ_depth.values[i];
        out.bits[i] = (zm > 0.0 && (zo == 0.0 || zm < zo)) ? 1 : 0;
    }
    return out;
}

std::vector<double> signed_distance_field(const BinaryMask& mask) {
    return signed_distance_impl(mask, true);
}

SoftMask soft_silhouette(const TriMesh& mesh, const Camera& camera,
                         const SoftRasterSettings& settings, const TriMesh* occluder) {
    if (settings.sharpness <= 0.0) {
        throw std::invalid_argument("soft_silhouette: sharpness must be positive");
    }
    const DepthMap mesh_depth = rasterize_depth(mesh, camera);
    BinaryMask hard(camera.width, camera.height);
    for (size_t i = 0; i < hard.bits.size(); ++i) {
        hard.bits[i] = mesh_depth.values[i] > 0.0 ? 1 : 0;
    }
    const std::vector<double> sdf = signed_distance_field(hard);

    SoftMask out(camera.width, camera.height);
    const bool occluded = occluder != nullptr && !occluder->empty();
    DepthMap occ_depth;
    if (occluded) {
        occ_depth = rasterize_depth(*occluder, camera);
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            const size_t i = static_cast<size_t>(y) * camera.width + x;
            double v = sigmoid(settings.sharpness * sdf[i]);
            if (occluded && occ_depth.values[i] > 0.0) {
                // hard rule where the mesh is absent, soft depth test elsewhere
                if (mesh_depth.values[i] == 0.0) {
                    v = 0.0;
                } else {
                    v *= sigmoid(settings.depth_sharpness *
                                 (occ_depth.values[i] - mesh_depth.values[i]));
                }
            }
            out.values[i] = v;
        }
    }
    return out;
}

}  // namespace previz
