#pragma once

#include "previz/camera.hpp"
#include "previz/depthmap.hpp"
#include "previz/mask.hpp"
#include "previz/mesh.hpp"

namespace previz {

/// Nearest-hit depth buffer of the mesh under the camera. Pixels are covered
/// when a triangle contains their center; back-face culling is disabled and
/// triangles are clipped against a small positive near plane. Parallel over
/// image bands; deterministic.
DepthMap rasterize_depth(const TriMesh& mesh, const Camera& camera);

/// Hard silhouette. With an occluder, a pixel stays set only where the mesh's
/// nearest hit is strictly closer than the occluder's nearest hit.
BinaryMask rasterize_silhouette(const TriMesh& mesh, const Camera& camera,
                                const TriMesh* occluder = nullptr);

struct SoftRasterSettings {
    double sharpness = 1.0;        // sigmoid slope per pixel of signed distance
    double depth_sharpness = 100.0;  // sigmoid slope per meter for the soft depth test
};

/// Differentiable silhouette: sigmoid(sharpness * signed distance to the
/// silhouette boundary). The signed distance comes from an exact two-pass
/// Euclidean distance transform of the hard mask, with the zero level placed
/// on the set/unset interface (half-pixel offset on both sides). Occlusion
/// multiplies in a soft depth factor where mesh and occluder overlap and the
/// hard rule where the mesh is absent.
SoftMask soft_silhouette(const TriMesh& mesh, const Camera& camera,
                         const SoftRasterSettings& settings = {},
                         const TriMesh* occluder = nullptr);

/// Signed pixel distance to the mask boundary, positive inside. Exposed for
/// tests and the soft raster.
std::vector<double> signed_distance_field(const BinaryMask& mask);

namespace reference {
DepthMap rasterize_depth(const TriMesh& mesh, const Camera& camera);
std::vector<double> signed_distance_field(const BinaryMask& mask);
}  // namespace reference

}  // namespace previz
