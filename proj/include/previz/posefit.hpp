#pragma once

#include <filesystem>
#include <vector>

#include "previz/camera.hpp"
#include "previz/depthmap.hpp"
#include "previz/mask.hpp"
#include "previz/mesh.hpp"
#include "previz/placement.hpp"

namespace previz {

/// Object-space to world-space similarity transform: x -> R(q) * (s * x) + t.
struct Pose6D {
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& x) const { return rotation * (scale * x) + translation; }
    void validate() const;
};

Pose6D load_pose(const std::filesystem::path& path);
void save_pose(const Pose6D& pose, const std::filesystem::path& path);

TriMesh apply_pose(const TriMesh& mesh, const Pose6D& pose);

/// Nearest-hit depth of the posed mesh; 0 where no hit.
DepthMap render_depth(const TriMesh& mesh, const Camera& camera, const Pose6D& pose);

struct PoseResidual {
    int step = 0;
    double depth_mse = 0.0;
    double silhouette = 0.0;  // 1 - softIoU
    double total = 0.0;
};

struct PoseFitResult {
    Pose6D pose;
    PoseResidual best;
    std::vector<PoseResidual> trace;
};

/// Refines rotation, translation, and scale against the target depth map
/// (mean squared residual over pixels set in target_mask and valid in both
/// depth maps) plus a silhouette softIoU term. Rotation moves along a
/// 3-vector tangent relative to the initial quaternion and is re-normalized
/// every evaluation. Gradients are central differences over the 7
/// parameters; best-so-far pose is returned. Requires >= 100 set pixels in
/// target_mask.
PoseFitResult refine_object_pose(const TriMesh& mesh, const DepthMap& target_depth,
                                 const BinaryMask& target_mask, const Camera& camera,
                                 const Pose6D& init, const OptimConfig& config);

/// Self-contained initializer: scores a yaw sweep about the world axis
/// `yaw_axis` (default +Y) through the object's posed centroid by hard
/// silhouette IoU against the target mask.
Pose6D yaw_sweep_init(const TriMesh& mesh, const BinaryMask& target_mask,
                      const Camera& camera, const Pose6D& base, int angle_count = 16,
                      const Vec3& yaw_axis = Vec3(0.0, 1.0, 0.0));

void save_pose_trace_csv(const std::vector<PoseResidual>& trace,
                         const std::filesystem::path& path);

}  // namespace previz
