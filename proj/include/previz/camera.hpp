#pragma once

#include <filesystem>

#include "previz/common.hpp"

namespace previz {

/// Pinhole camera. Looks down +Z in camera space; the image origin is the
/// top-left corner, x right, y down. world_to_camera maps world points into
/// camera space as R * p + t.
struct Camera {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Mat3 rotation = Mat3::Identity();  // world-to-camera
    Vec3 translation = Vec3::Zero();

    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
    Vec2 project(const Vec3& cam) const {
        return Vec2(fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy);
    }

    /// Throws std::invalid_argument on non-positive focals, a principal point
    /// outside the image, or a rotation that is not orthonormal within 1e-6.
    void validate() const;
};

Camera load_camera(const std::filesystem::path& path);
void save_camera(const Camera& camera, const std::filesystem::path& path);

/// Camera at `eye` looking toward `target`, `up` approximately up.
Camera make_look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up,
                           double focal_px, int width, int height);

}  // namespace previz
