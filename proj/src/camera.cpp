#include "previz/camera.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace previz {

void Camera::validate() const {
    if (fx <= 0.0 || fy <= 0.0) {
        throw std::invalid_argument("camera: focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("camera: image size must be positive");
    }
    if (cx < 0.0 || cx > width || cy < 0.0 || cy > height) {
        throw std::invalid_argument("camera: principal point outside image bounds");
    }
    const Mat3 err = rotation * rotation.transpose() - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > 1e-6) {
        throw std::invalid_argument("camera: rotation is not orthonormal within 1e-6");
    }
}

Camera load_camera(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open camera file: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    Camera cam;
    const auto& intr = doc.at("intrinsics");
    cam.fx = intr.at("fx").get<double>();
    cam.fy = intr.at("fy").get<double>();
    cam.cx = intr.at("cx").get<double>();
    cam.cy = intr.at("cy").get<double>();
    const auto& size = doc.at("image_size");
    cam.width = size.at("width").get<int>();
    cam.height = size.at("height").get<int>();
    const auto& ext = doc.at("world_to_camera");
    const auto& rot = ext.at("rotation");
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            cam.rotation(r, c) = rot.at(r).at(c).get<double>();
        }
    }
    const auto& t = ext.at("translation");
    cam.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    cam.validate();
    return cam;
}

void save_camera(const Camera& camera, const std::filesystem::path& path) {
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        rot.push_back({camera.rotation(r, 0), camera.rotation(r, 1), camera.rotation(r, 2)});
    }
    const nlohmann::json doc = {
        {"version", 1},
        {"convention", "camera looks down +Z, image origin top-left, x right, y down"},
        {"intrinsics", {{"fx", camera.fx}, {"fy", camera.fy}, {"cx", camera.cx}, {"cy", camera.cy}}},
        {"image_size", {{"width", camera.width}, {"height", camera.height}}},
        {"world_to_camera",
         {{"rotation", rot},
          {"translation", {camera.translation.x(), camera.translation.y(), camera.translation.z()}}}},
    };
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write camera file: " + path.string());
    }
    out << doc.dump(2) << '\n';
}

Camera make_look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up,
                           double focal_px, int width, int height) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);
    Camera cam;
    cam.rotation.row(0) = right;
    cam.rotation.row(1) = down;
    cam.rotation.row(2) = forward;
    cam.translation = -(cam.rotation * eye);
    cam.fx = cam.fy = focal_px;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    cam.validate();
    return cam;
}

}  // namespace previz
