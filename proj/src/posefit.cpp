#include "previz/posefit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "previz/adamw.hpp"
#include "previz/losses.hpp"
#include "previz/raster.hpp"

namespace previz {

void Pose6D::validate() const {
    if (std::abs(rotation.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("pose: quaternion norm must be 1 within 1e-6");
    }
    if (!(scale > 0.0) || !std::isfinite(scale) || !translation.allFinite()) {
        throw std::invalid_argument("pose: scale must be positive and finite");
    }
}

Pose6D load_pose(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open pose file: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    const auto& q = doc.at("quaternion");  // wxyz
    Pose6D pose;
    pose.rotation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                         q.at(3).get<double>());
    pose.rotation.normalize();
    const auto& t = doc.at("translation");
    pose.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    pose.scale = doc.at("scale").get<double>();
    pose.validate();
    return pose;
}

void save_pose(const Pose6D& pose, const std::filesystem::path& path) {
    const nlohmann::json doc = {
        {"version", 1},
        {"quaternion", {pose.rotation.w(), pose.rotation.x(), pose.rotation.y(), pose.rotation.z()}},
        {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}},
        {"scale", pose.scale},
    };
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write pose file: " + path.string());
    }
    out << doc.dump(2) << '\n';
}

TriMesh apply_pose(const TriMesh& mesh, const Pose6D& pose) {
    pose.validate();
    TriMesh out = mesh;
    for (auto& v : out.vertices) {
        v = pose.apply(v);
    }
    return out;
}

DepthMap render_depth(const TriMesh& mesh, const Camera& camera, const Pose6D& pose) {
    return rasterize_depth(apply_pose(mesh, pose), camera);
}

namespace {

Quat rotvec_to_quat(const Vec3& w) {
    const double angle = w.norm();
    if (angle < 1e-12) {
        return Quat(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z()).normalized();
    }
    return Quat(Eigen::AngleAxisd(angle, w / angle));
}

// Parameter layout: (rotation vector relative to the init quaternion,
// translation, log scale).
Pose6D decode_pose(const Quat& init_rotation, const std::vector<double>& p) {
    Pose6D pose;
    pose.rotation = (init_rotation * rotvec_to_quat(Vec3(p[0], p[1], p[2]))).normalized();
    pose.translation = Vec3(p[3], p[4], p[5]);
    pose.scale = std::exp(p[6]);
    return pose;
}

struct PoseCost {
    const TriMesh& mesh;
    const DepthMap& target_depth;
    const BinaryMask& target_mask;
    const Camera& camera;
    SoftRasterSettings raster;

    PoseResidual operator()(const Pose6D& pose) const {
        const TriMesh posed = apply_pose(mesh, pose);
        const DepthMap rendered = rasterize_depth(posed, camera);

        PoseResidual r;
        double sum = 0.0;
        size_t count = 0;
        for (size_t i = 0; i < rendered.values.size(); ++i) {
            if (!target_mask.bits[i]) {
                continue;
            }
            const double zt = target_depth.values[i];
            const double zr = rendered.values[i];
            if (zt > 0.0 && zr > 0.0) {
                sum += (zr - zt) * (zr - zt);
                ++count;
            }
        }
        r.depth_mse = count > 0 ? sum / static_cast<double>(count) : 0.0;

        BinaryMask hard(rendered.width, rendered.height);
        for (size_t i = 0; i < hard.bits.size(); ++i) {
            hard.bits[i] = rendered.values[i] > 0.0 ? 1 : 0;
        }
        const std::vector<double> sdf = signed_distance_field(hard);
        SoftMask soft(hard.width, hard.height);
        for (size_t i = 0; i < soft.values.size(); ++i) {
            soft.values[i] = sigmoid(raster.sharpness * sdf[i]);
        }
        r.silhouette = 1.0 - soft_iou(soft, target_mask);
        r.total = r.depth_mse + r.silhouette;
        return r;
    }
};

}  // namespace

PoseFitResult refine_object_pose(const TriMesh& mesh, const DepthMap& target_depth,
                                 const BinaryMask& target_mask, const Camera& camera,
                                 const Pose6D& init, const OptimConfig& config) {
    config.validate();
    init.validate();
    camera.validate();
    if (target_mask.width != camera.width || target_mask.height != camera.height ||
        target_depth.width != camera.width || target_depth.height != camera.height) {
        throw std::invalid_argument("refine_object_pose: target resolution mismatch");
    }
    if (target_mask.count_set() < 100) {
        throw std::invalid_argument(
            "refine_object_pose: target mask must have at least 100 set pixels");
    }

    const PoseCost cost{mesh, target_depth, target_mask, camera, config.raster};
    std::vector<double> p = {0.0, 0.0, 0.0, init.translation.x(), init.translation.y(),
                             init.translation.z(), std::log(init.scale)};

    AdamW::Options adam_opts;
    adam_opts.learning_rate = config.learning_rate;
    adam_opts.weight_decay = config.weight_decay;
    AdamW adam(p.size(), adam_opts);

    PoseFitResult result;
    result.trace.reserve(config.steps + 1);
    double initial_total = 0.0;
    double best_total = std::numeric_limits<double>::infinity();

    for (int step = 0; step <= config.steps; ++step) {
        const Pose6D pose = decode_pose(init.rotation, p);
        PoseResidual value = cost(pose);
        value.step = step;
        if (step == 0) {
            if (!std::isfinite(value.total)) {
                throw std::runtime_error("refine_object_pose: non-finite loss at init");
            }
            initial_total = value.total;
        }
        if (!std::isfinite(value.total) ||
            value.total > 1e6 * std::max(initial_total, 1e-12)) {
            throw std::runtime_error("refine_object_pose: diverged at step " +
                                     std::to_string(step));
        }
        result.trace.push_back(value);
        if (value.total < best_total) {
            best_total = value.total;
            result.pose = pose;
            result.best = value;
        }
        if (step == config.steps) {
            break;
        }
        std::vector<double> grad(p.size(), 0.0);
        for (size_t i = 0; i < p.size(); ++i) {
            std::vector<double> plus = p, minus = p;
            plus[i] += config.fd_epsilon;
            minus[i] -= config.fd_epsilon;
            grad[i] = (cost(decode_pose(init.rotation, plus)).total -
                       cost(decode_pose(init.rotation, minus)).total) /
                      (2.0 * config.fd_epsilon);
        }
        adam.step(p, grad);
    }
    return result;
}

Pose6D yaw_sweep_init(const TriMesh& mesh, const BinaryMask& target_mask,
                      const Camera& camera, const Pose6D& base, int angle_count,
                      const Vec3& yaw_axis) {
    if (angle_count < 1) {
        throw std::invalid_argument("yaw_sweep_init: angle_count must be >= 1");
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& v : mesh.vertices) {
        centroid += base.apply(v);
    }
    centroid /= static_cast<double>(mesh.vertices.size());

    const Vec3 axis = yaw_axis.normalized();
    Pose6D best = base;
    double best_iou = -1.0;
    for (int a = 0; a < angle_count; ++a) {
        const double angle = 2.0 * M_PI * a / angle_count;
        const Quat spin(Eigen::AngleAxisd(angle, axis));
        Pose6D candidate;
        candidate.rotation = (spin * base.rotation).normalized();
        candidate.scale = base.scale;
        // rotate about the posed centroid, not the world origin
        candidate.translation = centroid - spin * (centroid - base.translation);
        const BinaryMask sil = rasterize_silhouette(apply_pose(mesh, candidate), camera);
        double inter = 0.0, uni = 0.0;
        for (size_t i = 0; i < sil.bits.size(); ++i) {
            inter += (sil.bits[i] && target_mask.bits[i]) ? 1.0 : 0.0;
            uni += (sil.bits[i] || target_mask.bits[i]) ? 1.0 : 0.0;
        }
        const double iou = uni == 0.0 ? 1.0 : inter / uni;
        if (iou > best_iou) {
            best_iou = iou;
            best = candidate;
        }
    }
    return best;
}

void save_pose_trace_csv(const std::vector<PoseResidual>& trace,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write trace: " + path.string());
    }
    out << "step,depth_mse,silhouette,total\n";
    char buf[160];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", row.step, row.depth_mse,
                      row.silhouette, row.total);
        out << buf;
    }
}

}  // namespace previz
