#include "previz/placement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "previz/adamw.hpp"

namespace previz {

void PlacementParams::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale) || !translation.allFinite()) {
        throw std::invalid_argument("placement params: scale must be positive and finite");
    }
}

PlacementParams load_placement(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open placement file: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    PlacementParams p;
    p.scale = doc.at("scale").get<double>();
    const auto& t = doc.at("translation");
    p.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    p.validate();
    return p;
}

void save_placement(const PlacementParams& params, const std::filesystem::path& path) {
    const nlohmann::json doc = {
        {"version", 1},
        {"scale", params.scale},
        {"translation", {params.translation.x(), params.translation.y(), params.translation.z()}},
    };
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write placement file: " + path.string());
    }
    out << doc.dump(2) << '\n';
}

void OptimConfig::validate() const {
    if (learning_rate <= 0.0) {
        throw std::invalid_argument("optim config: learning_rate must be positive");
    }
    if (steps < 1) {
        throw std::invalid_argument("optim config: steps must be >= 1");
    }
    if (fd_epsilon <= 0.0) {
        throw std::invalid_argument("optim config: fd_epsilon must be positive");
    }
    weights.validate();
}

TriMesh apply_placement(const TriMesh& mesh, const PlacementParams& params) {
    params.validate();
    TriMesh out = mesh;
    for (auto& v : out.vertices) {
        v = params.scale * v + params.translation;
    }
    return out;
}

namespace {

struct FilteredContacts {
    std::vector<Vec3> human_canonical;  // canonical coordinates of kept P_h
    std::vector<Vec3> human_placed;
    std::vector<Vec3> object;
    bool fell_back = false;
};

// Mutual-kNN filter on the placed human points, keeping the canonical
// coordinates of survivors for the scale gradient. Falls back to the
// unfiltered sets when no mutual pair exists.
FilteredContacts filter_contacts(const ContactSpec& spec, const PlacementParams& params) {
    ContactSpec placed = spec;
    for (auto& p : placed.human_points) {
        p = params.scale * p + params.translation;
    }
    const auto [h_star, o_star] = mutual_knn_filter(placed);
    FilteredContacts out;
    if (h_star.empty() || o_star.empty()) {
        out.fell_back = true;
        out.human_canonical = spec.human_points;
        out.human_placed = placed.human_points;
        out.object = placed.object_points;
        return out;
    }
    // recover canonical coordinates by inverting the placement
    out.human_placed = h_star;
    out.human_canonical.reserve(h_star.size());
    for (const auto& p : h_star) {
        out.human_canonical.push_back((p - params.translation) / params.scale);
    }
    out.object = o_star;
    return out;
}

}  // namespace

PlacementObjective::PlacementObjective(const TriMesh& human, const TriMesh& object,
                                       const ContactSpec& spec, const Camera& camera,
                                       const PlacementTargets& targets,
                                       const LossWeights& weights,
                                       const SoftRasterSettings& raster, int sdf_resolution,
                                       int penetration_samples, uint64_t seed)
    : human_(human),
      object_(object),
      spec_(spec),
      camera_(camera),
      targets_(targets),
      weights_(weights),
      raster_(raster) {
    spec_.validate();
    weights_.validate();
    camera_.validate();
    if (targets_.m_h_init.width != camera_.width || targets_.m_h_init.height != camera_.height ||
        targets_.m_hoi_star.width != camera_.width ||
        targets_.m_hoi_star.height != camera_.height) {
        throw std::invalid_argument("placement targets must match the camera resolution");
    }
    human_sdf_ = build_sdf(human_, sdf_resolution, 0.15);
    penetration_points_ = penetration_samples > 0
                              ? sample_surface_points(object_, penetration_samples, seed)
                              : object_.vertices;
}

double PlacementObjective::mask_term(const PlacementParams& params) const {
    const TriMesh placed = apply_placement(human_, params);
    const SoftMask m_h = soft_silhouette(placed, camera_, raster_);
    const SoftMask m_hoi = soft_silhouette(placed, camera_, raster_, &object_);
    return mask_loss(m_h, m_hoi, targets_.m_h_init, targets_.m_hoi_star);
}

ObjectiveBreakdown PlacementObjective::evaluate(const PlacementParams& params) const {
    params.validate();
    ObjectiveBreakdown out;

    // penetration of object points against the placed human SDF
    double pen_sum = 0.0;
    for (const auto& x : penetration_points_) {
        const Vec3 u = (x - params.translation) / params.scale;
        pen_sum += std::min(params.scale * sample_sdf(human_sdf_, u).value, 0.0);
    }
    out.penetration = -pen_sum / static_cast<double>(penetration_points_.size());

    const FilteredContacts contacts = filter_contacts(spec_, params);
    if (contacts.fell_back) {
        fell_back_ = true;
    }
    out.contact = contact_loss(contacts.human_placed, contacts.object);
    out.mask = mask_term(params);
    out.total = total_loss(out.penetration, out.contact, out.mask, weights_);
    return out;
}

ObjectiveBreakdown PlacementObjective::evaluate_with_grad(const PlacementParams& params,
                                                          std::array<double, 4>& grad,
                                                          double fd_epsilon) const {
    params.validate();
    const double s = params.scale;
    ObjectiveBreakdown out;
    grad = {0.0, 0.0, 0.0, 0.0};

    // penetration: phi(x) = s * Phi(u), u = (x - t)/s
    //   d phi / dt     = -grad Phi(u)
    //   d phi / dlog s = s * (Phi(u) - grad Phi(u) . u)
    double pen_sum = 0.0;
    Vec3 pen_dt = Vec3::Zero();
    double pen_dlogs = 0.0;
    for (const auto& x : penetration_points_) {
        const Vec3 u = (x - params.translation) / s;
        const SdfSample sample = sample_sdf(human_sdf_, u);
        const double phi = s * sample.value;
        if (phi < 0.0) {
            pen_sum += phi;
            pen_dt += -sample.gradient;
            pen_dlogs += s * (sample.value - sample.gradient.dot(u));
        }
    }
    const double inv_n = 1.0 / static_cast<double>(penetration_points_.size());
    out.penetration = -pen_sum * inv_n;
    const Vec3 dpen_dt = -pen_dt * inv_n;
    const double dpen_dlogs = -pen_dlogs * inv_n;

    const FilteredContacts contacts = filter_contacts(spec_, params);
    if (contacts.fell_back) {
        fell_back_ = true;
    }
    const ContactLossGrad cg =
        contact_loss_with_grad(contacts.human_canonical, contacts.human_placed, contacts.object);
    out.contact = cg.loss;

    // mask term: central differences over the four parameters
    out.mask = mask_term(params);
    std::array<double, 4> dmask{};
    for (int i = 0; i < 4; ++i) {
        PlacementParams plus = params, minus = params;
        if (i == 0) {
            plus.scale = std::exp(std::log(s) + fd_epsilon);
            minus.scale = std::exp(std::log(s) - fd_epsilon);
        } else {
            plus.translation[i - 1] += fd_epsilon;
            minus.translation[i - 1] -= fd_epsilon;
        }
        dmask[i] = (mask_term(plus) - mask_term(minus)) / (2.0 * fd_epsilon);
    }

    grad[0] = weights_.alpha * dpen_dlogs + weights_.beta * (s * cg.d_scale) +
              weights_.gamma * dmask[0];
    for (int a = 0; a < 3; ++a) {
        grad[1 + a] = weights_.alpha * dpen_dt[a] + weights_.beta * cg.d_translation[a] +
                      weights_.gamma * dmask[1 + a];
    }
    out.total = total_loss(out.penetration, out.contact, out.mask, weights_);
    return out;
}

ObjectiveBreakdown evaluate_objective(const TriMesh& human, const TriMesh& object,
                                      const ContactSpec& spec, const Camera& camera,
                                      const PlacementTargets& targets,
                                      const PlacementParams& params,
                                      const LossWeights& weights,
                                      const SoftRasterSettings& raster) {
    const PlacementObjective objective(human, object, spec, camera, targets, weights, raster);
    return objective.evaluate(params);
}

PlacementResult optimize_placement(const TriMesh& human, const TriMesh& object,
                                   const ContactSpec& spec, const Camera& camera,
                                   const PlacementTargets& targets,
                                   const PlacementParams& init, const OptimConfig& config) {
    config.validate();
    init.validate();
    const PlacementObjective objective(human, object, spec, camera, targets, config.weights,
                                       config.raster, 96, config.penetration_samples,
                                       config.seed);

    std::vector<double> p = {std::log(init.scale), init.translation.x(),
                             init.translation.y(), init.translation.z()};
    AdamW::Options adam_opts;
    adam_opts.learning_rate = config.learning_rate;
    adam_opts.weight_decay = config.weight_decay;
    AdamW adam(4, adam_opts);

    const auto to_params = [](const std::vector<double>& v) {
        PlacementParams out;
        out.scale = std::exp(v[0]);
        out.translation = Vec3(v[1], v[2], v[3]);
        return out;
    };

    PlacementResult result;
    result.trace.reserve(config.steps + 1);
    double initial_total = 0.0;
    double best_total = std::numeric_limits<double>::infinity();

    for (int step = 0; step <= config.steps; ++step) {
        const PlacementParams current = to_params(p);
        const bool need_grad = step < config.steps;
        std::array<double, 4> grad{};
        ObjectiveBreakdown value;
        if (!need_grad) {
            value = objective.evaluate(current);
        } else if (config.gradient_mode == GradientMode::kAnalyticWhereAvailable) {
            value = objective.evaluate_with_grad(current, grad, config.fd_epsilon);
        } else {
            value = objective.evaluate(current);
            for (int i = 0; i < 4; ++i) {
                std::vector<double> plus = p, minus = p;
                plus[i] += config.fd_epsilon;
                minus[i] -= config.fd_epsilon;
                grad[i] = (objective.evaluate(to_params(plus)).total -
                           objective.evaluate(to_params(minus)).total) /
                          (2.0 * config.fd_epsilon);
            }
        }
        if (step == 0) {
            if (!std::isfinite(value.total)) {
                throw std::runtime_error("optimize_placement: non-finite loss at init");
            }
            initial_total = value.total;
        }
        if (!std::isfinite(value.total) ||
            value.total > 1e6 * std::max(initial_total, 1e-12)) {
            throw std::runtime_error(
                "optimize_placement: diverged at step " + std::to_string(step) + " (loss " +
                std::to_string(value.total) + ", initial " + std::to_string(initial_total) + ")");
        }
        result.trace.push_back({step, value});
        if (value.total < best_total) {
            best_total = value.total;
            result.params = current;
            result.best = value;
        }
        if (step < config.steps) {
            std::vector<double> g(grad.begin(), grad.end());
            adam.step(p, g);
        }
    }
    result.contact_filter_fell_back = objective.filter_fell_back();
    return result;
}

void save_trace_csv(const std::vector<OptimTraceRow>& trace,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write trace: " + path.string());
    }
    out << "step,penetration,contact,mask,total\n";
    char buf[160];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", row.step,
                      row.value.penetration, row.value.contact, row.value.mask,
                      row.value.total);
        out << buf;
    }
}

}  // namespace previz
