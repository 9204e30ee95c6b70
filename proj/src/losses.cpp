#include "previz/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "previz/body_parts.hpp"

namespace previz {

namespace {

// Neighbor order: (squared distance, index) lexicographic. Returns the index
// set of the k nearest points of `pool` to `query`.
std::vector<int> knn_indices(const Vec3& query, const std::vector<Vec3>& pool, int k) {
    const int n = static_cast<int>(pool.size());
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        dist[i] = {(pool[i] - query).squaredNorm(), i};
    }
    const int kk = std::min(k, n);
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    std::vector<int> out(kk);
    for (int i = 0; i < kk; ++i) {
        out[i] = dist[i].second;
    }
    return out;
}

std::vector<std::vector<int>> all_knn(const std::vector<Vec3>& queries,
                                      const std::vector<Vec3>& pool, int k) {
    std::vector<std::vector<int>> out(queries.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < static_cast<int64_t>(queries.size()); ++i) {
        out[i] = knn_indices(queries[i], pool, k);
    }
    return out;
}

std::vector<double> nearest_sq_distances(const std::vector<Vec3>& from,
                                         const std::vector<Vec3>& to) {
    std::vector<double> out(from.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < static_cast<int64_t>(from.size()); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            best = std::min(best, (from[i] - q).squaredNorm());
        }
        out[i] = best;
    }
    return out;
}

}  // namespace

void ContactSpec::validate() const {
    if (human_points.empty() || object_points.empty()) {
        throw std::invalid_argument("contact spec: point sets must be non-empty");
    }
    if (k < 1) {
        throw std::invalid_argument("contact spec: k must be >= 1");
    }
}

void LossWeights::validate() const {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
        throw std::invalid_argument("loss weights must be nonnegative");
    }
    if (alpha == 0.0 && beta == 0.0 && gamma == 0.0) {
        throw std::invalid_argument("at least one loss weight must be positive");
    }
}

std::vector<ContactAnnotation> load_contact_annotations(
    const std::filesystem::path& path, const std::filesystem::path* region_sidecar) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open contact annotation: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    nlohmann::json regions;
    if (region_sidecar != nullptr) {
        std::ifstream rin(*region_sidecar);
        if (!rin) {
            throw std::runtime_error("cannot open region sidecar: " + region_sidecar->string());
        }
        regions = nlohmann::json::parse(rin).at("regions");
    }
    std::vector<ContactAnnotation> out;
    for (const auto& entry : doc) {
        ContactAnnotation ann;
        const std::string part = entry.at("human_part").get<std::string>();
        const auto id = body_part_index(part);
        if (!id) {
            throw std::runtime_error(path.string() + ": '" + part +
                                     "' is not one of the 15 body parts");
        }
        ann.human_part = *id;
        ann.object_region = entry.at("object_region").get<std::string>();
        const std::string source = entry.at("object_point_source").get<std::string>();
        if (source == "whole-mesh") {
            ann.whole_mesh = true;
        } else if (source == "mesh-region file") {
            if (regions.is_null()) {
                throw std::runtime_error(path.string() +
                                         ": annotation needs a region sidecar for '" +
                                         ann.object_region + "'");
            }
            ann.object_region_indices = regions.at(ann.object_region).get<std::vector<int>>();
        } else {
            throw std::runtime_error(path.string() + ": unknown object_point_source '" +
                                     source + "'");
        }
        out.push_back(std::move(ann));
    }
    return out;
}

ContactSpec make_contact_spec(const TriMesh& human, const TriMesh& object,
                              const std::vector<ContactAnnotation>& annotations,
                              int k) {
    if (annotations.empty()) {
        throw std::invalid_argument("make_contact_spec: no annotations");
    }
    std::vector<uint8_t> parts;
    for (const auto& ann : annotations) {
        parts.push_back(ann.human_part);
    }
    ContactSpec spec;
    spec.k = k;
    for (int idx : vertices_with_parts(human, parts)) {
        spec.human_points.push_back(human.vertices[idx]);
    }
    bool whole = false;
    std::vector<uint8_t> used(object.vertices.size(), 0);
    for (const auto& ann : annotations) {
        if (ann.whole_mesh) {
            whole = true;
            break;
        }
        for (int idx : ann.object_region_indices) {
            if (idx < 0 || idx >= static_cast<int>(object.vertices.size())) {
                throw std::invalid_argument("make_contact_spec: region index out of range");
            }
            used[idx] = 1;
        }
    }
    if (whole) {
        spec.object_points = object.vertices;
    } else {
        for (size_t i = 0; i < used.size(); ++i) {
            if (used[i]) {
                spec.object_points.push_back(object.vertices[i]);
            }
        }
    }
    spec.validate();
    return spec;
}

std::pair<std::vector<Vec3>, std::vector<Vec3>> mutual_knn_filter(const ContactSpec& spec) {
    spec.validate();
    const auto h_nn = all_knn(spec.human_points, spec.object_points, spec.k);
    const auto o_nn = all_knn(spec.object_points, spec.human_points, spec.k);

    std::vector<std::vector<uint8_t>> o_has_h(spec.object_points.size());
    for (size_t j = 0; j < o_nn.size(); ++j) {
        o_has_h[j].assign(spec.human_points.size(), 0);
        for (int i : o_nn[j]) {
            o_has_h[j][i] = 1;
        }
    }
    std::vector<uint8_t> keep_h(spec.human_points.size(), 0);
    std::vector<uint8_t> keep_o(spec.object_points.size(), 0);
    for (size_t i = 0; i < h_nn.size(); ++i) {
        for (int j : h_nn[i]) {
            if (o_has_h[j][i]) {
                keep_h[i] = 1;
                keep_o[j] = 1;
            }
        }
    }
    std::pair<std::vector<Vec3>, std::vector<Vec3>> out;
    for (size_t i = 0; i < keep_h.size(); ++i) {
        if (keep_h[i]) {
            out.first.push_back(spec.human_points[i]);
        }
    }
    for (size_t j = 0; j < keep_o.size(); ++j) {
        if (keep_o[j]) {
            out.second.push_back(spec.object_points[j]);
        }
    }
    return out;
}

namespace reference {
std::pair<std::vector<Vec3>, std::vector<Vec3>> mutual_knn_filter(const ContactSpec& spec) {
    spec.validate();
    const auto& ph = spec.human_points;
    const auto& po = spec.object_points;
    // rank(q, pool, p) = number of pool points strictly nearer to q than p
    // (index tie-break); p is in q's kNN iff rank < k.
    const auto in_knn = [&](const Vec3& q, const std::vector<Vec3>& pool, size_t p_idx) {
        const double d = (pool[p_idx] - q).squaredNorm();
        size_t rank = 0;
        for (size_t i = 0; i < pool.size(); ++i) {
            const double di = (pool[i] - q).squaredNorm();
            if (di < d || (di == d && i < p_idx)) {
                ++rank;
            }
        }
        return rank < static_cast<size_t>(spec.k);
    };
    std::vector<uint8_t> keep_h(ph.size(), 0), keep_o(po.size(), 0);
    for (size_t i = 0; i < ph.size(); ++i) {
        for (size_t j = 0; j < po.size(); ++j) {
            if (in_knn(ph[i], po, j) && in_knn(po[j], ph, i)) {
                keep_h[i] = 1;
                keep_o[j] = 1;
            }
        }
    }
    std::pair<std::vector<Vec3>, std::vector<Vec3>> out;
    for (size_t i = 0; i < ph.size(); ++i) {
        if (keep_h[i]) out.first.push_back(ph[i]);
    }
    for (size_t j = 0; j < po.size(); ++j) {
        if (keep_o[j]) out.second.push_back(po[j]);
    }
    return out;
}
}  // namespace reference

double contact_loss(const std::vector<Vec3>& p_h_star, const std::vector<Vec3>& p_o_star) {
    if (p_h_star.empty() || p_o_star.empty()) {
        throw std::invalid_argument("contact_loss: empty point set");
    }
    const auto d_h = nearest_sq_distances(p_h_star, p_o_star);
    const auto d_o = nearest_sq_distances(p_o_star, p_h_star);
    double loss = 0.0;
    for (double d : d_h) loss += d;
    for (double d : d_o) loss += d;
    return loss;
}

ContactLossGrad contact_loss_with_grad(const std::vector<Vec3>& human_canonical,
                                       const std::vector<Vec3>& p_h_star,
                                       const std::vector<Vec3>& p_o_star) {
    if (p_h_star.empty() || p_o_star.empty()) {
        throw std::invalid_argument("contact_loss_with_grad: empty point set");
    }
    if (human_canonical.size() != p_h_star.size()) {
        throw std::invalid_argument("contact_loss_with_grad: canonical/placed size mismatch");
    }
    ContactLossGrad out;
    for (size_t i = 0; i < p_h_star.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (size_t j = 0; j < p_o_star.size(); ++j) {
            const double d = (p_h_star[i] - p_o_star[j]).squaredNorm();
            if (d < best) {
                best = d;
                arg = static_cast<int>(j);
            }
        }
        const Vec3 diff = p_h_star[i] - p_o_star[arg];
        out.loss += best;
        out.d_translation += 2.0 * diff;
        out.d_scale += 2.0 * diff.dot(human_canonical[i]);
    }
    for (size_t j = 0; j < p_o_star.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (size_t i = 0; i < p_h_star.size(); ++i) {
            const double d = (p_o_star[j] - p_h_star[i]).squaredNorm();
            if (d < best) {
                best = d;
                arg = static_cast<int>(i);
            }
        }
        const Vec3 diff = p_h_star[arg] - p_o_star[j];
        out.loss += best;
        out.d_translation += 2.0 * diff;
        out.d_scale += 2.0 * diff.dot(human_canonical[arg]);
    }
    return out;
}

double penetration_loss(const SdfGrid& sdf, const std::vector<Vec3>& object_points) {
    if (object_points.empty()) {
        throw std::invalid_argument("penetration_loss: empty point set");
    }
    double sum = 0.0;
    for (const auto& p : object_points) {
        sum += std::min(sample_sdf(sdf, p).value, 0.0);
    }
    return -sum / static_cast<double>(object_points.size());
}

double soft_iou(const SoftMask& a, const SoftMask& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("soft_iou: mask dimensions differ");
    }
    double inter = 0.0, uni = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        inter += std::min(a.values[i], b.values[i]);
        uni += std::max(a.values[i], b.values[i]);
    }
    return uni == 0.0 ? 1.0 : inter / uni;
}

double soft_iou(const SoftMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("soft_iou: mask dimensions differ");
    }
    double inter = 0.0, uni = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const double bv = b.bits[i] ? 1.0 : 0.0;
        inter += std::min(a.values[i], bv);
        uni += std::max(a.values[i], bv);
    }
    return uni == 0.0 ? 1.0 : inter / uni;
}

double mask_loss(const SoftMask& m_h, const SoftMask& m_hoi, const BinaryMask& m_h_init,
                 const BinaryMask& m_hoi_star) {
    return (1.0 - soft_iou(m_h, m_h_init)) + (1.0 - soft_iou(m_hoi, m_hoi_star));
}

double total_loss(double pen, double hoi, double mask, const LossWeights& weights) {
    weights.validate();
    if (!std::isfinite(pen) || !std::isfinite(hoi) || !std::isfinite(mask)) {
        throw std::invalid_argument("total_loss: non-finite component");
    }
    return weights.alpha * pen + weights.beta * hoi + weights.gamma * mask;
}

}  // namespace previz
