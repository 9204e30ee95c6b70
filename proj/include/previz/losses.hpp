#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "previz/common.hpp"
#include "previz/mask.hpp"
#include "previz/mesh.hpp"
#include "previz/sdf.hpp"

namespace previz {

/// Candidate contact point sets: P_h on the human surface (selected through
/// part labels), P_o on the object surface. k bounds the mutual
/// nearest-neighbor test.
struct ContactSpec {
    std::vector<Vec3> human_points;
    std::vector<Vec3> object_points;
    int k = 32;

    void validate() const;
};

struct LossWeights {
    double alpha = 1.0;  // penetration
    double beta = 1.0;   // contact
    double gamma = 1.0;  // silhouette

    void validate() const;
};

/// One annotation entry; object_region_indices is empty when the whole mesh
/// acts as the contact region.
struct ContactAnnotation {
    uint8_t human_part = 0;
    std::string object_region;
    bool whole_mesh = false;
    std::vector<int> object_region_indices;
};

/// Contact annotation JSON: a list of {human_part, object_region,
/// object_point_source: "mesh-region file" | "whole-mesh"}. Region vertex
/// indices come from a sidecar JSON {"regions": {name: [indices...]}}.
std::vector<ContactAnnotation> load_contact_annotations(
    const std::filesystem::path& path,
    const std::filesystem::path* region_sidecar = nullptr);

/// Builds P_h from human vertices labeled with any annotated part and P_o
/// from the annotated object regions (or all object vertices).
ContactSpec make_contact_spec(const TriMesh& human, const TriMesh& object,
                              const std::vector<ContactAnnotation>& annotations,
                              int k = 32);

/// Keeps the points participating in at least one mutually-nearest pair:
/// x survives iff some y has y in kNN(x, P_o) and x in kNN(y, P_h).
/// Both outputs empty when no mutual pair exists (not an error).
/// Neighbor ties break by smaller index.
std::pair<std::vector<Vec3>, std::vector<Vec3>> mutual_knn_filter(const ContactSpec& spec);

/// Symmetric sum of squared nearest-neighbor distances between the filtered
/// sets. Throws std::invalid_argument on an empty input set.
double contact_loss(const std::vector<Vec3>& p_h_star, const std::vector<Vec3>& p_o_star);

/// contact_loss plus its gradient with respect to a uniform scale/translation
/// applied to the human-side points: x = s * x0 + t. Nearest assignments are
/// held fixed (exact almost everywhere).
struct ContactLossGrad {
    double loss = 0.0;
    double d_scale = 0.0;  // with respect to s (not log s)
    Vec3 d_translation = Vec3::Zero();
};
ContactLossGrad contact_loss_with_grad(const std::vector<Vec3>& human_canonical,
                                       const std::vector<Vec3>& p_h_star,
                                       const std::vector<Vec3>& p_o_star);

/// -E[min(Phi(v), 0)] over the query points; nonnegative, zero iff no
/// penetration.
double penetration_loss(const SdfGrid& sdf, const std::vector<Vec3>& object_points);

/// (1 - softIoU) per mask pair, summed. softIoU = sum(min) / sum(max); an
/// empty pair (both sums zero) counts as IoU 1.
double mask_loss(const SoftMask& m_h, const SoftMask& m_hoi, const BinaryMask& m_h_init,
                 const BinaryMask& m_hoi_star);

double soft_iou(const SoftMask& a, const SoftMask& b);
double soft_iou(const SoftMask& a, const BinaryMask& b);

/// alpha * pen + beta * hoi + gamma * mask. Throws on non-finite input.
double total_loss(double pen, double hoi, double mask, const LossWeights& weights);

namespace reference {
/// Exhaustive all-pairs mutual-membership filter, single-threaded.
std::pair<std::vector<Vec3>, std::vector<Vec3>> mutual_knn_filter(const ContactSpec& spec);
}  // namespace reference

}  // namespace previz
