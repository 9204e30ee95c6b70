#pragma once

#include <filesystem>
#include <vector>

#include "previz/mesh.hpp"
#include "previz/sdf.hpp"

namespace previz {

/// Opaque pose/shape parameter vectors of uniform length, one per sample.
struct PoseParamSet {
    std::vector<std::vector<double>> samples;

    void validate() const;
    size_t dimension() const { return samples.empty() ? 0 : samples.front().size(); }
};

/// Flat little-endian float32 rows with a JSON sidecar
/// {"samples", "dim", "dtype": "f32", "version": 1}.
PoseParamSet load_pose_params(const std::filesystem::path& path);
void save_pose_params(const PoseParamSet& set, const std::filesystem::path& path);

/// Mean over bodies of the fraction of vertices with nonnegative scene SDF.
double non_collision_score(const std::vector<TriMesh>& body_meshes, const SdfGrid& scene_sdf);

/// Fraction of bodies with at least one vertex within `threshold` meters of
/// the scene surface (|Phi| <= threshold).
double contact_score(const std::vector<TriMesh>& body_meshes, const SdfGrid& scene_sdf,
                     double threshold = 0.02);

struct DiversityMetrics {
    double entropy = 0.0;       // nats, over cluster assignment frequencies
    double cluster_size = 0.0;  // mean within-cluster mean pairwise distance
};

/// Seeded k-means (k-means++ init, capped Lloyd iterations); entropy of the
/// assignment histogram and mean within-cluster pairwise Euclidean distance
/// (clusters with fewer than two members contribute 0). Deterministic for a
/// fixed seed.
DiversityMetrics diversity_metrics(const PoseParamSet& poses, int k, uint64_t seed);

}  // namespace previz
