#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "previz/common.hpp"

namespace previz {

/// Indexed triangle surface. Vertices are in scene units (meters).
/// part_labels, when present, holds one entry per vertex: an index into
/// kBodyParts, or kNoPartLabel for unlabeled vertices.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::optional<std::vector<uint8_t>> part_labels;

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }
    bool empty() const { return vertices.empty() || faces.empty(); }

    Aabb bounds() const;

    /// Throws std::invalid_argument on out-of-range face indices, degenerate
    /// faces (repeated indices), or a part_labels size/value mismatch.
    void validate() const;
};

TriMesh load_mesh(const std::filesystem::path& path);
TriMesh load_obj(const std::filesystem::path& path);
TriMesh load_ply(const std::filesystem::path& path);
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);
void save_ply_binary(const TriMesh& mesh, const std::filesystem::path& path);

/// Sidecar JSON mapping half-open vertex index ranges to part names:
///   {"version": 1, "parts": [{"name": "buttocks", "ranges": [[lo, hi), ...]}]}
/// Unlisted vertices stay unlabeled.
void load_part_labels(TriMesh& mesh, const std::filesystem::path& path);
void save_part_labels(const TriMesh& mesh, const std::filesystem::path& path);

/// Vertex indices carrying any of the given part labels.
std::vector<int> vertices_with_parts(const TriMesh& mesh,
                                     const std::vector<uint8_t>& parts);

double surface_area(const TriMesh& mesh);

/// Uniform area-weighted surface samples (used by the penetration term when
/// vertex sampling is too sparse). Deterministic for a fixed seed.
std::vector<Vec3> sample_surface_points(const TriMesh& mesh, int count, uint64_t seed);

}  // namespace previz
