#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "previz/camera.hpp"
#include "previz/losses.hpp"
#include "previz/mesh.hpp"
#include "previz/raster.hpp"
#include "previz/sdf.hpp"

namespace previz {

/// The optimized unknowns: uniform scale and translation of the human mesh.
struct PlacementParams {
    double scale = 1.0;
    Vec3 translation = Vec3::Zero();

    void validate() const;
};

PlacementParams load_placement(const std::filesystem::path& path);
void save_placement(const PlacementParams& params, const std::filesystem::path& path);

enum class GradientMode {
    kAnalyticWhereAvailable,  // analytic pen/hoi, finite-difference mask term
    kFiniteDifference,        // central differences through the whole objective
};

struct OptimConfig {
    double learning_rate = 5e-3;
    int steps = 4000;
    LossWeights weights;
    double weight_decay = 0.0;
    GradientMode gradient_mode = GradientMode::kAnalyticWhereAvailable;
    double fd_epsilon = 1e-2;
    uint64_t seed = 0;
    SoftRasterSettings raster;
    /// > 0 switches the penetration expectation from object vertices to this
    /// many area-weighted surface samples.
    int penetration_samples = 0;

    void validate() const;
};

/// v -> scale * v + translation; faces and labels unchanged.
TriMesh apply_placement(const TriMesh& mesh, const PlacementParams& params);

struct PlacementTargets {
    BinaryMask m_h_init;   // projection of the initial human estimate
    BinaryMask m_hoi_star;  // inpainted human mask with object occlusion
};

struct ObjectiveBreakdown {
    double penetration = 0.0;
    double contact = 0.0;
    double mask = 0.0;
    double total = 0.0;
};

struct OptimTraceRow {
    int step = 0;
    ObjectiveBreakdown value;
};

struct PlacementResult {
    PlacementParams params;
    ObjectiveBreakdown best;
    std::vector<OptimTraceRow> trace;
    bool contact_filter_fell_back = false;  // mutual filter was empty at least once
};

/// Shared state for repeated objective evaluations: the human SDF is built
/// once in the canonical frame and object points are pulled back through the
/// placement, Phi_placed(x) = s * Phi((x - t)/s).
class PlacementObjective {
public:
    PlacementObjective(const TriMesh& human, const TriMesh& object, const ContactSpec& spec,
                       const Camera& camera, const PlacementTargets& targets,
                       const LossWeights& weights, const SoftRasterSettings& raster,
                       int sdf_resolution = 96, int penetration_samples = 0,
                       uint64_t seed = 0);

    ObjectiveBreakdown evaluate(const PlacementParams& params) const;
    /// Gradient over (log scale, tx, ty, tz). Analytic penetration/contact
    /// terms, finite-difference mask term.
    ObjectiveBreakdown evaluate_with_grad(const PlacementParams& params,
                                          std::array<double, 4>& grad,
                                          double fd_epsilon) const;
    double mask_term(const PlacementParams& params) const;
    bool filter_fell_back() const { return fell_back_; }

private:
    const TriMesh& human_;
    const TriMesh& object_;
    ContactSpec spec_;
    const Camera& camera_;
    const PlacementTargets& targets_;
    LossWeights weights_;
    SoftRasterSettings raster_;
    SdfGrid human_sdf_;
    std::vector<Vec3> penetration_points_;
    mutable bool fell_back_ = false;
};

ObjectiveBreakdown evaluate_objective(const TriMesh& human, const TriMesh& object,
                                      const ContactSpec& spec, const Camera& camera,
                                      const PlacementTargets& targets,
                                      const PlacementParams& params,
                                      const LossWeights& weights,
                                      const SoftRasterSettings& raster = {});

/// Decoupled-weight-decay adaptive descent on (log scale, translation).
/// Deterministic for fixed inputs and seed; returns the best-so-far
/// parameters and the full per-step loss breakdown.
/// Throws std::runtime_error on a non-finite initial loss or divergence
/// beyond 1e6 times the initial loss.
PlacementResult optimize_placement(const TriMesh& human, const TriMesh& object,
                                   const ContactSpec& spec, const Camera& camera,
                                   const PlacementTargets& targets,
                                   const PlacementParams& init, const OptimConfig& config);

void save_trace_csv(const std::vector<OptimTraceRow>& trace,
                    const std::filesystem::path& path);

}  // namespace previz
