#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "previz/mask.hpp"

namespace previz {

/// Denoising-loop latent. Stored as doubles in memory; file exchange uses
/// little-endian float32 with a JSON sidecar.
struct Latent {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;  // channel-major, then row-major

    Latent() = default;
    Latent(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<size_t>(c) * h * w, 0.0) {}

    size_t size() const { return data.size(); }
    bool same_shape(const Latent& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }
    void validate() const;
};

Latent load_latent(const std::filesystem::path& path);
void save_latent(const Latent& latent, const std::filesystem::path& path);

/// alpha_bar[i] is the cumulative schedule value at timestep t = i + 1;
/// strictly decreasing in t, each in (0, 1].
struct NoiseSchedule {
    std::vector<double> alpha_bar;

    int length() const { return static_cast<int>(alpha_bar.size()); }
    /// alpha_bar at timestep t (1-based); t = 0 returns 1 (clean signal).
    double at_timestep(int t) const;
    void validate() const;
};

NoiseSchedule load_schedule(const std::filesystem::path& path);
void save_schedule(const NoiseSchedule& schedule, const std::filesystem::path& path);
/// Linear-beta DDPM-style cumulative schedule, largest alpha_bar first.
NoiseSchedule make_linear_schedule(int steps, double beta_start = 1e-4,
                                   double beta_end = 2e-2);

/// (z_t - sqrt(1 - a) * eps) / sqrt(a), elementwise.
Latent tweedie_predict(const Latent& z_t, const Latent& eps, double alpha_bar_t);

/// (1 - m) * z0_star + m * z_pred with the latent-resolution mask broadcast
/// across channels. Cells with m == 0 copy z0_star bit-exactly.
Latent blend_known(const Latent& z_pred, const Latent& z0_star, const SoftMask& mask_down);

/// sqrt(a) * z_hat + sqrt(1 - a) * eps.
Latent renoise(const Latent& z_hat, double alpha_bar, const Latent& eps);

/// Area-average pooling to the latent resolution; falls back to bilinear
/// resampling when the image size is not an integer multiple.
SoftMask downsample_mask(const SoftMask& mask, int latent_height, int latent_width);

/// Grayscale morphology on soft masks (Chebyshev structuring element).
SoftMask erode(const SoftMask& mask, int radius);
SoftMask dilate(const SoftMask& mask, int radius);
SoftMask mask_union(const SoftMask& a, const SoftMask& b);

/// Plug-in surfaces. The denoiser sees the loop state exactly as in the
/// predicted-noise formulation; decoder and segmenter close the mask loop.
using Denoiser = std::function<Latent(const Latent& z_t, const Latent& z0_star,
                                      const SoftMask& mask, const std::string& condition,
                                      int timestep)>;
using Decoder = std::function<SoftMask(const Latent&)>;        // latent -> grayscale image
using Segmenter = std::function<SoftMask(const SoftMask&)>;    // image -> human mask

struct InpaintLoopConfig {
    /// true reproduces the printed update (renoise with alpha_bar_t); false
    /// uses alpha_bar_{t-1} as in standard ancestral sampling.
    bool literal_paper_renoise = false;
    /// The next mask keeps at least the previous mask shrunk by this radius,
    /// so one bad segmentation cannot freeze pixels to the known image.
    int mask_guard_radius = 3;
    /// Consecutive empty segmenter results tolerated before erroring out.
    int empty_mask_patience = 8;
    uint64_t seed = 0;
};

struct MaskTrace {
    std::vector<SoftMask> image_masks;   // schedule length + 1, m_T first
    std::vector<SoftMask> latent_masks;  // downsampled counterparts
};

struct InpaintResult {
    Latent final_latent;  // the last blended clean prediction
    MaskTrace trace;
};

/// Runs the progressive-mask denoising loop from t = schedule length down to
/// 1: predict the clean latent, re-segment it to update the mask, blend the
/// known region back in, renoise with fresh seeded gaussian noise.
/// Deterministic for fixed seed and deterministic plug-ins.
InpaintResult run_inpaint_loop(const Denoiser& denoiser, const Decoder& decoder,
                               const Segmenter& segmenter, const Latent& z_init,
                               const Latent& z0_star, const SoftMask& m_init,
                               const std::string& condition, const NoiseSchedule& schedule,
                               const InpaintLoopConfig& config);

namespace stubs {
/// Predicts exactly the noise that makes the Tweedie prediction equal
/// z0_star: eps = (z_t - sqrt(a_t) z0_star) / sqrt(1 - a_t), with a_t looked
/// up from the captured schedule at the timestep the loop passes in.
Denoiser oracle_denoiser(NoiseSchedule schedule);
/// Channel-mean of the latent, bilinearly upsampled to image resolution.
Decoder mean_decoder(int image_height, int image_width);
/// Ignores the image, returns the given mask every step.
Segmenter fixed_segmenter(SoftMask mask);
/// Thresholds the decoded image at `level`.
Segmenter threshold_segmenter(double level);
/// Shrinks a box mask toward its center by `step_px` per call.
Segmenter shrinking_segmenter(SoftMask initial, int step_px);
}  // namespace stubs

}  // namespace previz
