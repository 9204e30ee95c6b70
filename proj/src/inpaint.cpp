#include "previz/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "previz/common.hpp"

namespace previz {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_alpha(double alpha_bar) {
    if (!(alpha_bar > 0.0) || alpha_bar > 1.0) {
        throw std::invalid_argument("alpha_bar must be in (0, 1]");
    }
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

}  // namespace

void Latent::validate() const {
    if (channels <= 0 || height <= 0 || width <= 0 ||
        data.size() != static_cast<size_t>(channels) * height * width) {
        throw std::invalid_argument("latent: dims/data size mismatch");
    }
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("latent: non-finite value");
        }
    }
}

Latent load_latent(const std::filesystem::path& path) {
    std::ifstream meta_in(sidecar_path(path));
    if (!meta_in) {
        fail("missing latent sidecar: " + sidecar_path(path).string());
    }
    const nlohmann::json meta = nlohmann::json::parse(meta_in);
    if (meta.at("dtype").get<std::string>() != "f32") {
        fail(path.string() + ": latent dtype must be f32");
    }
    Latent latent(meta.at("channels").get<int>(), meta.at("height").get<int>(),
                  meta.at("width").get<int>());
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail("cannot open latent: " + path.string());
    }
    std::vector<float> raw(latent.size());
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!in) {
        fail(path.string() + ": truncated latent data");
    }
    for (size_t i = 0; i < raw.size(); ++i) {
        latent.data[i] = raw[i];
    }
    latent.validate();
    return latent;
}

void save_latent(const Latent& latent, const std::filesystem::path& path) {
    latent.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail("cannot write latent: " + path.string());
    }
    std::vector<float> raw(latent.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<float>(latent.data[i]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    std::ofstream meta_out(sidecar_path(path));
    if (!meta_out) {
        fail("cannot write latent sidecar: " + sidecar_path(path).string());
    }
    const nlohmann::json meta = {{"version", 1},
                                 {"channels", latent.channels},
                                 {"height", latent.height},
                                 {"width", latent.width},
                                 {"dtype", "f32"}};
    meta_out << meta.dump(2) << '\n';
}

double NoiseSchedule::at_timestep(int t) const {
    if (t == 0) {
        return 1.0;
    }
    if (t < 1 || t > length()) {
        throw std::out_of_range("schedule timestep out of range");
    }
    return alpha_bar[t - 1];
}

void NoiseSchedule::validate() const {
    if (alpha_bar.empty()) {
        throw std::invalid_argument("schedule: must have at least one step");
    }
    double prev = 1.0 + 1e-15;
    for (double a : alpha_bar) {
        check_alpha(a);
        if (!(a < prev)) {
            throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing");
        }
        prev = a;
    }
}

NoiseSchedule load_schedule(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail("cannot open schedule: " + path.string());
    }
    const nlohmann::json doc = nlohmann::json::parse(in);
    NoiseSchedule schedule;
    schedule.alpha_bar = doc.get<std::vector<double>>();
    schedule.validate();
    return schedule;
}

void save_schedule(const NoiseSchedule& schedule, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        fail("cannot write schedule: " + path.string());
    }
    out << nlohmann::json(schedule.alpha_bar).dump(2) << '\n';
}

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) {
        throw std::invalid_argument("schedule: steps must be >= 1");
    }
    NoiseSchedule schedule;
    schedule.alpha_bar.resize(steps);
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        const double beta =
            steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * i / (steps - 1);
        prod *= 1.0 - beta;
        schedule.alpha_bar[i] = prod;
    }
    schedule.validate();
    return schedule;
}

Latent tweedie_predict(const Latent& z_t, const Latent& eps, double alpha_bar_t) {
    check_alpha(alpha_bar_t);
    if (!z_t.same_shape(eps)) {
        throw std::invalid_argument("tweedie_predict: shape mismatch");
    }
    const double sqrt_a = std::sqrt(alpha_bar_t);
    const double sqrt_1ma = std::sqrt(1.0 - alpha_bar_t);
    Latent out(z_t.channels, z_t.height, z_t.width);
    for (size_t i = 0; i < out.size(); ++i) {
        out.data[i] = (z_t.data[i] - sqrt_1ma * eps.data[i]) / sqrt_a;
    }
    return out;
}

Latent blend_known(const Latent& z_pred, const Latent& z0_star, const SoftMask& mask_down) {
    if (!z_pred.same_shape(z0_star)) {
        throw std::invalid_argument("blend_known: latent shape mismatch");
    }
    if (mask_down.width != z_pred.width || mask_down.height != z_pred.height) {
        throw std::invalid_argument("blend_known: mask must be at latent resolution");
    }
    Latent out(z_pred.channels, z_pred.height, z_pred.width);
    const size_t plane = static_cast<size_t>(z_pred.height) * z_pred.width;
    for (int c = 0; c < z_pred.channels; ++c) {
        const size_t base = c * plane;
        for (size_t i = 0; i < plane; ++i) {
            const double m = mask_down.values[i];
            if (m == 0.0) {
                out.data[base + i] = z0_star.data[base + i];
            } else if (m == 1.0) {
                out.data[base + i] = z_pred.data[base + i];
            } else {
                out.data[base + i] =
                    (1.0 - m) * z0_star.data[base + i] + m * z_pred.data[base + i];
            }
        }
    }
    return out;
}

Latent renoise(const Latent& z_hat, double alpha_bar, const Latent& eps) {
    check_alpha(alpha_bar);
    if (!z_hat.same_shape(eps)) {
        throw std::invalid_argument("renoise: shape mismatch");
    }
    const double sqrt_a = std::sqrt(alpha_bar);
    const double sqrt_1ma = std::sqrt(1.0 - alpha_bar);
    Latent out(z_hat.channels, z_hat.height, z_hat.width);
    for (size_t i = 0; i < out.size(); ++i) {
        out.data[i] = sqrt_a * z_hat.data[i] + sqrt_1ma * eps.data[i];
    }
    return out;
}

SoftMask downsample_mask(const SoftMask& mask, int latent_height, int latent_width) {
    if (latent_height <= 0 || latent_width <= 0) {
        throw std::invalid_argument("downsample_mask: zero-size target");
    }
    SoftMask out(latent_width, latent_height);
    if (mask.width % latent_width == 0 && mask.height % latent_height == 0) {
        const int bx = mask.width / latent_width;
        const int by = mask.height / latent_height;
        for (int y = 0; y < latent_height; ++y) {
            for (int x = 0; x < latent_width; ++x) {
                double sum = 0.0;
                for (int dy = 0; dy < by; ++dy) {
                    for (int dx = 0; dx < bx; ++dx) {
                        sum += mask.at(x * bx + dx, y * by + dy);
                    }
                }
                out.set(x, y, sum / (bx * by));
            }
        }
        return out;
    }
    // bilinear resample at target cell centers
    for (int y = 0; y < latent_height; ++y) {
        for (int x = 0; x < latent_width; ++x) {
            const double sx = (x + 0.5) * mask.width / latent_width - 0.5;
            const double sy = (y + 0.5) * mask.height / latent_height - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, mask.width - 1);
            const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, mask.height - 1);
            const int x1 = std::min(x0 + 1, mask.width - 1);
            const int y1 = std::min(y0 + 1, mask.height - 1);
            const double fx = std::clamp(sx - x0, 0.0, 1.0);
            const double fy = std::clamp(sy - y0, 0.0, 1.0);
            const double v = (1 - fx) * (1 - fy) * mask.at(x0, y0) +
                             fx * (1 - fy) * mask.at(x1, y0) +
                             (1 - fx) * fy * mask.at(x0, y1) + fx * fy * mask.at(x1, y1);
            out.set(x, y, v);
        }
    }
    return out;
}

namespace {

// Separable Chebyshev min/max filter.
SoftMask morph(const SoftMask& mask, int radius, bool take_min) {
    if (radius <= 0) {
        return mask;
    }
    SoftMask tmp(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            double v = mask.at(x, y);
            for (int d = -radius; d <= radius; ++d) {
                const int xx = std::clamp(x + d, 0, mask.width - 1);
                v = take_min ? std::min(v, mask.at(xx, y)) : std::max(v, mask.at(xx, y));
            }
            tmp.set(x, y, v);
        }
    }
    SoftMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            double v = tmp.at(x, y);
            for (int d = -radius; d <= radius; ++d) {
                const int yy = std::clamp(y + d, 0, mask.height - 1);
                v = take_min ? std::min(v, tmp.at(x, yy)) : std::max(v, tmp.at(x, yy));
            }
            out.set(x, y, v);
        }
    }
    return out;
}

}  // namespace

SoftMask erode(const SoftMask& mask, int radius) { return morph(mask, radius, true); }
SoftMask dilate(const SoftMask& mask, int radius) { return morph(mask, radius, false); }

SoftMask mask_union(const SoftMask& a, const SoftMask& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("mask_union: dimension mismatch");
    }
    SoftMask out(a.width, a.height);
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = std::max(a.values[i], b.values[i]);
    }
    return out;
}

InpaintResult run_inpaint_loop(const Denoiser& denoiser, const Decoder& decoder,
                               const Segmenter& segmenter, const Latent& z_init,
                               const Latent& z0_star, const SoftMask& m_init,
                               const std::string& condition, const NoiseSchedule& schedule,
                               const InpaintLoopConfig& config) {
    schedule.validate();
    z_init.validate();
    z0_star.validate();
    if (!z_init.same_shape(z0_star)) {
        throw std::invalid_argument("run_inpaint_loop: latent shape mismatch");
    }

    const int T = schedule.length();
    Rng rng(config.seed);

    SoftMask mask = m_init;  // image-resolution m_t
    InpaintResult result;
    result.trace.image_masks.reserve(T + 1);
    result.trace.latent_masks.reserve(T + 1);
    result.trace.image_masks.push_back(mask);
    result.trace.latent_masks.push_back(downsample_mask(mask, z0_star.height, z0_star.width));

    Latent z = z_init;
    Latent z_blended = z0_star;
    int empty_streak = 0;

    for (int t = T; t >= 1; --t) {
        const double alpha_t = schedule.at_timestep(t);

        const Latent eps_pred = denoiser(z, z0_star, mask, condition, t);
        if (!eps_pred.same_shape(z)) {
            throw std::runtime_error("denoiser returned a latent of the wrong shape");
        }
        const Latent z_clean = tweedie_predict(z, eps_pred, alpha_t);

        SoftMask segmented = segmenter(decoder(z_clean));
        if (segmented.width != mask.width || segmented.height != mask.height) {
            throw std::runtime_error("segmenter returned a mask of the wrong shape");
        }
        const bool empty = *std::max_element(segmented.values.begin(),
                                             segmented.values.end()) == 0.0;
        empty_streak = empty ? empty_streak + 1 : 0;
        if (empty_streak > config.empty_mask_patience) {
            throw std::runtime_error(
                "run_inpaint_loop: segmenter returned an empty mask for " +
                std::to_string(empty_streak) + " consecutive steps");
        }

        // The mask may shrink by at most mask_guard_radius px per step, so a
        // transient segmentation miss cannot freeze pixels to the known image.
        mask = mask_union(segmented, erode(mask, config.mask_guard_radius));
        result.trace.image_masks.push_back(mask);
        const SoftMask mask_down = downsample_mask(mask, z0_star.height, z0_star.width);
        result.trace.latent_masks.push_back(mask_down);

        z_blended = blend_known(z_clean, z0_star, mask_down);

        if (t > 1) {
            Latent eps(z.channels, z.height, z.width);
            for (auto& v : eps.data) {
                v = rng.gaussian();
            }
            const double renoise_alpha = config.literal_paper_renoise
                                             ? alpha_t
                                             : schedule.at_timestep(t - 1);
            z = renoise(z_blended, renoise_alpha, eps);
        }
    }
    result.final_latent = std::move(z_blended);
    return result;
}

namespace stubs {

Denoiser oracle_denoiser(NoiseSchedule schedule) {
    schedule.validate();
    return [schedule = std::move(schedule)](const Latent& z_t, const Latent& z0_star,
                                            const SoftMask&, const std::string&, int timestep) {
        const double a = schedule.at_timestep(timestep);
        Latent eps(z_t.channels, z_t.height, z_t.width);
        if (a == 1.0) {
            return eps;  // Tweedie is the identity at alpha_bar = 1
        }
        const double sqrt_a = std::sqrt(a);
        const double sqrt_1ma = std::sqrt(1.0 - a);
        for (size_t i = 0; i < eps.size(); ++i) {
            eps.data[i] = (z_t.data[i] - sqrt_a * z0_star.data[i]) / sqrt_1ma;
        }
        return eps;
    };
}

Decoder mean_decoder(int image_height, int image_width) {
    return [image_height, image_width](const Latent& latent) {
        SoftMask plane(latent.width, latent.height);
        const size_t stride = static_cast<size_t>(latent.height) * latent.width;
        for (size_t i = 0; i < stride; ++i) {
            double sum = 0.0;
            for (int c = 0; c < latent.channels; ++c) {
                sum += latent.data[c * stride + i];
            }
            plane.values[i] = sum / latent.channels;
        }
        // reuse the bilinear path of downsample_mask for resampling
        return downsample_mask(plane, image_height, image_width);
    };
}

Segmenter fixed_segmenter(SoftMask mask) {
    return [mask = std::move(mask)](const SoftMask&) { return mask; };
}

Segmenter threshold_segmenter(double level) {
    return [level](const SoftMask& image) {
        SoftMask out(image.width, image.height);
        for (size_t i = 0; i < out.values.size(); ++i) {
            out.values[i] = image.values[i] > level ? 1.0 : 0.0;
        }
        return out;
    };
}

Segmenter shrinking_segmenter(SoftMask initial, int step_px) {
    auto state = std::make_shared<SoftMask>(std::move(initial));
    return [state, step_px](const SoftMask&) {
        const SoftMask current = *state;
        *state = erode(*state, step_px);
        return current;
    };
}

}  // namespace stubs

}  // namespace previz
