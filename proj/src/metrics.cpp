#include "previz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace previz {

void PoseParamSet::validate() const {
    if (samples.empty()) {
        throw std::invalid_argument("pose param set: at least one sample required");
    }
    const size_t dim = samples.front().size();
    if (dim == 0) {
        throw std::invalid_argument("pose param set: zero-dimensional samples");
    }
    for (const auto& s : samples) {
        if (s.size() != dim) {
            throw std::invalid_argument("pose param set: inconsistent sample dimensions");
        }
    }
}

PoseParamSet load_pose_params(const std::filesystem::path& path) {
    std::filesystem::path meta_path = path;
    meta_path += ".json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) {
        throw std::runtime_error("missing pose-param sidecar: " + meta_path.string());
    }
    const nlohmann::json meta = nlohmann::json::parse(meta_in);
    if (meta.at("dtype").get<std::string>() != "f32") {
        throw std::runtime_error(path.string() + ": dtype must be f32");
    }
    const size_t count = meta.at("samples").get<size_t>();
    const size_t dim = meta.at("dim").get<size_t>();
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open pose params: " + path.string());
    }
    std::vector<float> raw(count * dim);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!in) {
        throw std::runtime_error(path.string() + ": truncated pose-param data");
    }
    PoseParamSet set;
    set.samples.resize(count);
    for (size_t i = 0; i < count; ++i) {
        set.samples[i].assign(raw.begin() + i * dim, raw.begin() + (i + 1) * dim);
    }
    set.validate();
    return set;
}

void save_pose_params(const PoseParamSet& set, const std::filesystem::path& path) {
    set.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write pose params: " + path.string());
    }
    for (const auto& s : set.samples) {
        for (double v : s) {
            const float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
    }
    std::filesystem::path meta_path = path;
    meta_path += ".json";
    std::ofstream meta_out(meta_path);
    if (!meta_out) {
        throw std::runtime_error("cannot write sidecar: " + meta_path.string());
    }
    const nlohmann::json meta = {{"version", 1},
                                 {"samples", set.samples.size()},
                                 {"dim", set.dimension()},
                                 {"dtype", "f32"}};
    meta_out << meta.dump(2) << '\n';
}

double non_collision_score(const std::vector<TriMesh>& body_meshes, const SdfGrid& scene_sdf) {
    if (body_meshes.empty()) {
        throw std::invalid_argument("non_collision_score: empty body list");
    }
    double sum = 0.0;
    for (const auto& body : body_meshes) {
        if (body.vertices.empty()) {
            throw std::invalid_argument("non_collision_score: body with no vertices");
        }
        size_t outside = 0;
        for (const auto& v : body.vertices) {
            if (sample_sdf(scene_sdf, v).value >= 0.0) {
                ++outside;
            }
        }
        sum += static_cast<double>(outside) / static_cast<double>(body.vertices.size());
    }
    return sum / static_cast<double>(body_meshes.size());
}

double contact_score(const std::vector<TriMesh>& body_meshes, const SdfGrid& scene_sdf,
                     double threshold) {
    if (body_meshes.empty()) {
        throw std::invalid_argument("contact_score: empty body list");
    }
    if (threshold <= 0.0) {
        throw std::invalid_argument("contact_score: threshold must be positive");
    }
    size_t touching = 0;
    for (const auto& body : body_meshes) {
        if (body.vertices.empty()) {
            throw std::invalid_argument("contact_score: body with no vertices");
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& v : body.vertices) {
            best = std::min(best, std::abs(sample_sdf(scene_sdf, v).value));
        }
        if (best <= threshold) {
            ++touching;
        }
    }
    return static_cast<double>(touching) / static_cast<double>(body_meshes.size());
}

namespace {

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

constexpr int kMaxLloydIterations = 100;

std::vector<int> kmeans_assignments(const PoseParamSet& poses, int k, uint64_t seed) {
    const auto& pts = poses.samples;
    const int n = static_cast<int>(pts.size());
    Rng rng(seed);

    // k-means++ seeding
    std::vector<std::vector<double>> centers;
    centers.push_back(pts[static_cast<size_t>(rng.uniform_int(0, n - 1))]);
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) {
                best = std::min(best, sq_distance(pts[i], c));
            }
            d2[i] = best;
            total += best;
        }
        int pick = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<int>(rng.uniform_int(0, n - 1));
        }
        centers.push_back(pts[pick]);
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int c = 0; c < k; ++c) {
                const double d = sq_distance(pts[i], centers[c]);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            if (assign[i] != arg) {
                assign[i] = arg;
                changed = true;
            }
        }
        if (!changed && iter > 0) {
            break;
        }
        for (int c = 0; c < k; ++c) {
            std::vector<double> mean(poses.dimension(), 0.0);
            int count = 0;
            for (int i = 0; i < n; ++i) {
                if (assign[i] == c) {
                    for (size_t d = 0; d < mean.size(); ++d) {
                        mean[d] += pts[i][d];
                    }
                    ++count;
                }
            }
            if (count > 0) {
                for (double& m : mean) {
                    m /= count;
                }
                centers[c] = std::move(mean);
            }
        }
    }
    return assign;
}

}  // namespace

DiversityMetrics diversity_metrics(const PoseParamSet& poses, int k, uint64_t seed) {
    poses.validate();
    if (k < 1) {
        throw std::invalid_argument("diversity_metrics: k must be >= 1");
    }
    const int n = static_cast<int>(poses.samples.size());
    if (n < k) {
        throw std::invalid_argument("diversity_metrics: fewer samples than clusters");
    }
    const std::vector<int> assign =
        k == 1 ? std::vector<int>(n, 0) : kmeans_assignments(poses, k, seed);

    DiversityMetrics out;
    std::vector<int> histogram(k, 0);
    for (int a : assign) {
        ++histogram[a];
    }
    for (int c = 0; c < k; ++c) {
        if (histogram[c] > 0) {
            const double p = static_cast<double>(histogram[c]) / n;
            out.entropy -= p * std::log(p);
        }
    }

    double size_sum = 0.0;
    for (int c = 0; c < k; ++c) {
        if (histogram[c] < 2) {
            continue;  // singleton and empty clusters contribute 0
        }
        double pair_sum = 0.0;
        int64_t pairs = 0;
        for (int i = 0; i < n; ++i) {
            if (assign[i] != c) continue;
            for (int j = i + 1; j < n; ++j) {
                if (assign[j] != c) continue;
                pair_sum += std::sqrt(sq_distance(poses.samples[i], poses.samples[j]));
                ++pairs;
            }
        }
        size_sum += pair_sum / static_cast<double>(pairs);
    }
    out.cluster_size = size_sum / static_cast<double>(k);
    return out;
}

}  // namespace previz
