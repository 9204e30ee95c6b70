#include "previz/plan.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace previz {

KeyframePlan build_keyframe_plan(const ActionScript& script,
                                 const std::string& default_transition) {
    KeyframePlan plan;
    for (const auto& action : script.actions) {
        if (action.kind != ActionKind::kInteractive) {
            continue;
        }
        Keyframe kf;
        kf.id = static_cast<int>(plan.keyframes.size()) + 1;
        kf.source_action = action.index;
        kf.target_object = action.target_object;
        kf.contacts = action.contacts;
        plan.keyframes.push_back(std::move(kf));
    }
    for (size_t i = 0; i + 1 < plan.keyframes.size(); ++i) {
        PlanSegment seg;
        seg.from_keyframe = plan.keyframes[i].id;
        seg.to_keyframe = plan.keyframes[i + 1].id;
        std::string text;
        for (const auto& action : script.actions) {
            if (action.kind != ActionKind::kTransition) {
                continue;
            }
            if (action.index > plan.keyframes[i].source_action &&
                action.index < plan.keyframes[i + 1].source_action) {
                if (!text.empty()) {
                    text += ' ';
                }
                text += action.description;
            }
        }
        seg.transition_text = text.empty() ? default_transition : text;
        plan.segments.push_back(std::move(seg));
    }
    return plan;
}

PlanManifest export_plan(const KeyframePlan& plan,
                         const std::vector<std::string>& keyframe_images,
                         const std::filesystem::path& path, double duration_hint_seconds) {
    if (keyframe_images.size() != plan.keyframes.size()) {
        throw std::invalid_argument("export_plan: " + std::to_string(keyframe_images.size()) +
                                    " images for " + std::to_string(plan.keyframes.size()) +
                                    " keyframes");
    }
    PlanManifest manifest;
    manifest.plan = plan;
    manifest.keyframe_images = keyframe_images;
    for (const auto& seg : plan.segments) {
        InterpolationJob job;
        job.start_image = keyframe_images[seg.from_keyframe - 1];
        job.end_image = keyframe_images[seg.to_keyframe - 1];
        job.prompt = seg.transition_text;
        job.duration_hint = duration_hint_seconds;
        manifest.jobs.push_back(std::move(job));
    }

    nlohmann::json kfs = nlohmann::json::array();
    for (size_t i = 0; i < plan.keyframes.size(); ++i) {
        const auto& kf = plan.keyframes[i];
        nlohmann::json contacts = nlohmann::json::array();
        for (const auto& c : kf.contacts) {
            contacts.push_back({c.human_part, c.object_region});
        }
        kfs.push_back({{"id", kf.id},
                       {"source_action", kf.source_action},
                       {"target_object", kf.target_object},
                       {"contacts", contacts},
                       {"image", keyframe_images[i]}});
    }
    nlohmann::json jobs = nlohmann::json::array();
    for (const auto& job : manifest.jobs) {
        jobs.push_back({{"start_image", job.start_image},
                        {"end_image", job.end_image},
                        {"prompt", job.prompt},
                        {"duration_hint", job.duration_hint}});
    }
    const nlohmann::json doc = {{"version", 1}, {"keyframes", kfs}, {"jobs", jobs}};
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write manifest: " + path.string());
    }
    out << doc.dump(2) << '\n';
    return manifest;
}

PlanManifest import_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + path.string());
    }
    const nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.at("version").get<int>() != 1) {
        throw std::runtime_error(path.string() + ": unsupported manifest version");
    }
    PlanManifest manifest;
    for (const auto& entry : doc.at("keyframes")) {
        Keyframe kf;
        kf.id = entry.at("id").get<int>();
        kf.source_action = entry.at("source_action").get<int>();
        kf.target_object = entry.at("target_object").get<std::string>();
        for (const auto& c : entry.at("contacts")) {
            kf.contacts.push_back({c.at(0).get<std::string>(), c.at(1).get<std::string>()});
        }
        manifest.keyframe_images.push_back(entry.at("image").get<std::string>());
        manifest.plan.keyframes.push_back(std::move(kf));
    }
    for (const auto& entry : doc.at("jobs")) {
        InterpolationJob job;
        job.start_image = entry.at("start_image").get<std::string>();
        job.end_image = entry.at("end_image").get<std::string>();
        job.prompt = entry.at("prompt").get<std::string>();
        job.duration_hint = entry.at("duration_hint").get<double>();
        manifest.jobs.push_back(std::move(job));
    }
    // rebuild segments from the job chain
    for (size_t i = 0; i < manifest.jobs.size(); ++i) {
        PlanSegment seg;
        seg.from_keyframe = static_cast<int>(i) + 1;
        seg.to_keyframe = static_cast<int>(i) + 2;
        seg.transition_text = manifest.jobs[i].prompt;
        manifest.plan.segments.push_back(std::move(seg));
    }
    return manifest;
}

}  // namespace previz
