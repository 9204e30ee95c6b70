#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "previz/script.hpp"

namespace previz {

struct Keyframe {
    int id = 0;            // 1-based position in the chain
    int source_action = 0;  // index of the INTERACTIVE action it came from
    std::string target_object;
    std::vector<ContactPair> contacts;

    bool operator==(const Keyframe&) const = default;
};

struct PlanSegment {
    int from_keyframe = 0;
    int to_keyframe = 0;
    std::string transition_text;

    bool operator==(const PlanSegment&) const = default;
};

struct KeyframePlan {
    std::vector<Keyframe> keyframes;
    std::vector<PlanSegment> segments;  // exactly keyframes.size() - 1

    bool operator==(const KeyframePlan&) const = default;
};

inline constexpr const char* kDefaultTransitionText = "natural transition";

/// One keyframe per INTERACTIVE action in script order; each segment's text
/// concatenates the TRANSITION descriptions strictly between its two source
/// actions (space-joined) or `default_transition` when none intervene.
KeyframePlan build_keyframe_plan(const ActionScript& script,
                                 const std::string& default_transition = kDefaultTransitionText);

struct InterpolationJob {
    std::string start_image;
    std::string end_image;
    std::string prompt;
    double duration_hint = 0.0;  // seconds

    bool operator==(const InterpolationJob&) const = default;
};

struct PlanManifest {
    KeyframePlan plan;
    std::vector<std::string> keyframe_images;  // one per keyframe
    std::vector<InterpolationJob> jobs;        // chained in keyframe order

    bool operator==(const PlanManifest&) const = default;
};

/// Builds the chained job list (job i runs keyframe i -> i+1) and writes the
/// manifest JSON. Throws std::invalid_argument when the image count differs
/// from the keyframe count. import_plan(export_plan(...)) is lossless.
PlanManifest export_plan(const KeyframePlan& plan,
                         const std::vector<std::string>& keyframe_images,
                         const std::filesystem::path& path,
                         double duration_hint_seconds = 5.0);

PlanManifest import_plan(const std::filesystem::path& path);

}  // namespace previz
