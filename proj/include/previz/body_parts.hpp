#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace previz {

/// Fixed 15-part body surface partition. Part labels in scripts, contact
/// annotations, and mesh sidecars must come from this set.
inline constexpr std::array<std::string_view, 15> kBodyParts = {
    "head",
    "left upper arm",
    "right upper arm",
    "left forearm",
    "right forearm",
    "left hand",
    "right hand",
    "back",
    "buttocks",
    "left thigh",
    "right thigh",
    "left calf",
    "right calf",
    "left foot",
    "right foot",
};

inline constexpr uint8_t kNoPartLabel = 255;

inline std::optional<uint8_t> body_part_index(std::string_view name) {
    for (size_t i = 0; i < kBodyParts.size(); ++i) {
        if (kBodyParts[i] == name) {
            return static_cast<uint8_t>(i);
        }
    }
    return std::nullopt;
}

inline std::string body_part_name(uint8_t index) {
    return std::string(kBodyParts.at(index));
}

}  // namespace previz
