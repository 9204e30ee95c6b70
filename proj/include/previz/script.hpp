#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace previz {

enum class ActionKind { kInteractive, kTransition };

struct ContactPair {
    std::string human_part;  // one of the 15 body part names
    std::string object_region;

    bool operator==(const ContactPair&) const = default;
};

struct AtomicAction {
    int index = 0;  // 1-based, contiguous
    ActionKind kind = ActionKind::kTransition;
    std::string description;
    std::string target_object;         // INTERACTIVE only
    std::vector<ContactPair> contacts;  // INTERACTIVE only, >= 1

    bool operator==(const AtomicAction&) const = default;
};

struct ActionScript {
    std::string scene_description;
    std::vector<AtomicAction> actions;

    bool operator==(const ActionScript&) const = default;
    size_t interactive_count() const;
};

/// Parse failure with the 1-based source line carried alongside the message.
class ScriptParseError : public std::runtime_error {
public:
    ScriptParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Line-oriented script grammar (UTF-8):
///
///   <scene description lines>        (optional block, ends at "---")
///   ---
///   <n>. [INTERACTIVE] <description> @ <object-id> | contacts: <part>-><region>{, ...}
///   <n>. [TRANSITION] <description>
///
/// Indices must be contiguous from 1; at least one INTERACTIVE action;
/// every part name from the 15-part set. Throws ScriptParseError.
ActionScript parse_script(const std::string& text);
ActionScript load_script(const std::filesystem::path& path);

/// Canonical text form; parse_script(serialize_script(s)) == s.
std::string serialize_script(const ActionScript& script);
void save_script(const ActionScript& script, const std::filesystem::path& path);

}  // namespace previz
