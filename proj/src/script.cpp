#include "previz/script.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "previz/body_parts.hpp"

namespace previz {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool looks_like_action(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
        ++i;
    }
    return i > 0 && i < line.size() && line[i] == '.';
}

std::vector<ContactPair> parse_contacts(const std::string& text, int line_no) {
    std::vector<ContactPair> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string pair = trim(item);
        if (pair.empty()) {
            throw ScriptParseError(line_no, "empty contact pair");
        }
        const size_t arrow = pair.find("->");
        if (arrow == std::string::npos) {
            throw ScriptParseError(line_no, "contact pair '" + pair + "' lacks '->'");
        }
        ContactPair cp;
        cp.human_part = trim(pair.substr(0, arrow));
        cp.object_region = trim(pair.substr(arrow + 2));
        if (!body_part_index(cp.human_part)) {
            throw ScriptParseError(line_no, "'" + cp.human_part +
                                                "' is not one of the 15 body part names");
        }
        if (cp.object_region.empty()) {
            throw ScriptParseError(line_no, "contact pair '" + pair + "' has an empty region");
        }
        out.push_back(std::move(cp));
    }
    return out;
}

AtomicAction parse_action_line(const std::string& line, int line_no) {
    AtomicAction action;
    size_t pos = 0;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
        ++pos;
    }
    if (pos == 0 || pos >= line.size() || line[pos] != '.') {
        throw ScriptParseError(line_no, "expected '<index>. [KIND] ...'");
    }
    action.index = std::stoi(line.substr(0, pos));
    std::string rest = trim(line.substr(pos + 1));

    if (rest.rfind("[INTERACTIVE]", 0) == 0) {
        action.kind = ActionKind::kInteractive;
        rest = trim(rest.substr(13));
    } else if (rest.rfind("[TRANSITION]", 0) == 0) {
        action.kind = ActionKind::kTransition;
        rest = trim(rest.substr(12));
    } else {
        throw ScriptParseError(line_no, "expected [INTERACTIVE] or [TRANSITION] tag");
    }

    if (action.kind == ActionKind::kTransition) {
        if (rest.find(" @ ") != std::string::npos ||
            rest.find("| contacts:") != std::string::npos) {
            throw ScriptParseError(line_no, "TRANSITION actions take no object or contacts");
        }
        if (rest.empty()) {
            throw ScriptParseError(line_no, "empty description");
        }
        action.description = rest;
        return action;
    }

    const size_t at = rest.find(" @ ");
    if (at == std::string::npos) {
        throw ScriptParseError(line_no, "INTERACTIVE action lacks ' @ <object-id>'");
    }
    action.description = trim(rest.substr(0, at));
    std::string tail = trim(rest.substr(at + 3));
    const size_t bar = tail.find('|');
    if (bar == std::string::npos) {
        throw ScriptParseError(line_no, "INTERACTIVE action lacks '| contacts: ...'");
    }
    action.target_object = trim(tail.substr(0, bar));
    std::string contacts = trim(tail.substr(bar + 1));
    if (contacts.rfind("contacts:", 0) != 0) {
        throw ScriptParseError(line_no, "expected 'contacts:' after '|'");
    }
    contacts = trim(contacts.substr(9));
    if (action.description.empty()) {
        throw ScriptParseError(line_no, "empty description");
    }
    if (action.target_object.empty()) {
        throw ScriptParseError(line_no, "empty object id");
    }
    action.contacts = parse_contacts(contacts, line_no);
    if (action.contacts.empty()) {
        throw ScriptParseError(line_no, "INTERACTIVE action needs at least one contact pair");
    }
    return action;
}

}  // namespace

size_t ActionScript::interactive_count() const {
    return static_cast<size_t>(
        std::count_if(actions.begin(), actions.end(), [](const AtomicAction& a) {
            return a.kind == ActionKind::kInteractive;
        }));
}

ActionScript parse_script(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::stringstream ss(text);
        std::string line;
        while (std::getline(ss, line)) {
            lines.push_back(line);
        }
    }

    ActionScript script;
    std::vector<std::string> header;
    bool in_header = false, header_done = false;
    bool saw_any = false;

    // A "---" before any action line closes the scene-description header.
    for (size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        const std::string line = trim(lines[i]);
        if (line.empty() && !in_header) {
            continue;
        }
        saw_any = saw_any || !line.empty();
        if (line == "---") {
            if (header_done || !script.actions.empty()) {
                throw ScriptParseError(line_no, "unexpected '---' after actions");
            }
            header_done = true;
            in_header = false;
            continue;
        }
        if (!header_done && script.actions.empty() && !looks_like_action(line)) {
            in_header = true;
            header.push_back(line);
            continue;
        }
        if (in_header) {
            // header lines must be closed by --- before actions start
            throw ScriptParseError(line_no, "scene description block not closed by '---'");
        }
        script.actions.push_back(parse_action_line(line, line_no));
        const int expected = static_cast<int>(script.actions.size());
        if (script.actions.back().index != expected) {
            throw ScriptParseError(line_no, "action index " +
                                                std::to_string(script.actions.back().index) +
                                                " out of order (expected " +
                                                std::to_string(expected) + ")");
        }
    }
    if (in_header) {
        throw ScriptParseError(static_cast<int>(lines.size()),
                               "scene description block not closed by '---'");
    }
    if (!saw_any) {
        throw ScriptParseError(1, "empty document");
    }
    if (script.actions.empty()) {
        throw ScriptParseError(static_cast<int>(lines.size()), "no actions found");
    }

    std::string scene;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i > 0) {
            scene += '\n';
        }
        scene += header[i];
    }
    script.scene_description = scene;

    if (script.interactive_count() == 0) {
        throw ScriptParseError(static_cast<int>(lines.size()),
                               "script has no INTERACTIVE action");
    }
    return script;
}

ActionScript load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open script: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_script(buffer.str());
}

std::string serialize_script(const ActionScript& script) {
    std::string out;
    if (!script.scene_description.empty()) {
        out += script.scene_description;
        out += "\n---\n";
    }
    for (const auto& action : script.actions) {
        out += std::to_string(action.index);
        out += ". ";
        if (action.kind == ActionKind::kInteractive) {
            out += "[INTERACTIVE] ";
            out += action.description;
            out += " @ ";
            out += action.target_object;
            out += " | contacts: ";
            for (size_t i = 0; i < action.contacts.size(); ++i) {
                if (i > 0) {
                    out += ", ";
                }
                out += action.contacts[i].human_part;
                out += "->";
                out += action.contacts[i].object_region;
            }
        } else {
            out += "[TRANSITION] ";
            out += action.description;
        }
        out += '\n';
    }
    return out;
}

void save_script(const ActionScript& script, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write script: " + path.string());
    }
    out << serialize_script(script);
}

}  // namespace previz
