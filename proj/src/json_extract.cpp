#include "clap/json_extract.hpp"

#include <string>
#include <vector>

namespace clap::augment {

namespace {

// End index (exclusive) of the bracketed value starting at open, or npos.
std::size_t balanced_end(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
            auto nl = s.find('\n', i);
            if (nl == std::string_view::npos) return std::string_view::npos;
            i = nl;
        } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
            auto close = s.find("*/", i + 2);
            if (close == std::string_view::npos) return std::string_view::npos;
            i = close + 1;
        } else if (c == '[' || c == '{') {
            ++depth;
        } else if (c == ']' || c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

std::optional<nlohmann::json> scan(std::string_view s) {
    for (auto open = s.find('['); open != std::string_view::npos; open = s.find('[', open + 1)) {
        auto end = balanced_end(s, open);
        if (end == std::string_view::npos) continue;
        auto parsed = nlohmann::json::parse(s.substr(open, end - open), nullptr, false, true);
        if (!parsed.is_discarded() && parsed.is_array()) return parsed;
    }
    return std::nullopt;
}

std::vector<std::string_view> fenced_blocks(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto open = s.find("```", pos);
        if (open == std::string_view::npos) break;
        auto body = s.find('\n', open);
        if (body == std::string_view::npos) break;
        auto close = s.find("```", body);
        if (close == std::string_view::npos) {
            out.push_back(s.substr(body + 1));
            break;
        }
        out.push_back(s.substr(body + 1, close - body - 1));
        pos = close + 3;
    }
    return out;
}

}  // namespace

std::optional<nlohmann::json> extract_json_array(std::string_view raw) {
    for (auto block : fenced_blocks(raw))
        if (auto found = scan(block)) return found;
    return scan(raw);
}

}  // namespace clap::augment
