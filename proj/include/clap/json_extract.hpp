#pragma once

#include <optional>
#include <string_view>

#include <json.hpp>

namespace clap::augment {

// Pulls the first balanced top-level JSON array out of model output. Markdown
// code fences are looked inside first; leading or trailing commentary and
// // or /* */ comments inside the array are tolerated.
std::optional<nlohmann::json> extract_json_array(std::string_view raw);

}  // namespace clap::augment
