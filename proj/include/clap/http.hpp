#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace clap::http {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // starts with '/'
};

// Accepts http:// and https:// URLs; throws InvalidArgument otherwise.
Url parse_url(std::string_view url);

using Headers = std::vector<std::pair<std::string, std::string>>;

// POST a JSON body and decode a JSON reply. Connection failures, non-2xx
// statuses and undecodable bodies all surface as TransportError.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, const Headers& headers = {},
                         int timeout_seconds = 120);

}  // namespace clap::http
