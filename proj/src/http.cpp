#include "clap/http.hpp"

#include <httplib.h>

#include "clap/error.hpp"

namespace clap::http {

Url parse_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw InvalidArgument("URL without scheme: " + std::string(url));
    auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw InvalidArgument("unsupported URL scheme: " + std::string(scheme));
    auto path_start = url.find('/', scheme_end + 3);
    Url out;
    out.origin = std::string(url.substr(0, path_start));
    out.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
    if (out.origin.size() <= scheme_end + 3) throw InvalidArgument("URL without host: " + std::string(url));
    return out;
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, const Headers& headers,
                         int timeout_seconds) {
    auto target = parse_url(url);
    httplib::Client client(target.origin);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(target.path, h, body.dump(), "application/json");
    if (!res) throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw TransportError("POST " + url + " returned HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200));
    auto decoded = nlohmann::json::parse(res->body, nullptr, false);
    if (decoded.is_discarded()) throw TransportError("POST " + url + " returned a non-JSON body");
    return decoded;
}

}  // namespace clap::http
