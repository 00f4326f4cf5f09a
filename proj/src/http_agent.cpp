#include <cstdlib>

#include "clap/agent.hpp"
#include "clap/error.hpp"
#include "clap/http.hpp"

namespace clap::augment {

void AgentConfig::validate() const {
    if (!(temperature >= 0.0 && temperature <= 1.0)) throw InvalidArgument("temperature must lie in [0, 1]");
    if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
    if (concurrency_limit < 1) throw InvalidArgument("concurrency_limit must be >= 1");
    if (skip_word_threshold == 0) throw InvalidArgument("skip_word_threshold must be > 0");
}

HttpChatAgent::HttpChatAgent(AgentConfig config) : config_(std::move(config)) {
    config_.validate();
    http::parse_url(config_.endpoint_url);
    if (config_.model_name.empty()) throw InvalidArgument("model name is required for the HTTP agent");
}

std::string HttpChatAgent::complete(const std::string& prompt, double temperature) {
    nlohmann::json body = {
        {"model", config_.model_name},
        {"temperature", temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    http::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env_var.c_str()); key != nullptr && *key != '\0')
        headers.emplace_back("Authorization", std::string("Bearer ") + key);

    auto reply = http::post_json(config_.endpoint_url, body, headers);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw TransportError("chat endpoint reply lacks choices[0].message.content");
    }
}

}  // namespace clap::augment
