#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace clap::augment {

struct AgentConfig {
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env_var = "CLAP_API_KEY";
    double temperature = 0.0;
    int max_retries = 2;
    int concurrency_limit = 4;
    std::size_t skip_word_threshold = 5000;

    // Throws InvalidArgument when a field is outside its domain.
    void validate() const;
};

// Text-in/text-out completion backend. Implementations must be safe to call
// from several threads at once; transport failures throw TransportError.
class TextAgent {
public:
    virtual ~TextAgent() = default;
    virtual std::string complete(const std::string& prompt, double temperature) = 0;
};

// Offline deterministic agent. Recognises the two prompt families and answers
// with rule-based output in the same JSON schema a real model is asked for.
//
// Chunking: sentences end at '.', '!' or '?' followed by whitespace and an
// uppercase letter. Sentences are packed greedily into chunks of at most
// kMockChunkWords words (a longer sentence stands alone). A sentence starting
// with It/They/This/These has that word replaced by the passage antecedent:
// the first run of capitalised words that is not one of those pronouns or an
// article. Titles are the first kMockTitleWords words of the chunk.
//
// Pseudo-queries: "what is <title>", "is it true that <first sentence>?" and
// "<title> explained", with the title lowercased.
std::string mock_agent(std::string_view prompt);

inline constexpr std::size_t kMockChunkWords = 60;
inline constexpr std::size_t kMockTitleWords = 6;

class MockAgent final : public TextAgent {
public:
    std::string complete(const std::string& prompt, double temperature) override;
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::atomic<std::size_t> calls_{0};
};

// OpenAI-style chat-completions client: POSTs {"model","temperature","messages"}
// to endpoint_url and returns choices[0].message.content. The bearer token is
// read from the environment variable named by api_key_env_var, if set.
class HttpChatAgent final : public TextAgent {
public:
    explicit HttpChatAgent(AgentConfig config);
    std::string complete(const std::string& prompt, double temperature) override;

private:
    AgentConfig config_;
};

}  // namespace clap::augment
