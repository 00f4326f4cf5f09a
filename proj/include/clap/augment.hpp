#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clap/agent.hpp"
#include "clap/ingest.hpp"

namespace clap::augment {

struct Chunk {
    std::string passage_id;
    std::string chunk_id;  // "a", "b", ..., "z", "aa", ...
    std::string title;
    std::string text;
    bool coref_resolved = false;

    bool operator==(const Chunk&) const = default;
};

// The (passage_id, chunk_id) pair is the parent mapping used by local scoring.
struct PseudoQuery {
    std::string id;  // "<passage_id>::<chunk_id>::<index>"
    std::string passage_id;
    std::string chunk_id;
    std::string text;

    bool operator==(const PseudoQuery&) const = default;
};

// Sequential chunk label for a zero-based index.
std::string chunk_label(std::size_t index);

enum class ChunkOrigin { agent, skipped, fallback };

std::string_view to_string(ChunkOrigin origin);

struct ChunkingResult {
    std::vector<Chunk> chunks;
    ChunkOrigin origin = ChunkOrigin::agent;
    std::size_t agent_calls = 0;
};

// Single whole-passage chunk, titled with the passage title or its first 8 words.
Chunk whole_passage_chunk(const ingest::Passage& passage);

// Joint chunking and coreference resolution for one passage. Passages above
// the skip threshold bypass the agent. Unusable output is retried up to
// max_retries times and then degrades to the whole-passage chunk; transport
// errors propagate once retries are exhausted.
ChunkingResult chunk_and_resolve(const ingest::Passage& passage, const AgentConfig& config, TextAgent& agent);

struct PseudoQueryResult {
    std::vector<PseudoQuery> queries;
    bool degraded = false;  // output never parsed; queries is empty
    std::size_t agent_calls = 0;
};

PseudoQueryResult generate_pseudo_queries(const Chunk& chunk, const AgentConfig& config, TextAgent& agent);

struct AugmentStats {
    std::size_t passages = 0;
    std::size_t chunks = 0;
    std::size_t pseudo_queries = 0;
    std::size_t skipped = 0;
    std::size_t chunk_fallbacks = 0;
    std::size_t pseudo_query_fallbacks = 0;
    std::size_t resumed = 0;
    std::size_t agent_calls = 0;

    [[nodiscard]] double chunks_per_passage() const;
    [[nodiscard]] double pseudo_queries_per_chunk() const;
};

struct AugmentResult {
    std::vector<Chunk> chunks;
    std::vector<PseudoQuery> pseudo_queries;
    AugmentStats stats;
};

inline constexpr const char* kChunksFile = "chunks.jsonl";
inline constexpr const char* kPseudoQueriesFile = "pseudo_queries.jsonl";
inline constexpr const char* kProgressFile = "augment_progress.jsonl";

// Runs chunking and pseudo-query generation over the corpus with at most
// config.concurrency_limit agent calls in flight. Output order follows the
// corpus regardless of completion order.
//
// With a sidecar directory, each finished passage is appended to chunks.jsonl
// and pseudo_queries.jsonl and then recorded in augment_progress.jsonl. A
// later call with the same directory reuses recorded passages without calling
// the agent, and on success the three files are rewritten in corpus order.
AugmentResult augment_corpus(const std::vector<ingest::Passage>& corpus, const AgentConfig& config,
                             TextAgent& agent, const std::optional<std::filesystem::path>& sidecar_dir = {});

std::vector<Chunk> load_chunks(const std::filesystem::path& path);
std::vector<PseudoQuery> load_pseudo_queries(const std::filesystem::path& path);
void write_chunks(const std::vector<Chunk>& chunks, const std::filesystem::path& path);
void write_pseudo_queries(const std::vector<PseudoQuery>& queries, const std::filesystem::path& path);

// Token budget for offline preprocessing.
struct CostModel {
    double input_price_per_token = 2e-6;
    double output_price_per_token = 6e-6;
    std::size_t chunking_prompt_tokens = 120;
    std::size_t per_chunk_query_prompt_tokens = 60;
    std::size_t per_chunk_input_tokens = 40;
    std::size_t per_chunk_output_tokens = 20;
    std::size_t chunking_output_tokens = 200;
};

struct CorpusProfile {
    std::size_t passages = 0;
    std::size_t avg_passage_tokens = 0;
    std::size_t avg_chunks = 0;
};

struct CostEstimate {
    std::size_t input_tokens_per_passage = 0;
    std::size_t output_tokens_per_passage = 0;
    std::size_t total_input_tokens = 0;
    std::size_t total_output_tokens = 0;
    double cost_per_passage = 0.0;
    double total_cost = 0.0;
};

CostEstimate estimate_cost(const CorpusProfile& profile, const CostModel& model);

}  // namespace clap::augment
