#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clap::ingest {

struct Passage {
    std::string id;
    std::optional<std::string> title;
    std::string text;
    std::size_t word_count = 0;  // whitespace tokens of text

    bool operator==(const Passage&) const = default;
};

struct Query {
    std::string id;
    std::string text;

    bool operator==(const Query&) const = default;
};

struct Qrel {
    std::string query_id;
    std::string passage_id;
    int relevance = 0;

    bool operator==(const Qrel&) const = default;
};

struct RunEntry {
    std::string query_id;
    std::string passage_id;
    std::size_t rank = 0;
    double score = 0.0;
    std::string tag;

    bool operator==(const RunEntry&) const = default;
};

Passage make_passage(std::string id, std::optional<std::string> title, std::string text);

// BEIR JSONL readers. Blank lines are ignored; every other line must be a JSON
// object carrying "_id" and "text". Line numbers in errors are 1-based.
std::vector<Passage> load_corpus(const std::filesystem::path& path);
std::vector<Query> load_queries(const std::filesystem::path& path);
// Tab-separated query-id, passage-id, relevance. A leading "query-id" header is skipped.
std::vector<Qrel> load_qrels(const std::filesystem::path& path);

void write_corpus(const std::vector<Passage>& corpus, const std::filesystem::path& path);
void write_queries(const std::vector<Query>& queries, const std::filesystem::path& path);
void write_qrels(const std::vector<Qrel>& qrels, const std::filesystem::path& path);

// Throws IntegrityError when entries break the per-query rank/score contract.
void validate_run(const std::vector<RunEntry>& entries);
std::string format_run_line(const RunEntry& e);
void write_run(const std::vector<RunEntry>& entries, const std::filesystem::path& path);
std::vector<RunEntry> read_run(const std::filesystem::path& path);

struct Subset {
    std::vector<Passage> corpus;
    std::vector<Query> queries;
    std::vector<Qrel> qrels;
};

// Seeded sample of n_queries judged queries. The corpus keeps every passage
// judged for a sampled query plus up to n_distractors other passages; all
// three outputs keep the relative order of the inputs.
Subset subset(const std::vector<Passage>& corpus, const std::vector<Query>& queries,
              const std::vector<Qrel>& qrels, std::size_t n_queries, std::uint64_t seed,
              std::size_t n_distractors = 0);

}  // namespace clap::ingest
