#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clap/augment.hpp"
#include "clap/embed.hpp"
#include "clap/ingest.hpp"

namespace clap::retrieve {

// Sparse per-query scores. An absent passage means "no evidence", which is
// not the same as a score of zero. Iteration order is by query id, then
// passage id.
class ScoreTable {
public:
    using Row = std::map<std::string, double>;

    // Registers a query so it is evaluated even with no scored passages.
    void add_query(const std::string& query_id);
    // Throws InvalidArgument for non-finite scores.
    void set(const std::string& query_id, const std::string& passage_id, double score);

    [[nodiscard]] std::optional<double> get(const std::string& query_id, const std::string& passage_id) const;
    [[nodiscard]] const Row* row(const std::string& query_id) const;
    [[nodiscard]] const std::map<std::string, Row>& rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t entries() const;

    [[nodiscard]] ScoreTable scaled(double factor) const;

    bool operator==(const ScoreTable&) const = default;

private:
    std::map<std::string, Row> rows_;
};

struct ScoredPassage {
    std::string passage_id;
    double score = 0.0;

    bool operator==(const ScoredPassage&) const = default;
};

// Descending score, ties by ascending passage id.
bool ranks_before(const ScoredPassage& a, const ScoredPassage& b);
std::vector<ScoredPassage> ranked(const ScoreTable::Row& row);
// Keeps the best k of candidates, sorted by ranks_before.
void keep_top_k(std::vector<ScoredPassage>& candidates, std::size_t k);

enum class MissingLocalPolicy { use_global, drop };

std::string_view to_string(MissingLocalPolicy policy);
MissingLocalPolicy parse_missing_local_policy(std::string_view s);

struct FusionConfig {
    double alpha = 0.5;
    std::size_t top_k = 1000;
    MissingLocalPolicy missing_local = MissingLocalPolicy::use_global;

    void validate() const;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
};

// Offset below the lowest retained score used for entries absent from a table.
inline constexpr double kCensorMargin = 1e-6;

// Dense global relevance: similarity of each query with every passage.
ScoreTable global_scores(const std::vector<std::string>& query_ids, const std::vector<std::string>& passage_ids,
                         const embed::VectorStore& query_vectors, const embed::VectorStore& passage_vectors,
                         std::size_t top_k);

// Inverted index for Okapi BM25 over tokenize() terms.
class Bm25Index {
public:
    Bm25Index(const std::vector<ingest::Passage>& corpus, Bm25Params params);

    // Scores every passage sharing at least one term with the query; distinct
    // query terms are summed in lexicographic order. Results are ranked.
    [[nodiscard]] std::vector<ScoredPassage> score(std::string_view query) const;
    [[nodiscard]] double idf(const std::string& term) const;

private:
    struct Posting {
        std::size_t doc;
        std::size_t tf;
    };
    Bm25Params params_;
    std::vector<std::string> ids_;
    std::vector<std::size_t> lengths_;
    double avgdl_ = 0.0;
    std::map<std::string, std::vector<Posting>> postings_;
};

ScoreTable bm25_scores(const std::vector<ingest::Query>& queries, const std::vector<ingest::Passage>& corpus,
                       const Bm25Params& params, std::size_t top_k);

// Max-pooled local relevance: per passage, the best similarity between the
// query and any pseudo-query whose parent is that passage. Passages without
// pseudo-queries never appear.
ScoreTable local_scores(const std::vector<std::string>& query_ids,
                        const std::vector<augment::PseudoQuery>& pseudo_queries,
                        const embed::VectorStore& query_vectors, const embed::VectorStore& pseudo_query_vectors,
                        std::size_t top_k);

// alpha * global + (1 - alpha) * local over the union of candidates. A missing
// global score is censored to (lowest retained global score - kCensorMargin);
// a missing local score becomes the global score (use_global) or the local
// censored floor (drop). Rows with nothing retained use a floor of 0.
ScoreTable fuse(const ScoreTable& global, const ScoreTable& local, const FusionConfig& config);

std::vector<ingest::RunEntry> rank(const ScoreTable& table, const std::string& tag);
ScoreTable table_from_run(const std::vector<ingest::RunEntry>& run);

// TSV rows "query_id<TAB>passage_id<TAB>score" with 9 decimals, grouped by
// query in rank order.
void write_scores(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable read_scores(const std::filesystem::path& path);

}  // namespace clap::retrieve
