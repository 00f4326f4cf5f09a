#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clap/augment.hpp"
#include "clap/embed.hpp"
#include "clap/ingest.hpp"
#include "clap/retrieve.hpp"

namespace clap::evaluate {

// query id -> passage id -> relevance grade
using QrelIndex = std::map<std::string, std::map<std::string, int>>;

QrelIndex index_qrels(const std::vector<ingest::Qrel>& qrels);

enum class MetricKind { ndcg, mrr, recall };

struct MetricSpec {
    MetricKind kind = MetricKind::ndcg;
    std::size_t k = 10;

    [[nodiscard]] std::string name() const;  // e.g. "ndcg@10"
};

// Accepts "ndcg@10", "mrr@10", "recall@1000" (case-insensitive).
MetricSpec parse_metric(std::string_view s);

enum class GainForm { exponential, linear };

// Per-query values plus their arithmetic mean. A query is evaluated when it
// appears in the run and has at least one judged-relevant passage (grade > 0).
struct MetricReport {
    std::string metric;
    std::map<std::string, double> per_query;
    double mean = 0.0;
    std::vector<std::string> warnings;
};

// gain(rel) is 2^rel - 1 (exponential) or rel (linear); discount log2(rank + 1).
MetricReport ndcg_at_k(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, std::size_t k = 10,
                       GainForm gain = GainForm::exponential);
MetricReport mrr_at_k(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, std::size_t k = 10);
MetricReport recall_at_k(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, std::size_t k = 1000);
MetricReport evaluate_metric(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, const MetricSpec& spec);

nlohmann::ordered_json to_json(const MetricReport& report);
// Aligned columns: one row per query plus a final "all" row.
std::string to_table(const std::vector<MetricReport>& reports);

struct GainRecord {
    std::string query_id;
    std::string passage_id;
    double best_pseudo_sim = 0.0;
    double passage_sim = 0.0;
    double gain = 0.0;  // best_pseudo_sim - passage_sim
};

struct GainAnalysis {
    std::vector<GainRecord> records;
    std::size_t skipped_pairs = 0;  // relevant passages without pseudo-queries
};

// One record per (query, relevant passage) pair for the given queries, in
// query-id then passage-id order.
GainAnalysis similarity_gain(const std::vector<std::string>& query_ids, const QrelIndex& qrels,
                             const embed::VectorStore& query_vectors, const embed::VectorStore& passage_vectors,
                             const std::vector<augment::PseudoQuery>& pseudo_queries,
                             const embed::VectorStore& pseudo_query_vectors);

// Mean gain per query over its relevant passages.
std::map<std::string, double> per_query_gain(const std::vector<GainRecord>& records);

struct Description {
    std::size_t n = 0;
    double mean = 0.0;
    double std_dev = 0.0;   // sample (n - 1)
    double variance = 0.0;  // sample (n - 1)
    double min = 0.0;
    double q10 = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
    double skewness = 0.0;  // m3 / m2^1.5 from population central moments
    double kurtosis = 0.0;  // m4 / m2^2 - 3 (excess)
    double cv = 0.0;        // std_dev / mean
};

// Quantiles interpolate linearly between order statistics at (n - 1) * p.
// Needs n >= 2. Skewness and kurtosis are NaN when all values are equal.
Description describe(std::span<const double> values);
double quantile(std::span<const double> sorted, double p);

nlohmann::ordered_json to_json(const Description& d);

struct StructureStats {
    double avg_query_len = 0.0;
    double avg_passage_len = 0.0;
    double len_ratio = 0.0;  // passage / query
    double chunks_per_passage = 0.0;
    double pseudo_queries_per_chunk = 0.0;
    double index_expansion_factor = 0.0;  // pseudo-queries / passages
};

StructureStats structure_stats(const std::vector<ingest::Passage>& corpus, const std::vector<ingest::Query>& queries,
                               const std::vector<augment::Chunk>& chunks,
                               const std::vector<augment::PseudoQuery>& pseudo_queries);

nlohmann::ordered_json to_json(const StructureStats& s);

struct SweepPoint {
    double alpha = 0.0;
    double value = 0.0;
};

struct SweepResult {
    std::string metric;
    std::vector<SweepPoint> points;
    double best_alpha = 0.0;
    double best_value = 0.0;
};

// "start:stop:step" or a comma-separated list. Values are rounded to 12
// decimals and must be strictly increasing within [0, 1].
std::vector<double> parse_alpha_grid(std::string_view s);
std::vector<double> default_alpha_grid();

// Fuse, rank and evaluate at each alpha. Ties for the best value go to the
// larger alpha. base.alpha is ignored.
SweepResult alpha_sweep(const retrieve::ScoreTable& global, const retrieve::ScoreTable& local, const QrelIndex& qrels,
                        const std::vector<double>& grid, const MetricSpec& metric,
                        const retrieve::FusionConfig& base = {});

nlohmann::ordered_json to_json(const SweepResult& s);
std::string to_table(const SweepResult& s);

// SVG renderings: metric against alpha with a diamond at the best point, and
// the empirical CDF and box plot of similarity gains.
std::string sweep_svg(const SweepResult& s);
std::string gain_cdf_svg(std::span<const double> gains);
std::string gain_box_svg(const Description& d);

}  // namespace clap::evaluate
