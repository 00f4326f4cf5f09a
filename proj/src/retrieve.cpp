#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "clap/error.hpp"
#include "clap/parallel.hpp"
#include "clap/retrieve.hpp"
#include "clap/text.hpp"

namespace clap::retrieve {

namespace {

double similarity(const embed::VectorStore& a_store, std::span<const float> a, const embed::VectorStore& b_store,
                  std::span<const float> b) {
    return a_store.normalized() && b_store.normalized() ? embed::dot(a, b) : embed::cosine(a, b);
}

void check_top_k(std::size_t top_k) {
    if (top_k == 0) throw InvalidArgument("top_k must be >= 1");
}

// Scores each query in parallel, then inserts rows in query order.
template <typename ScoreQuery>
ScoreTable collect(const std::vector<std::string>& query_ids, std::size_t top_k, ScoreQuery&& score_query) {
    std::vector<std::vector<ScoredPassage>> rows(query_ids.size());
    parallel_for(query_ids.size(), [&](std::size_t i) {
        rows[i] = score_query(i);
        keep_top_k(rows[i], top_k);
    });
    ScoreTable table;
    for (std::size_t i = 0; i < query_ids.size(); ++i) {
        table.add_query(query_ids[i]);
        for (const auto& sp : rows[i]) table.set(query_ids[i], sp.passage_id, sp.score);
    }
    return table;
}

double row_floor(const ScoreTable::Row* row) {
    if (row == nullptr || row->empty()) return 0.0;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& [p, s] : *row) lowest = std::min(lowest, s);
    return lowest - kCensorMargin;
}

}  // namespace

std::string_view to_string(MissingLocalPolicy policy) {
    return policy == MissingLocalPolicy::use_global ? "use_global" : "drop";
}

MissingLocalPolicy parse_missing_local_policy(std::string_view s) {
    if (s == "use_global") return MissingLocalPolicy::use_global;
    if (s == "drop") return MissingLocalPolicy::drop;
    throw InvalidArgument("missing-local policy must be use_global or drop, got '" + std::string(s) + "'");
}

void FusionConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
    check_top_k(top_k);
}

void Bm25Params::validate() const {
    if (!(k1 > 0.0)) throw InvalidArgument("BM25 k1 must be > 0");
    if (!(b >= 0.0 && b <= 1.0)) throw InvalidArgument("BM25 b must lie in [0, 1]");
}

ScoreTable global_scores(const std::vector<std::string>& query_ids, const std::vector<std::string>& passage_ids,
                         const embed::VectorStore& query_vectors, const embed::VectorStore& passage_vectors,
                         std::size_t top_k) {
    check_top_k(top_k);
    if (query_vectors.dim() != passage_vectors.dim()) throw InvalidArgument("query and passage stores differ in dim");
    std::vector<std::size_t> passage_rows;
    passage_rows.reserve(passage_ids.size());
    for (const auto& p : passage_ids) passage_rows.push_back(passage_vectors.index_of(p));
    for (const auto& q : query_ids) (void)query_vectors.index_of(q);

    return collect(query_ids, top_k, [&](std::size_t i) {
        auto qv = query_vectors.at(query_ids[i]);
        std::vector<ScoredPassage> out;
        out.reserve(passage_ids.size());
        for (std::size_t j = 0; j < passage_ids.size(); ++j)
            out.push_back({passage_ids[j], similarity(query_vectors, qv, passage_vectors, passage_vectors.vector(passage_rows[j]))});
        return out;
    });
}

Bm25Index::Bm25Index(const std::vector<ingest::Passage>& corpus, Bm25Params params) : params_(params) {
    params_.validate();
    if (corpus.empty()) throw InvalidArgument("BM25 over an empty corpus");
    std::size_t total = 0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        auto terms = text::tokenize(corpus[d].text);
        ids_.push_back(corpus[d].id);
        lengths_.push_back(terms.size());
        total += terms.size();
        std::map<std::string, std::size_t> tf;
        for (auto& t : terms) ++tf[t];
        for (auto& [t, n] : tf) postings_[t].push_back({d, n});
    }
    avgdl_ = static_cast<double>(total) / static_cast<double>(corpus.size());
}

double Bm25Index::idf(const std::string& term) const {
    auto it = postings_.find(term);
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(ids_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredPassage> Bm25Index::score(std::string_view query) const {
    auto terms = text::tokenize(query);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::unordered_map<std::size_t, double> acc;
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& [doc, tf] : it->second) {
            const double f = static_cast<double>(tf);
            const double norm_len = avgdl_ > 0.0 ? static_cast<double>(lengths_[doc]) / avgdl_ : 0.0;
            acc[doc] += w * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm_len));
        }
    }
    std::vector<ScoredPassage> out;
    out.reserve(acc.size());
    for (const auto& [doc, s] : acc) out.push_back({ids_[doc], s});
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

ScoreTable bm25_scores(const std::vector<ingest::Query>& queries, const std::vector<ingest::Passage>& corpus,
                       const Bm25Params& params, std::size_t top_k) {
    check_top_k(top_k);
    Bm25Index index(corpus, params);
    std::vector<std::string> ids;
    for (const auto& q : queries) ids.push_back(q.id);
    return collect(ids, top_k, [&](std::size_t i) { return index.score(queries[i].text); });
}

ScoreTable local_scores(const std::vector<std::string>& query_ids,
                        const std::vector<augment::PseudoQuery>& pseudo_queries,
                        const embed::VectorStore& query_vectors, const embed::VectorStore& pseudo_query_vectors,
                        std::size_t top_k) {
    check_top_k(top_k);
    if (query_vectors.dim() != pseudo_query_vectors.dim())
        throw InvalidArgument("query and pseudo-query stores differ in dim");
    // Group store rows by parent passage.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (const auto& pq : pseudo_queries) groups[pq.passage_id].push_back(pseudo_query_vectors.index_of(pq.id));
    for (const auto& q : query_ids) (void)query_vectors.index_of(q);

    return collect(query_ids, top_k, [&](std::size_t i) {
        auto qv = query_vectors.at(query_ids[i]);
        std::vector<ScoredPassage> out;
        out.reserve(groups.size());
        for (const auto& [passage, rows] : groups) {
            double best = -std::numeric_limits<double>::infinity();
            for (auto r : rows) {
                const double s = similarity(query_vectors, qv, pseudo_query_vectors, pseudo_query_vectors.vector(r));
                if (s > best) best = s;
            }
            out.push_back({passage, best});
        }
        return out;
    });
}

ScoreTable fuse(const ScoreTable& global, const ScoreTable& local, const FusionConfig& config) {
    config.validate();
    std::vector<std::string> query_ids;
    for (const auto& [q, row] : global.rows()) query_ids.push_back(q);
    for (const auto& [q, row] : local.rows())
        if (global.row(q) == nullptr) query_ids.push_back(q);
    std::sort(query_ids.begin(), query_ids.end());

    const double alpha = config.alpha;
    return collect(query_ids, config.top_k, [&](std::size_t i) {
        const auto* g_row = global.row(query_ids[i]);
        const auto* l_row = local.row(query_ids[i]);
        const double g_floor = row_floor(g_row);
        const double l_floor = row_floor(l_row);
        std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> candidates;
        if (g_row != nullptr)
            for (const auto& [p, s] : *g_row) candidates[p].first = s;
        if (l_row != nullptr)
            for (const auto& [p, s] : *l_row) candidates[p].second = s;

        std::vector<ScoredPassage> out;
        out.reserve(candidates.size());
        for (const auto& [p, gl] : candidates) {
            const double g = gl.first.value_or(g_floor);
            double l = 0.0;
            if (gl.second) {
                l = *gl.second;
            } else {
                l = config.missing_local == MissingLocalPolicy::use_global ? g : l_floor;
            }
            out.push_back({p, alpha * g + (1.0 - alpha) * l});
        }
        return out;
    });
}

}  // namespace clap::retrieve
