#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "clap/error.hpp"
#include "clap/evaluate.hpp"
#include "clap/text.hpp"

namespace clap::evaluate {

namespace {

double parse_double(std::string_view s) {
    std::string t(text::trim(s));
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        throw InvalidArgument("not a number: '" + t + "'");
    return v;
}

double round12(double v) { return std::round(v * 1e12) / 1e12; }

double average_words(const auto& items, auto&& text_of) {
    if (items.empty()) return 0.0;
    double total = 0.0;
    for (const auto& it : items) total += static_cast<double>(text::count_words(text_of(it)));
    return total / static_cast<double>(items.size());
}

}  // namespace

GainAnalysis similarity_gain(const std::vector<std::string>& query_ids, const QrelIndex& qrels,
                             const embed::VectorStore& query_vectors, const embed::VectorStore& passage_vectors,
                             const std::vector<augment::PseudoQuery>& pseudo_queries,
                             const embed::VectorStore& pseudo_query_vectors) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (const auto& pq : pseudo_queries) groups[pq.passage_id].push_back(pseudo_query_vectors.index_of(pq.id));
    auto sim = [](const embed::VectorStore& a_store, std::span<const float> a, const embed::VectorStore& b_store,
                  std::span<const float> b) {
        return a_store.normalized() && b_store.normalized() ? embed::dot(a, b) : embed::cosine(a, b);
    };

    std::vector<std::string> ids(query_ids);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    GainAnalysis out;
    for (const auto& q : ids) {
        auto judged = qrels.find(q);
        if (judged == qrels.end()) continue;
        auto qv = query_vectors.at(q);
        for (const auto& [p, rel] : judged->second) {
            if (rel <= 0) continue;
            auto group = groups.find(p);
            if (group == groups.end()) {
                ++out.skipped_pairs;
                continue;
            }
            double best = -std::numeric_limits<double>::infinity();
            for (auto r : group->second)
                best = std::max(best, sim(query_vectors, qv, pseudo_query_vectors, pseudo_query_vectors.vector(r)));
            const double direct = sim(query_vectors, qv, passage_vectors, passage_vectors.at(p));
            out.records.push_back(GainRecord{q, p, best, direct, best - direct});
        }
    }
    return out;
}

std::map<std::string, double> per_query_gain(const std::vector<GainRecord>& records) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& r : records) {
        acc[r.query_id].first += r.gain;
        ++acc[r.query_id].second;
    }
    std::map<std::string, double> out;
    for (const auto& [q, sn] : acc) out[q] = sn.first / static_cast<double>(sn.second);
    return out;
}

double quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Description describe(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("describe needs at least one value");
    if (values.size() < 2) throw InvalidArgument("sample standard deviation is undefined for n = 1");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    Description d;
    d.n = sorted.size();
    const double n = static_cast<double>(d.n);
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double s2 = 0.0;
    double s3 = 0.0;
    double s4 = 0.0;
    for (double x : values) {
        const double dx = x - d.mean;
        const double dx2 = dx * dx;
        s2 += dx2;
        s3 += dx2 * dx;
        s4 += dx2 * dx2;
    }
    d.variance = s2 / (n - 1.0);
    d.std_dev = std::sqrt(d.variance);
    const double m2 = s2 / n;
    if (m2 > 0.0) {
        d.skewness = (s3 / n) / std::pow(m2, 1.5);
        d.kurtosis = (s4 / n) / (m2 * m2) - 3.0;
    } else {
        d.skewness = std::numeric_limits<double>::quiet_NaN();
        d.kurtosis = std::numeric_limits<double>::quiet_NaN();
    }
    d.min = sorted.front();
    d.max = sorted.back();
    d.q10 = quantile(sorted, 0.10);
    d.q25 = quantile(sorted, 0.25);
    d.median = quantile(sorted, 0.50);
    d.q75 = quantile(sorted, 0.75);
    d.cv = d.std_dev / d.mean;
    return d;
}

nlohmann::ordered_json to_json(const Description& d) {
    return {{"n", d.n},         {"mean", d.mean}, {"std", d.std_dev}, {"var", d.variance}, {"min", d.min},
            {"q10", d.q10},     {"q25", d.q25},   {"median", d.median}, {"q75", d.q75},    {"max", d.max},
            {"skew", d.skewness}, {"kurt", d.kurtosis}, {"std_over_mean", d.cv}};
}

StructureStats structure_stats(const std::vector<ingest::Passage>& corpus, const std::vector<ingest::Query>& queries,
                               const std::vector<augment::Chunk>& chunks,
                               const std::vector<augment::PseudoQuery>& pseudo_queries) {
    if (corpus.empty()) throw InvalidArgument("structure statistics need a nonempty corpus");
    StructureStats s;
    s.avg_query_len = average_words(queries, [](const ingest::Query& q) -> const std::string& { return q.text; });
    s.avg_passage_len = average_words(corpus, [](const ingest::Passage& p) -> const std::string& { return p.text; });
    s.len_ratio = s.avg_query_len > 0.0 ? s.avg_passage_len / s.avg_query_len : std::numeric_limits<double>::quiet_NaN();
    const double passages = static_cast<double>(corpus.size());
    s.chunks_per_passage = static_cast<double>(chunks.size()) / passages;
    s.pseudo_queries_per_chunk =
        chunks.empty() ? 0.0 : static_cast<double>(pseudo_queries.size()) / static_cast<double>(chunks.size());
    s.index_expansion_factor = static_cast<double>(pseudo_queries.size()) / passages;
    return s;
}

nlohmann::ordered_json to_json(const StructureStats& s) {
    return {{"avg_query_len", s.avg_query_len},
            {"avg_passage_len", s.avg_passage_len},
            {"p_over_q", s.len_ratio},
            {"c_per_p", s.chunks_per_passage},
            {"pq_per_c", s.pseudo_queries_per_chunk},
            {"index_expansion_factor", s.index_expansion_factor}};
}

std::vector<double> default_alpha_grid() { return parse_alpha_grid("0:1:0.1"); }

std::vector<double> parse_alpha_grid(std::string_view s) {
    std::vector<double> grid;
    if (s.find(':') != std::string_view::npos) {
        auto c1 = s.find(':');
        auto c2 = s.find(':', c1 + 1);
        if (c2 == std::string_view::npos || s.find(':', c2 + 1) != std::string_view::npos)
            throw InvalidArgument("grid range must be start:stop:step");
        const double start = parse_double(s.substr(0, c1));
        const double stop = parse_double(s.substr(c1 + 1, c2 - c1 - 1));
        const double step = parse_double(s.substr(c2 + 1));
        if (!(step > 0.0)) throw InvalidArgument("grid step must be > 0");
        if (stop < start) throw InvalidArgument("grid stop is below start");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) grid.push_back(round12(start + static_cast<double>(i) * step));
    } else {
        std::size_t pos = 0;
        while (pos <= s.size()) {
            auto comma = s.find(',', pos);
            auto item = s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
            grid.push_back(round12(parse_double(item)));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
    }
    if (grid.empty()) throw InvalidArgument("empty alpha grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > 1.0) throw InvalidArgument("alpha grid values must lie in [0, 1]");
        if (i > 0 && grid[i] <= grid[i - 1]) throw InvalidArgument("alpha grid must be strictly increasing");
    }
    return grid;
}

SweepResult alpha_sweep(const retrieve::ScoreTable& global, const retrieve::ScoreTable& local, const QrelIndex& qrels,
                        const std::vector<double>& grid, const MetricSpec& metric, const retrieve::FusionConfig& base) {
    if (grid.empty()) throw InvalidArgument("empty alpha grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > 1.0) throw InvalidArgument("alpha grid values must lie in [0, 1]");
        if (i > 0 && grid[i] <= grid[i - 1]) throw InvalidArgument("alpha grid must be strictly increasing");
    }
    SweepResult out;
    out.metric = metric.name();
    bool first = true;
    for (double alpha : grid) {
        auto config = base;
        config.alpha = alpha;
        auto run = retrieve::rank(retrieve::fuse(global, local, config), "sweep");
        const double value = evaluate_metric(run, qrels, metric).mean;
        out.points.push_back({alpha, value});
        if (first || value >= out.best_value) {
            out.best_alpha = alpha;
            out.best_value = value;
            first = false;
        }
    }
    return out;
}

nlohmann::ordered_json to_json(const SweepResult& s) {
    auto points = nlohmann::ordered_json::array();
    for (const auto& p : s.points) points.push_back({{"alpha", p.alpha}, {"value", p.value}});
    return {{"metric", s.metric}, {"points", points}, {"best_alpha", s.best_alpha}, {"best_value", s.best_value}};
}

std::string to_table(const SweepResult& s) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "alpha" << std::right << std::setw(12) << s.metric << '\n';
    out << std::fixed;
    for (const auto& p : s.points) {
        out << std::left << std::setw(8) << std::setprecision(2) << p.alpha << std::right << std::setw(12)
            << std::setprecision(6) << p.value << (p.alpha == s.best_alpha ? "  *" : "") << '\n';
    }
    return out.str();
}

}  // namespace clap::evaluate
