#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "clap/error.hpp"
#include "clap/evaluate.hpp"
#include "clap/text.hpp"

namespace clap::evaluate {

namespace {

// Run entries grouped by query, each group in ascending rank order.
std::map<std::string, std::vector<const ingest::RunEntry*>> group_run(const std::vector<ingest::RunEntry>& run) {
    std::map<std::string, std::vector<const ingest::RunEntry*>> out;
    for (const auto& e : run) out[e.query_id].push_back(&e);
    for (auto& [q, rows] : out)
        std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
    return out;
}

int grade(const std::map<std::string, int>& judged, const std::string& passage_id) {
    auto it = judged.find(passage_id);
    return it == judged.end() ? 0 : it->second;
}

std::size_t relevant_count(const std::map<std::string, int>& judged) {
    return static_cast<std::size_t>(
        std::count_if(judged.begin(), judged.end(), [](const auto& kv) { return kv.second > 0; }));
}

// Shared driver: decides which queries are evaluated and averages.
template <typename PerQuery>
MetricReport evaluate_queries(const std::string& name, const std::vector<ingest::RunEntry>& run,
                              const QrelIndex& qrels, PerQuery&& per_query) {
    MetricReport report;
    report.metric = name;
    for (const auto& [q, rows] : group_run(run)) {
        auto judged = qrels.find(q);
        if (judged == qrels.end()) {
            report.warnings.push_back("query " + q + " has no judgments; excluded");
            continue;
        }
        if (relevant_count(judged->second) == 0) continue;
        report.per_query[q] = per_query(rows, judged->second);
    }
    if (report.per_query.empty()) {
        report.warnings.push_back("no evaluable queries");
        return report;
    }
    double sum = 0.0;
    for (const auto& [q, v] : report.per_query) sum += v;
    report.mean = sum / static_cast<double>(report.per_query.size());
    return report;
}

double gain_value(int rel, GainForm form) {
    if (rel <= 0) return 0.0;
    return form == GainForm::exponential ? std::exp2(static_cast<double>(rel)) - 1.0 : static_cast<double>(rel);
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

QrelIndex index_qrels(const std::vector<ingest::Qrel>& qrels) {
    QrelIndex out;
    for (const auto& r : qrels) out[r.query_id][r.passage_id] = r.relevance;
    return out;
}

std::string MetricSpec::name() const {
    const char* base = kind == MetricKind::ndcg ? "ndcg" : kind == MetricKind::mrr ? "mrr" : "recall";
    return std::string(base) + "@" + std::to_string(k);
}

MetricSpec parse_metric(std::string_view s) {
    auto lower = text::to_lower(s);
    auto at = lower.find('@');
    if (at == std::string::npos) throw InvalidArgument("metric must look like ndcg@10, got '" + std::string(s) + "'");
    auto base = lower.substr(0, at);
    auto k_text = lower.substr(at + 1);
    MetricSpec spec;
    if (base == "ndcg") {
        spec.kind = MetricKind::ndcg;
    } else if (base == "mrr") {
        spec.kind = MetricKind::mrr;
    } else if (base == "recall") {
        spec.kind = MetricKind::recall;
    } else {
        throw InvalidArgument("unknown metric '" + base + "'");
    }
    if (k_text.empty() || !std::all_of(k_text.begin(), k_text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }))
        throw InvalidArgument("metric cutoff must be a positive integer");
    spec.k = std::stoul(k_text);
    if (spec.k == 0) throw InvalidArgument("metric cutoff must be a positive integer");
    return spec;
}

MetricReport ndcg_at_k(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, std::size_t k, GainForm gain) {
    return evaluate_queries("ndcg@" + std::to_string(k), run, qrels, [&](const auto& rows, const auto& judged) {
        double dcg = 0.0;
        for (std::size_t i = 0; i < rows.size() && i < k; ++i)
            dcg += gain_value(grade(judged, rows[i]->passage_id), gain) / std::log2(static_cast<double>(i) + 2.0);
        std::vector<int> ideal;
        for (const auto& [p, rel] : judged)
            if (rel > 0) ideal.push_back(rel);
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t i = 0; i < ideal.size() && i < k; ++i)
            idcg += gain_value(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
        return dcg / idcg;
    });
}

MetricReport mrr_at_k(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, std::size_t k) {
    return evaluate_queries("mrr@" + std::to_string(k), run, qrels, [&](const auto& rows, const auto& judged) {
        for (std::size_t i = 0; i < rows.size() && i < k; ++i)
            if (grade(judged, rows[i]->passage_id) > 0) return 1.0 / static_cast<double>(i + 1);
        return 0.0;
    });
}

MetricReport recall_at_k(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, std::size_t k) {
    return evaluate_queries("recall@" + std::to_string(k), run, qrels, [&](const auto& rows, const auto& judged) {
        std::set<std::string> found;
        for (std::size_t i = 0; i < rows.size() && i < k; ++i)
            if (grade(judged, rows[i]->passage_id) > 0) found.insert(rows[i]->passage_id);
        return static_cast<double>(found.size()) / static_cast<double>(relevant_count(judged));
    });
}

MetricReport evaluate_metric(const std::vector<ingest::RunEntry>& run, const QrelIndex& qrels, const MetricSpec& spec) {
    switch (spec.kind) {
        case MetricKind::ndcg: return ndcg_at_k(run, qrels, spec.k);
        case MetricKind::mrr: return mrr_at_k(run, qrels, spec.k);
        case MetricKind::recall: return recall_at_k(run, qrels, spec.k);
    }
    throw InvalidArgument("unknown metric kind");
}

nlohmann::ordered_json to_json(const MetricReport& report) {
    nlohmann::ordered_json per_query = nlohmann::ordered_json::object();
    for (const auto& [q, v] : report.per_query) per_query[q] = v;
    return {{"metric", report.metric},
            {"queries", report.per_query.size()},
            {"mean", report.mean},
            {"per_query", per_query},
            {"warnings", report.warnings}};
}

std::string to_table(const std::vector<MetricReport>& reports) {
    std::set<std::string> queries;
    std::size_t width = 3;
    for (const auto& r : reports)
        for (const auto& [q, v] : r.per_query) {
            queries.insert(q);
            width = std::max(width, q.size());
        }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "qid";
    for (const auto& r : reports) out << "  " << std::right << std::setw(12) << r.metric;
    out << '\n';
    auto row = [&](const std::string& label, auto&& value_of) {
        out << std::left << std::setw(static_cast<int>(width)) << label;
        for (const auto& r : reports) out << "  " << std::right << std::setw(12) << value_of(r);
        out << '\n';
    };
    for (const auto& q : queries)
        row(q, [&](const MetricReport& r) {
            auto it = r.per_query.find(q);
            return it == r.per_query.end() ? std::string("-") : format_fixed(it->second, 6);
        });
    row("all", [](const MetricReport& r) { return format_fixed(r.mean, 6); });
    return out.str();
}

}  // namespace clap::evaluate
