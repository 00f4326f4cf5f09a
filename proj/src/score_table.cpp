#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "clap/error.hpp"
#include "clap/retrieve.hpp"
#include "clap/text.hpp"

namespace clap::retrieve {

void ScoreTable::add_query(const std::string& query_id) { rows_[query_id]; }

void ScoreTable::set(const std::string& query_id, const std::string& passage_id, double score) {
    if (!std::isfinite(score)) throw InvalidArgument("non-finite score for " + query_id + "/" + passage_id);
    rows_[query_id][passage_id] = score;
}

std::optional<double> ScoreTable::get(const std::string& query_id, const std::string& passage_id) const {
    auto r = rows_.find(query_id);
    if (r == rows_.end()) return std::nullopt;
    auto it = r->second.find(passage_id);
    if (it == r->second.end()) return std::nullopt;
    return it->second;
}

const ScoreTable::Row* ScoreTable::row(const std::string& query_id) const {
    auto r = rows_.find(query_id);
    return r == rows_.end() ? nullptr : &r->second;
}

std::size_t ScoreTable::entries() const {
    std::size_t n = 0;
    for (const auto& [q, row] : rows_) n += row.size();
    return n;
}

ScoreTable ScoreTable::scaled(double factor) const {
    ScoreTable out;
    for (const auto& [q, row] : rows_) {
        out.add_query(q);
        for (const auto& [p, s] : row) out.set(q, p, s * factor);
    }
    return out;
}

bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
}

std::vector<ScoredPassage> ranked(const ScoreTable::Row& row) {
    std::vector<ScoredPassage> out;
    out.reserve(row.size());
    for (const auto& [p, s] : row) out.push_back({p, s});
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

void keep_top_k(std::vector<ScoredPassage>& candidates, std::size_t k) {
    if (candidates.size() > k) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end(),
                          ranks_before);
        candidates.resize(k);
    } else {
        std::sort(candidates.begin(), candidates.end(), ranks_before);
    }
}

std::vector<ingest::RunEntry> rank(const ScoreTable& table, const std::string& tag) {
    std::vector<ingest::RunEntry> out;
    for (const auto& [q, row] : table.rows()) {
        std::size_t r = 0;
        for (auto& sp : ranked(row)) out.push_back(ingest::RunEntry{q, std::move(sp.passage_id), ++r, sp.score, tag});
    }
    return out;
}

ScoreTable table_from_run(const std::vector<ingest::RunEntry>& run) {
    ScoreTable t;
    for (const auto& e : run) t.set(e.query_id, e.passage_id, e.score);
    return t;
}

void write_scores(const ScoreTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    char buf[64];
    for (const auto& [q, row] : table.rows()) {
        for (const auto& sp : ranked(row)) {
            std::snprintf(buf, sizeof buf, "%.9f", sp.score);
            out << q << '\t' << sp.passage_id << '\t' << buf << '\n';
        }
    }
    if (!out) throw Error("write failed for " + path.string());
}

ScoreTable read_scores(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    ScoreTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
            throw ParseError(path.string(), line_no, "expected 3 tab-separated fields");
        auto q = line.substr(0, t1);
        auto p = line.substr(t1 + 1, t2 - t1 - 1);
        auto s = line.substr(t2 + 1);
        char* end = nullptr;
        errno = 0;
        double score = std::strtod(s.c_str(), &end);
        if (q.empty() || p.empty() || s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(score))
            throw ParseError(path.string(), line_no, "malformed score row");
        if (t.get(q, p)) throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": duplicate row " + q + "/" + p);
        t.set(q, p, score);
    }
    return t;
}

}  // namespace clap::retrieve
