#include "clap/ingest.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "clap/error.hpp"
#include "clap/random.hpp"
#include "clap/text.hpp"

namespace clap::ingest {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

// Calls fn(line, line_no) for each non-blank line, with any trailing CR removed.
template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    auto in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        fn(line, line_no);
    }
}

json parse_object(const std::string& line, const std::filesystem::path& path, std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), line_no, e.what());
    }
    if (!obj.is_object()) throw ParseError(path.string(), line_no, "expected a JSON object");
    return obj;
}

std::string required_string(const json& obj, const char* key, const std::filesystem::path& path,
                            std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path.string(), line_no, std::string("missing field \"") + key + "\"");
    if (!it->is_string()) throw ParseError(path.string(), line_no, std::string("field \"") + key + "\" is not a string");
    return it->get<std::string>();
}

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

}  // namespace

Passage make_passage(std::string id, std::optional<std::string> title, std::string text) {
    Passage p{std::move(id), std::move(title), std::move(text), 0};
    p.word_count = text::count_words(p.text);
    return p;
}

std::vector<Passage> load_corpus(const std::filesystem::path& path) {
    std::vector<Passage> out;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        auto obj = parse_object(line, path, line_no);
        auto id = required_string(obj, "_id", path, line_no);
        if (id.empty()) throw ParseError(path.string(), line_no, "empty \"_id\"");
        auto body = required_string(obj, "text", path, line_no);
        std::optional<std::string> title;
        if (auto it = obj.find("title"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) throw ParseError(path.string(), line_no, "field \"title\" is not a string");
            title = it->get<std::string>();
        }
        if (!seen.insert(id).second) throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": duplicate passage id '" + id + "'");
        out.push_back(make_passage(std::move(id), std::move(title), std::move(body)));
    });
    return out;
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
    std::vector<Query> out;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        auto obj = parse_object(line, path, line_no);
        auto id = required_string(obj, "_id", path, line_no);
        if (id.empty()) throw ParseError(path.string(), line_no, "empty \"_id\"");
        auto body = required_string(obj, "text", path, line_no);
        if (text::trim(body).empty()) throw ParseError(path.string(), line_no, "empty query text");
        if (!seen.insert(id).second) throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": duplicate query id '" + id + "'");
        out.push_back(Query{std::move(id), std::move(body)});
    });
    return out;
}

std::vector<Qrel> load_qrels(const std::filesystem::path& path) {
    std::vector<Qrel> out;
    std::set<std::pair<std::string, std::string>> seen;
    bool first = true;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        const bool was_first = first;
        first = false;
        if (was_first && line.rfind("query-id", 0) == 0) return;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3) throw ParseError(path.string(), line_no, "expected 3 tab-separated fields");
        const auto& rel_text = fields[2];
        char* end = nullptr;
        errno = 0;
        long rel = std::strtol(rel_text.c_str(), &end, 10);
        if (rel_text.empty() || end != rel_text.c_str() + rel_text.size() || errno == ERANGE)
            throw ParseError(path.string(), line_no, "relevance '" + rel_text + "' is not an integer");
        if (rel < 0) throw ParseError(path.string(), line_no, "negative relevance");
        if (fields[0].empty() || fields[1].empty()) throw ParseError(path.string(), line_no, "empty id");
        if (!seen.emplace(fields[0], fields[1]).second)
            throw IntegrityError(path.string() + ":" + std::to_string(line_no) + ": duplicate judgment " + fields[0] + "/" + fields[1]);
        out.push_back(Qrel{fields[0], fields[1], static_cast<int>(rel)});
    });
    return out;
}

void write_corpus(const std::vector<Passage>& corpus, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& p : corpus) {
        json obj;
        obj["_id"] = p.id;
        if (p.title) obj["title"] = *p.title;
        obj["text"] = p.text;
        out << obj.dump() << '\n';
    }
}

void write_queries(const std::vector<Query>& queries, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& q : queries) out << json{{"_id", q.id}, {"text", q.text}}.dump() << '\n';
}

void write_qrels(const std::vector<Qrel>& qrels, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "query-id\tcorpus-id\tscore\n";
    for (const auto& r : qrels) out << r.query_id << '\t' << r.passage_id << '\t' << r.relevance << '\n';
}

void validate_run(const std::vector<RunEntry>& entries) {
    std::map<std::string, std::vector<const RunEntry*>> by_query;
    for (const auto& e : entries) {
        if (e.query_id.empty() || e.passage_id.empty() || e.tag.empty() || has_space(e.query_id) ||
            has_space(e.passage_id) || has_space(e.tag))
            throw IntegrityError("run entry ids and tag must be nonempty and contain no whitespace");
        if (!std::isfinite(e.score)) throw IntegrityError("non-finite score for " + e.query_id + "/" + e.passage_id);
        by_query[e.query_id].push_back(&e);
    }
    for (auto& [qid, rows] : by_query) {
        std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
        std::unordered_set<std::string> docs;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i]->rank != i + 1)
                throw IntegrityError("query " + qid + ": ranks must be 1.." + std::to_string(rows.size()) +
                                     " without gaps or duplicates");
            if (i > 0 && rows[i]->score > rows[i - 1]->score)
                throw IntegrityError("query " + qid + ": score increases at rank " + std::to_string(i + 1));
            if (!docs.insert(rows[i]->passage_id).second)
                throw IntegrityError("query " + qid + ": passage " + rows[i]->passage_id + " listed twice");
        }
    }
}

std::string format_run_line(const RunEntry& e) {
    char score[64];
    std::snprintf(score, sizeof score, "%.6f", e.score);
    return e.query_id + " Q0 " + e.passage_id + " " + std::to_string(e.rank) + " " + score + " " + e.tag;
}

void write_run(const std::vector<RunEntry>& entries, const std::filesystem::path& path) {
    validate_run(entries);
    auto out = open_out(path);
    for (const auto& e : entries) out << format_run_line(e) << '\n';
}

std::vector<RunEntry> read_run(const std::filesystem::path& path) {
    std::vector<RunEntry> out;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        auto f = text::split_whitespace(line);
        if (f.size() != 6) throw ParseError(path.string(), line_no, "expected 6 fields");
        std::string rank_text(f[3]);
        std::string score_text(f[4]);
        char* end = nullptr;
        errno = 0;
        long long rank = std::strtoll(rank_text.c_str(), &end, 10);
        if (end != rank_text.c_str() + rank_text.size() || errno == ERANGE || rank < 1)
            throw ParseError(path.string(), line_no, "bad rank '" + rank_text + "'");
        errno = 0;
        double score = std::strtod(score_text.c_str(), &end);
        if (end != score_text.c_str() + score_text.size() || errno == ERANGE || !std::isfinite(score))
            throw ParseError(path.string(), line_no, "bad score '" + score_text + "'");
        out.push_back(RunEntry{std::string(f[0]), std::string(f[2]), static_cast<std::size_t>(rank), score,
                               std::string(f[5])});
    });
    return out;
}

Subset subset(const std::vector<Passage>& corpus, const std::vector<Query>& queries,
              const std::vector<Qrel>& qrels, std::size_t n_queries, std::uint64_t seed,
              std::size_t n_distractors) {
    std::unordered_set<std::string> judged_ids;
    for (const auto& r : qrels) judged_ids.insert(r.query_id);
    std::vector<std::size_t> judged;
    for (std::size_t i = 0; i < queries.size(); ++i)
        if (judged_ids.count(queries[i].id) != 0) judged.push_back(i);
    if (n_queries > judged.size())
        throw InvalidArgument("requested " + std::to_string(n_queries) + " queries but only " +
                              std::to_string(judged.size()) + " are judged");

    std::mt19937_64 rng(seed);
    seeded_shuffle(judged, rng);
    judged.resize(n_queries);
    std::sort(judged.begin(), judged.end());

    Subset out;
    std::unordered_set<std::string> kept_queries;
    for (auto i : judged) {
        out.queries.push_back(queries[i]);
        kept_queries.insert(queries[i].id);
    }

    std::unordered_set<std::string> needed;
    for (const auto& r : qrels)
        if (kept_queries.count(r.query_id) != 0) needed.insert(r.passage_id);

    std::vector<std::size_t> keep;
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        (needed.count(corpus[i].id) != 0 ? keep : others).push_back(i);
    seeded_shuffle(others, rng);
    others.resize(std::min(others.size(), n_distractors));
    keep.insert(keep.end(), others.begin(), others.end());
    std::sort(keep.begin(), keep.end());

    std::unordered_set<std::string> kept_passages;
    for (auto i : keep) {
        out.corpus.push_back(corpus[i]);
        kept_passages.insert(corpus[i].id);
    }
    for (const auto& r : qrels)
        if (kept_queries.count(r.query_id) != 0 && kept_passages.count(r.passage_id) != 0) out.qrels.push_back(r);
    return out;
}

}  // namespace clap::ingest
