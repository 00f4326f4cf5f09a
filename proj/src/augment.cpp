#include "clap/augment.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "clap/error.hpp"
#include "clap/json_extract.hpp"
#include "clap/prompts.hpp"
#include "clap/text.hpp"

namespace clap::augment {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kFallbackTitleWords = 8;

std::optional<std::vector<Chunk>> parse_chunks(const std::string& raw, const std::string& passage_id) {
    auto array = extract_json_array(raw);
    if (!array) return std::nullopt;
    std::vector<Chunk> out;
    for (const auto& item : *array) {
        if (!item.is_object()) return std::nullopt;
        auto text_it = item.find("chunk_text");
        if (text_it == item.end() || !text_it->is_string()) return std::nullopt;
        auto body = std::string(text::trim(text_it->get<std::string>()));
        if (body.empty()) return std::nullopt;
        std::string title;
        if (auto t = item.find("chunk_title"); t != item.end() && t->is_string())
            title = std::string(text::trim(t->get<std::string>()));
        if (title.empty()) title = text::first_words(body, kFallbackTitleWords);
        // Agent-supplied ids are not trusted; labels are reassigned in order.
        out.push_back(Chunk{passage_id, chunk_label(out.size()), std::move(title), std::move(body), true});
    }
    return out;
}

std::optional<std::vector<std::string>> parse_pseudo_queries(const std::string& raw) {
    auto array = extract_json_array(raw);
    if (!array) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& item : *array) {
        std::string q;
        if (item.is_string()) {
            q = item.get<std::string>();
        } else if (item.is_object() && item.contains("pseudo_query") && item["pseudo_query"].is_string()) {
            q = item["pseudo_query"].get<std::string>();
        } else {
            return std::nullopt;
        }
        auto trimmed = text::trim(q);
        if (!trimmed.empty()) out.emplace_back(trimmed);
    }
    return out;
}

// Calls the agent up to max_retries + 1 times until parse() yields a value.
template <typename Parse>
auto call_with_retries(TextAgent& agent, const std::string& prompt, const AgentConfig& config,
                       std::size_t& calls, Parse&& parse) -> decltype(parse(std::string())) {
    const int attempts = config.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::string raw;
        ++calls;
        try {
            raw = agent.complete(prompt, config.temperature);
        } catch (const TransportError&) {
            if (attempt + 1 == attempts) throw;
            continue;
        }
        if (auto parsed = parse(raw)) return parsed;
    }
    return std::nullopt;
}

ordered_json chunk_to_json(const Chunk& c) {
    return ordered_json{{"passage_id", c.passage_id},
                        {"chunk_id", c.chunk_id},
                        {"chunk_title", c.title},
                        {"chunk_text", c.text},
                        {"coref_resolved", c.coref_resolved}};
}

ordered_json pseudo_query_to_json(const PseudoQuery& q) {
    return ordered_json{
        {"id", q.id}, {"passage_id", q.passage_id}, {"chunk_id", q.chunk_id}, {"pseudo_query", q.text}};
}

Chunk chunk_from_json(const json& j) {
    return Chunk{j.at("passage_id").get<std::string>(), j.at("chunk_id").get<std::string>(),
                 j.at("chunk_title").get<std::string>(), j.at("chunk_text").get<std::string>(),
                 j.value("coref_resolved", false)};
}

PseudoQuery pseudo_query_from_json(const json& j) {
    return PseudoQuery{j.at("id").get<std::string>(), j.at("passage_id").get<std::string>(),
                       j.at("chunk_id").get<std::string>(), j.at("pseudo_query").get<std::string>()};
}

// strict: malformed lines throw ParseError; otherwise they are skipped, which
// is how a partially written sidecar line from an interrupted run is dropped.
template <typename T, typename Decode>
std::vector<T> read_jsonl(const std::filesystem::path& path, bool strict, Decode&& decode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (strict) throw Error("cannot open " + path.string());
        return {};
    }
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(decode(json::parse(line)));
        } catch (const json::exception& e) {
            if (strict) throw ParseError(path.string(), line_no, e.what());
        }
    }
    return out;
}

ChunkOrigin origin_from_string(const std::string& s) {
    if (s == "skipped") return ChunkOrigin::skipped;
    if (s == "fallback") return ChunkOrigin::fallback;
    return ChunkOrigin::agent;
}

struct PassageOutput {
    std::vector<Chunk> chunks;
    std::vector<PseudoQuery> pseudo_queries;
    ChunkOrigin origin = ChunkOrigin::agent;
    std::size_t pseudo_query_fallbacks = 0;
    std::size_t agent_calls = 0;
    bool resumed = false;
};

PassageOutput process_passage(const ingest::Passage& passage, const AgentConfig& config, TextAgent& agent) {
    PassageOutput out;
    auto chunked = chunk_and_resolve(passage, config, agent);
    out.origin = chunked.origin;
    out.agent_calls = chunked.agent_calls;
    for (const auto& chunk : chunked.chunks) {
        auto generated = generate_pseudo_queries(chunk, config, agent);
        out.agent_calls += generated.agent_calls;
        if (generated.degraded) ++out.pseudo_query_fallbacks;
        out.pseudo_queries.insert(out.pseudo_queries.end(), generated.queries.begin(), generated.queries.end());
    }
    out.chunks = std::move(chunked.chunks);
    return out;
}

ordered_json progress_to_json(const std::string& passage_id, const PassageOutput& out) {
    return ordered_json{{"passage_id", passage_id},
                        {"origin", std::string(to_string(out.origin))},
                        {"pseudo_query_fallbacks", out.pseudo_query_fallbacks}};
}

class SidecarWriter {
public:
    SidecarWriter(const std::filesystem::path& dir, std::ios::openmode mode)
        : chunks_(dir / kChunksFile, std::ios::binary | mode),
          pseudo_queries_(dir / kPseudoQueriesFile, std::ios::binary | mode),
          progress_(dir / kProgressFile, std::ios::binary | mode) {
        if (!chunks_ || !pseudo_queries_ || !progress_) throw Error("cannot open sidecar files in " + dir.string());
    }

    // Progress is written last so a recorded passage always has both sidecars complete.
    void append(const std::string& passage_id, const PassageOutput& out) {
        for (const auto& q : out.pseudo_queries) pseudo_queries_ << pseudo_query_to_json(q).dump() << '\n';
        for (const auto& c : out.chunks) chunks_ << chunk_to_json(c).dump() << '\n';
        pseudo_queries_.flush();
        chunks_.flush();
        progress_ << progress_to_json(passage_id, out).dump() << '\n';
        progress_.flush();
        if (!chunks_ || !pseudo_queries_ || !progress_) throw Error("sidecar write failed");
    }

private:
    std::ofstream chunks_;
    std::ofstream pseudo_queries_;
    std::ofstream progress_;
};

void rewrite_sidecars(const std::filesystem::path& dir, const std::vector<ingest::Passage>& corpus,
                      const std::vector<std::optional<PassageOutput>>& results) {
    SidecarWriter writer(dir, std::ios::trunc);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (results[i]) writer.append(corpus[i].id, *results[i]);
}

void load_resumable(const std::filesystem::path& dir, const std::vector<ingest::Passage>& corpus,
                    std::vector<std::optional<PassageOutput>>& results) {
    auto progress = read_jsonl<json>(dir / kProgressFile, false, [](json j) { return j; });
    if (progress.empty()) return;
    std::unordered_map<std::string, const json*> done;
    for (const auto& p : progress)
        if (p.contains("passage_id") && p["passage_id"].is_string()) done[p["passage_id"].get<std::string>()] = &p;

    std::unordered_map<std::string, std::vector<Chunk>> chunks;
    for (auto& c : read_jsonl<Chunk>(dir / kChunksFile, false, chunk_from_json))
        if (done.count(c.passage_id) != 0) chunks[c.passage_id].push_back(std::move(c));
    std::unordered_map<std::string, std::vector<PseudoQuery>> queries;
    for (auto& q : read_jsonl<PseudoQuery>(dir / kPseudoQueriesFile, false, pseudo_query_from_json))
        if (done.count(q.passage_id) != 0) queries[q.passage_id].push_back(std::move(q));

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto it = done.find(corpus[i].id);
        if (it == done.end() || chunks[corpus[i].id].empty()) continue;
        PassageOutput out;
        out.chunks = std::move(chunks[corpus[i].id]);
        out.pseudo_queries = std::move(queries[corpus[i].id]);
        out.origin = origin_from_string(it->second->value("origin", std::string("agent")));
        out.pseudo_query_fallbacks = it->second->value("pseudo_query_fallbacks", std::size_t{0});
        out.resumed = true;
        results[i] = std::move(out);
    }
}

}  // namespace

std::string chunk_label(std::size_t index) {
    std::string label;
    std::size_t n = index + 1;
    while (n > 0) {
        --n;
        label.insert(label.begin(), static_cast<char>('a' + n % 26));
        n /= 26;
    }
    return label;
}

std::string_view to_string(ChunkOrigin origin) {
    switch (origin) {
        case ChunkOrigin::agent: return "agent";
        case ChunkOrigin::skipped: return "skipped";
        case ChunkOrigin::fallback: return "fallback";
    }
    return "agent";
}

Chunk whole_passage_chunk(const ingest::Passage& passage) {
    std::string title = passage.title ? std::string(text::trim(*passage.title)) : std::string();
    if (title.empty()) title = text::first_words(passage.text, kFallbackTitleWords);
    return Chunk{passage.id, chunk_label(0), std::move(title), passage.text, true};
}

ChunkingResult chunk_and_resolve(const ingest::Passage& passage, const AgentConfig& config, TextAgent& agent) {
    if (text::trim(passage.text).empty()) throw InvalidArgument("passage " + passage.id + " has empty text");
    if (passage.word_count > config.skip_word_threshold)
        return ChunkingResult{{whole_passage_chunk(passage)}, ChunkOrigin::skipped, 0};

    ChunkingResult result;
    auto prompt = render_chunking_prompt(passage.text);
    auto chunks = call_with_retries(agent, prompt, config, result.agent_calls,
                                    [&](const std::string& raw) -> std::optional<std::vector<Chunk>> {
                                        auto parsed = parse_chunks(raw, passage.id);
                                        if (!parsed || parsed->empty()) return std::nullopt;
                                        return parsed;
                                    });
    if (chunks) {
        result.chunks = std::move(*chunks);
        result.origin = ChunkOrigin::agent;
    } else {
        result.chunks = {whole_passage_chunk(passage)};
        result.origin = ChunkOrigin::fallback;
    }
    return result;
}

PseudoQueryResult generate_pseudo_queries(const Chunk& chunk, const AgentConfig& config, TextAgent& agent) {
    if (!chunk.coref_resolved)
        throw InvalidArgument("chunk " + chunk.passage_id + "/" + chunk.chunk_id + " is not coreference-resolved");
    PseudoQueryResult result;
    auto prompt = render_pseudo_query_prompt(chunk.title, chunk.text);
    auto texts = call_with_retries(agent, prompt, config, result.agent_calls, parse_pseudo_queries);
    if (!texts) {
        result.degraded = true;
        return result;
    }
    for (std::size_t i = 0; i < texts->size(); ++i)
        result.queries.push_back(PseudoQuery{chunk.passage_id + "::" + chunk.chunk_id + "::" + std::to_string(i),
                                             chunk.passage_id, chunk.chunk_id, std::move((*texts)[i])});
    return result;
}

double AugmentStats::chunks_per_passage() const {
    return passages == 0 ? 0.0 : static_cast<double>(chunks) / static_cast<double>(passages);
}

double AugmentStats::pseudo_queries_per_chunk() const {
    return chunks == 0 ? 0.0 : static_cast<double>(pseudo_queries) / static_cast<double>(chunks);
}

AugmentResult augment_corpus(const std::vector<ingest::Passage>& corpus, const AgentConfig& config,
                             TextAgent& agent, const std::optional<std::filesystem::path>& sidecar_dir) {
    config.validate();
    {
        std::unordered_set<std::string> ids;
        for (const auto& p : corpus)
            if (!ids.insert(p.id).second) throw IntegrityError("duplicate passage id '" + p.id + "'");
    }

    std::vector<std::optional<PassageOutput>> results(corpus.size());
    std::optional<SidecarWriter> writer;
    if (sidecar_dir) {
        std::filesystem::create_directories(*sidecar_dir);
        load_resumable(*sidecar_dir, corpus, results);
        // Drop lines of passages that never reached the progress log.
        rewrite_sidecars(*sidecar_dir, corpus, results);
        writer.emplace(*sidecar_dir, std::ios::app);
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (!results[i]) pending.push_back(i);

    std::mutex mutex;
    std::size_t next = 0;
    std::exception_ptr failure;
    auto worker = [&] {
        while (true) {
            std::size_t index;
            {
                std::lock_guard lock(mutex);
                if (failure || next == pending.size()) return;
                index = pending[next++];
            }
            try {
                auto out = process_passage(corpus[index], config, agent);
                std::lock_guard lock(mutex);
                if (writer) writer->append(corpus[index].id, out);
                results[index] = std::move(out);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.concurrency_limit), pending.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    if (sidecar_dir) {
        writer.reset();
        rewrite_sidecars(*sidecar_dir, corpus, results);
    }

    AugmentResult out;
    out.stats.passages = corpus.size();
    for (auto& r : results) {
        out.stats.chunks += r->chunks.size();
        out.stats.pseudo_queries += r->pseudo_queries.size();
        out.stats.skipped += r->origin == ChunkOrigin::skipped ? 1 : 0;
        out.stats.chunk_fallbacks += r->origin == ChunkOrigin::fallback ? 1 : 0;
        out.stats.pseudo_query_fallbacks += r->pseudo_query_fallbacks;
        out.stats.resumed += r->resumed ? 1 : 0;
        out.stats.agent_calls += r->agent_calls;
        std::move(r->chunks.begin(), r->chunks.end(), std::back_inserter(out.chunks));
        std::move(r->pseudo_queries.begin(), r->pseudo_queries.end(), std::back_inserter(out.pseudo_queries));
    }
    return out;
}

std::vector<Chunk> load_chunks(const std::filesystem::path& path) {
    return read_jsonl<Chunk>(path, true, chunk_from_json);
}

std::vector<PseudoQuery> load_pseudo_queries(const std::filesystem::path& path) {
    return read_jsonl<PseudoQuery>(path, true, pseudo_query_from_json);
}

void write_chunks(const std::vector<Chunk>& chunks, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& c : chunks) out << chunk_to_json(c).dump() << '\n';
}

void write_pseudo_queries(const std::vector<PseudoQuery>& queries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& q : queries) out << pseudo_query_to_json(q).dump() << '\n';
}

CostEstimate estimate_cost(const CorpusProfile& profile, const CostModel& model) {
    if (profile.passages == 0 || profile.avg_passage_tokens == 0 || profile.avg_chunks == 0)
        throw InvalidArgument("cost estimate needs positive passage, token and chunk counts");
    if (model.input_price_per_token < 0.0 || model.output_price_per_token < 0.0)
        throw InvalidArgument("token prices must be nonnegative");

    CostEstimate e;
    e.input_tokens_per_passage = model.chunking_prompt_tokens + profile.avg_passage_tokens +
                                 profile.avg_chunks * (model.per_chunk_query_prompt_tokens + model.per_chunk_input_tokens);
    e.output_tokens_per_passage = model.chunking_output_tokens + profile.avg_chunks * model.per_chunk_output_tokens;
    e.total_input_tokens = e.input_tokens_per_passage * profile.passages;
    e.total_output_tokens = e.output_tokens_per_passage * profile.passages;
    e.cost_per_passage = static_cast<double>(e.input_tokens_per_passage) * model.input_price_per_token +
                         static_cast<double>(e.output_tokens_per_passage) * model.output_price_per_token;
    e.total_cost = e.cost_per_passage * static_cast<double>(profile.passages);
    return e;
}

}  // namespace clap::augment
