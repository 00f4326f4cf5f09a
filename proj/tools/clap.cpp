// clap: command-line driver for the offline retrieval pipeline.
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clap/augment.hpp"
#include "clap/embed.hpp"
#include "clap/error.hpp"
#include "clap/evaluate.hpp"
#include "clap/ingest.hpp"
#include "clap/manifest.hpp"
#include "clap/retrieve.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void ensure_parent(const fs::path& path) {
    if (!path.empty() && path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& content) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw clap::Error("cannot write " + path.string());
    out << content;
    if (!out) throw clap::Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path sidecar_manifest(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void record(const std::string& subcommand, ordered_json params, const std::vector<fs::path>& inputs,
            const std::vector<fs::path>& outputs, const fs::path& manifest_path) {
    std::vector<std::string> names;
    for (const auto& o : outputs) names.push_back(o.string());
    clap::manifest::write_manifest(clap::manifest::make_manifest(subcommand, std::move(params), inputs, names),
                                   manifest_path);
}

std::vector<std::string> query_ids(const std::vector<clap::ingest::Query>& queries) {
    std::vector<std::string> ids;
    ids.reserve(queries.size());
    for (const auto& q : queries) ids.push_back(q.id);
    return ids;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

clap::evaluate::GainForm parse_gain(const std::string& s) {
    if (s == "exponential") return clap::evaluate::GainForm::exponential;
    if (s == "linear") return clap::evaluate::GainForm::linear;
    throw clap::InvalidArgument("gain must be exponential or linear, got '" + s + "'");
}

// ---- augment ---------------------------------------------------------------

struct AugmentOpts {
    fs::path corpus;
    fs::path out_dir;
    std::string agent = "mock";
    clap::augment::AgentConfig config;
};

void run_augment(const AugmentOpts& o) {
    o.config.validate();
    std::unique_ptr<clap::augment::TextAgent> agent;
    if (o.agent == "mock") {
        agent = std::make_unique<clap::augment::MockAgent>();
    } else {
        if (o.config.endpoint_url.empty() || o.config.model_name.empty())
            throw clap::InvalidArgument("--agent http needs --endpoint and --model");
        agent = std::make_unique<clap::augment::HttpChatAgent>(o.config);
    }
    auto corpus = clap::ingest::load_corpus(o.corpus);
    fs::create_directories(o.out_dir);
    auto result = clap::augment::augment_corpus(corpus, o.config, *agent, o.out_dir);
    const auto& s = result.stats;
    std::printf("passages %zu  chunks %zu  pseudo-queries %zu  skipped %zu  chunk fallbacks %zu  "
                "query fallbacks %zu  resumed %zu  agent calls %zu\n",
                s.passages, s.chunks, s.pseudo_queries, s.skipped, s.chunk_fallbacks, s.pseudo_query_fallbacks,
                s.resumed, s.agent_calls);

    ordered_json params = {{"corpus", o.corpus.string()},
                           {"out_dir", o.out_dir.string()},
                           {"agent", o.agent},
                           {"endpoint", o.config.endpoint_url},
                           {"model", o.config.model_name},
                           {"temperature", o.config.temperature},
                           {"max_retries", o.config.max_retries},
                           {"concurrency", o.config.concurrency_limit},
                           {"skip_words", o.config.skip_word_threshold}};
    record("augment", params, {o.corpus},
           {o.out_dir / clap::augment::kChunksFile, o.out_dir / clap::augment::kPseudoQueriesFile},
           o.out_dir / "manifest.json");
}

// ---- embed -----------------------------------------------------------------

struct EmbedOpts {
    fs::path input;
    std::string kind = "corpus";
    fs::path out;
    std::string encoder = "hashing";
    std::size_t dim = 256;
    std::uint64_t seed = 0;
    std::string url;
    std::size_t batch_size = 64;
    bool raw = false;
};

void run_embed(const EmbedOpts& o) {
    std::vector<clap::embed::TextItem> items;
    auto role = clap::embed::EncodeRole::query;
    if (o.kind == "corpus") {
        role = clap::embed::EncodeRole::passage;
        for (auto& p : clap::ingest::load_corpus(o.input))
            items.push_back({p.id, p.title ? *p.title + " " + p.text : p.text});
    } else if (o.kind == "queries") {
        for (auto& q : clap::ingest::load_queries(o.input)) items.push_back({q.id, q.text});
    } else if (o.kind == "pseudo-queries") {
        for (auto& q : clap::augment::load_pseudo_queries(o.input)) items.push_back({q.id, q.text});
    } else {
        throw clap::InvalidArgument("--kind must be corpus, queries or pseudo-queries");
    }

    std::unique_ptr<clap::embed::Encoder> encoder;
    if (o.encoder == "hashing") {
        encoder = std::make_unique<clap::embed::HashingEncoder>(o.dim, o.seed);
    } else {
        if (o.url.empty()) throw clap::InvalidArgument("--encoder http needs --url");
        encoder = std::make_unique<clap::embed::HttpEncoder>(o.url);
    }
    auto store = clap::embed::build_store(items, *encoder, !o.raw, role, o.batch_size);
    clap::embed::save_store(store, o.out);
    std::printf("%zu vectors of dim %zu -> %s\n", store.size(), store.dim(), o.out.string().c_str());

    ordered_json params = {{"input", o.input.string()}, {"kind", o.kind},       {"out", o.out.string()},
                           {"encoder", o.encoder},      {"dim", store.dim()},    {"seed", o.seed},
                           {"url", o.url},              {"batch_size", o.batch_size}, {"normalized", !o.raw},
                           {"role", std::string(clap::embed::to_string(role))}};
    record("embed", params, {o.input}, {o.out}, sidecar_manifest(o.out));
}

// ---- score-global ----------------------------------------------------------

struct GlobalOpts {
    std::string method = "dense";
    fs::path queries;
    fs::path corpus;
    fs::path query_vectors;
    fs::path passage_vectors;
    fs::path out;
    std::size_t top_k = 1000;
    clap::retrieve::Bm25Params bm25;
};

void run_score_global(const GlobalOpts& o) {
    auto queries = clap::ingest::load_queries(o.queries);
    auto corpus = clap::ingest::load_corpus(o.corpus);
    clap::retrieve::ScoreTable table;
    std::vector<fs::path> inputs{o.queries, o.corpus};
    ordered_json params = {{"method", o.method},
                           {"queries", o.queries.string()},
                           {"corpus", o.corpus.string()},
                           {"out", o.out.string()},
                           {"top_k", o.top_k}};
    if (o.method == "bm25") {
        table = clap::retrieve::bm25_scores(queries, corpus, o.bm25, o.top_k);
        params["k1"] = o.bm25.k1;
        params["b"] = o.bm25.b;
    } else if (o.method == "dense") {
        if (o.query_vectors.empty() || o.passage_vectors.empty())
            throw clap::InvalidArgument("dense scoring needs --query-vectors and --passage-vectors");
        auto qv = clap::embed::load_store(o.query_vectors);
        auto pv = clap::embed::load_store(o.passage_vectors);
        std::vector<std::string> passage_ids;
        for (const auto& p : corpus) passage_ids.push_back(p.id);
        table = clap::retrieve::global_scores(query_ids(queries), passage_ids, qv, pv, o.top_k);
        inputs.push_back(o.query_vectors);
        inputs.push_back(o.passage_vectors);
        params["query_vectors"] = o.query_vectors.string();
        params["passage_vectors"] = o.passage_vectors.string();
    } else {
        throw clap::InvalidArgument("--method must be dense or bm25");
    }
    clap::retrieve::write_scores(table, o.out);
    std::printf("%zu scores for %zu queries -> %s\n", table.entries(), table.rows().size(), o.out.string().c_str());
    record("score-global", params, inputs, {o.out}, sidecar_manifest(o.out));
}

// ---- score-local -----------------------------------------------------------

struct LocalOpts {
    fs::path queries;
    fs::path query_vectors;
    fs::path pseudo_queries;
    fs::path pseudo_query_vectors;
    fs::path out;
    std::size_t top_k = 1000;
};

void run_score_local(const LocalOpts& o) {
    auto queries = clap::ingest::load_queries(o.queries);
    auto pqs = clap::augment::load_pseudo_queries(o.pseudo_queries);
    auto qv = clap::embed::load_store(o.query_vectors);
    auto pqv = clap::embed::load_store(o.pseudo_query_vectors);
    auto table = clap::retrieve::local_scores(query_ids(queries), pqs, qv, pqv, o.top_k);
    clap::retrieve::write_scores(table, o.out);
    std::printf("%zu scores for %zu queries -> %s\n", table.entries(), table.rows().size(), o.out.string().c_str());
    ordered_json params = {{"queries", o.queries.string()},
                           {"query_vectors", o.query_vectors.string()},
                           {"pseudo_queries", o.pseudo_queries.string()},
                           {"pseudo_query_vectors", o.pseudo_query_vectors.string()},
                           {"out", o.out.string()},
                           {"top_k", o.top_k}};
    record("score-local", params, {o.queries, o.query_vectors, o.pseudo_queries, o.pseudo_query_vectors}, {o.out},
           sidecar_manifest(o.out));
}

// ---- fuse ------------------------------------------------------------------

struct FuseOpts {
    fs::path global;
    fs::path local;
    fs::path out;
    fs::path scores_out;
    std::string tag = "clap";
    std::string missing_local = "use_global";
    clap::retrieve::FusionConfig config;
};

void run_fuse(FuseOpts o) {
    o.config.missing_local = clap::retrieve::parse_missing_local_policy(o.missing_local);
    o.config.validate();
    auto fused = clap::retrieve::fuse(clap::retrieve::read_scores(o.global), clap::retrieve::read_scores(o.local),
                                      o.config);
    auto run = clap::retrieve::rank(fused, o.tag);
    clap::ingest::write_run(run, o.out);
    std::vector<fs::path> outputs{o.out};
    if (!o.scores_out.empty()) {
        clap::retrieve::write_scores(fused, o.scores_out);
        outputs.push_back(o.scores_out);
    }
    std::printf("%zu run lines -> %s\n", run.size(), o.out.string().c_str());
    ordered_json params = {{"global", o.global.string()},
                           {"local", o.local.string()},
                           {"alpha", o.config.alpha},
                           {"top_k", o.config.top_k},
                           {"missing_local", o.missing_local},
                           {"tag", o.tag},
                           {"out", o.out.string()}};
    record("fuse", params, {o.global, o.local}, outputs, sidecar_manifest(o.out));
}

// ---- eval ------------------------------------------------------------------

struct EvalOpts {
    fs::path run;
    fs::path qrels;
    std::string metrics = "ndcg@10,mrr@10,recall@1000";
    std::string gain = "exponential";
    fs::path out;
};

void run_eval(const EvalOpts& o) {
    std::vector<clap::evaluate::MetricSpec> specs;
    for (const auto& m : split_list(o.metrics)) specs.push_back(clap::evaluate::parse_metric(m));
    if (specs.empty()) throw clap::InvalidArgument("--metrics is empty");
    const auto gain = parse_gain(o.gain);

    auto run = clap::ingest::read_run(o.run);
    clap::ingest::validate_run(run);
    auto qrels = clap::evaluate::index_qrels(clap::ingest::load_qrels(o.qrels));
    std::vector<clap::evaluate::MetricReport> reports;
    for (const auto& spec : specs) {
        reports.push_back(spec.kind == clap::evaluate::MetricKind::ndcg
                              ? clap::evaluate::ndcg_at_k(run, qrels, spec.k, gain)
                              : clap::evaluate::evaluate_metric(run, qrels, spec));
    }
    for (const auto& w : reports.front().warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::fputs(clap::evaluate::to_table(reports).c_str(), stdout);

    if (!o.out.empty()) {
        ordered_json j = ordered_json::array();
        for (const auto& r : reports) j.push_back(clap::evaluate::to_json(r));
        write_json(o.out, {{"gain", o.gain}, {"reports", j}});
        ordered_json params = {{"run", o.run.string()}, {"qrels", o.qrels.string()}, {"metrics", o.metrics},
                               {"gain", o.gain},         {"out", o.out.string()}};
        record("eval", params, {o.run, o.qrels}, {o.out}, sidecar_manifest(o.out));
    }
}

// ---- sweep -----------------------------------------------------------------

struct SweepOpts {
    fs::path global;
    fs::path local;
    fs::path qrels;
    std::string grid = "0:1:0.1";
    std::string metric = "ndcg@10";
    std::string missing_local = "use_global";
    std::size_t top_k = 1000;
    fs::path out;
    fs::path svg;
};

void run_sweep(const SweepOpts& o) {
    auto grid = clap::evaluate::parse_alpha_grid(o.grid);
    auto metric = clap::evaluate::parse_metric(o.metric);
    clap::retrieve::FusionConfig base;
    base.top_k = o.top_k;
    base.missing_local = clap::retrieve::parse_missing_local_policy(o.missing_local);
    base.validate();

    auto result = clap::evaluate::alpha_sweep(clap::retrieve::read_scores(o.global),
                                              clap::retrieve::read_scores(o.local),
                                              clap::evaluate::index_qrels(clap::ingest::load_qrels(o.qrels)), grid,
                                              metric, base);
    std::fputs(clap::evaluate::to_table(result).c_str(), stdout);
    std::vector<fs::path> outputs;
    if (!o.out.empty()) {
        write_json(o.out, clap::evaluate::to_json(result));
        outputs.push_back(o.out);
    }
    if (!o.svg.empty()) {
        write_text(o.svg, clap::evaluate::sweep_svg(result));
        outputs.push_back(o.svg);
    }
    if (!outputs.empty()) {
        ordered_json params = {{"global", o.global.string()}, {"local", o.local.string()},
                               {"qrels", o.qrels.string()},   {"grid", o.grid},
                               {"metric", o.metric},          {"missing_local", o.missing_local},
                               {"top_k", o.top_k}};
        record("sweep", params, {o.global, o.local, o.qrels}, outputs, sidecar_manifest(outputs.front()));
    }
}

// ---- gain ------------------------------------------------------------------

struct GainOpts {
    fs::path queries;
    fs::path qrels;
    fs::path query_vectors;
    fs::path passage_vectors;
    fs::path pseudo_queries;
    fs::path pseudo_query_vectors;
    fs::path out;
    fs::path cdf_svg;
    fs::path box_svg;
};

void run_gain(const GainOpts& o) {
    auto queries = clap::ingest::load_queries(o.queries);
    auto qrels = clap::evaluate::index_qrels(clap::ingest::load_qrels(o.qrels));
    auto analysis = clap::evaluate::similarity_gain(
        query_ids(queries), qrels, clap::embed::load_store(o.query_vectors), clap::embed::load_store(o.passage_vectors),
        clap::augment::load_pseudo_queries(o.pseudo_queries), clap::embed::load_store(o.pseudo_query_vectors));
    auto per_query = clap::evaluate::per_query_gain(analysis.records);

    std::vector<double> gains;
    std::size_t positive = 0;
    for (const auto& [q, g] : per_query) {
        gains.push_back(g);
        positive += g > 0.0 ? 1 : 0;
    }
    ordered_json j = {{"pairs", analysis.records.size()},
                      {"skipped_pairs", analysis.skipped_pairs},
                      {"queries", per_query.size()},
                      {"positive_queries", positive}};
    if (gains.size() >= 2) {
        auto d = clap::evaluate::describe(gains);
        j["describe"] = clap::evaluate::to_json(d);
        std::printf("queries %zu  positive %zu  mean %+.4f  median %+.4f\n", gains.size(), positive, d.mean, d.median);
        if (!o.box_svg.empty()) write_text(o.box_svg, clap::evaluate::gain_box_svg(d));
    } else {
        std::printf("queries %zu  positive %zu\n", gains.size(), positive);
        if (!o.box_svg.empty()) throw clap::InvalidArgument("box plot needs at least two queries with gains");
    }
    j["per_query"] = per_query;
    ordered_json records = ordered_json::array();
    for (const auto& r : analysis.records)
        records.push_back({{"query_id", r.query_id},
                           {"passage_id", r.passage_id},
                           {"best_pseudo_sim", r.best_pseudo_sim},
                           {"passage_sim", r.passage_sim},
                           {"gain", r.gain}});
    j["records"] = records;
    if (!o.cdf_svg.empty() && !gains.empty()) write_text(o.cdf_svg, clap::evaluate::gain_cdf_svg(gains));
    write_json(o.out, j);

    std::vector<fs::path> outputs{o.out};
    if (!o.cdf_svg.empty()) outputs.push_back(o.cdf_svg);
    if (!o.box_svg.empty()) outputs.push_back(o.box_svg);
    ordered_json params = {{"queries", o.queries.string()},
                           {"qrels", o.qrels.string()},
                           {"query_vectors", o.query_vectors.string()},
                           {"passage_vectors", o.passage_vectors.string()},
                           {"pseudo_queries", o.pseudo_queries.string()},
                           {"pseudo_query_vectors", o.pseudo_query_vectors.string()},
                           {"out", o.out.string()}};
    record("gain", params,
           {o.queries, o.qrels, o.query_vectors, o.passage_vectors, o.pseudo_queries, o.pseudo_query_vectors}, outputs,
           sidecar_manifest(o.out));
}

// ---- stats -----------------------------------------------------------------

struct StatsOpts {
    fs::path corpus;
    fs::path queries;
    fs::path chunks;
    fs::path pseudo_queries;
    fs::path out;
};

void run_stats(const StatsOpts& o) {
    auto s = clap::evaluate::structure_stats(
        clap::ingest::load_corpus(o.corpus), clap::ingest::load_queries(o.queries),
        clap::augment::load_chunks(o.chunks), clap::augment::load_pseudo_queries(o.pseudo_queries));
    auto j = clap::evaluate::to_json(s);
    std::printf("%s\n", j.dump(2).c_str());
    if (!o.out.empty()) {
        write_json(o.out, j);
        ordered_json params = {{"corpus", o.corpus.string()},
                               {"queries", o.queries.string()},
                               {"chunks", o.chunks.string()},
                               {"pseudo_queries", o.pseudo_queries.string()},
                               {"out", o.out.string()}};
        record("stats", params, {o.corpus, o.queries, o.chunks, o.pseudo_queries}, {o.out}, sidecar_manifest(o.out));
    }
}

// ---- cost ------------------------------------------------------------------

struct CostOpts {
    clap::augment::CorpusProfile profile;
    clap::augment::CostModel model;
    fs::path out;
};

void run_cost(const CostOpts& o) {
    auto e = clap::augment::estimate_cost(o.profile, o.model);
    ordered_json j = {{"passages", o.profile.passages},
                      {"avg_tokens", o.profile.avg_passage_tokens},
                      {"avg_chunks", o.profile.avg_chunks},
                      {"input_price", o.model.input_price_per_token},
                      {"output_price", o.model.output_price_per_token},
                      {"input_tokens_per_passage", e.input_tokens_per_passage},
                      {"output_tokens_per_passage", e.output_tokens_per_passage},
                      {"total_input_tokens", e.total_input_tokens},
                      {"total_output_tokens", e.total_output_tokens},
                      {"cost_per_passage", e.cost_per_passage},
                      {"total_cost", e.total_cost}};
    std::printf("per passage: %zu input + %zu output tokens, %.6f\n", e.input_tokens_per_passage,
                e.output_tokens_per_passage, e.cost_per_passage);
    std::printf("total: %zu input + %zu output tokens, %.2f\n", e.total_input_tokens, e.total_output_tokens,
                e.total_cost);
    if (!o.out.empty()) {
        write_json(o.out, j);
        record("cost", j, {}, {o.out}, sidecar_manifest(o.out));
    }
}

// ---- subset ----------------------------------------------------------------

struct SubsetOpts {
    fs::path corpus;
    fs::path queries;
    fs::path qrels;
    std::size_t n_queries = 50;
    std::uint64_t seed = 0;
    std::size_t distractors = 0;
    fs::path out_dir;
};

void run_subset(const SubsetOpts& o) {
    auto s = clap::ingest::subset(clap::ingest::load_corpus(o.corpus), clap::ingest::load_queries(o.queries),
                                  clap::ingest::load_qrels(o.qrels), o.n_queries, o.seed, o.distractors);
    fs::create_directories(o.out_dir);
    clap::ingest::write_corpus(s.corpus, o.out_dir / "corpus.jsonl");
    clap::ingest::write_queries(s.queries, o.out_dir / "queries.jsonl");
    clap::ingest::write_qrels(s.qrels, o.out_dir / "qrels.tsv");
    std::printf("%zu queries, %zu passages, %zu qrels -> %s\n", s.queries.size(), s.corpus.size(), s.qrels.size(),
                o.out_dir.string().c_str());
    ordered_json params = {{"corpus", o.corpus.string()}, {"queries", o.queries.string()},
                           {"qrels", o.qrels.string()},   {"n_queries", o.n_queries},
                           {"seed", o.seed},              {"distractors", o.distractors},
                           {"out_dir", o.out_dir.string()}};
    record("subset", params, {o.corpus, o.queries, o.qrels},
           {o.out_dir / "corpus.jsonl", o.out_dir / "queries.jsonl", o.out_dir / "qrels.tsv"},
           o.out_dir / "manifest.json");
}

// Output paths get their parent directories created once parsing succeeds.
std::vector<fs::path*> g_outputs;

CLI::Option* output(CLI::App* app, const std::string& name, fs::path& target, const std::string& help) {
    g_outputs.push_back(&target);
    return app->add_option(name, target, help);
}

CLI::Option* input(CLI::App* app, const std::string& name, fs::path& target, const std::string& help) {
    return app->add_option(name, target, help)->required()->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline pipeline for pseudo-query augmented passage retrieval"};
    app.set_version_flag("--version", std::string(clap::manifest::kToolVersion));
    app.require_subcommand(1);
    std::function<void()> action;

    AugmentOpts aug;
    auto* a = app.add_subcommand("augment", "Chunk passages and generate pseudo-queries");
    input(a, "--corpus", aug.corpus, "Corpus JSONL");
    a->add_option("--out-dir", aug.out_dir, "Directory for chunks, pseudo-queries and progress")->required();
    a->add_option("--agent", aug.agent, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    a->add_option("--endpoint", aug.config.endpoint_url, "Chat-completions URL");
    a->add_option("--model", aug.config.model_name, "Model name sent to the endpoint");
    a->add_option("--api-key-env", aug.config.api_key_env_var, "Environment variable holding the API key");
    a->add_option("--temperature", aug.config.temperature);
    a->add_option("--max-retries", aug.config.max_retries);
    a->add_option("--concurrency", aug.config.concurrency_limit, "Agent calls in flight");
    a->add_option("--skip-words", aug.config.skip_word_threshold, "Passages longer than this bypass chunking");
    a->callback([&] { action = [&] { run_augment(aug); }; });

    EmbedOpts emb;
    auto* e = app.add_subcommand("embed", "Encode corpus, queries or pseudo-queries into a vector store");
    input(e, "--input", emb.input, "Corpus, queries or pseudo-query JSONL");
    e->add_option("--kind", emb.kind)->check(CLI::IsMember({"corpus", "queries", "pseudo-queries"}));
    output(e, "--out", emb.out, "Output .clpv file")->required();
    e->add_option("--encoder", emb.encoder, "hashing or http")->check(CLI::IsMember({"hashing", "http"}));
    e->add_option("--dim", emb.dim, "Hashing encoder dimension");
    e->add_option("--seed", emb.seed, "Hashing encoder seed");
    e->add_option("--url", emb.url, "Encoder service URL");
    e->add_option("--batch-size", emb.batch_size);
    e->add_flag("--raw", emb.raw, "Store vectors without normalizing");
    e->callback([&] { action = [&] { run_embed(emb); }; });

    GlobalOpts glo;
    auto* g = app.add_subcommand("score-global", "Score queries against whole passages");
    g->add_option("--method", glo.method, "dense or bm25")->check(CLI::IsMember({"dense", "bm25"}));
    input(g, "--queries", glo.queries, "Queries JSONL");
    input(g, "--corpus", glo.corpus, "Corpus JSONL");
    g->add_option("--query-vectors", glo.query_vectors)->check(CLI::ExistingFile);
    g->add_option("--passage-vectors", glo.passage_vectors)->check(CLI::ExistingFile);
    output(g, "--out", glo.out, "Score TSV")->required();
    g->add_option("--top-k", glo.top_k);
    g->add_option("--k1", glo.bm25.k1);
    g->add_option("--b", glo.bm25.b);
    g->callback([&] { action = [&] { run_score_global(glo); }; });

    LocalOpts loc;
    auto* l = app.add_subcommand("score-local", "Score queries against pseudo-queries, max-pooled per passage");
    input(l, "--queries", loc.queries, "Queries JSONL");
    input(l, "--query-vectors", loc.query_vectors, "Query vector store");
    input(l, "--pseudo-queries", loc.pseudo_queries, "Pseudo-query JSONL");
    input(l, "--pseudo-query-vectors", loc.pseudo_query_vectors, "Pseudo-query vector store");
    output(l, "--out", loc.out, "Score TSV")->required();
    l->add_option("--top-k", loc.top_k);
    l->callback([&] { action = [&] { run_score_local(loc); }; });

    FuseOpts fus;
    auto* f = app.add_subcommand("fuse", "Interpolate global and local scores into a run");
    input(f, "--global", fus.global, "Global score TSV");
    input(f, "--local", fus.local, "Local score TSV");
    f->add_option("--alpha", fus.config.alpha, "Weight on the global score")->check(CLI::Range(0.0, 1.0));
    f->add_option("--top-k", fus.config.top_k);
    f->add_option("--missing-local", fus.missing_local)->check(CLI::IsMember({"use_global", "drop"}));
    f->add_option("--tag", fus.tag);
    output(f, "--out", fus.out, "TREC run file")->required();
    output(f, "--scores-out", fus.scores_out, "Also write fused scores as TSV");
    f->callback([&] { action = [&] { run_fuse(fus); }; });

    EvalOpts ev;
    auto* v = app.add_subcommand("eval", "Evaluate a run against qrels");
    input(v, "--run", ev.run, "TREC run file");
    input(v, "--qrels", ev.qrels, "Qrels TSV");
    v->add_option("--metrics", ev.metrics, "Comma-separated, e.g. ndcg@10,mrr@10,recall@1000");
    v->add_option("--gain", ev.gain, "nDCG gain: exponential or linear")->check(CLI::IsMember({"exponential", "linear"}));
    output(v, "--out", ev.out, "JSON report");
    v->callback([&] { action = [&] { run_eval(ev); }; });

    SweepOpts sw;
    auto* s = app.add_subcommand("sweep", "Evaluate fusion over a grid of alpha values");
    input(s, "--global", sw.global, "Global score TSV");
    input(s, "--local", sw.local, "Local score TSV");
    input(s, "--qrels", sw.qrels, "Qrels TSV");
    s->add_option("--grid", sw.grid, "start:stop:step or a comma list");
    s->add_option("--metric", sw.metric);
    s->add_option("--missing-local", sw.missing_local)->check(CLI::IsMember({"use_global", "drop"}));
    s->add_option("--top-k", sw.top_k);
    output(s, "--out", sw.out, "JSON result");
    output(s, "--svg", sw.svg, "SVG chart");
    s->callback([&] { action = [&] { run_sweep(sw); }; });

    GainOpts ga;
    auto* gn = app.add_subcommand("gain", "Similarity gain of pseudo-queries over passages for relevant pairs");
    input(gn, "--queries", ga.queries, "Queries JSONL");
    input(gn, "--qrels", ga.qrels, "Qrels TSV");
    input(gn, "--query-vectors", ga.query_vectors, "Query vector store");
    input(gn, "--passage-vectors", ga.passage_vectors, "Passage vector store");
    input(gn, "--pseudo-queries", ga.pseudo_queries, "Pseudo-query JSONL");
    input(gn, "--pseudo-query-vectors", ga.pseudo_query_vectors, "Pseudo-query vector store");
    output(gn, "--out", ga.out, "JSON report")->required();
    gn->add_option("--cdf-svg", ga.cdf_svg);
    gn->add_option("--box-svg", ga.box_svg);
    gn->callback([&] { action = [&] { run_gain(ga); }; });

    StatsOpts st;
    auto* sts = app.add_subcommand("stats", "Structural statistics of an augmented corpus");
    input(sts, "--corpus", st.corpus, "Corpus JSONL");
    input(sts, "--queries", st.queries, "Queries JSONL");
    input(sts, "--chunks", st.chunks, "chunks.jsonl");
    input(sts, "--pseudo-queries", st.pseudo_queries, "pseudo_queries.jsonl");
    output(sts, "--out", st.out, "JSON report");
    sts->callback([&] { action = [&] { run_stats(st); }; });

    CostOpts co;
    auto* c = app.add_subcommand("cost", "Estimate preprocessing token usage and cost");
    c->add_option("--passages", co.profile.passages)->required();
    c->add_option("--avg-tokens", co.profile.avg_passage_tokens)->required();
    c->add_option("--avg-chunks", co.profile.avg_chunks)->required();
    c->add_option("--input-price", co.model.input_price_per_token, "Price per input token");
    c->add_option("--output-price", co.model.output_price_per_token, "Price per output token");
    output(c, "--out", co.out, "JSON report");
    c->callback([&] { action = [&] { run_cost(co); }; });

    SubsetOpts sub;
    auto* sb = app.add_subcommand("subset", "Seeded query sample with a closed corpus and qrels");
    input(sb, "--corpus", sub.corpus, "Corpus JSONL");
    input(sb, "--queries", sub.queries, "Queries JSONL");
    input(sb, "--qrels", sub.qrels, "Qrels TSV");
    sb->add_option("--n-queries", sub.n_queries);
    sb->add_option("--seed", sub.seed);
    sb->add_option("--distractors", sub.distractors, "Extra unjudged passages to keep");
    sb->add_option("--out-dir", sub.out_dir)->required();
    sb->callback([&] { action = [&] { run_subset(sub); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        for (auto* out : g_outputs) ensure_parent(*out);
        action();
    } catch (const clap::InvalidArgument& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitValidation;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitRuntime;
    }
    return 0;
}
