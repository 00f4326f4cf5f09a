#include <doctest.h>

#include <random>
#include <set>

#include "clap/error.hpp"
#include "clap/ingest.hpp"
#include "support/test_support.hpp"

using namespace clap;
using namespace clap::ingest;
using clap::testing::TempDir;
using clap::testing::write_file;

TEST_CASE("load_corpus maps BEIR fields and counts words") {
    TempDir dir;
    write_file(dir / "c.jsonl", "{\"_id\":\"d1\",\"title\":\"T\",\"text\":\"a b c\"}\n"
                                "{\"_id\":\"d2\",\"text\":\"  spaced \\t out\\nwords  \"}\n");
    auto corpus = load_corpus(dir / "c.jsonl");
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].id == "d1");
    CHECK(corpus[0].title == std::optional<std::string>("T"));
    CHECK(corpus[0].word_count == 3);
    CHECK_FALSE(corpus[1].title.has_value());
    CHECK(corpus[1].word_count == 3);
}

TEST_CASE("load_corpus edge cases") {
    TempDir dir;
    SUBCASE("empty file") {
        write_file(dir / "c.jsonl", "");
        CHECK(load_corpus(dir / "c.jsonl").empty());
    }
    SUBCASE("duplicate id is an integrity error") {
        write_file(dir / "c.jsonl", "{\"_id\":\"d1\",\"text\":\"x\"}\n{\"_id\":\"d1\",\"text\":\"y\"}\n");
        CHECK_THROWS_AS(load_corpus(dir / "c.jsonl"), IntegrityError);
    }
    SUBCASE("malformed line names its line number") {
        write_file(dir / "c.jsonl", "{\"_id\":\"d1\",\"text\":\"x\"}\n\n{not json}\n");
        try {
            load_corpus(dir / "c.jsonl");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    SUBCASE("missing text") {
        write_file(dir / "c.jsonl", "{\"_id\":\"d1\"}\n");
        CHECK_THROWS_AS(load_corpus(dir / "c.jsonl"), ParseError);
    }
}

TEST_CASE("load_corpus preserves order and count") {
    TempDir dir;
    std::mt19937_64 rng(3);
    std::string content;
    std::vector<std::string> ids;
    for (int i = 0; i < 200; ++i) {
        ids.push_back("p" + std::to_string(rng() % 100000) + "_" + std::to_string(i));
        content += "{\"_id\":\"" + ids.back() + "\",\"text\":\"w" + std::to_string(i) + "\"}\n";
    }
    write_file(dir / "c.jsonl", content);
    auto corpus = load_corpus(dir / "c.jsonl");
    REQUIRE(corpus.size() == ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(corpus[i].id == ids[i]);
}

TEST_CASE("load_queries") {
    TempDir dir;
    write_file(dir / "q.jsonl", "{\"_id\":\"q1\",\"text\":\"cost for heartworm treatment dogs\"}\n");
    auto queries = load_queries(dir / "q.jsonl");
    REQUIRE(queries.size() == 1);
    CHECK(queries[0] == Query{"q1", "cost for heartworm treatment dogs"});

    write_file(dir / "empty.jsonl", "");
    CHECK(load_queries(dir / "empty.jsonl").empty());

    write_file(dir / "bad.jsonl", "{\"_id\":\"q1\"}\n");
    CHECK_THROWS_AS(load_queries(dir / "bad.jsonl"), ParseError);
}

TEST_CASE("load_qrels") {
    TempDir dir;
    write_file(dir / "a.tsv", "q1\td1\t1\n");
    CHECK(load_qrels(dir / "a.tsv") == std::vector<Qrel>{{"q1", "d1", 1}});

    write_file(dir / "b.tsv", "query-id\tcorpus-id\tscore\nq1\td1\t2\n");
    CHECK(load_qrels(dir / "b.tsv") == std::vector<Qrel>{{"q1", "d1", 2}});

    write_file(dir / "c.tsv", "q1\td1\tx\n");
    CHECK_THROWS_AS(load_qrels(dir / "c.tsv"), ParseError);

    write_file(dir / "d.tsv", "q1\td1\t1\nq1\td1\t0\n");
    CHECK_THROWS_AS(load_qrels(dir / "d.tsv"), IntegrityError);
}

TEST_CASE("run file format") {
    CHECK(format_run_line({"q1", "d1", 1, 0.5, "clap"}) == "q1 Q0 d1 1 0.500000 clap");

    TempDir dir;
    std::vector<RunEntry> gap = {{"q1", "d1", 1, 0.9, "t"}, {"q1", "d2", 3, 0.5, "t"}};
    CHECK_THROWS_AS(write_run(gap, dir / "r.trec"), IntegrityError);
    CHECK_FALSE(std::filesystem::exists(dir / "r.trec"));

    std::vector<RunEntry> rising = {{"q1", "d1", 1, 0.1, "t"}, {"q1", "d2", 2, 0.5, "t"}};
    CHECK_THROWS_AS(write_run(rising, dir / "r.trec"), IntegrityError);

    std::vector<RunEntry> dup_rank = {{"q1", "d1", 1, 0.9, "t"}, {"q1", "d2", 1, 0.5, "t"}};
    CHECK_THROWS_AS(write_run(dup_rank, dir / "r.trec"), IntegrityError);

    write_file(dir / "bad.trec", "q1 Q0 d1 one 0.5 t\n");
    CHECK_THROWS_AS(read_run(dir / "bad.trec"), ParseError);
}

TEST_CASE("run round-trip property") {
    // Scores on the 6-decimal lattice are exactly representable after printing.
    TempDir dir;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RunEntry> entries;
        const int queries = 1 + static_cast<int>(rng() % 5);
        for (int q = 0; q < queries; ++q) {
            const int n = 1 + static_cast<int>(rng() % 20);
            std::int64_t micro = static_cast<std::int64_t>(rng() % 4000000) - 2000000;
            for (int r = 1; r <= n; ++r) {
                entries.push_back({"q" + std::to_string(q), "d" + std::to_string(rng() % 1000) + "_" + std::to_string(r),
                                   static_cast<std::size_t>(r), static_cast<double>(micro) / 1e6, "run" + std::to_string(trial)});
                micro -= static_cast<std::int64_t>(rng() % 3);
            }
        }
        write_run(entries, dir / "r.trec");
        REQUIRE(read_run(dir / "r.trec") == entries);
    }
}

namespace {

struct Universe {
    std::vector<Passage> corpus;
    std::vector<Query> queries;
    std::vector<Qrel> qrels;
};

Universe make_universe() {
    Universe u;
    for (int i = 0; i < 60; ++i) u.corpus.push_back(make_passage("d" + std::to_string(i), std::nullopt, "text " + std::to_string(i)));
    for (int i = 0; i < 12; ++i) u.queries.push_back({"q" + std::to_string(i), "query " + std::to_string(i)});
    // q10 and q11 are unjudged.
    for (int i = 0; i < 10; ++i) {
        u.qrels.push_back({"q" + std::to_string(i), "d" + std::to_string(i * 3), 1});
        u.qrels.push_back({"q" + std::to_string(i), "d" + std::to_string(i * 3 + 1), 0});
    }
    return u;
}

}  // namespace

TEST_CASE("subset is deterministic and referentially closed") {
    auto u = make_universe();
    auto a = subset(u.corpus, u.queries, u.qrels, 4, 99, 5);
    auto b = subset(u.corpus, u.queries, u.qrels, 4, 99, 5);
    CHECK(a.corpus == b.corpus);
    CHECK(a.queries == b.queries);
    CHECK(a.qrels == b.qrels);
    CHECK(a.queries.size() == 4);

    std::set<std::string> qids;
    std::set<std::string> pids;
    for (const auto& q : a.queries) qids.insert(q.id);
    for (const auto& p : a.corpus) pids.insert(p.id);
    for (const auto& r : a.qrels) {
        CHECK(qids.count(r.query_id) == 1);
        CHECK(pids.count(r.passage_id) == 1);
    }
    // Every judgment of a sampled query survives, plus exactly 5 distractors.
    CHECK(a.qrels.size() == 8);
    CHECK(a.corpus.size() == 8 + 5);

    auto other = subset(u.corpus, u.queries, u.qrels, 4, 100, 5);
    CHECK_FALSE((other.queries == a.queries && other.corpus == a.corpus));
}

TEST_CASE("subset of every judged query keeps the judged universe") {
    auto u = make_universe();
    auto all = subset(u.corpus, u.queries, u.qrels, 10, 1, 0);
    CHECK(all.queries.size() == 10);
    CHECK(all.qrels == u.qrels);
    CHECK(all.corpus.size() == 20);
    CHECK_THROWS_AS(subset(u.corpus, u.queries, u.qrels, 11, 1), InvalidArgument);
}
