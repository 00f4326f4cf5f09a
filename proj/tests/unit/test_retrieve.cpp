#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "clap/error.hpp"
#include "clap/retrieve.hpp"
#include "support/test_support.hpp"

using namespace clap;
using namespace clap::retrieve;
using clap::augment::PseudoQuery;
using clap::embed::VectorStore;
using clap::ingest::make_passage;
using clap::testing::TempDir;

namespace {

std::vector<std::string> order(const ScoreTable& table, const std::string& q) {
    std::vector<std::string> out;
    if (const auto* row = table.row(q))
        for (const auto& sp : ranked(*row)) out.push_back(sp.passage_id);
    return out;
}

std::vector<float> random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> dist(0.0F, 1.0F);
    std::vector<float> v(dim);
    for (auto& x : v) x = dist(rng);
    return v;
}

// The same sequential double accumulation the library uses for similarities.
double plain_dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

std::vector<ingest::Passage> toy_corpus() {
    return {make_passage("d1", std::nullopt, "a b"), make_passage("d2", std::nullopt, "b c"),
            make_passage("d3", std::nullopt, "c d")};
}

}  // namespace

TEST_CASE("BM25 toy corpus") {
    Bm25Index index(toy_corpus(), Bm25Params{});
    auto hits = index.score("b");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].passage_id == "d1");
    CHECK(hits[1].passage_id == "d2");
    CHECK(std::abs(hits[0].score - std::log(1.6)) <= 1e-9);
    CHECK(hits[0].score == hits[1].score);
    CHECK(index.idf("b") == doctest::Approx(std::log(1.0 + 1.5 / 2.5)));
    CHECK(index.idf("zzz") == doctest::Approx(std::log(1.0 + 3.5 / 0.5)));
}

TEST_CASE("BM25 against a direct formula evaluation") {
    std::vector<ingest::Passage> corpus = {
        make_passage("x", std::nullopt, "the cat sat on the mat the end"),
        make_passage("y", std::nullopt, "a dog sat"),
        make_passage("z", std::nullopt, "cat cat cat dog"),
        make_passage("w", std::nullopt, "nothing relevant here at all really"),
    };
    const double k1 = 0.9, b = 0.4;
    Bm25Index index(corpus, Bm25Params{k1, b});
    const double avgdl = (8.0 + 3.0 + 4.0 + 6.0) / 4.0;
    auto term = [&](double tf, double df, double dl) {
        const double idf = std::log(1.0 + (4.0 - df + 0.5) / (df + 0.5));
        return idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    };
    auto hits = index.score("Cat dog, cat?");
    std::map<std::string, double> got;
    for (const auto& h : hits) got[h.passage_id] = h.score;
    CHECK(got.size() == 3);
    CHECK(got["x"] == doctest::Approx(term(1, 2, 8)).epsilon(1e-12));
    CHECK(got["y"] == doctest::Approx(term(1, 2, 3)).epsilon(1e-12));
    CHECK(got["z"] == doctest::Approx(term(3, 2, 4) + term(1, 2, 4)).epsilon(1e-12));
    CHECK(hits[0].passage_id == "z");
}

TEST_CASE("BM25 edge cases") {
    Bm25Index index(toy_corpus(), Bm25Params{});
    CHECK(index.score("zebra").empty());
    CHECK(index.score("b zebra") == index.score("b"));

    Bm25Index single({make_passage("only", std::nullopt, "solar panels convert light")}, Bm25Params{});
    auto hits = single.score("solar panels convert light");
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].score > 0.0);

    CHECK_THROWS_AS(Bm25Index({}, Bm25Params{}), InvalidArgument);
    CHECK_THROWS_AS(Bm25Index(toy_corpus(), Bm25Params{0.0, 0.5}), InvalidArgument);
    CHECK_THROWS_AS(Bm25Index(toy_corpus(), Bm25Params{1.2, 1.5}), InvalidArgument);
}

TEST_CASE("BM25 is invariant to corpus order") {
    std::mt19937_64 rng(8);
    std::vector<ingest::Passage> corpus;
    for (int i = 0; i < 40; ++i) {
        std::string t;
        const auto len = 1 + rng() % 20;
        for (std::size_t w = 0; w < len; ++w) t += "t" + std::to_string(rng() % 30) + " ";
        corpus.push_back(make_passage("p" + std::to_string(i), std::nullopt, t));
    }
    std::vector<ingest::Query> queries{{"q1", "t1 t2 t3"}, {"q2", "t7 t7 t29"}, {"q3", "t0"}};
    auto before = bm25_scores(queries, corpus, Bm25Params{}, 10);
    std::shuffle(corpus.begin(), corpus.end(), rng);
    CHECK(bm25_scores(queries, corpus, Bm25Params{}, 10) == before);
    for (const auto& [q, row] : before.rows()) CHECK(row.size() <= 10);
}

TEST_CASE("global scores") {
    VectorStore queries(2, false), passages(2, false);
    queries.add("q1", {1, 0});
    passages.add("d1", {3, 4});
    passages.add("d2", {1, 1});
    passages.add("d3", {1, 0});
    auto table = global_scores({"q1"}, {"d1", "d2", "d3"}, queries, passages, 3);
    CHECK(*table.get("q1", "d1") == doctest::Approx(0.6));
    CHECK(*table.get("q1", "d2") == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(*table.get("q1", "d3") == 1.0);
    CHECK(order(table, "q1") == std::vector<std::string>{"d3", "d2", "d1"});

    auto top1 = global_scores({"q1"}, {"d1", "d2", "d3"}, queries, passages, 1);
    CHECK(top1.entries() == 1);
    CHECK_THROWS_AS(global_scores({"q9"}, {"d1"}, queries, passages, 3), MissingEmbeddingError);
    CHECK_THROWS_AS(global_scores({"q1"}, {"d9"}, queries, passages, 3), MissingEmbeddingError);
}

TEST_CASE("local scores take the maximum over a passage's pseudo-queries") {
    VectorStore queries(2, true), pqs(2, true);
    queries.add("q", {1, 0});
    auto at_cos = [](double c) { return std::vector<float>{static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c))}; };
    std::vector<PseudoQuery> list;
    const std::vector<double> sims{0.2, 0.9, 0.5};
    for (std::size_t i = 0; i < sims.size(); ++i) {
        std::string id = "p::a::" + std::to_string(i);
        pqs.add(id, at_cos(sims[i]));
        list.push_back({id, "p", "a", "x"});
    }
    pqs.add("r::a::0", at_cos(0.3));
    list.push_back({"r::a::0", "r", "a", "y"});

    auto table = local_scores({"q"}, list, queries, pqs, 10);
    CHECK(*table.get("q", "p") == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(*table.get("q", "r") == doctest::Approx(0.3).epsilon(1e-6));
    CHECK_FALSE(table.get("q", "s"));

    list.push_back({"missing", "s", "a", "z"});
    CHECK_THROWS_AS(local_scores({"q"}, list, queries, pqs, 10), MissingEmbeddingError);
}

TEST_CASE("local scores equal a brute-force maximum") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t dim = 16;
        VectorStore queries(dim, true), pqs(dim, true);
        std::vector<std::string> qids;
        for (int q = 0; q < 4; ++q) {
            qids.push_back("q" + std::to_string(q));
            queries.add(qids.back(), random_vector(rng, dim));
        }
        std::vector<PseudoQuery> list;
        const auto passages = 1 + rng() % 50;
        for (std::size_t p = 0; p < passages; ++p) {
            const auto n = rng() % 6;
            for (std::size_t k = 0; k < n; ++k) {
                std::string id = "p" + std::to_string(p) + "::a::" + std::to_string(k);
                pqs.add(id, random_vector(rng, dim));
                list.push_back({id, "p" + std::to_string(p), "a", ""});
            }
        }
        auto table = local_scores(qids, list, queries, pqs, 1000);
        for (const auto& q : qids) {
            std::map<std::string, double> best;
            for (const auto& pq : list) {
                const double s = plain_dot(queries.at(q), pqs.at(pq.id));
                auto [it, fresh] = best.emplace(pq.passage_id, s);
                if (!fresh) it->second = std::max(it->second, s);
            }
            const auto* row = table.row(q);
            REQUIRE(row != nullptr);
            CHECK(*row == best);
        }
    }
}

TEST_CASE("fusion arithmetic") {
    ScoreTable g, l;
    g.set("q", "d", 0.9);
    l.set("q", "d", 0.5);
    auto at = [&](double alpha) { return *fuse(g, l, FusionConfig{alpha, 10, MissingLocalPolicy::use_global}).get("q", "d"); };
    CHECK(at(1.0) == 0.9);
    CHECK(at(0.0) == 0.5);

    ScoreTable g2, l2;
    g2.set("q", "d", 0.8);
    l2.set("q", "d", 0.6);
    CHECK(std::abs(*fuse(g2, l2, FusionConfig{0.25, 10, MissingLocalPolicy::use_global}).get("q", "d") - 0.65) <= 1e-12);

    CHECK_THROWS_AS(fuse(g, l, FusionConfig{1.5, 10, MissingLocalPolicy::use_global}), InvalidArgument);
    CHECK_THROWS_AS(fuse(g, l, FusionConfig{-0.1, 10, MissingLocalPolicy::use_global}), InvalidArgument);
    CHECK_THROWS_AS(fuse(g, l, FusionConfig{0.5, 0, MissingLocalPolicy::use_global}), InvalidArgument);
}

TEST_CASE("fusion handles missing entries") {
    ScoreTable g, l;
    g.set("q", "a", 0.8);
    g.set("q", "b", 0.4);
    l.set("q", "a", 0.2);
    l.set("q", "c", 0.9);

    auto use = fuse(g, l, FusionConfig{0.5, 10, MissingLocalPolicy::use_global});
    CHECK(*use.get("q", "a") == doctest::Approx(0.5));
    CHECK(*use.get("q", "b") == doctest::Approx(0.4));
    CHECK(*use.get("q", "c") == doctest::Approx(0.5 * (0.4 - kCensorMargin) + 0.5 * 0.9));

    auto drop = fuse(g, l, FusionConfig{0.5, 10, MissingLocalPolicy::drop});
    CHECK(*drop.get("q", "b") == doctest::Approx(0.5 * 0.4 + 0.5 * (0.2 - kCensorMargin)));

    // A query present in only one table still gets a row.
    ScoreTable only_local;
    only_local.set("q2", "x", 0.7);
    auto fused = fuse(ScoreTable{}, only_local, FusionConfig{0.5, 10, MissingLocalPolicy::use_global});
    CHECK(*fused.get("q2", "x") == doctest::Approx(0.5 * (0.0) + 0.5 * 0.7));

    ScoreTable registered;
    registered.add_query("empty");
    CHECK(fuse(registered, ScoreTable{}, FusionConfig{}).row("empty") != nullptr);
}

TEST_CASE("fusion endpoints reproduce single-signal rankings") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ScoreTable g, l;
        const int n = 30;
        for (int p = 0; p < n; ++p) {
            std::string id = "p" + std::to_string(100 + p);
            g.set("q", id, u(rng));
            if (rng() % 3 != 0) l.set("q", id, u(rng));
        }
        auto at1 = order(fuse(g, l, FusionConfig{1.0, 1000, MissingLocalPolicy::use_global}), "q");
        CHECK(at1 == order(g, "q"));
        auto at0 = order(fuse(g, l, FusionConfig{0.0, 1000, MissingLocalPolicy::drop}), "q");
        auto local_only = order(l, "q");
        REQUIRE(at0.size() >= local_only.size());
        CHECK(std::vector<std::string>(at0.begin(), at0.begin() + static_cast<long>(local_only.size())) == local_only);
    }
}

TEST_CASE("fusion rankings are invariant to positive scaling") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> logc(std::log(0.1), std::log(10.0));
    for (int trial = 0; trial < 30; ++trial) {
        ScoreTable g, l;
        for (int p = 0; p < 25; ++p) {
            std::string id = "d" + std::to_string(p);
            g.set("q", id, u(rng));
            l.set("q", id, u(rng));
        }
        const double c = std::exp(logc(rng));
        for (int step = 0; step <= 10; ++step) {
            FusionConfig config{step / 10.0, 1000, MissingLocalPolicy::use_global};
            CHECK(order(fuse(g, l, config), "q") == order(fuse(g.scaled(c), l.scaled(c), config), "q"));
        }
    }
}

TEST_CASE("raising a local score never lowers fused rank") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ScoreTable g, l;
        for (int p = 0; p < 20; ++p) {
            g.set("q", "d" + std::to_string(p), u(rng));
            l.set("q", "d" + std::to_string(p), u(rng));
        }
        const std::string target = "d" + std::to_string(rng() % 20);
        FusionConfig config{u(rng), 1000, MissingLocalPolicy::use_global};
        auto pos = [&](const ScoreTable& local) {
            auto o = order(fuse(g, local, config), "q");
            return std::find(o.begin(), o.end(), target) - o.begin();
        };
        const auto before = pos(l);
        l.set("q", target, *l.get("q", target) + u(rng));
        CHECK(pos(l) <= before);
    }
}

TEST_CASE("rank ordering and ties") {
    ScoreTable t;
    t.set("q", "d1", 0.2);
    t.set("q", "d2", 0.8);
    t.set("r", "d2", 0.5);
    t.set("r", "d1", 0.5);
    auto run = rank(t, "tag");
    REQUIRE(run.size() == 4);
    CHECK(run[0].passage_id == "d2");
    CHECK(run[0].rank == 1);
    CHECK(run[1].passage_id == "d1");
    CHECK(run[1].rank == 2);
    CHECK(run[2].query_id == "r");
    CHECK(run[2].passage_id == "d1");
    CHECK(run[3].passage_id == "d2");
    CHECK(run[3].tag == "tag");
    CHECK(rank(table_from_run(run), "tag") == run);

    std::vector<ScoredPassage> c{{"b", 1.0}, {"a", 1.0}, {"c", 2.0}, {"d", 0.5}};
    keep_top_k(c, 2);
    CHECK(c == std::vector<ScoredPassage>{{"c", 2.0}, {"a", 1.0}});
}

TEST_CASE("score table validation and file round trip") {
    ScoreTable t;
    CHECK_THROWS_AS(t.set("q", "d", std::nan("")), InvalidArgument);
    CHECK_THROWS_AS(t.set("q", "d", INFINITY), InvalidArgument);
    t.set("q1", "d1", 0.123456789);
    t.set("q1", "d2", -0.5);
    t.set("q2", "d1", 1.0);
    t.add_query("q3");
    TempDir dir;
    write_scores(t, dir / "s.tsv");
    auto back = read_scores(dir / "s.tsv");
    CHECK(*back.get("q1", "d1") == doctest::Approx(0.123456789).epsilon(1e-12));
    CHECK(back.entries() == 3);
    clap::testing::write_file(dir / "bad.tsv", "q1\td1\tnot-a-number\n");
    CHECK_THROWS_AS(read_scores(dir / "bad.tsv"), ParseError);
}

TEST_CASE("missing-local policy parsing") {
    CHECK(parse_missing_local_policy("use_global") == MissingLocalPolicy::use_global);
    CHECK(parse_missing_local_policy("drop") == MissingLocalPolicy::drop);
    CHECK(to_string(MissingLocalPolicy::drop) == "drop");
    CHECK_THROWS_AS(parse_missing_local_policy("zero"), InvalidArgument);
}
