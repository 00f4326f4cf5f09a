#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "clap/error.hpp"
#include "clap/evaluate.hpp"
#include "support/test_support.hpp"

using namespace clap;
using namespace clap::evaluate;
using clap::ingest::Qrel;
using clap::ingest::RunEntry;
using clap::retrieve::ScoreTable;
using clap::testing::data_dir;

namespace {

std::vector<RunEntry> run_of(const std::string& q, const std::vector<std::string>& passages) {
    std::vector<RunEntry> run;
    for (std::size_t i = 0; i < passages.size(); ++i)
        run.push_back({q, passages[i], i + 1, 1.0 - 0.01 * static_cast<double>(i), "t"});
    return run;
}

nlohmann::json load_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

void check_parity(const std::string& qrels_file, const std::string& golden_file, GainForm gain) {
    auto run = ingest::read_run(data_dir() / "parity" / "run.trec");
    auto qrels = index_qrels(ingest::load_qrels(data_dir() / "parity" / qrels_file));
    auto golden = load_json(data_dir() / "parity" / golden_file).at("per_query");

    auto ndcg = ndcg_at_k(run, qrels, 10, gain);
    auto mrr = mrr_at_k(run, qrels, 10);
    auto recall = recall_at_k(run, qrels, 1000);
    REQUIRE(ndcg.per_query.size() == golden.size());
    for (const auto& [q, values] : golden.items()) {
        CAPTURE(q);
        CHECK(std::abs(ndcg.per_query.at(q) - values.at("ndcg@10").get<double>()) <= 1e-6);
        CHECK(std::abs(mrr.per_query.at(q) - values.at("mrr@10").get<double>()) <= 1e-6);
        CHECK(std::abs(recall.per_query.at(q) - values.at("recall@1000").get<double>()) <= 1e-6);
    }
}

// Direct two-pass moments, independent of the library's implementation.
struct Oracle {
    long double mean, var, skew, kurt;
};

Oracle moments(const std::vector<double>& xs) {
    const auto n = static_cast<long double>(xs.size());
    long double sum = 0;
    for (double x : xs) sum += x;
    const long double mean = sum / n;
    long double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        const long double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const long double var = m2 / (n - 1);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    return {mean, var, m3 / std::pow(m2, 1.5L), m4 / (m2 * m2) - 3};
}

double oracle_quantile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace

TEST_CASE("metric examples") {
    QrelIndex qrels{{"q", {{"r1", 1}}}};
    CHECK(ndcg_at_k(run_of("q", {"r1", "x", "y"}), qrels).mean == 1.0);
    CHECK(ndcg_at_k(run_of("q", {"x", "y", "r1"}), qrels).mean == doctest::Approx(0.5));
    CHECK(mrr_at_k(run_of("q", {"a", "b", "c", "r1"}), qrels).mean == 0.25);
    CHECK(mrr_at_k(run_of("q", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "r1"}), qrels).mean == 0.0);

    QrelIndex three{{"q", {{"a", 1}, {"b", 1}, {"c", 1}}}};
    CHECK(recall_at_k(run_of("q", {"c", "x", "a", "b"}), three).mean == 1.0);
    QrelIndex four{{"q", {{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}}}};
    CHECK(recall_at_k(run_of("q", {"c", "x"}), four).mean == 0.25);
    CHECK(recall_at_k(run_of("q", {"x", "c"}), four, 1).mean == 0.0);
}

TEST_CASE("graded gain forms") {
    QrelIndex qrels{{"q", {{"a", 2}, {"b", 1}}}};
    auto run = run_of("q", {"b", "a"});
    const double exp_dcg = 1.0 + 3.0 / std::log2(3.0);
    const double exp_idcg = 3.0 + 1.0 / std::log2(3.0);
    CHECK(ndcg_at_k(run, qrels).mean == doctest::Approx(exp_dcg / exp_idcg));
    const double lin_dcg = 1.0 + 2.0 / std::log2(3.0);
    const double lin_idcg = 2.0 + 1.0 / std::log2(3.0);
    CHECK(ndcg_at_k(run, qrels, 10, GainForm::linear).mean == doctest::Approx(lin_dcg / lin_idcg));
    CHECK(ndcg_at_k(run_of("q", {"a", "b"}), qrels).mean == 1.0);
}

TEST_CASE("evaluated query convention") {
    QrelIndex qrels{{"q1", {{"a", 1}}}, {"q2", {{"a", 0}}}, {"q3", {{"b", 1}}}};
    auto run = run_of("q1", {"a"});
    auto extra = run_of("q2", {"a"});
    run.insert(run.end(), extra.begin(), extra.end());
    extra = run_of("q9", {"a"});
    run.insert(run.end(), extra.begin(), extra.end());
    auto report = ndcg_at_k(run, qrels);
    CHECK(report.per_query.size() == 1);
    CHECK(report.per_query.count("q1") == 1);
    CHECK(report.mean == 1.0);
    CHECK_FALSE(report.warnings.empty());

    auto empty = mrr_at_k({}, qrels);
    CHECK(empty.per_query.empty());
    CHECK(empty.mean == 0.0);
}

TEST_CASE("metrics stay in range and the ideal ranking scores one") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        QrelIndex qrels;
        std::vector<std::string> ids;
        for (int i = 0; i < 30; ++i) ids.push_back("d" + std::to_string(i));
        for (int i = 0; i < 30; ++i)
            if (rng() % 4 == 0) qrels["q"][ids[i]] = static_cast<int>(rng() % 4);
        qrels["q"]["d0"] = 1 + static_cast<int>(rng() % 3);
        std::shuffle(ids.begin(), ids.end(), rng);
        auto run = run_of("q", ids);
        for (auto spec : {MetricSpec{MetricKind::ndcg, 10}, MetricSpec{MetricKind::mrr, 10}, MetricSpec{MetricKind::recall, 20}}) {
            const double v = evaluate_metric(run, qrels, spec).mean;
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        std::vector<std::pair<int, std::string>> ideal;
        for (const auto& [p, g] : qrels["q"]) ideal.push_back({-g, p});
        std::sort(ideal.begin(), ideal.end());
        std::vector<std::string> best;
        for (const auto& [g, p] : ideal) best.push_back(p);
        CHECK(ndcg_at_k(run_of("q", best), qrels).mean == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("metric parity with the reference evaluator, binary qrels") {
    check_parity("qrels.tsv", "golden.json", GainForm::exponential);
}

TEST_CASE("metric parity with the reference evaluator, graded qrels") {
    // The reference evaluator uses the linear gain on graded judgments.
    check_parity("qrels_graded.tsv", "golden_graded.json", GainForm::linear);
}

TEST_CASE("metric names") {
    CHECK(parse_metric("nDCG@10").name() == "ndcg@10");
    CHECK(parse_metric("recall@1000").k == 1000);
    CHECK(parse_metric("mrr@5").kind == MetricKind::mrr);
    CHECK_THROWS_AS(parse_metric("map@10"), InvalidArgument);
    CHECK_THROWS_AS(parse_metric("ndcg@0"), InvalidArgument);
    CHECK_THROWS_AS(parse_metric("ndcg"), InvalidArgument);
}

TEST_CASE("report rendering") {
    QrelIndex qrels{{"q", {{"r1", 1}}}};
    auto report = ndcg_at_k(run_of("q", {"r1"}), qrels);
    auto j = to_json(report);
    CHECK(j["metric"] == "ndcg@10");
    CHECK(j["mean"] == 1.0);
    CHECK(j["per_query"]["q"] == 1.0);
    auto table = to_table({report, mrr_at_k(run_of("q", {"r1"}), qrels)});
    CHECK(table.find("ndcg@10") != std::string::npos);
    CHECK(table.find("all") != std::string::npos);
}

TEST_CASE("describe examples") {
    std::vector<double> a{1, 2, 3};
    auto d = describe(a);
    CHECK(d.mean == 2.0);
    CHECK(d.median == 2.0);
    CHECK(d.variance == 1.0);
    CHECK(d.min == 1.0);
    CHECK(d.max == 3.0);
    CHECK(d.cv == doctest::Approx(0.5));
    std::vector<double> sym{-1, 0, 1};
    CHECK(describe(sym).skewness == 0.0);
    std::vector<double> flat{2, 2, 2};
    CHECK(std::isnan(describe(flat).skewness));
    CHECK(std::isnan(describe(flat).kurtosis));
    CHECK_THROWS_AS(describe(std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(describe(std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("describe agrees with a direct-moment oracle") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(-0.5, 1.0);
    std::vector<double> xs(1000);
    for (auto& x : xs) x = u(rng);
    auto d = describe(xs);
    auto o = moments(xs);
    CHECK(d.n == 1000);
    CHECK(std::abs(d.mean - static_cast<double>(o.mean)) <= 1e-9);
    CHECK(std::abs(d.variance - static_cast<double>(o.var)) <= 1e-9);
    CHECK(std::abs(d.std_dev - std::sqrt(static_cast<double>(o.var))) <= 1e-9);
    CHECK(std::abs(d.skewness - static_cast<double>(o.skew)) <= 1e-9);
    CHECK(std::abs(d.kurtosis - static_cast<double>(o.kurt)) <= 1e-9);
    CHECK(std::abs(d.cv - std::sqrt(static_cast<double>(o.var)) / static_cast<double>(o.mean)) <= 1e-9);
    CHECK(d.min == *std::min_element(xs.begin(), xs.end()));
    CHECK(d.max == *std::max_element(xs.begin(), xs.end()));
    CHECK(std::abs(d.q10 - oracle_quantile(xs, 0.10)) <= 1e-9);
    CHECK(std::abs(d.q25 - oracle_quantile(xs, 0.25)) <= 1e-9);
    CHECK(std::abs(d.median - oracle_quantile(xs, 0.50)) <= 1e-9);
    CHECK(std::abs(d.q75 - oracle_quantile(xs, 0.75)) <= 1e-9);
}

TEST_CASE("similarity gain") {
    embed::VectorStore qv(2, true), pv(2, true), pqv(2, true);
    auto at_cos = [](double c) { return std::vector<float>{static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c))}; };
    qv.add("q", {1, 0});
    pv.add("p", at_cos(0.7));
    pv.add("s", at_cos(0.4));
    pv.add("t", at_cos(0.5));
    pqv.add("p::a::0", at_cos(0.9));
    pqv.add("p::a::1", at_cos(0.3));
    pqv.add("s::a::0", at_cos(0.4));
    std::vector<augment::PseudoQuery> pqs{{"p::a::0", "p", "a", ""}, {"p::a::1", "p", "a", ""}, {"s::a::0", "s", "a", ""}};
    QrelIndex qrels{{"q", {{"p", 1}, {"s", 1}, {"t", 1}, {"x", 0}}}};
    auto g = similarity_gain({"q"}, qrels, qv, pv, pqs, pqv);
    REQUIRE(g.records.size() == 2);
    CHECK(g.skipped_pairs == 1);
    CHECK(g.records[0].passage_id == "p");
    CHECK(g.records[0].gain == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(g.records[0].gain == g.records[0].best_pseudo_sim - g.records[0].passage_sim);
    CHECK(g.records[1].gain == 0.0);
    auto per_q = per_query_gain(g.records);
    CHECK(per_q.at("q") == doctest::Approx((g.records[0].gain + g.records[1].gain) / 2));

    QrelIndex missing{{"q", {{"zz", 1}}}};
    std::vector<augment::PseudoQuery> with_missing{{"zz::a::0", "zz", "a", ""}};
    CHECK_THROWS_AS(similarity_gain({"q"}, missing, qv, pv, with_missing, pqv), MissingEmbeddingError);
}

TEST_CASE("structure statistics") {
    using ingest::make_passage;
    std::string forty;
    for (int i = 0; i < 40; ++i) forty += "w ";
    std::vector<ingest::Passage> one{make_passage("p", std::nullopt, forty)};
    auto s = structure_stats(one, {{"q", "a b c d"}}, {}, {});
    CHECK(s.len_ratio == 10.0);
    CHECK(s.avg_query_len == 4.0);

    std::vector<ingest::Passage> two{make_passage("a", std::nullopt, "x"), make_passage("b", std::nullopt, "y")};
    std::vector<augment::Chunk> chunks;
    for (int i = 0; i < 4; ++i) chunks.push_back({"a", augment::chunk_label(i), "", "x", true});
    for (int i = 0; i < 6; ++i) chunks.push_back({"b", augment::chunk_label(i), "", "y", true});
    std::vector<augment::PseudoQuery> pqs(15);
    auto st = structure_stats(two, {{"q", "x"}}, chunks, pqs);
    CHECK(st.chunks_per_passage == 5.0);
    CHECK(st.pseudo_queries_per_chunk == 1.5);
    CHECK(st.index_expansion_factor == 7.5);
    CHECK(to_json(st).contains("c_per_p"));
    CHECK_THROWS_AS(structure_stats({}, {}, {}, {}), InvalidArgument);
}

TEST_CASE("alpha grid parsing") {
    CHECK(default_alpha_grid().size() == 11);
    CHECK(default_alpha_grid()[3] == 0.3);
    CHECK(parse_alpha_grid("0:1:0.1") == default_alpha_grid());
    CHECK(parse_alpha_grid("0.2,0.5,1") == std::vector<double>{0.2, 0.5, 1.0});
    CHECK(parse_alpha_grid("0.5") == std::vector<double>{0.5});
    CHECK_THROWS_AS(parse_alpha_grid(""), InvalidArgument);
    CHECK_THROWS_AS(parse_alpha_grid("0.5,0.2"), InvalidArgument);
    CHECK_THROWS_AS(parse_alpha_grid("0:1.5:0.5"), InvalidArgument);
    CHECK_THROWS_AS(parse_alpha_grid("0:1:0"), InvalidArgument);
}

TEST_CASE("alpha sweep behaviour") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScoreTable g, l;
    QrelIndex qrels;
    for (int q = 0; q < 8; ++q) {
        const std::string qid = "q" + std::to_string(q);
        for (int p = 0; p < 40; ++p) {
            const std::string pid = "p" + std::to_string(p);
            g.set(qid, pid, u(rng));
            l.set(qid, pid, u(rng));
            if (rng() % 6 == 0) qrels[qid][pid] = 1;
        }
        qrels[qid]["p" + std::to_string(q)] = 1;
    }
    const auto metric = parse_metric("ndcg@10");

    auto flat = alpha_sweep(g, g, qrels, default_alpha_grid(), metric);
    REQUIRE(flat.points.size() == 11);
    for (const auto& pt : flat.points) CHECK(pt.value == flat.points.front().value);
    CHECK(flat.best_alpha == 1.0);

    auto sweep = alpha_sweep(g, l, qrels, default_alpha_grid(), metric);
    const double global_only = evaluate_metric(retrieve::rank(g, "g"), qrels, metric).mean;
    CHECK(sweep.points.back().value == global_only);
    double best = 0.0;
    for (const auto& pt : sweep.points) best = std::max(best, pt.value);
    CHECK(sweep.best_value == best);

    for (double alpha : {0.0, 0.3, 0.7}) {
        auto single = alpha_sweep(g, l, qrels, {alpha}, metric);
        retrieve::FusionConfig config;
        config.alpha = alpha;
        auto direct = evaluate_metric(retrieve::rank(retrieve::fuse(g, l, config), "f"), qrels, metric).mean;
        CHECK(single.points.size() == 1);
        CHECK(single.points[0].value == direct);
        CHECK(single.best_alpha == alpha);
    }
    CHECK_THROWS_AS(alpha_sweep(g, l, qrels, {}, metric), InvalidArgument);

    auto j = to_json(sweep);
    CHECK(j["points"].size() == 11);
    CHECK(sweep_svg(sweep).rfind("<svg", 0) == 0);
    CHECK(to_table(sweep).find("0.5") != std::string::npos);
}

TEST_CASE("gain plots render") {
    std::vector<double> gains{0.1, -0.05, 0.3, 0.2, 0.0};
    auto cdf = gain_cdf_svg(gains);
    CHECK(cdf.rfind("<svg", 0) == 0);
    CHECK(cdf.find("</svg>") != std::string::npos);
    auto box = gain_box_svg(describe(gains));
    CHECK(box.find("<rect") != std::string::npos);
}
