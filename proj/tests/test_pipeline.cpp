#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "regrank/datagen.hpp"
#include "regrank/io.hpp"
#include "regrank/pipeline.hpp"

using namespace regrank;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("regrank_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GenConfig small_config() {
    GenConfig cfg;
    cfg.n_companies = 150;
    cfg.n_persons = 260;
    cfg.cluster_count = 3;
    cfg.base_rate = 0.2;
    cfg.homophily = 0.5;
    cfg.hub_count = 1;
    cfg.hub_degree = 12;
    cfg.one_person_rate = 0.03;
    cfg.seed = 314;
    return cfg;
}

RunParams small_params() {
    RunParams params;
    params.partition.min_size = 2;
    params.folds = 4;
    params.threads = 2;
    return params;
}

}  // namespace

TEST_CASE("edge list files round-trip the graphs") {
    auto data = generate(small_config());
    auto params = small_params();
    auto build = stage_build(data.records, data.risk, params);

    std::ostringstream bi_out;
    io::write_bipartite_edges(bi_out, build.bipartite);
    std::istringstream bi_in(bi_out.str());
    auto bi = io::read_bipartite_edges(bi_in);
    CHECK(bi.company_ids == build.bipartite.company_ids);
    CHECK(bi.person_ids == build.bipartite.person_ids);
    CHECK(bi.edges == build.bipartite.edges);

    std::ostringstream uni_out, nodes_out;
    io::write_unipartite_edges(uni_out, build.unipartite);
    io::write_company_nodes(nodes_out, build.unipartite.node_ids);
    std::istringstream uni_in(uni_out.str()), nodes_in(nodes_out.str());
    auto uni = io::read_unipartite(nodes_in, uni_in);
    CHECK(uni.node_ids == build.unipartite.node_ids);
    CHECK(uni.edges == build.unipartite.edges);
}

TEST_CASE("partition file round-trips the retained and dropped sets") {
    auto data = generate(small_config());
    auto params = small_params();
    auto build = stage_build(data.records, data.risk, params);
    auto parts = stage_partition(build.unipartite, params);

    std::ostringstream out;
    io::write_partition(out, parts);
    std::istringstream in(out.str());
    auto back = io::read_partition(in);
    REQUIRE(back.partitions.size() == parts.partitions.size());
    for (std::size_t i = 0; i < parts.partitions.size(); ++i) {
        CHECK(back.partitions[i].company_ids == parts.partitions[i].company_ids);
    }
    CHECK(back.dropped_company_ids == parts.dropped_company_ids);
    CHECK(back.input_nodes == parts.input_nodes);
}

TEST_CASE("surrogate map round-trips") {
    SurrogateMap sm;
    sm.pairs.emplace("X", SurrogatePair{"X~c", "X~p"});
    sm.pairs.emplace("Y", SurrogatePair{"Y~c", "Y~p"});
    std::ostringstream out;
    io::write_surrogates(out, sm);
    std::istringstream in(out.str());
    auto back = io::read_surrogates(in);
    REQUIRE(back.pairs.size() == 2);
    CHECK(back.pairs.at("X").company_id == "X~c");
    CHECK(back.pairs.at("Y").person_id == "Y~p");
}

TEST_CASE("malformed graph files are rejected with diagnostics") {
    std::istringstream bad_header("a,b,c\n");
    CHECK_THROWS_AS(io::read_bipartite_edges(bad_header), InputError);

    std::istringstream bad_weight("company_id,person_id,weight\nC,P,zero\n");
    CHECK_THROWS_AS(io::read_bipartite_edges(bad_weight), InputError);

    std::istringstream nodes("company_id\nA\nB\n");
    std::istringstream self_loop("company_a,company_b,weight\nA,A,1\n");
    CHECK_THROWS_AS(io::read_unipartite(nodes, self_loop), InputError);

    std::istringstream dup("company_id,person_id,weight\nC,P,1\nC,P,2\n");
    CHECK_THROWS_AS(io::read_bipartite_edges(dup), InputError);

    std::istringstream nodes2("company_id\nA\nB\n");
    std::istringstream dup_uni("company_a,company_b,weight\nA,B,1\nB,A,2\n");
    CHECK_THROWS_AS(io::read_unipartite(nodes2, dup_uni), InputError);
}

TEST_CASE("reproduce equals the stage-by-stage pipeline") {
    const auto cfg = small_config();
    auto params = small_params();

    auto reproduce_dir = fresh_dir("repro");
    run_reproduce(cfg, params, reproduce_dir);

    auto manual_dir = fresh_dir("manual");
    {
        auto data = generate(cfg);
        {
            auto out = csv::open_output((manual_dir / "records.csv").string());
            io::write_records(out, data.records);
        }
        {
            auto out = csv::open_output((manual_dir / "risk.csv").string());
            io::write_risk(out, data.risk);
        }
        {
            auto out = csv::open_output((manual_dir / "ground_truth.csv").string());
            io::write_ground_truth(out, data.truth);
        }
        // stage inputs re-read from the files, as the CLI subcommands would
        auto parsed = parse_records_file((manual_dir / "records.csv").string());
        REQUIRE(parsed.errors.empty());
        auto risk = parse_risk_file((manual_dir / "risk.csv").string());
        REQUIRE(risk.errors.empty());
        auto build = stage_build(parsed.records, risk.risk, params);
        write_build_stage(manual_dir, build);
        auto parts = stage_partition(build.unipartite, params);
        write_partition_stage(manual_dir, parts);
        auto rank = stage_rank(build.bipartite, build.unipartite, parts, build.company_risk,
                               params);
        write_rank_stage(manual_dir, rank);
    }

    for (const auto& name :
         {"records.csv", "risk.csv", "ground_truth.csv", "bipartite_edges.csv",
          "unipartite_edges.csv", "company_nodes.csv", "surrogates.csv", "stats.json",
          "partition.csv", "partition_summary.json", "folds.csv", "scores_pagerank.csv",
          "scores_birank.csv", "metrics_pagerank.json", "metrics_birank.json",
          "pr_curve_pagerank.csv", "pr_curve_birank.csv", "target_bins_pagerank.csv",
          "target_bins_birank.csv"}) {
        INFO(name);
        CHECK(slurp(reproduce_dir / name) == slurp(manual_dir / name));
    }
}

TEST_CASE("bench reports mean, spread, and per-run times") {
    auto data = generate(small_config());
    auto params = small_params();
    auto build = stage_build(data.records, data.risk, params);
    auto parts = stage_partition(build.unipartite, params);

    auto report = stage_bench(build.bipartite, build.unipartite, parts, build.company_risk,
                              params, 3);
    REQUIRE(report.timings.size() == 2);
    for (const auto& t : report.timings) {
        CHECK(t.repetitions == 3);
        CHECK(t.run_seconds.size() == 3);
        CHECK(t.mean_seconds > 0.0);
        CHECK(t.sd_seconds.has_value());
    }

    auto single = stage_bench(build.bipartite, build.unipartite, parts, build.company_risk,
                              params, 1);
    for (const auto& t : single.timings) {
        CHECK_FALSE(t.sd_seconds.has_value());
        auto j = bench_to_json(single);
        CHECK(j[0]["sd_seconds"].is_null());
    }

    CHECK_THROWS_AS(stage_bench(build.bipartite, build.unipartite, parts, build.company_risk,
                                params, 0),
                    Error);
}

TEST_CASE("rank stage writes one score per retained company for both algorithms") {
    auto data = generate(small_config());
    auto params = small_params();
    auto build = stage_build(data.records, data.risk, params);
    auto parts = stage_partition(build.unipartite, params);
    auto rank = stage_rank(build.bipartite, build.unipartite, parts, build.company_risk, params);

    REQUIRE(rank.runs.size() == 2);
    CHECK(rank.runs[0].algo == "pagerank");
    CHECK(rank.runs[1].algo == "birank");
    CHECK(rank.runs[0].cv.companies.size() == rank.runs[1].cv.companies.size());
    CHECK(rank.runs[0].cv.persons.empty());
    CHECK_FALSE(rank.runs[1].cv.persons.empty());
    CHECK(rank.runs[0].metrics.n == rank.runs[0].metrics.n0 + rank.runs[0].metrics.n1);
}
