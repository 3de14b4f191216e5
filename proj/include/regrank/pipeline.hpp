#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "nlohmann/json.hpp"

#include "regrank/crossval.hpp"
#include "regrank/datagen.hpp"
#include "regrank/eval.hpp"
#include "regrank/graph.hpp"
#include "regrank/io.hpp"
#include "regrank/partition.hpp"
#include "regrank/ranking.hpp"
#include "regrank/records.hpp"

namespace regrank {

enum class AlgoSelection { pagerank, birank, both };

inline bool wants_pagerank(AlgoSelection s) { return s != AlgoSelection::birank; }
inline bool wants_birank(AlgoSelection s) { return s != AlgoSelection::pagerank; }

struct RunParams {
    ObservationWindow window{{1991, 1, 1}, {2021, 1, 1}};
    BuildOptions build;
    PartitionOptions partition;
    PageRankParams pagerank;
    BiRankParams birank;
    AlgoSelection algos = AlgoSelection::both;
    int folds = 10;
    std::uint64_t fold_seed = 1;
    int threads = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    char delimiter = ',';
};

// company-node-keyed risk labels, surrogate remap already applied
inline RiskVector node_risk(const BipartiteGraph& g, std::span<const RiskLabel> aligned) {
    RiskVector rv;
    for (std::size_t i = 0; i < aligned.size(); ++i) {
        if (aligned[i] != RiskLabel::unknown) {
            rv.set(g.company_ids[i], aligned[i] == RiskLabel::risk);
        }
    }
    return rv;
}

struct BuildStage {
    BipartiteGraph bipartite;
    UnipartiteGraph unipartite;
    SurrogateMap surrogates;
    RiskVector company_risk;  // keyed by company node id
    BuildDiagnostics diag;
    GraphStats bipartite_stats;
    GraphStats unipartite_stats;
};

inline BuildStage stage_build(std::span<const RegisterRecord> records, const RiskVector& risk,
                              const RunParams& params) {
    BuildStage out;
    auto built = build_bipartite(records, params.window, risk, params.build);
    out.bipartite = std::move(built.graph);
    out.surrogates = std::move(built.surrogates);
    out.company_risk = node_risk(out.bipartite, built.company_risk);
    out.diag = std::move(built.diag);
    out.unipartite = project_unipartite(out.bipartite);
    out.bipartite_stats = graph_stats(out.bipartite);
    out.unipartite_stats = graph_stats(out.unipartite);
    return out;
}

inline void write_build_stage(const std::filesystem::path& dir, const BuildStage& stage,
                              char delim = ',') {
    std::filesystem::create_directories(dir);
    {
        auto out = csv::open_output((dir / "bipartite_edges.csv").string());
        io::write_bipartite_edges(out, stage.bipartite, delim);
    }
    {
        auto out = csv::open_output((dir / "unipartite_edges.csv").string());
        io::write_unipartite_edges(out, stage.unipartite, delim);
    }
    {
        auto out = csv::open_output((dir / "company_nodes.csv").string());
        io::write_company_nodes(out, stage.bipartite.company_ids);
    }
    {
        auto out = csv::open_output((dir / "surrogates.csv").string());
        io::write_surrogates(out, stage.surrogates, delim);
    }
    {
        nlohmann::json stats{{"bipartite", io::stats_to_json(stage.bipartite_stats)},
                             {"unipartite", io::stats_to_json(stage.unipartite_stats)},
                             {"records_in", stage.diag.records_in},
                             {"records_used", stage.diag.records_used},
                             {"skipped_outside_window", stage.diag.skipped_outside_window},
                             {"surrogate_entities", stage.surrogates.pairs.size()}};
        auto out = csv::open_output((dir / "stats.json").string());
        out << stats.dump(2) << "\n";
    }
}

inline PartitionSet stage_partition(const UnipartiteGraph& g, const RunParams& params) {
    return recursive_partition(g, params.partition);
}

inline void write_partition_stage(const std::filesystem::path& dir, const PartitionSet& parts,
                                  char delim = ',') {
    std::filesystem::create_directories(dir);
    {
        auto out = csv::open_output((dir / "partition.csv").string());
        io::write_partition(out, parts, delim);
    }
    {
        auto out = csv::open_output((dir / "partition_summary.json").string());
        out << io::partition_summary(parts).dump(2) << "\n";
    }
}

struct AlgoRun {
    std::string algo;
    CvOutput cv;
    MetricReport metrics;
    std::vector<PrPoint> full_curve;
};

struct RankStage {
    FoldAssignment folds;
    std::vector<AlgoRun> runs;
    bool all_converged = true;
};

namespace detail {

inline std::vector<LabeledScore> labeled_scores(const CvOutput& cv, const RiskVector& risk) {
    std::vector<LabeledScore> out;
    for (const auto& c : cv.companies) {
        const auto label = risk.label(c.company_id);
        if (label == RiskLabel::unknown) continue;
        out.push_back({c.company_id, c.score, label == RiskLabel::risk ? 1 : 0});
    }
    return out;
}

inline RiskVector restrict_risk(const RiskVector& risk, const PartitionSet& parts) {
    RiskVector out;
    for (const auto& p : parts.partitions) {
        for (const auto& id : p.company_ids) {
            const auto label = risk.label(id);
            if (label != RiskLabel::unknown) out.set(id, label == RiskLabel::risk);
        }
    }
    return out;
}

}  // namespace detail

// Cross-validated ranking over the retained partitions, one AlgoRun per
// requested algorithm. Folds are assigned once over the retained labeled
// companies and shared by both algorithms.
inline RankStage stage_rank(const BipartiteGraph& bipartite, const UnipartiteGraph& unipartite,
                            const PartitionSet& parts, const RiskVector& risk,
                            const RunParams& params) {
    RankStage out;
    const RiskVector retained_risk = detail::restrict_risk(risk, parts);
    out.folds = assign_folds(retained_risk, params.folds, params.fold_seed);

    if (wants_pagerank(params.algos)) {
        std::vector<UnipartiteGraph> subgraphs;
        subgraphs.reserve(parts.partitions.size());
        for (const auto& p : parts.partitions) {
            std::vector<std::uint32_t> nodes;
            nodes.reserve(p.company_ids.size());
            for (const auto& id : p.company_ids) {
                auto idx = unipartite.node_index(id);
                if (!idx) throw InputError("partition company '" + id + "' missing from graph");
                nodes.push_back(*idx);
            }
            subgraphs.push_back(induced_subgraph(unipartite, nodes));
        }
        AlgoRun run;
        run.algo = "pagerank";
        run.cv = cv_rank(subgraphs, retained_risk, out.folds, params.pagerank, params.threads);
        auto labeled = detail::labeled_scores(run.cv, retained_risk);
        run.metrics = evaluate(labeled);
        run.full_curve = pr_curve_full(labeled);
        out.all_converged = out.all_converged && run.cv.all_converged;
        out.runs.push_back(std::move(run));
    }
    if (wants_birank(params.algos)) {
        const auto restrictions = restrict_bipartite(bipartite, parts);
        AlgoRun run;
        run.algo = "birank";
        run.cv = cv_rank(restrictions, retained_risk, out.folds, params.birank, params.threads);
        auto labeled = detail::labeled_scores(run.cv, retained_risk);
        run.metrics = evaluate(labeled);
        run.full_curve = pr_curve_full(labeled);
        out.all_converged = out.all_converged && run.cv.all_converged;
        out.runs.push_back(std::move(run));
    }
    return out;
}

inline void write_rank_stage(const std::filesystem::path& dir, const RankStage& stage,
                             char delim = ',') {
    std::filesystem::create_directories(dir);
    {
        auto out = csv::open_output((dir / "folds.csv").string());
        io::write_folds(out, stage.folds, delim);
    }
    for (const auto& run : stage.runs) {
        {
            auto out = csv::open_output((dir / ("scores_" + run.algo + ".csv")).string());
            io::write_scores(out, run.cv, delim);
        }
        {
            auto out = csv::open_output((dir / ("metrics_" + run.algo + ".json")).string());
            out << io::metric_report_to_json(run.metrics).dump(2) << "\n";
        }
        {
            auto out = csv::open_output((dir / ("pr_curve_" + run.algo + ".csv")).string());
            io::write_pr_curve(out, run.full_curve, delim);
        }
        {
            auto out = csv::open_output((dir / ("target_bins_" + run.algo + ".csv")).string());
            io::write_target_bins(out, run.metrics.target_bins, delim);
        }
    }
}

struct BenchTiming {
    std::string algo;
    int repetitions = 0;
    double mean_seconds = 0.0;
    std::optional<double> sd_seconds;  // absent for a single repetition
    std::vector<double> run_seconds;
};

struct BenchReport {
    std::vector<BenchTiming> timings;
};

// Wall-clock comparison of one full multi-partition sweep per algorithm, no
// cross-validation: every run uses the complete restart vector. Both
// algorithms see the same partition set.
inline BenchReport stage_bench(const BipartiteGraph& bipartite, const UnipartiteGraph& unipartite,
                               const PartitionSet& parts, const RiskVector& risk,
                               const RunParams& params, int repetitions) {
    if (repetitions < 1) throw Error("bench needs at least one repetition");
    using clock = std::chrono::steady_clock;
    BenchReport report;

    const RiskVector retained_risk = detail::restrict_risk(risk, parts);
    const FoldAssignment no_mask{2, 0, {}};  // empty assignment: nothing masked

    if (wants_pagerank(params.algos)) {
        std::vector<NormalizedMatrix> matrices;
        std::vector<std::vector<double>> restarts;
        for (const auto& p : parts.partitions) {
            std::vector<std::uint32_t> nodes;
            for (const auto& id : p.company_ids) nodes.push_back(*unipartite.node_index(id));
            auto sub = induced_subgraph(unipartite, nodes);
            restarts.push_back(make_restart(sub.node_ids, retained_risk, no_mask, -1));
            matrices.push_back(row_normalize(sub));
        }
        BenchTiming t;
        t.algo = "pagerank";
        t.repetitions = repetitions;
        for (int rep = 0; rep < repetitions; ++rep) {
            const auto begin = clock::now();
            for (std::size_t p = 0; p < matrices.size(); ++p) {
                pagerank(matrices[p], restarts[p], params.pagerank);
            }
            t.run_seconds.push_back(std::chrono::duration<double>(clock::now() - begin).count());
        }
        report.timings.push_back(std::move(t));
    }
    if (wants_birank(params.algos)) {
        const auto restrictions = restrict_bipartite(bipartite, parts);
        std::vector<NormalizedMatrix> matrices;
        std::vector<std::vector<double>> restarts;
        for (const auto& sub : restrictions) {
            restarts.push_back(make_restart(sub.company_ids, retained_risk, no_mask, -1));
            matrices.push_back(symmetric_normalize(sub));
        }
        BenchTiming t;
        t.algo = "birank";
        t.repetitions = repetitions;
        for (int rep = 0; rep < repetitions; ++rep) {
            const auto begin = clock::now();
            for (std::size_t p = 0; p < matrices.size(); ++p) {
                std::vector<double> p0(restrictions[p].person_ids.size(), 0.0);
                birank(matrices[p], restarts[p], p0, params.birank);
            }
            t.run_seconds.push_back(std::chrono::duration<double>(clock::now() - begin).count());
        }
        report.timings.push_back(std::move(t));
    }

    for (auto& t : report.timings) {
        double sum = 0.0;
        for (double s : t.run_seconds) sum += s;
        t.mean_seconds = sum / static_cast<double>(t.run_seconds.size());
        if (t.run_seconds.size() > 1) {
            double ss = 0.0;
            for (double s : t.run_seconds) ss += (s - t.mean_seconds) * (s - t.mean_seconds);
            t.sd_seconds = std::sqrt(ss / static_cast<double>(t.run_seconds.size() - 1));
        }
    }
    return report;
}

inline nlohmann::json bench_to_json(const BenchReport& report) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : report.timings) {
        nlohmann::json entry{{"algo", t.algo},
                             {"repetitions", t.repetitions},
                             {"mean_seconds", t.mean_seconds},
                             {"run_seconds", t.run_seconds}};
        if (t.sd_seconds) {
            entry["sd_seconds"] = *t.sd_seconds;
        } else {
            entry["sd_seconds"] = nullptr;
        }
        out.push_back(std::move(entry));
    }
    return out;
}

// ---- end-to-end synthetic reproduction --------------------------------------

struct ClaimOutcome {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ReproduceReport {
    GenConfig config;
    std::size_t bipartite_edges = 0;
    std::size_t unipartite_edges = 0;
    double edge_ratio = 0.0;
    std::size_t partition_count = 0;
    std::size_t dropped_nodes = 0;
    std::vector<AlgoRun> runs;
    std::vector<ClaimOutcome> claims;
    bool all_claims_pass = false;
};

// Partition thresholds scaled to the synthetic preset size: the drop filter
// shrinks with the graph, while components of this scale stay un-bisected.
inline RunParams reproduce_params() {
    RunParams params;
    params.partition.min_size = 10;
    return params;
}

namespace detail {

inline const AlgoRun* find_run(const std::vector<AlgoRun>& runs, std::string_view algo) {
    for (const auto& r : runs) {
        if (r.algo == algo) return &r;
    }
    return nullptr;
}

inline double recall_at_fraction(const std::vector<PrPoint>& curve, double fraction) {
    if (curve.empty()) return 0.0;
    auto sel = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(curve.size())));
    sel = std::clamp<std::size_t>(sel, 1, curve.size());
    return curve[sel - 1].recall;
}

}  // namespace detail

// Generates the synthetic register, runs the whole pipeline on it, and checks
// the directional findings the production study reports: positive significant
// rank correlation for both algorithms, higher scores for the risk group, a
// clear lift in the top bins, and a recall edge for the bipartite model at
// large selection sizes.
inline ReproduceReport run_reproduce(const GenConfig& gen_config, const RunParams& params,
                                     const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ReproduceReport report;
    report.config = gen_config;

    const auto data = generate(gen_config);
    {
        auto out = csv::open_output((out_dir / "records.csv").string());
        io::write_records(out, data.records, params.delimiter);
    }
    {
        auto out = csv::open_output((out_dir / "risk.csv").string());
        io::write_risk(out, data.risk, params.delimiter);
    }
    {
        auto out = csv::open_output((out_dir / "ground_truth.csv").string());
        io::write_ground_truth(out, data.truth, params.delimiter);
    }

    const auto build = stage_build(data.records, data.risk, params);
    write_build_stage(out_dir, build, params.delimiter);
    report.bipartite_edges = build.bipartite.edges.size();
    report.unipartite_edges = build.unipartite.edges.size();
    report.edge_ratio = build.bipartite.edges.empty()
                            ? 0.0
                            : static_cast<double>(report.unipartite_edges) /
                                  static_cast<double>(report.bipartite_edges);

    const auto parts = stage_partition(build.unipartite, params);
    write_partition_stage(out_dir, parts, params.delimiter);
    report.partition_count = parts.partitions.size();
    report.dropped_nodes = parts.dropped_company_ids.size();

    auto rank = stage_rank(build.bipartite, build.unipartite, parts, build.company_risk, params);
    write_rank_stage(out_dir, rank, params.delimiter);
    report.runs = std::move(rank.runs);

    const auto* pr = detail::find_run(report.runs, "pagerank");
    const auto* br = detail::find_run(report.runs, "birank");
    auto claim = [&](std::string name, bool pass, std::string detail) {
        report.claims.push_back({std::move(name), pass, std::move(detail)});
    };
    char buf[160];
    if (pr) {
        std::snprintf(buf, sizeof(buf), "rho=%.5f p=%.3g", pr->metrics.rho, pr->metrics.rho_p);
        claim("pagerank_spearman_positive_significant",
              pr->metrics.rho > 0 && pr->metrics.rho_p < 0.01, buf);
        std::snprintf(buf, sizeof(buf), "Z=%.3f", pr->metrics.z);
        claim("pagerank_mwu_risk_group_higher", pr->metrics.z > 0, buf);
    }
    if (br) {
        std::snprintf(buf, sizeof(buf), "rho=%.5f p=%.3g", br->metrics.rho, br->metrics.rho_p);
        claim("birank_spearman_positive_significant",
              br->metrics.rho > 0 && br->metrics.rho_p < 0.01, buf);
        std::snprintf(buf, sizeof(buf), "Z=%.3f", br->metrics.z);
        claim("birank_mwu_risk_group_higher", br->metrics.z > 0, buf);
        const double lift = br->metrics.target_bins.empty() ? 0.0
                                                            : br->metrics.target_bins.front().lift;
        std::snprintf(buf, sizeof(buf), "top-5%% bin lift=%.3f", lift);
        claim("birank_top_bin_lift_over_2", lift > 2.0, buf);
    }
    if (pr && br) {
        const double pr_recall = detail::recall_at_fraction(pr->full_curve, 0.20);
        const double br_recall = detail::recall_at_fraction(br->full_curve, 0.20);
        std::snprintf(buf, sizeof(buf), "birank=%.4f pagerank=%.4f", br_recall, pr_recall);
        claim("birank_recall_at_20pct_not_below_pagerank", br_recall >= pr_recall, buf);
    }
    report.all_claims_pass = true;
    for (const auto& c : report.claims) report.all_claims_pass = report.all_claims_pass && c.pass;

    // structured + human-readable reports
    {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : report.runs) {
            runs.push_back({{"algo", r.algo}, {"metrics", io::metric_report_to_json(r.metrics)}});
        }
        nlohmann::json claims = nlohmann::json::array();
        for (const auto& c : report.claims) {
            claims.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        }
        nlohmann::json doc{{"seed", gen_config.seed},
                           {"companies", gen_config.n_companies},
                           {"persons", gen_config.n_persons},
                           {"homophily", gen_config.homophily},
                           {"bipartite_edges", report.bipartite_edges},
                           {"unipartite_edges", report.unipartite_edges},
                           {"edge_ratio", report.edge_ratio},
                           {"partition_count", report.partition_count},
                           {"dropped_nodes", report.dropped_nodes},
                           {"runs", runs},
                           {"claims", claims},
                           {"all_claims_pass", report.all_claims_pass}};
        auto out = csv::open_output((out_dir / "report.json").string());
        out << doc.dump(2) << "\n";
    }
    {
        auto out = csv::open_output((out_dir / "report.txt").string());
        out << "synthetic reproduction report\n";
        out << "seed " << gen_config.seed << ", " << gen_config.n_companies << " companies, "
            << gen_config.n_persons << " persons, homophily " << gen_config.homophily << "\n";
        out << "edges: bipartite " << report.bipartite_edges << ", unipartite "
            << report.unipartite_edges << " (ratio " << csv::format_double(report.edge_ratio)
            << ")\n";
        out << "partitions: " << report.partition_count << " retained, " << report.dropped_nodes
            << " nodes dropped\n";
        for (const auto& r : report.runs) {
            out << r.algo << ": rho " << csv::format_double(r.metrics.rho) << " (p "
                << csv::format_double(r.metrics.rho_p) << "), Z "
                << csv::format_double(r.metrics.z) << ", n " << r.metrics.n << " (n1 "
                << r.metrics.n1 << ")\n";
        }
        for (const auto& c : report.claims) {
            out << (c.pass ? "[pass] " : "[FAIL] ") << c.name << " (" << c.detail << ")\n";
        }
    }
    return report;
}

}  // namespace regrank
