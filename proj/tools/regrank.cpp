// regrank: build company-person graphs from register extracts, partition
// them, and rank companies by propagated risk.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "regrank/datagen.hpp"
#include "regrank/errors.hpp"
#include "regrank/io.hpp"
#include "regrank/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace regrank;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitPartial = 3;  // outputs written, but some run did not converge

Date parse_date_arg(const std::string& s, const std::string& flag) {
    auto d = parse_date(s);
    if (!d) throw InputError(flag + ": bad date '" + s + "', expected YYYY-MM-DD");
    return *d;
}

void report_issues(const std::string& path, const std::vector<ParseIssue>& errors,
                   const std::vector<ParseIssue>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << path << ":" << w.line << ": " << w.message << "\n";
    }
    for (const auto& e : errors) {
        std::cerr << "error: " << path << ":" << e.line << ": " << e.message << "\n";
    }
}

struct GenFlags {
    GenConfig cfg;
    bool preset = false;

    void attach(CLI::App* cmd) {
        cmd->add_flag("--preset", preset,
                      "start from the scaled register-shaped preset (hubs, homophily 0.6)");
        cmd->add_option("--companies", cfg.n_companies, "number of companies")
            ->capture_default_str();
        cmd->add_option("--persons", cfg.n_persons, "number of persons")->capture_default_str();
        cmd->add_option("--seed", cfg.seed, "generator seed")->capture_default_str();
        cmd->add_option("--homophily", cfg.homophily, "risk contagion probability in [0,1]")
            ->capture_default_str();
        cmd->add_option("--base-rate", cfg.base_rate, "seed probability of risk = 1")
            ->capture_default_str();
        cmd->add_option("--hub-count", cfg.hub_count, "number of super-director persons")
            ->capture_default_str();
        cmd->add_option("--hub-degree", cfg.hub_degree, "directorships per super-director")
            ->capture_default_str();
        cmd->add_option("--degree-exponent", cfg.degree_exponent,
                        "power-law exponent of directorships per person")
            ->capture_default_str();
        cmd->add_option("--max-degree", cfg.max_degree, "cap on regular directorships per person")
            ->capture_default_str();
        cmd->add_option("--one-person-rate", cfg.one_person_rate,
                        "fraction of one-person enterprises")
            ->capture_default_str();
        cmd->add_option("--clusters", cfg.cluster_count, "planted cluster count")
            ->capture_default_str();
        cmd->add_option("--cross-cluster-rate", cfg.cross_cluster_rate,
                        "directorship probability outside the home cluster")
            ->capture_default_str();
    }

    GenConfig resolve(CLI::App* cmd) const {
        if (!preset) return cfg;
        GenConfig merged = register_scale_preset();
        // explicit flags override the preset
        auto used = [&](const std::string& name) { return cmd->count(name) > 0; };
        if (used("--companies")) merged.n_companies = cfg.n_companies;
        if (used("--persons")) merged.n_persons = cfg.n_persons;
        if (used("--seed")) merged.seed = cfg.seed;
        if (used("--homophily")) merged.homophily = cfg.homophily;
        if (used("--base-rate")) merged.base_rate = cfg.base_rate;
        if (used("--hub-count")) merged.hub_count = cfg.hub_count;
        if (used("--hub-degree")) merged.hub_degree = cfg.hub_degree;
        if (used("--degree-exponent")) merged.degree_exponent = cfg.degree_exponent;
        if (used("--max-degree")) merged.max_degree = cfg.max_degree;
        if (used("--one-person-rate")) merged.one_person_rate = cfg.one_person_rate;
        if (used("--clusters")) merged.cluster_count = cfg.cluster_count;
        if (used("--cross-cluster-rate")) merged.cross_cluster_rate = cfg.cross_cluster_rate;
        return merged;
    }
};

int cmd_generate(const GenConfig& cfg, const fs::path& out_dir, char delim) {
    const auto data = generate(cfg);
    fs::create_directories(out_dir);
    {
        auto out = csv::open_output((out_dir / "records.csv").string());
        io::write_records(out, data.records, delim);
    }
    {
        auto out = csv::open_output((out_dir / "risk.csv").string());
        io::write_risk(out, data.risk, delim);
    }
    {
        auto out = csv::open_output((out_dir / "ground_truth.csv").string());
        io::write_ground_truth(out, data.truth, delim);
    }
    std::cerr << "generated " << data.records.size() << " records for " << cfg.n_companies
              << " companies / " << cfg.n_persons << " persons into " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_build(const std::string& records_path, const std::string& risk_path,
              const RunParams& params, const fs::path& out_dir) {
    auto parsed = parse_records_file(records_path, params.delimiter);
    report_issues(records_path, parsed.errors, parsed.warnings);
    if (!parsed.errors.empty()) return kExitInput;

    RiskVector risk;
    if (!risk_path.empty()) {
        auto risk_parsed = parse_risk_file(risk_path, params.delimiter);
        report_issues(risk_path, risk_parsed.errors, {});
        if (!risk_parsed.errors.empty()) return kExitInput;
        risk = std::move(risk_parsed.risk);
    }

    if (parsed.records.empty()) {
        std::cerr << "warning: " << records_path << ": no usable records, graphs are empty\n";
    }
    const auto stage = stage_build(parsed.records, risk, params);
    write_build_stage(out_dir, stage, params.delimiter);
    if (stage.diag.skipped_outside_window > 0) {
        std::cerr << "warning: " << stage.diag.skipped_outside_window
                  << " records outside the observation window were skipped\n";
    }
    std::cerr << "bipartite: " << stage.bipartite.company_ids.size() << " companies, "
              << stage.bipartite.person_ids.size() << " persons, " << stage.bipartite.edges.size()
              << " edges; unipartite: " << stage.unipartite.edges.size() << " edges\n";
    return kExitOk;
}

int cmd_partition(const std::string& edges_path, const std::string& nodes_path,
                  const RunParams& params, const fs::path& out_dir) {
    auto nodes_in = csv::open_input(nodes_path);
    auto edges_in = csv::open_input(edges_path);
    const auto graph = io::read_unipartite(nodes_in, edges_in, params.delimiter);
    const auto parts = stage_partition(graph, params);
    write_partition_stage(out_dir, parts, params.delimiter);
    std::cerr << "partitions: " << parts.partitions.size() << " retained, "
              << parts.dropped_company_ids.size() << " nodes dropped\n";
    return kExitOk;
}

struct GraphInputs {
    std::string bipartite_path;
    std::string edges_path;
    std::string nodes_path;
    std::string partitions_path;
    std::string risk_path;
    std::string surrogates_path;
};

struct LoadedGraphs {
    BipartiteGraph bipartite;
    UnipartiteGraph unipartite;
    PartitionSet parts;
    RiskVector risk;  // keyed by company node id
};

LoadedGraphs load_graphs(const GraphInputs& in, char delim) {
    LoadedGraphs out;
    {
        auto f = csv::open_input(in.bipartite_path);
        out.bipartite = io::read_bipartite_edges(f, delim);
    }
    {
        auto nodes = csv::open_input(in.nodes_path);
        auto edges = csv::open_input(in.edges_path);
        out.unipartite = io::read_unipartite(nodes, edges, delim);
    }
    {
        auto f = csv::open_input(in.partitions_path);
        out.parts = io::read_partition(f, delim);
    }
    SurrogateMap surrogates;
    if (!in.surrogates_path.empty()) {
        auto f = csv::open_input(in.surrogates_path);
        surrogates = io::read_surrogates(f, delim);
    }
    auto risk_parsed = parse_risk_file(in.risk_path, delim);
    report_issues(in.risk_path, risk_parsed.errors, {});
    if (!risk_parsed.errors.empty()) throw InputError("risk file has errors");
    for (const auto& [id, is_risk] : risk_parsed.risk.entries()) {
        auto it = surrogates.pairs.find(id);
        const std::string& node = it == surrogates.pairs.end() ? id : it->second.company_id;
        if (out.bipartite.company_index(node)) out.risk.set(node, is_risk);
    }
    return out;
}

int cmd_rank(const GraphInputs& inputs, const RunParams& params, const fs::path& out_dir) {
    const auto graphs = load_graphs(inputs, params.delimiter);
    const auto stage =
        stage_rank(graphs.bipartite, graphs.unipartite, graphs.parts, graphs.risk, params);
    write_rank_stage(out_dir, stage, params.delimiter);
    for (const auto& run : stage.runs) {
        std::cerr << run.algo << ": rho " << run.metrics.rho << " (p " << run.metrics.rho_p
                  << "), Z " << run.metrics.z << ", n " << run.metrics.n << "\n";
    }
    if (!stage.all_converged) {
        std::cerr << "warning: some runs did not converge within max_iter\n";
        return kExitPartial;
    }
    return kExitOk;
}

int cmd_bench(const GraphInputs& inputs, const RunParams& params, int repetitions,
              const fs::path& out_dir) {
    const auto graphs = load_graphs(inputs, params.delimiter);
    const auto report =
        stage_bench(graphs.bipartite, graphs.unipartite, graphs.parts, graphs.risk, params,
                    repetitions);
    fs::create_directories(out_dir);
    {
        auto out = csv::open_output((out_dir / "bench.json").string());
        out << bench_to_json(report).dump(2) << "\n";
    }
    for (const auto& t : report.timings) {
        std::cerr << t.algo << ": mean " << t.mean_seconds << " s";
        if (t.sd_seconds) std::cerr << " +- " << *t.sd_seconds << " s";
        std::cerr << " over " << t.repetitions << " runs\n";
    }
    return kExitOk;
}

int cmd_reproduce(const GenConfig& cfg, const RunParams& params, const fs::path& out_dir) {
    const auto report = run_reproduce(cfg, params, out_dir);
    std::cerr << "edge ratio " << report.edge_ratio << ", " << report.partition_count
              << " partitions\n";
    for (const auto& c : report.claims) {
        std::cerr << (c.pass ? "[pass] " : "[FAIL] ") << c.name << " (" << c.detail << ")\n";
    }
    bool converged = true;
    for (const auto& run : report.runs) converged = converged && run.cv.all_converged;
    return converged ? kExitOk : kExitPartial;
}

void attach_rank_params(CLI::App* cmd, RunParams& params, std::string& algo) {
    cmd->add_option("--algo", algo, "pagerank, birank, or both")->capture_default_str();
    cmd->add_option("--pagerank-alpha", params.pagerank.alpha, "PageRank damping")
        ->capture_default_str();
    cmd->add_option("--pagerank-epsilon", params.pagerank.epsilon,
                    "PageRank L2 convergence threshold")
        ->capture_default_str();
    cmd->add_option("--pagerank-max-iter", params.pagerank.max_iter, "PageRank iteration cap")
        ->capture_default_str();
    cmd->add_option("--birank-alpha", params.birank.alpha, "BiRank company-side mixing")
        ->capture_default_str();
    cmd->add_option("--birank-beta", params.birank.beta, "BiRank person-side mixing")
        ->capture_default_str();
    cmd->add_option("--birank-epsilon", params.birank.epsilon,
                    "BiRank joint L1 convergence threshold")
        ->capture_default_str();
    cmd->add_option("--birank-max-iter", params.birank.max_iter, "BiRank iteration cap")
        ->capture_default_str();
    cmd->add_option("--k", params.folds, "cross-validation folds")->capture_default_str();
    cmd->add_option("--fold-seed", params.fold_seed, "fold assignment seed")
        ->capture_default_str();
    cmd->add_option("--threads", params.threads, "worker threads for partition x fold tasks")
        ->capture_default_str();
}

AlgoSelection parse_algo(const std::string& s) {
    if (s == "pagerank") return AlgoSelection::pagerank;
    if (s == "birank") return AlgoSelection::birank;
    if (s == "both") return AlgoSelection::both;
    throw InputError("--algo must be pagerank, birank, or both");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"company register graph ranking toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI file");

    std::string out_dir = "out";
    app.add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    std::string delimiter = ",";
    app.add_option("--delimiter", delimiter, "field delimiter for all tabular files")
        ->capture_default_str();

    RunParams params;
    std::string algo = "both";

    // generate
    auto* generate_cmd = app.add_subcommand("generate", "write a synthetic register extract");
    GenFlags gen_flags;
    gen_flags.attach(generate_cmd);

    // build
    auto* build_cmd =
        app.add_subcommand("build", "construct the bipartite and projected graphs from records");
    std::string records_path, risk_path;
    std::string window_start = "1991-01-01", window_end = "2021-01-01";
    build_cmd->add_option("--records", records_path, "register records csv")->required();
    build_cmd->add_option("--risk", risk_path, "risk label csv (entity_id,risk)");
    build_cmd->add_option("--window-start", window_start, "observation window start")
        ->capture_default_str();
    build_cmd->add_option("--window-end", window_end, "observation window end")
        ->capture_default_str();
    build_cmd->add_option("--max-weight", params.build.max_weight,
                          "tenure weight cap, also the surrogate edge weight")
        ->capture_default_str();

    // partition
    auto* partition_cmd =
        app.add_subcommand("partition", "split the company graph by components and bisection");
    std::string edges_path, nodes_path;
    partition_cmd->add_option("--edges", edges_path, "unipartite edge csv")->required();
    partition_cmd->add_option("--nodes", nodes_path, "company node csv")->required();
    partition_cmd->add_option("--max-size", params.partition.max_size,
                              "bisect components at or above this size")
        ->capture_default_str();
    partition_cmd->add_option("--min-size", params.partition.min_size,
                              "drop partitions below this size")
        ->capture_default_str();
    partition_cmd->add_option("--fiedler-tol", params.partition.fiedler.tol,
                              "eigensolver residual tolerance")
        ->capture_default_str();
    partition_cmd->add_option("--fiedler-max-iter", params.partition.fiedler.max_iter,
                              "eigensolver matvec budget")
        ->capture_default_str();

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "cross-validated scores and rank quality metrics");
    GraphInputs rank_inputs;
    rank_cmd->add_option("--bipartite", rank_inputs.bipartite_path, "bipartite edge csv")
        ->required();
    rank_cmd->add_option("--edges", rank_inputs.edges_path, "unipartite edge csv")->required();
    rank_cmd->add_option("--nodes", rank_inputs.nodes_path, "company node csv")->required();
    rank_cmd->add_option("--partitions", rank_inputs.partitions_path, "partition csv")->required();
    rank_cmd->add_option("--risk", rank_inputs.risk_path, "risk label csv")->required();
    rank_cmd->add_option("--surrogates", rank_inputs.surrogates_path, "surrogate map csv");
    attach_rank_params(rank_cmd, params, algo);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run-time comparison over the same partitions");
    GraphInputs bench_inputs;
    int repetitions = 20;
    bench_cmd->add_option("--bipartite", bench_inputs.bipartite_path, "bipartite edge csv")
        ->required();
    bench_cmd->add_option("--edges", bench_inputs.edges_path, "unipartite edge csv")->required();
    bench_cmd->add_option("--nodes", bench_inputs.nodes_path, "company node csv")->required();
    bench_cmd->add_option("--partitions", bench_inputs.partitions_path, "partition csv")
        ->required();
    bench_cmd->add_option("--risk", bench_inputs.risk_path, "risk label csv")->required();
    bench_cmd->add_option("--surrogates", bench_inputs.surrogates_path, "surrogate map csv");
    bench_cmd->add_option("--repetitions", repetitions, "timed repetitions per algorithm")
        ->capture_default_str();
    std::string bench_algo = "both";
    bench_cmd->add_option("--algo", bench_algo, "pagerank, birank, or both")
        ->capture_default_str();

    // reproduce
    auto* reproduce_cmd = app.add_subcommand(
        "reproduce", "synthetic end-to-end run with directional claims marked pass/fail");
    GenFlags reproduce_flags;
    reproduce_flags.preset = true;  // reproduce always starts from the preset
    reproduce_flags.cfg = register_scale_preset();
    reproduce_cmd->add_option("--companies", reproduce_flags.cfg.n_companies,
                              "number of companies")
        ->capture_default_str();
    reproduce_cmd->add_option("--persons", reproduce_flags.cfg.n_persons, "number of persons")
        ->capture_default_str();
    reproduce_cmd->add_option("--seed", reproduce_flags.cfg.seed, "generator seed")
        ->capture_default_str();
    reproduce_cmd->add_option("--homophily", reproduce_flags.cfg.homophily,
                              "risk contagion probability")
        ->capture_default_str();
    reproduce_cmd->add_option("--hub-count", reproduce_flags.cfg.hub_count, "super-directors")
        ->capture_default_str();
    reproduce_cmd->add_option("--hub-degree", reproduce_flags.cfg.hub_degree,
                              "directorships per super-director")
        ->capture_default_str();
    RunParams reproduce_run = reproduce_params();
    reproduce_cmd->add_option("--k", reproduce_run.folds, "cross-validation folds")
        ->capture_default_str();
    reproduce_cmd->add_option("--fold-seed", reproduce_run.fold_seed, "fold assignment seed")
        ->capture_default_str();
    reproduce_cmd->add_option("--threads", reproduce_run.threads, "worker threads")
        ->capture_default_str();
    reproduce_cmd->add_option("--max-size", reproduce_run.partition.max_size,
                              "bisect components at or above this size")
        ->capture_default_str();
    reproduce_cmd->add_option("--min-size", reproduce_run.partition.min_size,
                              "drop partitions below this size")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (delimiter.size() != 1) throw InputError("--delimiter must be a single character");
        params.delimiter = delimiter[0];
        reproduce_run.delimiter = delimiter[0];

        if (generate_cmd->parsed()) {
            return cmd_generate(gen_flags.resolve(generate_cmd), out_dir, params.delimiter);
        }
        if (build_cmd->parsed()) {
            params.window = {parse_date_arg(window_start, "--window-start"),
                             parse_date_arg(window_end, "--window-end")};
            params.window.validate();
            return cmd_build(records_path, risk_path, params, out_dir);
        }
        if (partition_cmd->parsed()) {
            return cmd_partition(edges_path, nodes_path, params, out_dir);
        }
        if (rank_cmd->parsed()) {
            params.algos = parse_algo(algo);
            return cmd_rank(rank_inputs, params, out_dir);
        }
        if (bench_cmd->parsed()) {
            params.algos = parse_algo(bench_algo);
            return cmd_bench(bench_inputs, params, repetitions, out_dir);
        }
        if (reproduce_cmd->parsed()) {
            return cmd_reproduce(reproduce_flags.cfg, reproduce_run, out_dir);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
