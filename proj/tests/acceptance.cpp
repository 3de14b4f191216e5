// Acceptance suite: one line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "regrank/crossval.hpp"
#include "regrank/datagen.hpp"
#include "regrank/eval.hpp"
#include "regrank/io.hpp"
#include "regrank/partition.hpp"
#include "regrank/pipeline.hpp"
#include "regrank/ranking.hpp"
#include "support/reference.hpp"

using namespace regrank;
namespace fs = std::filesystem;

namespace {

struct Harness {
    int failures = 0;

    void report(int number, const std::string& what, bool pass, const std::string& detail) {
        std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", number, what.c_str(),
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }

    void run(int number, const std::string& what,
             const std::function<std::pair<bool, std::string>()>& fn) {
        try {
            auto [pass, detail] = fn();
            report(number, what, pass, detail);
        } catch (const std::exception& e) {
            report(number, what, false, std::string("exception: ") + e.what());
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("regrank_acceptance_" + name);
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

// ---- criterion 1: sparse kernels match dense references ---------------------

std::pair<bool, std::string> oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto g = oracle::random_unipartite(seed, 40 + 3 * seed, 0.08);
        auto a = row_normalize(g);
        std::vector<double> e(g.node_ids.size(), 0.0);
        Rng rng(seed * 31);
        for (auto& x : e) x = rng.bernoulli(0.25) ? 1.0 : 0.0;
        PageRankParams params{0.85, 1e-13, 4000};
        auto sparse = pagerank(a, e, params);
        auto dense = oracle::dense_pagerank(oracle::unipartite_adjacency(g), e, params.alpha,
                                            params.epsilon, params.max_iter);
        for (std::size_t i = 0; i < dense.size(); ++i) {
            worst = std::max(worst, std::abs(sparse.scores[i] - dense[i]));
        }
    }
    for (std::uint64_t seed = 21; seed <= 40; ++seed) {
        auto g = oracle::random_bipartite(seed, 40, 55, 0.08);  // 95 nodes total
        auto s = symmetric_normalize(g);
        std::vector<double> u0(g.company_ids.size(), 0.0);
        std::vector<double> p0(g.person_ids.size(), 0.0);
        Rng rng(seed * 17);
        for (auto& x : u0) x = rng.bernoulli(0.25) ? 1.0 : 0.0;
        BiRankParams params{0.85, 0.85, 1e-13, 4000};
        auto sparse = birank(s, u0, p0, params);
        auto dense = oracle::dense_birank(oracle::bipartite_weights(g), u0, p0, params.alpha,
                                          params.beta, params.epsilon, params.max_iter);
        for (std::size_t i = 0; i < dense.companies.size(); ++i) {
            worst = std::max(worst, std::abs(sparse.companies.scores[i] - dense.companies[i]));
        }
        for (std::size_t j = 0; j < dense.persons.size(); ++j) {
            worst = std::max(worst, std::abs(sparse.persons.scores[j] - dense.persons[j]));
        }
    }

    const double elapsed = seconds_since(start);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "max abs diff %.2e over 40 graphs, %.1f s", worst,
                  elapsed);
    return {worst <= 1e-10 && elapsed < 10.0, detail};
}

// ---- criterion 2: analytic fixed points --------------------------------------

std::pair<bool, std::string> analytic_fixed_points() {
    UnipartiteGraph g;
    g.node_ids = {"A", "B"};
    g.edges = {{0, 1, 1.0}};
    auto pr = pagerank(row_normalize(g), std::vector<double>{1.0, 0.0}, {0.85, 1e-12, 5000});
    const bool pagerank_ok = std::abs(pr.scores[0] - 0.540541) < 1e-6 &&
                             std::abs(pr.scores[1] - 0.459459) < 1e-6;

    BipartiteGraph b;
    b.company_ids = {"C"};
    b.person_ids = {"P"};
    b.edges = {{0, 0, 1}};
    auto br = birank(symmetric_normalize(b), std::vector<double>{1.0}, std::vector<double>{0.0},
                     {0.5, 0.5, 1e-14, 5000});
    const bool birank_ok = std::abs(br.companies.scores[0] - 2.0 / 3.0) < 1e-6 &&
                           std::abs(br.persons.scores[0] - 1.0 / 3.0) < 1e-6;

    char detail[160];
    std::snprintf(detail, sizeof(detail), "pagerank (%.7f, %.7f), birank (%.7f, %.7f)",
                  pr.scores[0], pr.scores[1], br.companies.scores[0], br.persons.scores[0]);
    return {pagerank_ok && birank_ok, detail};
}

// ---- criterion 3: no label leakage into a node's own score -------------------

std::pair<bool, std::string> leakage() {
    GenConfig cfg;
    cfg.n_companies = 400;
    cfg.n_persons = 650;
    cfg.cluster_count = 4;
    cfg.base_rate = 0.25;
    cfg.homophily = 0.5;
    cfg.hub_count = 2;
    cfg.hub_degree = 15;
    cfg.seed = 909;
    auto data = generate(cfg);

    RunParams params;
    params.partition.min_size = 2;
    params.folds = 5;
    auto build = stage_build(data.records, data.risk, params);
    auto parts = stage_partition(build.unipartite, params);
    auto folds = assign_folds(build.company_risk, params.folds, 1);

    auto restrictions = restrict_bipartite(build.bipartite, parts);
    std::vector<UnipartiteGraph> subgraphs;
    for (const auto& p : parts.partitions) {
        std::vector<std::uint32_t> nodes;
        for (const auto& id : p.company_ids) nodes.push_back(*build.unipartite.node_index(id));
        subgraphs.push_back(induced_subgraph(build.unipartite, nodes));
    }

    std::vector<std::string> retained_labeled;
    for (const auto& p : parts.partitions) {
        for (const auto& id : p.company_ids) {
            if (build.company_risk.label(id) != RiskLabel::unknown) retained_labeled.push_back(id);
        }
    }
    Rng rng(4242);
    rng.shuffle(retained_labeled);
    const std::size_t victims = std::min<std::size_t>(50, retained_labeled.size());

    auto reported = [](const CvOutput& cv, const std::string& id) {
        auto it = std::lower_bound(cv.companies.begin(), cv.companies.end(), id,
                                   [](const CompanyScore& c, const std::string& key) {
                                       return c.company_id < key;
                                   });
        return it->score;
    };

    auto base_pr = cv_rank(subgraphs, build.company_risk, folds, PageRankParams{}, 2);
    auto base_br = cv_rank(restrictions, build.company_risk, folds, BiRankParams{}, 2);

    std::size_t checked = 0;
    for (std::size_t v = 0; v < victims; ++v) {
        const auto& victim = retained_labeled[v];
        RiskVector flipped = build.company_risk;
        flipped.set(victim, build.company_risk.label(victim) != RiskLabel::risk);

        auto pr = cv_rank(subgraphs, flipped, folds, PageRankParams{}, 2);
        auto br = cv_rank(restrictions, flipped, folds, BiRankParams{}, 2);
        if (reported(pr, victim) != reported(base_pr, victim)) {
            return {false, "pagerank score moved for " + victim};
        }
        if (reported(br, victim) != reported(base_br, victim)) {
            return {false, "birank score moved for " + victim};
        }
        ++checked;
    }
    return {checked == 50, std::to_string(checked) + " label flips, zero score movement"};
}

// ---- criterion 4: projection law and hub mechanism ---------------------------

std::pair<bool, std::string> projection_law() {
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
        auto g = oracle::random_bipartite(seed, 50, 70, 0.05);
        auto uni = project_unipartite(g);
        auto expected = oracle::brute_force_projection(g);
        if (uni.edges.size() != expected.size()) {
            return {false, "edge count mismatch on seed " + std::to_string(seed)};
        }
        for (const auto& e : uni.edges) {
            auto it = expected.find({e.a, e.b});
            if (it == expected.end() || it->second != e.weight) {
                return {false, "edge weight mismatch on seed " + std::to_string(seed)};
            }
        }
    }

    const ObservationWindow window{{1991, 1, 1}, {2021, 1, 1}};
    auto preset = register_scale_preset();
    auto with_hubs = build_bipartite(generate(preset).records, window);
    const double hub_ratio =
        static_cast<double>(project_unipartite(with_hubs.graph).edges.size()) /
        static_cast<double>(with_hubs.graph.edges.size());

    auto hubless = preset;
    hubless.hub_count = 0;
    hubless.hub_degree = 0;
    auto without_hubs = build_bipartite(generate(hubless).records, window);
    const double flat_ratio =
        static_cast<double>(project_unipartite(without_hubs.graph).edges.size()) /
        static_cast<double>(without_hubs.graph.edges.size());

    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "10 graphs exact; ratio with hubs %.2f (> 3), without %.2f (< 1.2)", hub_ratio,
                  flat_ratio);
    return {hub_ratio > 3.0 && flat_ratio < 1.2, detail};
}

// ---- criterion 5: partitioning ------------------------------------------------

std::pair<bool, std::string> partitioning() {
    const auto start = std::chrono::steady_clock::now();

    // recursive bisection of a 5000-company synthetic graph
    GenConfig cfg;
    cfg.n_companies = 5000;
    cfg.n_persons = 9000;
    cfg.cluster_count = 16;
    cfg.cross_cluster_rate = 0.02;
    cfg.seed = 501;
    auto data = generate(cfg);
    RunParams params;
    auto build = stage_build(data.records, data.risk, params);
    PartitionOptions opts;
    opts.max_size = 500;
    opts.min_size = 10;
    auto parts = recursive_partition(build.unipartite, opts);
    if (parts.partitions.empty()) return {false, "no partitions retained"};
    for (const auto& p : parts.partitions) {
        if (p.company_ids.size() < 10 || p.company_ids.size() >= 500) {
            return {false, "partition size " + std::to_string(p.company_ids.size()) +
                               " outside [10, 500)"};
        }
        if (p.split_failed) return {false, "a bisection failed"};
    }

    // iterative sign splits match the dense eigendecomposition
    int matched = 0;
    for (int i = 0; i < 20; ++i) {
        const std::uint64_t seed = 1000 + 37 * static_cast<std::uint64_t>(i);
        const std::size_t n = 50 + 7 * static_cast<std::size_t>(i);  // up to 183 nodes
        auto g = oracle::random_connected_unipartite(seed, n, 0.05);
        auto iterative = fiedler_vector(g);
        auto dense = oracle::dense_fiedler(g);
        if (!oracle::signs_match(iterative.vector, dense.vector, 1e-8)) {
            return {false, "sign mismatch on seed " + std::to_string(seed)};
        }
        ++matched;
    }

    const double elapsed = seconds_since(start);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "%zu partitions in [10, 500), %d/20 sign matches, %.1f s",
                  parts.partitions.size(), matched, elapsed);
    return {elapsed < 60.0, detail};
}

// ---- criterion 6: statistics fixtures -----------------------------------------

std::pair<bool, std::string> statistics_fixtures() {
    std::vector<LabeledScore> ten;
    {
        const double scores[] = {0.10, 0.20, 0.20, 0.30, 0.40, 0.40, 0.40, 0.50, 0.60, 0.70};
        const int labels[] = {0, 0, 0, 0, 1, 0, 1, 1, 0, 1};
        for (int i = 0; i < 10; ++i) {
            ten.push_back({"N" + std::to_string(i), scores[i], labels[i]});
        }
    }
    auto sp = spearman(ten);
    if (std::abs(sp.rho - 0.5773502691896258) > 1e-9) return {false, "spearman rho off"};
    if (std::abs(sp.p - 0.08051623795726251) > 1e-9) return {false, "spearman p off"};

    const std::vector<double> g0{1, 2, 2, 3, 5, 7};
    const std::vector<double> g1{2, 4, 5, 6, 8, 8};
    auto mw = mann_whitney(g0, g1);
    if (mw.u != 27.5) return {false, "mann-whitney U off"};
    if (std::abs(mw.z - 1.5374298280541054) > 1e-9) return {false, "mann-whitney Z off"};
    if (std::abs(mw.p - 0.12418808667114138) > 1e-9) return {false, "mann-whitney p off"};

    // 16-point precision/recall fixture against a direct count
    std::vector<LabeledScore> sixteen;
    Rng rng(616);
    std::size_t n1 = 0;
    for (int i = 0; i < 16; ++i) {
        const int label = rng.bernoulli(0.4) ? 1 : 0;
        n1 += static_cast<std::size_t>(label);
        sixteen.push_back({"M" + std::to_string(100 + i), rng.next_real(), label});
    }
    auto sorted = sixteen;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    std::size_t hits = 0;
    for (std::size_t n = 1; n <= sixteen.size(); ++n) {
        hits += static_cast<std::size_t>(sorted[n - 1].label);
        auto pr = precision_recall_at(sixteen, n);
        if (pr.precision != double(hits) / double(n)) return {false, "precision off"};
        if (pr.recall != double(hits) / double(n1)) return {false, "recall off"};
    }

    // target chart: perfect ranking, 20 bins, 5% positives
    std::vector<LabeledScore> hundred;
    for (int i = 0; i < 100; ++i) {
        hundred.push_back({"T" + std::to_string(100 + i), 100.0 - i, i < 5 ? 1 : 0});
    }
    auto bins = target_chart(hundred, 20);
    if (bins[0].lift != 20.0) return {false, "top bin lift off"};
    for (std::size_t b = 1; b < bins.size(); ++b) {
        if (bins[b].lift != 0.0) return {false, "tail bin lift off"};
    }

    // scale invariance under x -> x^3 + 1 for all four metrics
    auto transformed = sixteen;
    for (auto& it : transformed) it.score = it.score * it.score * it.score + 1.0;
    auto a = evaluate(sixteen);
    auto b = evaluate(transformed);
    const bool invariant = a.rho == b.rho && a.rho_p == b.rho_p && a.u == b.u && a.z == b.z &&
                           a.target_bins[0].positives == b.target_bins[0].positives &&
                           a.pr_curve.back().recall == b.pr_curve.back().recall;
    if (!invariant) return {false, "metrics moved under monotone transform"};

    return {true, "spearman, mann-whitney, precision/recall, target chart, invariance"};
}

// ---- criteria 7 and 8: synthetic reproduction and null control ----------------

std::pair<bool, std::string> reproduction(ReproduceReport& out_report) {
    const auto start = std::chrono::steady_clock::now();
    auto dir = fresh_dir("reproduce");
    out_report = run_reproduce(register_scale_preset(), reproduce_params(), dir);
    const double elapsed = seconds_since(start);

    bool all = out_report.all_claims_pass;
    for (const auto& c : out_report.claims) all = all && c.pass;

    char detail[200];
    const auto* pr = [&]() -> const AlgoRun* {
        for (const auto& r : out_report.runs) {
            if (r.algo == "pagerank") return &r;
        }
        return nullptr;
    }();
    const auto* br = [&]() -> const AlgoRun* {
        for (const auto& r : out_report.runs) {
            if (r.algo == "birank") return &r;
        }
        return nullptr;
    }();
    std::snprintf(detail, sizeof(detail),
                  "claims %zu/%zu, pagerank rho %.3f, birank rho %.3f, %.0f s",
                  out_report.claims.size() -
                      static_cast<std::size_t>(std::count_if(out_report.claims.begin(),
                                                             out_report.claims.end(),
                                                             [](const ClaimOutcome& c) {
                                                                 return !c.pass;
                                                             })),
                  out_report.claims.size(), pr ? pr->metrics.rho : 0.0,
                  br ? br->metrics.rho : 0.0, elapsed);
    return {all && elapsed < 300.0, detail};
}

std::pair<bool, std::string> null_control() {
    auto cfg = register_scale_preset();
    cfg.homophily = 0.0;
    auto dir = fresh_dir("null");
    auto report = run_reproduce(cfg, reproduce_params(), dir);
    double worst = 0.0;
    for (const auto& r : report.runs) worst = std::max(worst, std::abs(r.metrics.rho));
    char detail[96];
    std::snprintf(detail, sizeof(detail), "max |rho| %.4f with homophily 0", worst);
    return {worst < 0.05, detail};
}

// ---- criterion 9: determinism --------------------------------------------------

std::pair<bool, std::string> determinism() {
    auto cfg = register_scale_preset();
    cfg.n_companies = 1500;  // smaller copy of the preset keeps this quick
    cfg.n_persons = 2500;
    cfg.hub_count = 8;
    cfg.hub_degree = 40;
    auto params = reproduce_params();

    auto dir_a = fresh_dir("det_a");
    auto dir_b = fresh_dir("det_b");
    run_reproduce(cfg, params, dir_a);
    run_reproduce(cfg, params, dir_b);

    std::vector<fs::path> files_a;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        files_a.push_back(entry.path().filename());
    }
    std::sort(files_a.begin(), files_a.end());
    if (files_a.empty()) return {false, "no outputs written"};
    for (const auto& name : files_a) {
        if (!fs::exists(dir_b / name)) return {false, "missing " + name.string()};
        if (slurp(dir_a / name) != slurp(dir_b / name)) {
            return {false, name.string() + " differs between runs"};
        }
    }
    return {true, std::to_string(files_a.size()) + " files byte-identical"};
}

// ---- criterion 10: bench harness -----------------------------------------------

std::pair<bool, std::string> bench_harness() {
    GenConfig cfg;
    cfg.n_companies = 300;
    cfg.n_persons = 500;
    cfg.cluster_count = 3;
    cfg.base_rate = 0.2;
    cfg.seed = 64;
    auto data = generate(cfg);
    RunParams params;
    params.partition.min_size = 2;
    auto build = stage_build(data.records, data.risk, params);
    auto parts = stage_partition(build.unipartite, params);

    auto report =
        stage_bench(build.bipartite, build.unipartite, parts, build.company_risk, params, 20);
    if (report.timings.size() != 2) return {false, "expected both algorithms"};
    for (const auto& t : report.timings) {
        if (t.repetitions != 20 || t.run_seconds.size() != 20) {
            return {false, t.algo + " missing runs"};
        }
        if (!(t.mean_seconds > 0.0)) return {false, t.algo + " mean missing"};
        if (!t.sd_seconds) return {false, t.algo + " sd missing"};
    }

    auto single =
        stage_bench(build.bipartite, build.unipartite, parts, build.company_risk, params, 1);
    for (const auto& t : single.timings) {
        if (t.sd_seconds) return {false, "sd should be absent for one repetition"};
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "pagerank %.4f s +- %.4f, birank %.4f s +- %.4f over 20 runs",
                  report.timings[0].mean_seconds, *report.timings[0].sd_seconds,
                  report.timings[1].mean_seconds, *report.timings[1].sd_seconds);
    return {true, detail};
}

}  // namespace

int main() {
    Harness h;

    h.run(1, "sparse kernels match dense references within 1e-10", oracle_equivalence);
    h.run(2, "analytic fixed points to 1e-6", analytic_fixed_points);
    h.run(3, "label flips never move a node's own cross-validated score", leakage);
    h.run(4, "projection law and hub edge blow-up", projection_law);
    h.run(5, "recursive partition sizes and dense-oracle sign splits", partitioning);
    h.run(6, "statistics match hand-computed fixtures and are rank-invariant",
          statistics_fixtures);

    ReproduceReport report;
    h.run(7, "synthetic reproduction: positive significant signal, lift, recall order",
          [&] { return reproduction(report); });
    h.run(8, "null control: no manufactured signal at homophily 0", null_control);
    h.run(9, "byte-identical reruns", determinism);
    h.run(10, "bench harness reports mean and sd over 20 runs", bench_harness);

    if (h.failures > 0) {
        std::printf("%d criterion(s) failed\n", h.failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
