#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "nlohmann/json.hpp"

#include "regrank/crossval.hpp"
#include "regrank/csv.hpp"
#include "regrank/datagen.hpp"
#include "regrank/errors.hpp"
#include "regrank/eval.hpp"
#include "regrank/graph.hpp"
#include "regrank/partition.hpp"
#include "regrank/records.hpp"

namespace regrank::io {

using nlohmann::json;

// ---- writers ---------------------------------------------------------------

inline void write_records(std::ostream& out, std::span<const RegisterRecord> records,
                          char delim = ',') {
    out << "person_id" << delim << "company_id" << delim << "role" << delim << "start_date"
        << delim << "end_date\n";
    for (const auto& r : records) {
        out << r.person_id << delim << r.company_id << delim << role_name(r.role) << delim
            << r.start_date.to_string() << delim << (r.end_date ? r.end_date->to_string() : "")
            << "\n";
    }
}

inline void write_risk(std::ostream& out, const RiskVector& risk, char delim = ',') {
    std::vector<std::pair<std::string, bool>> rows(risk.entries().begin(), risk.entries().end());
    std::sort(rows.begin(), rows.end());
    out << "entity_id" << delim << "risk\n";
    for (const auto& [id, is_risk] : rows) {
        out << id << delim << (is_risk ? "1" : "0") << "\n";
    }
}

inline void write_ground_truth(std::ostream& out, std::span<const GroundTruth> truth,
                               char delim = ',') {
    out << "company_id" << delim << "cluster_id" << delim << "risk\n";
    for (const auto& t : truth) {
        out << t.company_id << delim << t.cluster << delim << t.risk << "\n";
    }
}

inline void write_bipartite_edges(std::ostream& out, const BipartiteGraph& g, char delim = ',') {
    out << "company_id" << delim << "person_id" << delim << "weight\n";
    for (const auto& e : g.edges) {
        out << g.company_ids[e.company] << delim << g.person_ids[e.person] << delim << e.weight
            << "\n";
    }
}

inline void write_unipartite_edges(std::ostream& out, const UnipartiteGraph& g, char delim = ',') {
    out << "company_a" << delim << "company_b" << delim << "weight\n";
    for (const auto& e : g.edges) {
        out << g.node_ids[e.a] << delim << g.node_ids[e.b] << delim << csv::format_double(e.weight)
            << "\n";
    }
}

inline void write_company_nodes(std::ostream& out, std::span<const std::string> ids) {
    out << "company_id\n";
    for (const auto& id : ids) out << id << "\n";
}

inline void write_surrogates(std::ostream& out, const SurrogateMap& sm, char delim = ',') {
    out << "entity_id" << delim << "company_surrogate_id" << delim << "person_surrogate_id\n";
    for (const auto& [id, pair] : sm.pairs) {
        out << id << delim << pair.company_id << delim << pair.person_id << "\n";
    }
}

inline json stats_to_json(const GraphStats& s) {
    json hist = json::object();
    for (const auto& [deg, count] : s.degree_histogram) {
        hist[std::to_string(deg)] = count;
    }
    return json{{"company_nodes", s.company_nodes},
                {"person_nodes", s.person_nodes},
                {"nodes", s.nodes},
                {"edges", s.edges},
                {"density", s.density},
                {"degree_histogram", hist}};
}

inline void write_partition(std::ostream& out, const PartitionSet& parts, char delim = ',') {
    out << "company_id" << delim << "partition_id" << delim << "dropped_flag\n";
    for (std::size_t pi = 0; pi < parts.partitions.size(); ++pi) {
        for (const auto& id : parts.partitions[pi].company_ids) {
            out << id << delim << pi << delim << 0 << "\n";
        }
    }
    for (const auto& id : parts.dropped_company_ids) {
        out << id << delim << -1 << delim << 1 << "\n";
    }
}

inline json partition_summary(const PartitionSet& parts) {
    std::vector<std::size_t> sizes;
    std::size_t retained_nodes = 0;
    std::size_t failed = 0;
    for (const auto& p : parts.partitions) {
        sizes.push_back(p.company_ids.size());
        retained_nodes += p.company_ids.size();
        failed += p.split_failed ? 1 : 0;
    }
    json out{{"partition_count", parts.partitions.size()},
             {"retained_nodes", retained_nodes},
             {"dropped_nodes", parts.dropped_company_ids.size()},
             {"input_nodes", parts.input_nodes},
             {"unsplit_after_failure", failed},
             {"sizes", sizes}};
    if (!sizes.empty()) {
        out["min_size"] = *std::min_element(sizes.begin(), sizes.end());
        out["max_size"] = *std::max_element(sizes.begin(), sizes.end());
    }
    json prov = json::array();
    for (const auto& p : parts.partitions) prov.push_back(p.provenance);
    out["provenance"] = prov;
    return out;
}

inline void write_folds(std::ostream& out, const FoldAssignment& folds, char delim = ',') {
    std::vector<std::pair<std::string, int>> rows(folds.fold_of.begin(), folds.fold_of.end());
    std::sort(rows.begin(), rows.end());
    out << "company_id" << delim << "fold_id\n";
    for (const auto& [id, f] : rows) out << id << delim << f << "\n";
}

inline void write_scores(std::ostream& out, const CvOutput& cv, char delim = ',') {
    out << "node_id" << delim << "node_kind" << delim << "score" << delim << "partition_id"
        << delim << "fold_id" << delim << "iterations" << delim << "converged\n";
    for (const auto& c : cv.companies) {
        out << c.company_id << delim << "company" << delim << csv::format_double(c.score) << delim
            << c.partition << delim << c.fold << delim << c.iterations << delim
            << (c.converged ? 1 : 0) << "\n";
    }
    for (const auto& p : cv.persons) {
        out << p.person_id << delim << "person" << delim << csv::format_double(p.score) << delim
            << p.partition << delim << 0 << delim << p.iterations << delim
            << (p.converged ? 1 : 0) << "\n";
    }
}

inline json metric_report_to_json(const MetricReport& r) {
    json pr = json::array();
    for (const auto& p : r.pr_curve) {
        pr.push_back({{"n_selected", p.n_selected}, {"precision", p.precision},
                      {"recall", p.recall}});
    }
    json bins = json::array();
    for (const auto& b : r.target_bins) {
        bins.push_back({{"bin", b.index},
                        {"size", b.size},
                        {"positives", b.positives},
                        {"positive_rate", b.positive_rate},
                        {"lift", b.lift}});
    }
    return json{{"spearman_rho", r.rho},
                {"spearman_p", r.rho_p},
                {"spearman_defined", r.rho_defined},
                {"mann_whitney_u", r.u},
                {"mann_whitney_z", r.z},
                {"mann_whitney_p", r.z_p},
                {"n", r.n},
                {"n0", r.n0},
                {"n1", r.n1},
                {"pr_curve", pr},
                {"target_bins", bins}};
}

inline void write_pr_curve(std::ostream& out, std::span<const PrPoint> curve, char delim = ',') {
    out << "n_selected" << delim << "precision" << delim << "recall\n";
    for (const auto& p : curve) {
        out << p.n_selected << delim << csv::format_double(p.precision) << delim
            << csv::format_double(p.recall) << "\n";
    }
}

inline void write_target_bins(std::ostream& out, std::span<const TargetBin> bins,
                              char delim = ',') {
    out << "bin" << delim << "size" << delim << "positives" << delim << "positive_rate" << delim
        << "lift\n";
    for (const auto& b : bins) {
        out << b.index << delim << b.size << delim << b.positives << delim
            << csv::format_double(b.positive_rate) << delim << csv::format_double(b.lift) << "\n";
    }
}

// ---- readers ---------------------------------------------------------------

inline BipartiteGraph read_bipartite_edges(std::istream& in, char delim = ',') {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) return {};
    ++lineno;
    if (csv::split(csv::strip_cr(line), delim) !=
        std::vector<std::string>{"company_id", "person_id", "weight"}) {
        throw InputError("bipartite edge file: unexpected header");
    }
    std::vector<std::tuple<std::string, std::string, int>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto f = csv::split(line, delim);
        if (f.size() != 3) {
            throw InputError("bipartite edge file line " + std::to_string(lineno) +
                             ": expected 3 fields");
        }
        int w = 0;
        try {
            w = std::stoi(f[2]);
        } catch (...) {
            throw InputError("bipartite edge file line " + std::to_string(lineno) +
                             ": bad weight '" + f[2] + "'");
        }
        if (w < 1) {
            throw InputError("bipartite edge file line " + std::to_string(lineno) +
                             ": weight must be positive");
        }
        rows.emplace_back(std::move(f[0]), std::move(f[1]), w);
    }

    BipartiteGraph g;
    for (const auto& [c, p, w] : rows) {
        g.company_ids.push_back(c);
        g.person_ids.push_back(p);
    }
    std::sort(g.company_ids.begin(), g.company_ids.end());
    g.company_ids.erase(std::unique(g.company_ids.begin(), g.company_ids.end()),
                        g.company_ids.end());
    std::sort(g.person_ids.begin(), g.person_ids.end());
    g.person_ids.erase(std::unique(g.person_ids.begin(), g.person_ids.end()), g.person_ids.end());
    for (const auto& [c, p, w] : rows) {
        g.edges.push_back({*g.company_index(c), *g.person_index(p), w});
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const BipartiteEdge& x, const BipartiteEdge& y) {
        return std::tie(x.company, x.person) < std::tie(y.company, y.person);
    });
    for (std::size_t i = 1; i < g.edges.size(); ++i) {
        if (g.edges[i].company == g.edges[i - 1].company &&
            g.edges[i].person == g.edges[i - 1].person) {
            throw InputError("bipartite edge file: duplicate pair " +
                             g.company_ids[g.edges[i].company] + " / " +
                             g.person_ids[g.edges[i].person]);
        }
    }
    return g;
}

// Node list plus edges; the list carries companies that project to nothing.
inline UnipartiteGraph read_unipartite(std::istream& nodes_in, std::istream& edges_in,
                                       char delim = ',') {
    UnipartiteGraph g;
    std::string line;
    if (!std::getline(nodes_in, line)) throw InputError("company node file: empty");
    if (csv::strip_cr(line) != "company_id") {
        throw InputError("company node file: unexpected header");
    }
    while (std::getline(nodes_in, line)) {
        line = csv::strip_cr(line);
        if (!line.empty()) g.node_ids.push_back(line);
    }
    std::sort(g.node_ids.begin(), g.node_ids.end());
    g.node_ids.erase(std::unique(g.node_ids.begin(), g.node_ids.end()), g.node_ids.end());

    std::size_t lineno = 1;
    if (!std::getline(edges_in, line)) return g;
    if (csv::split(csv::strip_cr(line), delim) !=
        std::vector<std::string>{"company_a", "company_b", "weight"}) {
        throw InputError("unipartite edge file: unexpected header");
    }
    while (std::getline(edges_in, line)) {
        ++lineno;
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto f = csv::split(line, delim);
        if (f.size() != 3) {
            throw InputError("unipartite edge file line " + std::to_string(lineno) +
                             ": expected 3 fields");
        }
        auto a = g.node_index(f[0]);
        auto b = g.node_index(f[1]);
        if (!a || !b) {
            throw InputError("unipartite edge file line " + std::to_string(lineno) +
                             ": endpoint not in node list");
        }
        double w = 0.0;
        try {
            w = std::stod(f[2]);
        } catch (...) {
            throw InputError("unipartite edge file line " + std::to_string(lineno) +
                             ": bad weight '" + f[2] + "'");
        }
        if (w <= 0.0) {
            throw InputError("unipartite edge file line " + std::to_string(lineno) +
                             ": weight must be positive");
        }
        const auto lo = std::min(*a, *b);
        const auto hi = std::max(*a, *b);
        if (lo == hi) {
            throw InputError("unipartite edge file line " + std::to_string(lineno) +
                             ": self loop");
        }
        g.edges.push_back({lo, hi, w});
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const UniEdge& x, const UniEdge& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    for (std::size_t i = 1; i < g.edges.size(); ++i) {
        if (g.edges[i].a == g.edges[i - 1].a && g.edges[i].b == g.edges[i - 1].b) {
            throw InputError("unipartite edge file: duplicate pair " + g.node_ids[g.edges[i].a] +
                             " / " + g.node_ids[g.edges[i].b]);
        }
    }
    return g;
}

inline SurrogateMap read_surrogates(std::istream& in, char delim = ',') {
    SurrogateMap sm;
    std::string line;
    if (!std::getline(in, line)) return sm;
    if (csv::split(csv::strip_cr(line), delim) !=
        std::vector<std::string>{"entity_id", "company_surrogate_id", "person_surrogate_id"}) {
        throw InputError("surrogate file: unexpected header");
    }
    while (std::getline(in, line)) {
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto f = csv::split(line, delim);
        if (f.size() != 3) throw InputError("surrogate file: expected 3 fields");
        sm.pairs.emplace(std::move(f[0]), SurrogatePair{std::move(f[1]), std::move(f[2])});
    }
    return sm;
}

inline PartitionSet read_partition(std::istream& in, char delim = ',') {
    PartitionSet parts;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) return parts;
    ++lineno;
    if (csv::split(csv::strip_cr(line), delim) !=
        std::vector<std::string>{"company_id", "partition_id", "dropped_flag"}) {
        throw InputError("partition file: unexpected header");
    }
    std::map<int, std::vector<std::string>> groups;
    while (std::getline(in, line)) {
        ++lineno;
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto f = csv::split(line, delim);
        if (f.size() != 3) {
            throw InputError("partition file line " + std::to_string(lineno) +
                             ": expected 3 fields");
        }
        if (f[2] == "1") {
            parts.dropped_company_ids.push_back(std::move(f[0]));
            continue;
        }
        int pid = 0;
        try {
            pid = std::stoi(f[1]);
        } catch (...) {
            throw InputError("partition file line " + std::to_string(lineno) +
                             ": bad partition_id");
        }
        groups[pid].push_back(std::move(f[0]));
    }
    for (auto& [pid, ids] : groups) {
        Partition p;
        std::sort(ids.begin(), ids.end());
        p.company_ids = std::move(ids);
        p.provenance = "p" + std::to_string(pid);
        parts.partitions.push_back(std::move(p));
    }
    std::sort(parts.dropped_company_ids.begin(), parts.dropped_company_ids.end());
    parts.input_nodes = parts.dropped_company_ids.size();
    for (const auto& p : parts.partitions) parts.input_nodes += p.company_ids.size();
    return parts;
}

}  // namespace regrank::io
