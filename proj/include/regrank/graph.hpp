#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "regrank/dates.hpp"
#include "regrank/errors.hpp"
#include "regrank/records.hpp"

namespace regrank {

struct BipartiteEdge {
    std::uint32_t company = 0;
    std::uint32_t person = 0;
    int weight = 0;  // tenure years, in [1, max_weight]

    friend bool operator==(const BipartiteEdge&, const BipartiteEdge&) = default;
};

// Weighted company-person graph. Node indices follow the lexicographic order
// of the id vectors, which makes rebuilt graphs byte-identical.
struct BipartiteGraph {
    std::vector<std::string> company_ids;  // sorted
    std::vector<std::string> person_ids;   // sorted
    std::vector<BipartiteEdge> edges;      // sorted by (company, person)

    std::optional<std::uint32_t> company_index(std::string_view id) const {
        auto it = std::lower_bound(company_ids.begin(), company_ids.end(), id);
        if (it == company_ids.end() || *it != id) return std::nullopt;
        return static_cast<std::uint32_t>(it - company_ids.begin());
    }

    std::optional<std::uint32_t> person_index(std::string_view id) const {
        auto it = std::lower_bound(person_ids.begin(), person_ids.end(), id);
        if (it == person_ids.end() || *it != id) return std::nullopt;
        return static_cast<std::uint32_t>(it - person_ids.begin());
    }
};

struct UniEdge {
    std::uint32_t a = 0;  // a < b
    std::uint32_t b = 0;
    double weight = 0.0;

    friend bool operator==(const UniEdge&, const UniEdge&) = default;
};

// Weighted undirected company-company graph; each pair stored once.
struct UnipartiteGraph {
    std::vector<std::string> node_ids;  // sorted
    std::vector<UniEdge> edges;         // sorted by (a, b)

    std::optional<std::uint32_t> node_index(std::string_view id) const {
        auto it = std::lower_bound(node_ids.begin(), node_ids.end(), id);
        if (it == node_ids.end() || *it != id) return std::nullopt;
        return static_cast<std::uint32_t>(it - node_ids.begin());
    }
};

struct SurrogatePair {
    std::string company_id;
    std::string person_id;
};

// Entities that occur both as a person and as a company (one-person
// enterprises, managing firms) get split into two linked surrogate nodes.
struct SurrogateMap {
    std::map<std::string, SurrogatePair> pairs;  // original id -> surrogates

    bool contains(const std::string& id) const { return pairs.count(id) != 0; }
};

// Default surrogate naming. build_bipartite extends the suffix if an input id
// already uses it.
inline SurrogatePair split_surrogate(const std::string& entity_id, const std::string& tag = "~") {
    return SurrogatePair{entity_id + tag + "c", entity_id + tag + "p"};
}

struct BuildOptions {
    int max_weight = 30;  // tenure clamp ceiling; also the surrogate edge weight
};

namespace detail {

// Number of days the stint spends inside the window, or nullopt if it misses
// the window entirely. An open end date means the stint is still active.
inline std::optional<std::int64_t> overlap_days(Date start, std::optional<Date> end,
                                                const ObservationWindow& w) {
    const std::int64_t ws = w.start.serial();
    const std::int64_t we = w.end.serial();
    const std::int64_t s = std::max(start.serial(), ws);
    const std::int64_t e = std::min(end ? end->serial() : we, we);
    if (s > e) return std::nullopt;
    return e - s;
}

inline int weight_from_days(std::int64_t days, int max_weight) {
    const int years = static_cast<int>(std::ceil(static_cast<double>(days) / kDaysPerYear));
    return std::clamp(years, 1, max_weight);
}

}  // namespace detail

// Tenure weight of a single stint: years inside the window, rounded up,
// clamped to [1, max_weight]. nullopt when the stint misses the window.
inline std::optional<int> compute_edge_weight(Date start, std::optional<Date> end,
                                              const ObservationWindow& window,
                                              int max_weight = 30) {
    auto days = detail::overlap_days(start, end, window);
    if (!days) return std::nullopt;
    return detail::weight_from_days(*days, max_weight);
}

struct BuildDiagnostics {
    std::size_t records_in = 0;
    std::size_t records_used = 0;
    std::size_t skipped_outside_window = 0;
    std::size_t risk_ids_without_company = 0;
    std::vector<std::string> notes;
};

struct BuildResult {
    BipartiteGraph graph;
    SurrogateMap surrogates;
    std::vector<RiskLabel> company_risk;  // aligned with graph.company_ids
    BuildDiagnostics diag;
};

// Builds the company-person graph from register records.
//
// Repeated stints of the same pair accumulate their in-window days before the
// single round-up, so two half-year stints weigh like one full year. Entities
// appearing on both sides are split into surrogates joined by a max-weight
// edge; the risk label of a split entity follows its company surrogate.
inline BuildResult build_bipartite(std::span<const RegisterRecord> records,
                                   const ObservationWindow& window,
                                   const RiskVector& risk = {},
                                   const BuildOptions& options = {}) {
    window.validate();
    BuildResult out;
    out.diag.records_in = records.size();

    // records that intersect the window
    std::vector<const RegisterRecord*> used;
    used.reserve(records.size());
    for (const auto& r : records) {
        if (detail::overlap_days(r.start_date, r.end_date, window)) {
            used.push_back(&r);
        } else {
            ++out.diag.skipped_outside_window;
        }
    }
    out.diag.records_used = used.size();

    std::unordered_set<std::string> as_person, as_company;
    for (const auto* r : used) {
        as_person.insert(r->person_id);
        as_company.insert(r->company_id);
    }

    // entities on both sides get surrogates; extend the tag until ids are free
    std::string tag = "~";
    auto collides = [&](const std::string& id) {
        return as_person.count(id) != 0 || as_company.count(id) != 0;
    };
    for (int guard = 0; guard < 16; ++guard) {
        bool clash = false;
        for (const auto& id : as_company) {
            if (as_person.count(id) == 0) continue;
            auto pair = split_surrogate(id, tag);
            if (collides(pair.company_id) || collides(pair.person_id)) {
                clash = true;
                break;
            }
        }
        if (!clash) break;
        tag += "~";
    }
    for (const auto& id : as_company) {
        if (as_person.count(id) != 0) {
            out.surrogates.pairs.emplace(id, split_surrogate(id, tag));
        }
    }

    auto company_node = [&](const std::string& id) -> const std::string& {
        auto it = out.surrogates.pairs.find(id);
        return it == out.surrogates.pairs.end() ? id : it->second.company_id;
    };
    auto person_node = [&](const std::string& id) -> const std::string& {
        auto it = out.surrogates.pairs.find(id);
        return it == out.surrogates.pairs.end() ? id : it->second.person_id;
    };

    // node sets
    std::vector<std::string> companies, persons;
    {
        std::unordered_set<std::string> cset, pset;
        for (const auto* r : used) {
            cset.insert(company_node(r->company_id));
            pset.insert(person_node(r->person_id));
        }
        for (const auto& [id, pair] : out.surrogates.pairs) {
            cset.insert(pair.company_id);
            pset.insert(pair.person_id);
        }
        companies.assign(cset.begin(), cset.end());
        persons.assign(pset.begin(), pset.end());
        std::sort(companies.begin(), companies.end());
        std::sort(persons.begin(), persons.end());
    }
    out.graph.company_ids = std::move(companies);
    out.graph.person_ids = std::move(persons);

    // accumulate in-window days per (company, person) pair
    std::unordered_map<std::uint64_t, std::int64_t> days_of;
    days_of.reserve(used.size());
    for (const auto* r : used) {
        auto c = out.graph.company_index(company_node(r->company_id));
        auto p = out.graph.person_index(person_node(r->person_id));
        auto days = detail::overlap_days(r->start_date, r->end_date, window);
        const std::uint64_t key = (static_cast<std::uint64_t>(*c) << 32) | *p;
        days_of[key] += *days;
    }

    out.graph.edges.reserve(days_of.size() + out.surrogates.pairs.size());
    for (const auto& [key, days] : days_of) {
        out.graph.edges.push_back({static_cast<std::uint32_t>(key >> 32),
                                   static_cast<std::uint32_t>(key & 0xffffffffu),
                                   detail::weight_from_days(days, options.max_weight)});
    }

    // the artificial surrogate link always carries the maximum weight,
    // overriding any recorded self-directorship tenure
    for (const auto& [id, pair] : out.surrogates.pairs) {
        auto c = *out.graph.company_index(pair.company_id);
        auto p = *out.graph.person_index(pair.person_id);
        const std::uint64_t key = (static_cast<std::uint64_t>(c) << 32) | p;
        if (days_of.count(key) == 0) {
            out.graph.edges.push_back({c, p, options.max_weight});
        } else {
            for (auto& e : out.graph.edges) {
                if (e.company == c && e.person == p) {
                    e.weight = options.max_weight;
                    break;
                }
            }
        }
    }

    std::sort(out.graph.edges.begin(), out.graph.edges.end(),
              [](const BipartiteEdge& x, const BipartiteEdge& y) {
                  return std::tie(x.company, x.person) < std::tie(y.company, y.person);
              });

    // risk labels keyed by original entity id, remapped onto company nodes
    out.company_risk.assign(out.graph.company_ids.size(), RiskLabel::unknown);
    std::size_t matched = 0;
    for (const auto& [id, is_risk] : risk.entries()) {
        auto node = out.graph.company_index(company_node(id));
        if (!node) continue;
        out.company_risk[*node] = is_risk ? RiskLabel::risk : RiskLabel::compliant;
        ++matched;
    }
    out.diag.risk_ids_without_company = risk.entries().size() - matched;

    return out;
}

// Collapses the bipartite graph onto companies: every person directing d >= 2
// companies contributes all d(d-1)/2 pairs, each weighted by the smaller of
// the two tenure weights, and contributions from different persons sum.
inline UnipartiteGraph project_unipartite(const BipartiteGraph& b) {
    UnipartiteGraph out;
    out.node_ids = b.company_ids;

    // group edges by person
    std::vector<std::vector<std::pair<std::uint32_t, int>>> by_person(b.person_ids.size());
    for (const auto& e : b.edges) {
        by_person[e.person].push_back({e.company, e.weight});
    }

    std::unordered_map<std::uint64_t, double> weight_of;
    for (auto& inc : by_person) {
        if (inc.size() < 2) continue;
        std::sort(inc.begin(), inc.end());
        for (std::size_t i = 0; i < inc.size(); ++i) {
            for (std::size_t j = i + 1; j < inc.size(); ++j) {
                const std::uint64_t key =
                    (static_cast<std::uint64_t>(inc[i].first) << 32) | inc[j].first;
                weight_of[key] += std::min(inc[i].second, inc[j].second);
            }
        }
    }

    out.edges.reserve(weight_of.size());
    for (const auto& [key, w] : weight_of) {
        out.edges.push_back({static_cast<std::uint32_t>(key >> 32),
                             static_cast<std::uint32_t>(key & 0xffffffffu), w});
    }
    std::sort(out.edges.begin(), out.edges.end(), [](const UniEdge& x, const UniEdge& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    return out;
}

struct GraphStats {
    std::size_t company_nodes = 0;
    std::size_t person_nodes = 0;  // zero for unipartite graphs
    std::size_t nodes = 0;
    std::size_t edges = 0;
    double density = 0.0;
    std::map<std::size_t, std::size_t> degree_histogram;  // degree -> node count
};

inline GraphStats graph_stats(const BipartiteGraph& g) {
    GraphStats s;
    s.company_nodes = g.company_ids.size();
    s.person_nodes = g.person_ids.size();
    s.nodes = s.company_nodes + s.person_nodes;
    s.edges = g.edges.size();
    if (s.company_nodes > 0 && s.person_nodes > 0) {
        s.density = static_cast<double>(s.edges) /
                    (static_cast<double>(s.company_nodes) * static_cast<double>(s.person_nodes));
    }
    std::vector<std::size_t> deg(s.nodes, 0);
    for (const auto& e : g.edges) {
        ++deg[e.company];
        ++deg[s.company_nodes + e.person];
    }
    for (auto d : deg) ++s.degree_histogram[d];
    return s;
}

inline GraphStats graph_stats(const UnipartiteGraph& g) {
    GraphStats s;
    s.company_nodes = g.node_ids.size();
    s.nodes = s.company_nodes;
    s.edges = g.edges.size();
    if (s.nodes > 1) {
        s.density = 2.0 * static_cast<double>(s.edges) /
                    (static_cast<double>(s.nodes) * static_cast<double>(s.nodes - 1));
    }
    std::vector<std::size_t> deg(s.nodes, 0);
    for (const auto& e : g.edges) {
        ++deg[e.a];
        ++deg[e.b];
    }
    for (auto d : deg) ++s.degree_histogram[d];
    return s;
}

}  // namespace regrank
