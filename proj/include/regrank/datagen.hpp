#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "regrank/dates.hpp"
#include "regrank/errors.hpp"
#include "regrank/records.hpp"
#include "regrank/rng.hpp"

namespace regrank {

// Synthetic register generator: clustered directorship structure with a
// heavy-tailed degree distribution, optional super-director hubs, and risk
// labels planted with tunable homophily along shared-director links.
struct GenConfig {
    int n_persons = 10000;
    int n_companies = 6000;

    // directorships per regular person: P(d) proportional to d^-degree_exponent
    double degree_exponent = 2.5;
    int max_degree = 6;

    // super-directors with a fixed large degree
    int hub_count = 0;
    int hub_degree = 0;

    double tenure_min_years = 0.1;
    double tenure_max_years = 30.0;

    double base_rate = 0.05;   // seed probability of risk = 1
    double homophily = 0.0;    // infection probability along shared directors
    int contagion_max_degree = 4;  // directors above this degree do not transmit risk
    double one_person_rate = 0.0;  // fraction of companies that are one-person enterprises

    int cluster_count = 12;
    double cross_cluster_rate = 0.05;  // directorships drawn outside the home cluster

    double second_stint_rate = 0.05;      // extra stint at an already-held company
    double shareholder_role_rate = 0.15;  // stints recorded as shareholder-managing director

    std::uint64_t seed = 1;
    ObservationWindow window{{1991, 1, 1}, {2021, 1, 1}};

    void validate() const {
        if (n_persons <= 0 || n_companies <= 0) throw Error("counts must be positive");
        for (double rate : {base_rate, homophily, one_person_rate, cross_cluster_rate,
                            second_stint_rate, shareholder_role_rate}) {
            if (rate < 0.0 || rate > 1.0) throw Error("rates must be in [0, 1]");
        }
        if (degree_exponent <= 0.0) throw Error("degree_exponent must be positive");
        // per-person degree demand must fit the available companies
        if (max_degree < 1 || max_degree > n_companies) {
            throw Error("max_degree must be in [1, n_companies]");
        }
        if (hub_count < 0 || hub_count > n_persons) throw Error("hub_count out of range");
        if (hub_count > 0 && (hub_degree < 1 || hub_degree > n_companies)) {
            throw Error("hub_degree must be in [1, n_companies]");
        }
        if (tenure_min_years <= 0.0 || tenure_max_years < tenure_min_years) {
            throw Error("tenure bounds must satisfy 0 < min <= max");
        }
        if (contagion_max_degree < 1) throw Error("contagion_max_degree must be positive");
        if (cluster_count < 1 || cluster_count > n_companies) {
            throw Error("cluster_count must be in [1, n_companies]");
        }
        window.validate();
    }
};

struct GroundTruth {
    std::string company_id;
    int cluster = 0;
    int risk = 0;
};

struct GenOutput {
    std::vector<RegisterRecord> records;
    RiskVector risk;  // every company labeled 0 or 1
    std::vector<GroundTruth> truth;
};

namespace detail {

inline std::string company_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "C%07d", i + 1);
    return buf;
}

inline std::string person_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%07d", i + 1);
    return buf;
}

}  // namespace detail

inline GenOutput generate(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    GenOutput out;

    const int nc = cfg.n_companies;
    const int np = cfg.n_persons;
    const int clusters = cfg.cluster_count;
    auto cluster_of = [&](int company) {
        return static_cast<int>(static_cast<std::int64_t>(company) * clusters / nc);
    };
    auto cluster_begin = [&](int cl) {
        return static_cast<int>(static_cast<std::int64_t>(cl) * nc / clusters);
    };
    auto cluster_end = [&](int cl) {
        return static_cast<int>(static_cast<std::int64_t>(cl + 1) * nc / clusters);
    };

    // degree sampling table: P(d) proportional to d^-exponent, d in [1, max_degree]
    std::vector<double> cdf(static_cast<std::size_t>(cfg.max_degree));
    {
        double total = 0.0;
        for (int d = 1; d <= cfg.max_degree; ++d) {
            total += std::pow(static_cast<double>(d), -cfg.degree_exponent);
            cdf[static_cast<std::size_t>(d - 1)] = total;
        }
        for (auto& c : cdf) c /= total;
    }
    auto sample_degree = [&] {
        const double u = rng.next_real();
        for (int d = 1; d <= cfg.max_degree; ++d) {
            if (u < cdf[static_cast<std::size_t>(d - 1)]) return d;
        }
        return cfg.max_degree;
    };

    const std::int64_t window_start = cfg.window.start.serial();
    const std::int64_t window_end = cfg.window.end.serial();
    auto add_stint = [&](const std::string& person, const std::string& company) {
        RegisterRecord r;
        r.person_id = person;
        r.company_id = company;
        r.role = rng.bernoulli(cfg.shareholder_role_rate) ? Role::shareholder_managing_director
                                                          : Role::managing_director;
        const std::int64_t start =
            window_start + static_cast<std::int64_t>(
                               rng.next_below(static_cast<std::uint64_t>(window_end - window_start)));
        const auto tenure_days = static_cast<std::int64_t>(
            rng.next_real(cfg.tenure_min_years, cfg.tenure_max_years) * kDaysPerYear);
        const std::int64_t end = start + std::max<std::int64_t>(1, tenure_days);
        r.start_date = date_from_serial(start);
        if (end <= window_end) r.end_date = date_from_serial(end);  // else still active
        out.records.push_back(std::move(r));
    };

    // directorships
    std::vector<std::vector<int>> companies_of(static_cast<std::size_t>(np));
    for (int p = 0; p < np; ++p) {
        const bool hub = p < cfg.hub_count;
        const int degree = hub ? cfg.hub_degree : sample_degree();
        const int home = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(clusters)));
        auto& held = companies_of[static_cast<std::size_t>(p)];
        std::unordered_set<int> seen;
        int attempts = 0;
        while (static_cast<int>(held.size()) < degree && attempts < 30 * degree) {
            ++attempts;
            const int cl = rng.bernoulli(cfg.cross_cluster_rate)
                               ? static_cast<int>(rng.next_below(static_cast<std::uint64_t>(clusters)))
                               : home;
            const int lo = cluster_begin(cl);
            const int hi = cluster_end(cl);
            const int company =
                lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo)));
            if (seen.insert(company).second) held.push_back(company);
        }
        const std::string person = detail::person_name(p);
        for (int company : held) {
            add_stint(person, detail::company_name(company));
            if (rng.bernoulli(cfg.second_stint_rate)) {
                add_stint(person, detail::company_name(company));
            }
        }
    }

    // one-person enterprises: the company id itself shows up as the director
    {
        const auto count = static_cast<int>(
            std::llround(cfg.one_person_rate * static_cast<double>(nc)));
        std::vector<int> ids(static_cast<std::size_t>(nc));
        std::iota(ids.begin(), ids.end(), 0);
        rng.shuffle(ids);
        for (int i = 0; i < count; ++i) {
            const std::string id = detail::company_name(ids[static_cast<std::size_t>(i)]);
            add_stint(id, id);
        }
    }

    // risk labels: independent seeds, then one round of contagion across
    // shared-director links. Super-directors do not transmit: a person running
    // dozens of companies is structure, not a risk channel, so hub cliques
    // stay label-noise for the ranking algorithms.
    std::vector<char> seed_risk(static_cast<std::size_t>(nc), 0);
    for (int c = 0; c < nc; ++c) seed_risk[static_cast<std::size_t>(c)] = rng.bernoulli(cfg.base_rate);
    std::vector<char> exposed(static_cast<std::size_t>(nc), 0);
    for (const auto& held : companies_of) {
        if (static_cast<int>(held.size()) > cfg.contagion_max_degree) continue;
        bool touches_seed = false;
        for (int c : held) touches_seed = touches_seed || seed_risk[static_cast<std::size_t>(c)];
        if (!touches_seed) continue;
        for (int c : held) exposed[static_cast<std::size_t>(c)] = 1;
    }
    for (int c = 0; c < nc; ++c) {
        const auto idx = static_cast<std::size_t>(c);
        int risk = seed_risk[idx] ? 1 : 0;
        if (!risk && exposed[idx] && rng.bernoulli(cfg.homophily)) risk = 1;
        const std::string id = detail::company_name(c);
        out.risk.set(id, risk == 1);
        out.truth.push_back({id, cluster_of(c), risk});
    }

    return out;
}

// Scaled-down configuration shaped like a national register: a heavy-tailed
// directorship distribution plus a few super-directors whose clique expansion
// makes the projected company-company network several times denser than the
// bipartite one.
inline GenConfig register_scale_preset() {
    GenConfig cfg;
    cfg.n_persons = 10000;
    cfg.n_companies = 6000;
    cfg.degree_exponent = 2.5;
    cfg.max_degree = 6;
    cfg.hub_count = 25;
    cfg.hub_degree = 75;
    cfg.base_rate = 0.05;
    cfg.homophily = 0.6;
    cfg.one_person_rate = 0.02;
    cfg.cluster_count = 12;
    cfg.cross_cluster_rate = 0.04;
    cfg.seed = 20210;
    return cfg;
}

}  // namespace regrank
