#include <catch2/catch.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "regrank/datagen.hpp"
#include "regrank/graph.hpp"
#include "regrank/io.hpp"

using namespace regrank;

TEST_CASE("generation is deterministic per seed") {
    auto cfg = GenConfig{};
    cfg.n_companies = 300;
    cfg.n_persons = 500;
    cfg.seed = 42;
    auto a = generate(cfg);
    auto b = generate(cfg);

    std::ostringstream sa, sb;
    io::write_records(sa, a.records);
    io::write_records(sb, b.records);
    CHECK(sa.str() == sb.str());

    cfg.seed = 43;
    auto c = generate(cfg);
    std::ostringstream sc;
    io::write_records(sc, c.records);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("generated records parse cleanly through the record schema") {
    auto cfg = GenConfig{};
    cfg.n_companies = 200;
    cfg.n_persons = 300;
    cfg.one_person_rate = 0.05;
    cfg.seed = 9;
    auto data = generate(cfg);
    std::ostringstream out;
    io::write_records(out, data.records);
    std::istringstream in(out.str());
    auto parsed = parse_records(in);
    CHECK(parsed.errors.empty());
    CHECK(parsed.warnings.empty());
    CHECK(parsed.records.size() == data.records.size());
}

TEST_CASE("base rate zero with no contagion produces no risk labels") {
    auto cfg = GenConfig{};
    cfg.n_companies = 150;
    cfg.n_persons = 200;
    cfg.base_rate = 0.0;
    cfg.homophily = 0.0;
    cfg.seed = 3;
    auto data = generate(cfg);
    CHECK(data.risk.count(RiskLabel::risk) == 0);
    CHECK(data.risk.size() == 150);  // everyone labeled compliant
}

TEST_CASE("a single hub adds a quadratic number of projected edges") {
    auto base_cfg = GenConfig{};
    base_cfg.n_companies = 400;
    base_cfg.n_persons = 300;
    base_cfg.hub_count = 0;
    base_cfg.seed = 11;
    auto hub_cfg = base_cfg;
    hub_cfg.hub_count = 1;
    hub_cfg.hub_degree = 40;

    const ObservationWindow window{{1991, 1, 1}, {2021, 1, 1}};
    auto base = build_bipartite(generate(base_cfg).records, window);
    auto with_hub = build_bipartite(generate(hub_cfg).records, window);
    const auto base_edges = project_unipartite(base.graph).edges.size();
    const auto hub_edges = project_unipartite(with_hub.graph).edges.size();
    // the hub alone contributes 40 * 39 / 2 pairs, some possibly overlapping
    CHECK(hub_edges >= base_edges + 700);
}

TEST_CASE("degree distribution tracks the configured power law") {
    auto cfg = GenConfig{};
    cfg.n_companies = 5000;
    cfg.n_persons = 8000;
    cfg.max_degree = 6;
    cfg.degree_exponent = 2.5;
    cfg.seed = 2024;
    auto data = generate(cfg);

    std::unordered_map<std::string, std::set<std::string>> held;
    for (const auto& r : data.records) {
        if (r.person_id[0] == 'P') held[r.person_id].insert(r.company_id);
    }
    // configured distribution
    std::vector<double> pmf(static_cast<std::size_t>(cfg.max_degree), 0.0);
    double z = 0.0;
    for (int d = 1; d <= cfg.max_degree; ++d) {
        pmf[d - 1] = std::pow(double(d), -cfg.degree_exponent);
        z += pmf[d - 1];
    }
    for (auto& p : pmf) p /= z;

    std::vector<double> counts(static_cast<std::size_t>(cfg.max_degree), 0.0);
    double total = 0.0;
    for (const auto& [person, companies] : held) {
        const auto d = companies.size();
        REQUIRE(d >= 1);
        REQUIRE(d <= static_cast<std::size_t>(cfg.max_degree));
        counts[d - 1] += 1.0;
        total += 1.0;
    }
    double ks = 0.0, emp_cdf = 0.0, conf_cdf = 0.0;
    for (int d = 1; d <= cfg.max_degree; ++d) {
        emp_cdf += counts[d - 1] / total;
        conf_cdf += pmf[d - 1];
        ks = std::max(ks, std::abs(emp_cdf - conf_cdf));
    }
    CHECK(ks <= 0.1);
}

TEST_CASE("homophily is visible in the generated labels") {
    auto cfg = GenConfig{};
    cfg.n_companies = 2000;
    cfg.n_persons = 3000;
    cfg.base_rate = 0.05;
    cfg.homophily = 0.5;
    cfg.seed = 77;
    auto data = generate(cfg);

    std::unordered_map<std::string, std::set<std::string>> held;
    for (const auto& r : data.records) held[r.person_id].insert(r.company_id);

    std::unordered_set<std::string> near_risk;
    for (const auto& [person, companies] : held) {
        bool touches = false;
        for (const auto& c : companies) touches = touches || data.risk.label(c) == RiskLabel::risk;
        if (!touches) continue;
        for (const auto& c : companies) near_risk.insert(c);
    }
    std::size_t risky_neighbors = 0;
    for (const auto& c : near_risk) {
        risky_neighbors += data.risk.label(c) == RiskLabel::risk;
    }
    const double neighbor_rate = double(risky_neighbors) / double(near_risk.size());
    CHECK(neighbor_rate > cfg.base_rate);
}

TEST_CASE("one-person enterprises appear on both record sides") {
    auto cfg = GenConfig{};
    cfg.n_companies = 200;
    cfg.n_persons = 300;
    cfg.one_person_rate = 0.1;
    cfg.seed = 5;
    auto data = generate(cfg);
    std::size_t self_records = 0;
    for (const auto& r : data.records) self_records += r.person_id == r.company_id;
    CHECK(self_records == 20);
}

TEST_CASE("ground truth covers every company with cluster and label") {
    auto cfg = GenConfig{};
    cfg.n_companies = 120;
    cfg.n_persons = 150;
    cfg.cluster_count = 4;
    cfg.seed = 8;
    auto data = generate(cfg);
    REQUIRE(data.truth.size() == 120);
    for (const auto& t : data.truth) {
        CHECK(t.cluster >= 0);
        CHECK(t.cluster < 4);
        CHECK((t.risk == 0 || t.risk == 1));
        CHECK(data.risk.label(t.company_id) != RiskLabel::unknown);
    }
}

TEST_CASE("config validation") {
    auto cfg = GenConfig{};
    cfg.n_companies = 10;
    cfg.hub_count = 2;
    cfg.hub_degree = 50;  // more than n_companies
    CHECK_THROWS_AS(generate(cfg), Error);

    cfg = GenConfig{};
    cfg.base_rate = 1.5;
    CHECK_THROWS_AS(generate(cfg), Error);

    cfg = GenConfig{};
    cfg.n_companies = 5;
    cfg.n_persons = 100;
    cfg.max_degree = 8;  // no person can hold 8 distinct directorships here
    cfg.cluster_count = 1;
    CHECK_THROWS_AS(generate(cfg), Error);

    cfg = GenConfig{};
    cfg.tenure_min_years = 0.0;
    CHECK_THROWS_AS(generate(cfg), Error);
}

TEST_CASE("the register-shaped preset has the documented scale") {
    auto cfg = register_scale_preset();
    CHECK(cfg.n_companies == 6000);
    CHECK(cfg.n_persons == 10000);
    CHECK(cfg.hub_count > 0);
    CHECK(cfg.homophily == Approx(0.6));
    CHECK_NOTHROW(cfg.validate());
}
