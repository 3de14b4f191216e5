#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "regrank/errors.hpp"
#include "regrank/graph.hpp"
#include "regrank/ranking.hpp"
#include "regrank/records.hpp"
#include "regrank/rng.hpp"

namespace regrank {

struct FoldAssignment {
    int k = 10;
    std::uint64_t seed = 0;
    std::unordered_map<std::string, int> fold_of;  // labeled companies only
};

// Stratified fold assignment: the compliant and risk strata are shuffled and
// dealt round-robin separately, so fold sizes within a stratum differ by at
// most one. Deterministic for a given seed.
inline FoldAssignment assign_folds(const RiskVector& risk, int k, std::uint64_t seed) {
    if (k < 2) throw Error("cross-validation needs k >= 2, got " + std::to_string(k));

    std::vector<std::string> stratum0, stratum1;
    for (const auto& [id, is_risk] : risk.entries()) {
        (is_risk ? stratum1 : stratum0).push_back(id);
    }
    std::sort(stratum0.begin(), stratum0.end());
    std::sort(stratum1.begin(), stratum1.end());
    if (stratum0.size() < static_cast<std::size_t>(k) ||
        stratum1.size() < static_cast<std::size_t>(k)) {
        throw Error("each label stratum needs at least k labeled companies (compliant " +
                    std::to_string(stratum0.size()) + ", risk " + std::to_string(stratum1.size()) +
                    ", k " + std::to_string(k) + ")");
    }

    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    Rng rng(seed);
    for (auto* stratum : {&stratum0, &stratum1}) {
        rng.shuffle(*stratum);
        for (std::size_t i = 0; i < stratum->size(); ++i) {
            out.fold_of[(*stratum)[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
        }
    }
    return out;
}

// Restart vector over the given company nodes with fold masked_fold hidden:
// 1.0 only for unmasked risk-labeled companies, 0.0 for everything else
// (compliant, unknown, and masked all alike).
inline std::vector<double> make_restart(std::span<const std::string> company_ids,
                                        const RiskVector& risk, const FoldAssignment& folds,
                                        int masked_fold) {
    std::vector<double> restart(company_ids.size(), 0.0);
    for (std::size_t i = 0; i < company_ids.size(); ++i) {
        if (risk.label(company_ids[i]) != RiskLabel::risk) continue;
        auto it = folds.fold_of.find(company_ids[i]);
        if (it != folds.fold_of.end() && it->second == masked_fold) continue;
        restart[i] = 1.0;
    }
    return restart;
}

struct CompanyScore {
    std::string company_id;
    double score = 0.0;
    int fold = 0;  // the run this score was taken from
    int partition = 0;
    int iterations = 0;
    bool converged = true;
};

struct PersonScore {
    std::string person_id;
    double score = 0.0;
    int partition = 0;
    int iterations = 0;
    bool converged = true;
};

struct CvOutput {
    std::vector<CompanyScore> companies;  // every company exactly once, sorted by id
    std::vector<PersonScore> persons;     // birank only; replicated persons once per partition
    bool all_converged = true;
};

namespace detail {

// Runs tasks 0..count-1 on a small pool; every task writes only its own slot,
// so the merged output is independent of scheduling.
template <typename Fn>
inline void run_tasks(std::size_t count, int threads, Fn&& fn) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (workers == 1) {
        for (std::size_t t = 0; t < count; ++t) fn(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t t = next.fetch_add(1);
                if (t >= count || failed.load()) return;
                try {
                    fn(t);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(failure);
}

// Shared merge logic: pick each company's score from the run that masked its
// own fold; companies without a label read from run 0, which is leak-free for
// them by definition.
inline void merge_company_scores(std::span<const std::vector<std::string>*> partition_companies,
                                 const FoldAssignment& folds,
                                 std::span<const RankResult> results_by_task, int k,
                                 CvOutput& out) {
    for (std::size_t p = 0; p < partition_companies.size(); ++p) {
        const auto& ids = *partition_companies[p];
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto it = folds.fold_of.find(ids[i]);
            const int f = it == folds.fold_of.end() ? 0 : it->second;
            const RankResult& r = results_by_task[p * static_cast<std::size_t>(k) +
                                                  static_cast<std::size_t>(f)];
            out.companies.push_back({ids[i], r.scores[i], f, static_cast<int>(p), r.iterations,
                                     r.converged});
            out.all_converged = out.all_converged && r.converged;
        }
    }
    std::sort(out.companies.begin(), out.companies.end(),
              [](const CompanyScore& a, const CompanyScore& b) {
                  return a.company_id < b.company_id;
              });
}

}  // namespace detail

// Cross-validated PageRank over per-partition company graphs. Each fold's run
// masks that fold's labels; a node's reported score always comes from the run
// that did not see its own label.
inline CvOutput cv_rank(std::span<const UnipartiteGraph> partition_graphs, const RiskVector& risk,
                        const FoldAssignment& folds, const PageRankParams& params,
                        int threads = 1) {
    if (folds.k < 2) throw Error("cross-validation needs k >= 2");
    const std::size_t np = partition_graphs.size();
    const std::size_t k = static_cast<std::size_t>(folds.k);

    std::vector<NormalizedMatrix> matrices(np);
    for (std::size_t p = 0; p < np; ++p) matrices[p] = row_normalize(partition_graphs[p]);

    std::vector<RankResult> results(np * k);
    detail::run_tasks(np * k, threads, [&](std::size_t t) {
        const std::size_t p = t / k;
        const int f = static_cast<int>(t % k);
        auto restart = make_restart(partition_graphs[p].node_ids, risk, folds, f);
        results[t] = pagerank(matrices[p], restart, params);
    });

    CvOutput out;
    std::vector<const std::vector<std::string>*> companies(np);
    for (std::size_t p = 0; p < np; ++p) companies[p] = &partition_graphs[p].node_ids;
    detail::merge_company_scores(companies, folds, results, folds.k, out);
    return out;
}

// Cross-validated BiRank over per-partition bipartite restrictions. Person
// restarts are zero; person scores are reported from run 0 of each partition.
inline CvOutput cv_rank(std::span<const BipartiteGraph> partition_graphs, const RiskVector& risk,
                        const FoldAssignment& folds, const BiRankParams& params, int threads = 1) {
    if (folds.k < 2) throw Error("cross-validation needs k >= 2");
    const std::size_t np = partition_graphs.size();
    const std::size_t k = static_cast<std::size_t>(folds.k);

    std::vector<NormalizedMatrix> matrices(np);
    for (std::size_t p = 0; p < np; ++p) matrices[p] = symmetric_normalize(partition_graphs[p]);

    std::vector<RankResult> company_results(np * k);
    std::vector<RankResult> person_results(np);  // fold-0 person side
    detail::run_tasks(np * k, threads, [&](std::size_t t) {
        const std::size_t p = t / k;
        const int f = static_cast<int>(t % k);
        auto u0 = make_restart(partition_graphs[p].company_ids, risk, folds, f);
        std::vector<double> p0(partition_graphs[p].person_ids.size(), 0.0);
        auto res = birank(matrices[p], u0, p0, params);
        company_results[t] = std::move(res.companies);
        if (f == 0) person_results[p] = std::move(res.persons);
    });

    CvOutput out;
    std::vector<const std::vector<std::string>*> companies(np);
    for (std::size_t p = 0; p < np; ++p) companies[p] = &partition_graphs[p].company_ids;
    detail::merge_company_scores(companies, folds, company_results, folds.k, out);

    for (std::size_t p = 0; p < np; ++p) {
        const auto& ids = partition_graphs[p].person_ids;
        const RankResult& r = person_results[p];
        for (std::size_t j = 0; j < ids.size(); ++j) {
            out.persons.push_back({ids[j], r.scores[j], static_cast<int>(p), r.iterations,
                                   r.converged});
        }
    }
    return out;
}

}  // namespace regrank
