#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "regrank/errors.hpp"
#include "regrank/graph.hpp"
#include "regrank/sparse.hpp"

namespace regrank {

struct PageRankParams {
    double alpha = 0.85;    // damping
    double epsilon = 1e-8;  // L2 change threshold
    int max_iter = 1000;

    void validate() const {
        if (alpha < 0.0 || alpha >= 1.0) throw Error("pagerank alpha must be in [0, 1)");
        if (epsilon <= 0.0) throw Error("pagerank epsilon must be positive");
        if (max_iter <= 0) throw Error("pagerank max_iter must be positive");
    }
};

struct BiRankParams {
    double alpha = 0.85;    // company-side mixing
    double beta = 0.85;     // person-side mixing
    double epsilon = 1e-8;  // joint L1 change threshold
    int max_iter = 1000;

    void validate() const {
        if (alpha < 0.0 || alpha >= 1.0) throw Error("birank alpha must be in [0, 1)");
        if (beta < 0.0 || beta >= 1.0) throw Error("birank beta must be in [0, 1)");
        if (epsilon <= 0.0) throw Error("birank epsilon must be positive");
        if (max_iter <= 0) throw Error("birank max_iter must be positive");
    }
};

enum class NormKind {
    row_stochastic,               // rows with nonzero degree sum to 1
    symmetric_degree_normalized,  // S_ij = W_ij / (sqrt(d_i) * sqrt(d_j))
};

struct NormalizedMatrix {
    CsrMatrix matrix;
    NormKind kind = NormKind::row_stochastic;
};

struct RankResult {
    std::vector<double> scores;
    int iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
    std::vector<double> residual_trace;  // change norm after each iteration
};

// P_ij = w_ij / d_i over the symmetric adjacency; isolated nodes keep an
// all-zero row, so their score decays to (1-alpha) * e_i.
inline NormalizedMatrix row_normalize(const UnipartiteGraph& g) {
    const std::size_t n = g.node_ids.size();
    std::vector<double> degree(n, 0.0);
    for (const auto& e : g.edges) {
        if (e.weight < 0.0) throw Error("negative edge weight");
        degree[e.a] += e.weight;
        degree[e.b] += e.weight;
    }
    std::vector<Triplet> entries;
    entries.reserve(2 * g.edges.size());
    for (const auto& e : g.edges) {
        if (e.weight == 0.0) continue;
        entries.push_back({e.a, e.b, e.weight / degree[e.a]});
        entries.push_back({e.b, e.a, e.weight / degree[e.b]});
    }
    return {CsrMatrix::from_triplets(n, n, entries), NormKind::row_stochastic};
}

// S_ij = W_ij / (sqrt(d_company_i) * sqrt(d_person_j)), companies on rows.
inline NormalizedMatrix symmetric_normalize(const BipartiteGraph& b) {
    const std::size_t nc = b.company_ids.size();
    const std::size_t np = b.person_ids.size();
    std::vector<double> dc(nc, 0.0), dp(np, 0.0);
    for (const auto& e : b.edges) {
        if (e.weight < 0) throw Error("negative edge weight");
        dc[e.company] += e.weight;
        dp[e.person] += e.weight;
    }
    std::vector<Triplet> entries;
    entries.reserve(b.edges.size());
    for (const auto& e : b.edges) {
        if (e.weight == 0) continue;
        entries.push_back(
            {e.company, e.person, e.weight / (std::sqrt(dc[e.company]) * std::sqrt(dp[e.person]))});
    }
    return {CsrMatrix::from_triplets(nc, np, entries), NormKind::symmetric_degree_normalized};
}

// Personalized PageRank: fixed point of r = alpha * P^T r + (1 - alpha) * e,
// starting from r = e. Mass flows along edges, so node i aggregates the
// degree-normalized scores of its neighbors. The restart vector is used as
// given; scores are comparable within one run, which is all rank statistics
// need.
inline RankResult pagerank(const NormalizedMatrix& A, std::span<const double> restart,
                           const PageRankParams& params = {}) {
    params.validate();
    if (A.kind != NormKind::row_stochastic) throw Error("pagerank needs a row-stochastic matrix");
    const std::size_t n = A.matrix.rows();
    if (A.matrix.cols() != n || restart.size() != n) throw Error("pagerank dimension mismatch");

    RankResult out;
    out.scores.assign(restart.begin(), restart.end());
    std::vector<double> next(n, 0.0);

    const double alpha = params.alpha;
    double error = 0.0;
    while (out.iterations < params.max_iter) {
        A.matrix.mul_transpose(out.scores, next);
        error = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = alpha * next[i] + (1.0 - alpha) * restart[i];
            const double d = next[i] - out.scores[i];
            error += d * d;
        }
        error = std::sqrt(error);
        if (!std::isfinite(error)) {
            throw NumericError("pagerank produced a non-finite value", out.iterations + 1);
        }
        out.scores.swap(next);
        ++out.iterations;
        out.residual_trace.push_back(error);
        if (error <= params.epsilon) break;
    }
    out.final_residual = error;
    out.converged = error <= params.epsilon;
    return out;
}

struct BiRankResult {
    RankResult companies;
    RankResult persons;
};

// BiRank: alternating propagation through the degree-normalized bipartite
// operator,
//   u <- alpha * S p + (1 - alpha) * u0
//   p <- beta  * S^T u + (1 - beta) * p0
// with S as produced by symmetric_normalize (companies on rows). Convergence
// is the joint L1 change of both sides.
inline BiRankResult birank(const NormalizedMatrix& S, std::span<const double> company_restart,
                           std::span<const double> person_restart,
                           const BiRankParams& params = {}) {
    params.validate();
    if (S.kind != NormKind::symmetric_degree_normalized) {
        throw Error("birank needs a symmetric-degree-normalized matrix");
    }
    const std::size_t nc = S.matrix.rows();
    const std::size_t np = S.matrix.cols();
    if (company_restart.size() != nc || person_restart.size() != np) {
        throw Error("birank dimension mismatch");
    }

    std::vector<double> u(company_restart.begin(), company_restart.end());
    std::vector<double> p(person_restart.begin(), person_restart.end());
    std::vector<double> u_next(nc, 0.0), p_next(np, 0.0);

    BiRankResult out;
    int iterations = 0;
    double error = 0.0;
    std::vector<double> trace;
    while (iterations < params.max_iter) {
        S.matrix.mul(p, u_next);
        for (std::size_t i = 0; i < nc; ++i) {
            u_next[i] = params.alpha * u_next[i] + (1.0 - params.alpha) * company_restart[i];
        }
        S.matrix.mul_transpose(u_next, p_next);
        for (std::size_t j = 0; j < np; ++j) {
            p_next[j] = params.beta * p_next[j] + (1.0 - params.beta) * person_restart[j];
        }
        error = 0.0;
        for (std::size_t i = 0; i < nc; ++i) error += std::abs(u_next[i] - u[i]);
        for (std::size_t j = 0; j < np; ++j) error += std::abs(p_next[j] - p[j]);
        if (!std::isfinite(error)) {
            throw NumericError("birank produced a non-finite value", iterations + 1);
        }
        u.swap(u_next);
        p.swap(p_next);
        ++iterations;
        trace.push_back(error);
        if (error <= params.epsilon) break;
    }

    const bool converged = error <= params.epsilon;
    out.companies = {std::move(u), iterations, error, converged, trace};
    out.persons = {std::move(p), iterations, error, converged, std::move(trace)};
    return out;
}

}  // namespace regrank
