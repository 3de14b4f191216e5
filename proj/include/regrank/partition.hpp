#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "regrank/errors.hpp"
#include "regrank/graph.hpp"
#include "regrank/rng.hpp"
#include "regrank/sparse.hpp"

namespace regrank {

struct ComponentLabeling {
    std::vector<std::uint32_t> label;  // per node, components numbered by lowest member index
    std::uint32_t count = 0;
};

inline ComponentLabeling connected_components(const UnipartiteGraph& g) {
    const std::size_t n = g.node_ids.size();
    ComponentLabeling out;
    out.label.assign(n, UINT32_MAX);

    std::vector<std::vector<std::uint32_t>> adj(n);
    for (const auto& e : g.edges) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }

    std::vector<std::uint32_t> queue;
    for (std::size_t start = 0; start < n; ++start) {
        if (out.label[start] != UINT32_MAX) continue;
        const std::uint32_t comp = out.count++;
        queue.clear();
        queue.push_back(static_cast<std::uint32_t>(start));
        out.label[start] = comp;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            for (auto nb : adj[queue[head]]) {
                if (out.label[nb] == UINT32_MAX) {
                    out.label[nb] = comp;
                    queue.push_back(nb);
                }
            }
        }
    }
    return out;
}

// Subgraph induced by the given node indices; ids keep their lexicographic
// order, edges keep their weights.
inline UnipartiteGraph induced_subgraph(const UnipartiteGraph& g,
                                        std::span<const std::uint32_t> nodes) {
    UnipartiteGraph out;
    std::vector<std::uint32_t> sorted(nodes.begin(), nodes.end());
    std::sort(sorted.begin(), sorted.end());
    out.node_ids.reserve(sorted.size());
    std::vector<std::int64_t> remap(g.node_ids.size(), -1);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        remap[sorted[i]] = static_cast<std::int64_t>(i);
        out.node_ids.push_back(g.node_ids[sorted[i]]);
    }
    for (const auto& e : g.edges) {
        if (remap[e.a] >= 0 && remap[e.b] >= 0) {
            out.edges.push_back({static_cast<std::uint32_t>(remap[e.a]),
                                 static_cast<std::uint32_t>(remap[e.b]), e.weight});
        }
    }
    return out;
}

struct FiedlerParams {
    double tol = 1e-8;      // residual bound ||L v - lambda v|| <= tol for unit v
    int max_iter = 200000;  // Laplacian product budget across both solver phases
};

struct FiedlerResult {
    std::vector<double> vector;  // unit norm, orthogonal to ones, first nonzero entry positive
    double eigenvalue = 0.0;
    double residual = 0.0;
    int iterations = 0;  // matrix-vector products spent
};

namespace detail {

// Eigendecomposition of a small dense symmetric matrix by cyclic Jacobi
// rotations. Used on the projected tridiagonal systems, never on the graph.
inline void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                         std::vector<double>& eigvecs) {
    eigvecs.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;

    double frob = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) frob += a[i] * a[i];

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        }
        if (off <= 1e-28 * frob) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = eigvecs[k * n + p];
                    const double vkq = eigvecs[k * n + q];
                    eigvecs[k * n + p] = c * vkp - s * vkq;
                    eigvecs[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

struct LaplacianOperator {
    CsrMatrix adjacency;         // symmetric, both directions stored
    std::vector<double> degree;  // weighted
    double sigma = 0.0;          // Gershgorin bound on the largest Laplacian eigenvalue

    explicit LaplacianOperator(const UnipartiteGraph& g) {
        const std::size_t n = g.node_ids.size();
        degree.assign(n, 0.0);
        std::vector<Triplet> entries;
        entries.reserve(2 * g.edges.size());
        for (const auto& e : g.edges) {
            degree[e.a] += e.weight;
            degree[e.b] += e.weight;
            entries.push_back({e.a, e.b, e.weight});
            entries.push_back({e.b, e.a, e.weight});
        }
        adjacency = CsrMatrix::from_triplets(n, n, entries);
        double max_degree = 0.0;
        for (double d : degree) max_degree = std::max(max_degree, d);
        sigma = 2.0 * max_degree;
    }

    std::size_t size() const { return degree.size(); }

    // y = L x = (D - W) x
    void apply_laplacian(std::span<const double> x, std::span<double> y) const {
        adjacency.mul(x, y);
        for (std::size_t i = 0; i < degree.size(); ++i) y[i] = degree[i] * x[i] - y[i];
    }

    // y = (sigma I - L) x; a nonnegative shift of -L so the Fiedler pair
    // becomes the dominant one once the constant vector is projected out
    void apply_shifted(std::span<const double> x, std::span<double> y) const {
        adjacency.mul(x, y);
        for (std::size_t i = 0; i < degree.size(); ++i) {
            y[i] += (sigma - degree[i]) * x[i];
        }
    }
};

inline void remove_mean(std::span<double> v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (auto& x : v) x -= mean;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// Jacobi-preconditioned conjugate gradients for L y = b restricted to the
// ones-orthogonal subspace, where L is positive definite for a connected
// graph. Every iteration costs one Laplacian product, charged to the shared
// budget. An inner iteration cap bounds the cost of a single solve; hitting
// it leaves an inexact but usable y. Returns false only when the global
// budget is spent or CG breaks down before any progress.
inline bool solve_laplacian_pcg(const LaplacianOperator& op, std::span<const double> b,
                                std::span<double> y, double rel_tol, int inner_cap,
                                int budget_limit, int& matvecs) {
    const std::size_t n = op.size();
    std::vector<double> r(b.begin(), b.end());
    remove_mean(r);
    std::fill(y.begin(), y.end(), 0.0);

    const double b_norm = norm2(r);
    if (b_norm == 0.0) return true;

    std::vector<double> z(n), p(n), lp(n);
    auto precondition = [&](std::span<const double> src, std::span<double> dst) {
        for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] / op.degree[i];
        remove_mean(dst);
    };
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    bool progressed = false;

    for (int it = 0; it < inner_cap; ++it) {
        if (matvecs >= budget_limit) return false;
        op.apply_laplacian(p, lp);
        ++matvecs;
        const double p_lp = dot(p, lp);
        if (p_lp <= 0.0) return progressed;  // numerical floor reached
        const double alpha = rz / p_lp;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += alpha * p[i];
            r[i] -= alpha * lp[i];
        }
        remove_mean(r);
        progressed = true;
        if (norm2(r) <= rel_tol * b_norm) break;
        precondition(r, z);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    remove_mean(y);
    return true;
}

struct RitzOutcome {
    std::vector<double> vector;
    double eigenvalue = 0.0;  // Rayleigh quotient against L
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

// Thick-restart Rayleigh-Ritz iteration for the dominant eigenpair of a
// positive operator restricted to the ones-orthogonal subspace. `apply`
// evaluates the operator (and may spend many Laplacian products per call);
// convergence is always judged by the true residual against L, so an inexact
// operator can only slow things down, never accept a bad vector.
inline RitzOutcome thick_restart_dominant(
    const LaplacianOperator& op,
    const std::function<bool(std::span<const double>, std::span<double>)>& apply,
    std::span<const double> start, std::size_t basis_cap, std::size_t keep, double tol,
    int budget_limit, int& matvecs) {
    const std::size_t n = op.size();
    basis_cap = std::max<std::size_t>(2, basis_cap);
    keep = std::clamp<std::size_t>(keep, 1, basis_cap - 1);

    std::vector<std::vector<double>> basis, images;
    std::vector<double> work(n), ritz(n);
    RitzOutcome best;

    auto orthonormalize_into_basis = [&](std::vector<double>& w) -> bool {
        remove_mean(w);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double c = dot(q, w);
                for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
            }
        }
        const double nrm = norm2(w);
        if (nrm < 1e-13) return false;
        for (auto& x : w) x /= nrm;
        return true;
    };

    {
        std::vector<double> v(start.begin(), start.end());
        if (!orthonormalize_into_basis(v)) return best;
        basis.push_back(std::move(v));
        images.emplace_back(n, 0.0);
        if (!apply(basis[0], images[0])) return best;
    }

    while (true) {
        bool exhausted = false;
        bool apply_failed = false;
        while (basis.size() < basis_cap && matvecs < budget_limit) {
            std::vector<double> w = images.back();
            if (!orthonormalize_into_basis(w)) {
                exhausted = true;  // invariant subspace found, Ritz pairs are exact
                break;
            }
            basis.push_back(std::move(w));
            images.emplace_back(n, 0.0);
            if (!apply(basis.back(), images.back())) {
                basis.pop_back();
                images.pop_back();
                apply_failed = true;
                break;
            }
        }

        const std::size_t m = basis.size();
        if (m == 0) return best;
        std::vector<double> h(m * m, 0.0), eigvals, eigvecs;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i; j < m; ++j) {
                const double v = 0.5 * (dot(basis[i], images[j]) + dot(basis[j], images[i]));
                h[i * m + j] = v;
                h[j * m + i] = v;
            }
        }
        jacobi_eigen(h, m, eigvals, eigvecs);

        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });

        auto ritz_vector = [&](std::size_t which, std::span<double> dst) {
            std::fill(dst.begin(), dst.end(), 0.0);
            for (std::size_t j = 0; j < m; ++j) {
                const double c = eigvecs[j * m + order[which]];
                for (std::size_t i = 0; i < n; ++i) dst[i] += c * basis[j][i];
            }
        };

        ritz_vector(0, ritz);
        remove_mean(ritz);
        const double rnorm = norm2(ritz);
        if (rnorm > 0) {
            for (auto& x : ritz) x /= rnorm;
        }

        op.apply_laplacian(ritz, work);
        const double lambda = dot(ritz, work);
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = work[i] - lambda * ritz[i];
            residual += d * d;
        }
        residual = std::sqrt(residual);

        if (residual < best.residual) {
            best.vector = ritz;
            best.eigenvalue = lambda;
            best.residual = residual;
        }
        if (residual <= tol) {
            best.converged = true;
            return best;
        }
        if (exhausted || apply_failed || matvecs >= budget_limit) return best;

        // thick restart: keep the leading Ritz vectors and their images
        const std::size_t kept = std::min(keep, m);
        std::vector<std::vector<double>> new_basis(kept, std::vector<double>(n, 0.0));
        std::vector<std::vector<double>> new_images(kept, std::vector<double>(n, 0.0));
        for (std::size_t r = 0; r < kept; ++r) {
            ritz_vector(r, new_basis[r]);
            for (std::size_t j = 0; j < m; ++j) {
                const double c = eigvecs[j * m + order[r]];
                for (std::size_t i = 0; i < n; ++i) new_images[r][i] += c * images[j][i];
            }
        }
        basis.clear();
        images.clear();
        for (std::size_t r = 0; r < kept; ++r) {
            auto& v = new_basis[r];
            if (!orthonormalize_into_basis(v)) continue;
            basis.push_back(std::move(v));
            images.push_back(std::move(new_images[r]));
        }
        if (basis.empty()) return best;
    }
}

}  // namespace detail

// Approximates the eigenvector of the graph Laplacian L = D - W for its
// second-smallest eigenvalue, using only matrix-vector products and with the
// constant eigenvector projected out. Two phases share one product budget:
//
//   1. thick-restart Lanczos on the Gershgorin-shifted operator sigma I - L,
//      which is cheap and exact on small or well-separated spectra;
//   2. if that stalls, shift-invert Lanczos where L^-1 is applied by
//      Jacobi-preconditioned CG. Inverting spreads the packed lower end of a
//      Laplacian spectrum apart, which is what makes large sparse register
//      graphs tractable at tight residual tolerances.
//
// The input must be connected; callers split by components first.
inline FiedlerResult fiedler_vector(const UnipartiteGraph& g, const FiedlerParams& params = {}) {
    const std::size_t n = g.node_ids.size();
    if (n < 3) throw Error("fiedler_vector needs at least 3 nodes");
    if (connected_components(g).count != 1) {
        throw Error("fiedler_vector requires a connected graph");
    }

    const detail::LaplacianOperator op(g);
    int matvecs = 0;

    std::vector<double> start(n);
    {
        Rng rng(0x9e3779b97f4a7c15ull);
        for (auto& x : start) x = rng.next_real() - 0.5;
    }

    // phase 1: direct operator
    const int direct_budget = std::min(params.max_iter, std::max(200, static_cast<int>(2 * n)));
    auto direct_apply = [&](std::span<const double> x, std::span<double> y) {
        if (matvecs >= direct_budget) return false;
        op.apply_shifted(x, y);
        ++matvecs;
        return true;
    };
    auto outcome = detail::thick_restart_dominant(op, direct_apply, start,
                                                  std::min<std::size_t>(n - 1, 96), 8, params.tol,
                                                  direct_budget, matvecs);

    // phase 2: shift-invert with the remaining budget, warm-started. Inexact
    // inner solves are safe because acceptance rides on the true residual.
    if (!outcome.converged) {
        const int inner_cap = static_cast<int>(6 * n) + 100;
        auto inverse_apply = [&](std::span<const double> x, std::span<double> y) {
            return detail::solve_laplacian_pcg(op, x, y, 1e-10, inner_cap, params.max_iter,
                                               matvecs);
        };
        const auto& warm = outcome.vector.empty() ? start : outcome.vector;
        auto inverted = detail::thick_restart_dominant(op, inverse_apply, warm,
                                                       std::min<std::size_t>(n - 1, 32), 6,
                                                       params.tol, params.max_iter, matvecs);
        if (inverted.residual < outcome.residual) outcome = std::move(inverted);
    }

    if (!outcome.converged) {
        throw ConvergenceError("fiedler_vector did not converge", outcome.residual, matvecs);
    }

    FiedlerResult out;
    out.vector = std::move(outcome.vector);
    out.eigenvalue = outcome.eigenvalue;
    out.residual = outcome.residual;
    out.iterations = matvecs;
    // fix the global sign: first entry that is clearly nonzero is positive
    for (double x : out.vector) {
        if (std::abs(x) >= params.tol) {
            if (x < 0) {
                for (auto& y : out.vector) y = -y;
            }
            break;
        }
    }
    return out;
}

struct Bisection {
    std::vector<std::uint32_t> negative;      // node indices with v_i < -tol
    std::vector<std::uint32_t> non_negative;  // the rest, zeros included
    FiedlerResult fiedler;
};

// Splits a connected graph along the signs of its Fiedler vector. Entries
// within tol of zero count as zero and land on the non-negative side.
inline Bisection spectral_bisection(const UnipartiteGraph& g, const FiedlerParams& params = {}) {
    Bisection out;
    out.fiedler = fiedler_vector(g, params);
    for (std::uint32_t i = 0; i < out.fiedler.vector.size(); ++i) {
        const double x = out.fiedler.vector[i];
        if (std::abs(x) >= params.tol && x < 0) {
            out.negative.push_back(i);
        } else {
            out.non_negative.push_back(i);
        }
    }
    if (out.negative.empty() || out.non_negative.empty()) {
        throw Error("degenerate bisection: one side is empty");
    }
    return out;
}

struct PartitionOptions {
    std::size_t max_size = 50000;  // bisect anything at or above this
    std::size_t min_size = 50;     // drop anything below this at the end
    FiedlerParams fiedler;
};

struct Partition {
    std::vector<std::string> company_ids;  // sorted
    std::string provenance;                // component id plus the sign path, e.g. "c3/-+"
    bool split_failed = false;             // kept whole after a failed bisection
};

struct PartitionSet {
    std::vector<Partition> partitions;  // ordered by smallest contained company id
    std::vector<std::string> dropped_company_ids;
    std::size_t input_nodes = 0;
};

// Connected components first, then recursive spectral bisection of every
// piece at or above max_size, then the min_size filter. A failed bisection
// keeps its piece whole and flags it rather than aborting the run.
inline PartitionSet recursive_partition(const UnipartiteGraph& g,
                                        const PartitionOptions& options = {}) {
    PartitionSet out;
    out.input_nodes = g.node_ids.size();

    const auto comps = connected_components(g);
    std::vector<std::vector<std::uint32_t>> by_comp(comps.count);
    for (std::uint32_t i = 0; i < g.node_ids.size(); ++i) {
        by_comp[comps.label[i]].push_back(i);
    }

    struct Pending {
        std::vector<std::uint32_t> nodes;
        std::string provenance;
    };
    std::vector<Pending> stack;
    std::vector<Partition> finished;

    for (std::uint32_t c = 0; c < comps.count; ++c) {
        stack.push_back({std::move(by_comp[c]), "c" + std::to_string(c)});
        while (!stack.empty()) {
            Pending cur = std::move(stack.back());
            stack.pop_back();
            bool keep_whole = cur.nodes.size() < options.max_size;
            bool failed = false;
            if (!keep_whole) {
                const auto sub = induced_subgraph(g, cur.nodes);
                // sub is sorted by id, so sub index k maps to sorted(cur.nodes)[k]
                std::vector<std::uint32_t> sorted_nodes = cur.nodes;
                std::sort(sorted_nodes.begin(), sorted_nodes.end());
                try {
                    auto bis = spectral_bisection(sub, options.fiedler);
                    const std::string sep = cur.provenance.find('/') == std::string::npos ? "/" : "";
                    Pending neg{{}, cur.provenance + sep + "-"};
                    Pending pos{{}, cur.provenance + sep + "+"};
                    for (auto k : bis.negative) neg.nodes.push_back(sorted_nodes[k]);
                    for (auto k : bis.non_negative) pos.nodes.push_back(sorted_nodes[k]);
                    stack.push_back(std::move(pos));
                    stack.push_back(std::move(neg));
                } catch (const Error&) {
                    keep_whole = true;
                    failed = true;
                }
            }
            if (keep_whole) {
                Partition p;
                p.provenance = cur.provenance;
                p.split_failed = failed;
                std::sort(cur.nodes.begin(), cur.nodes.end());
                p.company_ids.reserve(cur.nodes.size());
                for (auto i : cur.nodes) p.company_ids.push_back(g.node_ids[i]);
                finished.push_back(std::move(p));
            }
        }
    }

    for (auto& p : finished) {
        if (p.company_ids.size() >= options.min_size) {
            out.partitions.push_back(std::move(p));
        } else {
            out.dropped_company_ids.insert(out.dropped_company_ids.end(), p.company_ids.begin(),
                                           p.company_ids.end());
        }
    }
    std::sort(out.partitions.begin(), out.partitions.end(),
              [](const Partition& a, const Partition& b) {
                  return a.company_ids.front() < b.company_ids.front();
              });
    std::sort(out.dropped_company_ids.begin(), out.dropped_company_ids.end());
    return out;
}

// Bipartite restriction of each partition: its companies, every person with
// at least one edge into them, and exactly the edges between the two. A
// person spanning several partitions appears in each of them.
inline std::vector<BipartiteGraph> restrict_bipartite(const BipartiteGraph& b,
                                                      const PartitionSet& parts) {
    std::vector<std::int64_t> company_partition(b.company_ids.size(), -1);
    for (std::size_t pi = 0; pi < parts.partitions.size(); ++pi) {
        for (const auto& id : parts.partitions[pi].company_ids) {
            auto idx = b.company_index(id);
            if (!idx) throw InputError("partition company '" + id + "' missing from graph");
            company_partition[*idx] = static_cast<std::int64_t>(pi);
        }
    }

    std::vector<std::vector<const BipartiteEdge*>> edges_of(parts.partitions.size());
    for (const auto& e : b.edges) {
        const auto pi = company_partition[e.company];
        if (pi >= 0) edges_of[pi].push_back(&e);
    }

    std::vector<BipartiteGraph> out(parts.partitions.size());
    for (std::size_t pi = 0; pi < parts.partitions.size(); ++pi) {
        BipartiteGraph& sub = out[pi];
        sub.company_ids = parts.partitions[pi].company_ids;  // already sorted
        std::vector<std::string> persons;
        for (const auto* e : edges_of[pi]) persons.push_back(b.person_ids[e->person]);
        std::sort(persons.begin(), persons.end());
        persons.erase(std::unique(persons.begin(), persons.end()), persons.end());
        sub.person_ids = std::move(persons);
        sub.edges.reserve(edges_of[pi].size());
        for (const auto* e : edges_of[pi]) {
            sub.edges.push_back({*sub.company_index(b.company_ids[e->company]),
                                 *sub.person_index(b.person_ids[e->person]), e->weight});
        }
        std::sort(sub.edges.begin(), sub.edges.end(),
                  [](const BipartiteEdge& x, const BipartiteEdge& y) {
                      return std::tie(x.company, x.person) < std::tie(y.company, y.person);
                  });
    }
    return out;
}

}  // namespace regrank
