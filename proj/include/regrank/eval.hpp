#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "regrank/errors.hpp"

namespace regrank {

struct LabeledScore {
    std::string id;
    double score = 0.0;
    int label = 0;  // 0 compliant, 1 risk
};

namespace stats_detail {

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Continued fraction for the regularized incomplete beta function (Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 200;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return h;
}

inline double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// two-sided p for a t statistic with df degrees of freedom
inline double student_t_two_sided(double t, double df) {
    return betai(df / 2.0, 0.5, df / (df + t * t));
}

struct RankedValues {
    std::vector<double> ranks;     // 1-based midranks, original order
    std::vector<std::size_t> tie_sizes;  // sizes of tie groups with >= 2 members
};

inline RankedValues midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    RankedValues out;
    out.ranks.assign(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = rank;
        if (j > i) out.tie_sizes.push_back(j - i + 1);
        i = j + 1;
    }
    return out;
}

// descending by score, ties broken by ascending id so top-n cuts are stable
inline std::vector<std::size_t> ranked_order(std::span<const LabeledScore> items) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].score != items[b].score) return items[a].score > items[b].score;
        return items[a].id < items[b].id;
    });
    return order;
}

}  // namespace stats_detail

struct SpearmanResult {
    double rho = 0.0;
    double p = 1.0;
    bool defined = false;  // false when either input is constant
    std::size_t n = 0;
};

// Spearman rank correlation on midranks, p-value from the t approximation
// t = rho * sqrt((n-2) / (1-rho^2)).
inline SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("spearman inputs differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw Error("spearman needs at least 3 observations");

    const auto rx = stats_detail::midranks(x);
    const auto ry = stats_detail::midranks(y);

    const double mean = static_cast<double>(n + 1) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx.ranks[i] - mean;
        const double dy = ry.ranks[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }

    SpearmanResult out;
    out.n = n;
    if (sxx == 0.0 || syy == 0.0) {
        return out;  // constant input, correlation undefined
    }
    out.defined = true;
    out.rho = sxy / std::sqrt(sxx * syy);
    const double r2 = std::min(out.rho * out.rho, 1.0);
    if (1.0 - r2 < 1e-15) {
        out.p = 0.0;
    } else {
        const double t = out.rho * std::sqrt(static_cast<double>(n - 2) / (1.0 - r2));
        out.p = stats_detail::student_t_two_sided(t, static_cast<double>(n - 2));
    }
    return out;
}

inline SpearmanResult spearman(std::span<const LabeledScore> items) {
    std::size_t n1 = 0;
    for (const auto& it : items) n1 += it.label != 0;
    if (n1 == 0 || n1 == items.size()) throw Error("spearman needs both label values present");
    std::vector<double> scores, labels;
    scores.reserve(items.size());
    labels.reserve(items.size());
    for (const auto& it : items) {
        scores.push_back(it.score);
        labels.push_back(static_cast<double>(it.label));
    }
    return spearman(scores, labels);
}

struct MannWhitneyResult {
    double u = 0.0;  // pairs where a group-1 score beats a group-0 score, ties half
    double z = 0.0;
    double p = 1.0;
};

// Mann-Whitney U from midranks with tie-corrected variance; Z > 0 means
// group 1 tends to score higher.
inline MannWhitneyResult mann_whitney(std::span<const double> group0,
                                      std::span<const double> group1) {
    if (group0.empty() || group1.empty()) throw Error("mann_whitney needs both groups non-empty");
    const std::size_t n0 = group0.size();
    const std::size_t n1 = group1.size();
    const std::size_t n = n0 + n1;

    std::vector<double> combined;
    combined.reserve(n);
    combined.insert(combined.end(), group0.begin(), group0.end());
    combined.insert(combined.end(), group1.begin(), group1.end());
    const auto ranked = stats_detail::midranks(combined);

    double r1 = 0.0;
    for (std::size_t i = n0; i < n; ++i) r1 += ranked.ranks[i];

    MannWhitneyResult out;
    out.u = r1 - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
    const double mu = static_cast<double>(n0) * static_cast<double>(n1) / 2.0;

    double tie_term = 0.0;
    for (auto t : ranked.tie_sizes) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double nd = static_cast<double>(n);
    const double var = static_cast<double>(n0) * static_cast<double>(n1) / 12.0 *
                       ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (var <= 0.0) {
        return out;  // every observation tied: U == mu, Z = 0, p = 1
    }
    out.z = (out.u - mu) / std::sqrt(var);
    out.p = 2.0 * stats_detail::normal_sf(std::abs(out.z));
    return out;
}

struct PrPoint {
    std::size_t n_selected = 0;
    double precision = 0.0;
    double recall = 0.0;
};

// Audit-selection quality of the top n_selected ranked subjects.
inline PrPoint precision_recall_at(std::span<const LabeledScore> items, std::size_t n_selected) {
    if (n_selected < 1 || n_selected > items.size()) {
        throw Error("n_selected must be in [1, n]");
    }
    std::size_t n1 = 0;
    for (const auto& it : items) n1 += it.label != 0;
    if (n1 == 0) throw Error("precision_recall_at needs at least one positive label");

    const auto order = stats_detail::ranked_order(items);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_selected; ++i) hits += items[order[i]].label != 0;
    return {n_selected, static_cast<double>(hits) / static_cast<double>(n_selected),
            static_cast<double>(hits) / static_cast<double>(n1)};
}

// Full precision/recall curve in one pass over the ranking.
inline std::vector<PrPoint> pr_curve_full(std::span<const LabeledScore> items) {
    std::size_t n1 = 0;
    for (const auto& it : items) n1 += it.label != 0;
    if (n1 == 0) throw Error("pr_curve_full needs at least one positive label");
    const auto order = stats_detail::ranked_order(items);
    std::vector<PrPoint> curve;
    curve.reserve(items.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        hits += items[order[i]].label != 0;
        curve.push_back({i + 1, static_cast<double>(hits) / static_cast<double>(i + 1),
                         static_cast<double>(hits) / static_cast<double>(n1)});
    }
    return curve;
}

struct TargetBin {
    int index = 0;  // 0 = top-ranked bin
    std::size_t size = 0;
    std::size_t positives = 0;
    double positive_rate = 0.0;
    double lift = 0.0;  // positive_rate / overall rate
};

// Equally sized ordered bins over the ranking (remainder spread over the
// leading bins), positive rate and lift per bin.
inline std::vector<TargetBin> target_chart(std::span<const LabeledScore> items, int bin_count) {
    if (bin_count < 2) throw Error("target_chart needs at least 2 bins");
    const std::size_t n = items.size();
    if (n == 0) throw Error("target_chart needs data");
    std::size_t n1 = 0;
    for (const auto& it : items) n1 += it.label != 0;
    const double overall = static_cast<double>(n1) / static_cast<double>(n);

    const auto order = stats_detail::ranked_order(items);
    const std::size_t bins = static_cast<std::size_t>(bin_count);
    const std::size_t base = n / bins;
    const std::size_t remainder = n % bins;

    std::vector<TargetBin> out;
    out.reserve(bins);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        TargetBin bin;
        bin.index = static_cast<int>(b);
        bin.size = base + (b < remainder ? 1 : 0);
        for (std::size_t i = 0; i < bin.size; ++i) {
            bin.positives += items[order[pos + i]].label != 0;
        }
        pos += bin.size;
        if (bin.size > 0) {
            bin.positive_rate = static_cast<double>(bin.positives) / static_cast<double>(bin.size);
            bin.lift = overall > 0.0 ? bin.positive_rate / overall : 0.0;
        }
        out.push_back(bin);
    }
    return out;
}

struct MetricReport {
    double rho = 0.0;
    double rho_p = 1.0;
    bool rho_defined = false;
    double u = 0.0;
    double z = 0.0;
    double z_p = 1.0;
    std::size_t n = 0;
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    std::vector<PrPoint> pr_curve;  // selected operating points
    std::vector<TargetBin> target_bins;
};

// Full evaluation of one algorithm's labeled scores. The pr_curve holds a few
// operating points at fixed fractions of n; the complete curve is available
// through pr_curve_full.
inline MetricReport evaluate(std::span<const LabeledScore> items, int bin_count = 20) {
    MetricReport report;
    report.n = items.size();
    for (const auto& it : items) (it.label != 0 ? report.n1 : report.n0) += 1;
    if (report.n0 == 0 || report.n1 == 0) {
        throw Error("evaluation needs both label values present");
    }

    const auto sp = spearman(items);
    report.rho = sp.rho;
    report.rho_p = sp.p;
    report.rho_defined = sp.defined;

    std::vector<double> g0, g1;
    g0.reserve(report.n0);
    g1.reserve(report.n1);
    for (const auto& it : items) (it.label != 0 ? g1 : g0).push_back(it.score);
    const auto mw = mann_whitney(g0, g1);
    report.u = mw.u;
    report.z = mw.z;
    report.z_p = mw.p;

    const double fractions[] = {0.01, 0.02, 0.05, 0.10, 0.20, 0.50, 1.00};
    std::vector<std::size_t> points;
    for (double f : fractions) {
        const auto sel = static_cast<std::size_t>(std::llround(f * static_cast<double>(report.n)));
        points.push_back(std::clamp<std::size_t>(sel, 1, report.n));
    }
    points.erase(std::unique(points.begin(), points.end()), points.end());
    for (auto sel : points) report.pr_curve.push_back(precision_recall_at(items, sel));

    report.target_bins = target_chart(items, bin_count);
    return report;
}

}  // namespace regrank
