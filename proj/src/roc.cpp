#include <algorithm>
#include <cmath>
#include <random>

#include "hmminf/error.hpp"
#include "hmminf/outliers.hpp"
#include "hmminf/rng.hpp"

namespace hmminf {

namespace {

void check_scores(std::span<const double> s) {
    if (s.empty()) throw InvalidArgument("AUC needs non-empty score lists");
    for (double v : s)
        if (std::isnan(v)) throw InvalidArgument("AUC scores must not be NaN");
}

double quantile(std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double auc_mann_whitney(std::span<const double> scores_h1, std::span<const double> scores_h0) {
    check_scores(scores_h1);
    check_scores(scores_h0);
    std::vector<std::pair<double, bool>> all;
    all.reserve(scores_h1.size() + scores_h0.size());
    for (double v : scores_h1) all.emplace_back(v, true);
    for (double v : scores_h0) all.emplace_back(v, false);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    // Sum of mid-ranks of the H1 sample.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        std::size_t h1_in_tie = 0;
        while (j < all.size() && all[j].first == all[i].first) h1_in_tie += all[j++].second ? 1 : 0;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += mid_rank * static_cast<double>(h1_in_tie);
        i = j;
    }
    const double n1 = static_cast<double>(scores_h1.size());
    const double n0 = static_cast<double>(scores_h0.size());
    return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

RocResult empirical_auc(std::span<const double> scores_h1, std::span<const double> scores_h0, std::size_t bootstrap,
                        std::uint64_t seed, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    RocResult out;
    out.auc = auc_mann_whitney(scores_h1, scores_h0);
    out.level = level;
    for (double v : scores_h1) out.ranked.emplace_back(v, true);
    for (double v : scores_h0) out.ranked.emplace_back(v, false);
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    out.ci_lo = out.ci_hi = out.auc;
    if (bootstrap == 0) return out;

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick1(0, scores_h1.size() - 1);
    std::uniform_int_distribution<std::size_t> pick0(0, scores_h0.size() - 1);
    std::vector<double> b1(scores_h1.size()), b0(scores_h0.size()), stats(bootstrap);
    for (std::size_t b = 0; b < bootstrap; ++b) {
        for (double& v : b1) v = scores_h1[pick1(rng)];
        for (double& v : b0) v = scores_h0[pick0(rng)];
        stats[b] = auc_mann_whitney(b1, b0);
    }
    std::sort(stats.begin(), stats.end());
    const double tail = 0.5 * (1.0 - level);
    out.ci_lo = std::min(quantile(stats, tail), out.auc);
    out.ci_hi = std::max(quantile(stats, 1.0 - tail), out.auc);
    return out;
}

}  // namespace hmminf
