#include "hmminf/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "hmminf/rng.hpp"

namespace hmminf {

namespace {

constexpr std::size_t kMaxLloydIters = 1000;

std::size_t nearest(const std::vector<double>& centers, double x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = std::abs(x - centers[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

}  // namespace

KMeansResult kmeans_1d(std::span<const double> values, std::size_t k, std::uint64_t seed) {
    const std::size_t n = values.size();
    if (k == 0) throw InvalidArgument("k-means needs k >= 1");
    std::vector<double> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (k > distinct.size()) throw InvalidArgument("k-means: k exceeds the number of distinct values");

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // k-means++ seeding on the distinct values.
    std::vector<double> centers;
    centers.push_back(distinct[static_cast<std::size_t>(unif(rng) * static_cast<double>(distinct.size())) % distinct.size()]);
    std::vector<double> d2(distinct.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            const double d = distinct[i] - centers[nearest(centers, distinct[i])];
            d2[i] = d * d;
            total += d2[i];
        }
        double u = unif(rng) * total;
        std::size_t pick = distinct.size() - 1;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            if (d2[i] == 0.0) continue;
            if (u < d2[i]) {
                pick = i;
                break;
            }
            u -= d2[i];
        }
        while (d2[pick] == 0.0) --pick;  // only reached through rounding at the tail
        centers.push_back(distinct[pick]);
    }

    std::vector<std::size_t> assign(n, 0);
    std::vector<double> sum(k);
    std::vector<std::size_t> count(k);
    for (std::size_t iter = 0; iter < kMaxLloydIters; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest(centers, values[i]);
            if (c != assign[i]) changed = true;
            assign[i] = c;
        }
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[assign[i]] += values[i];
            ++count[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) {
                centers[c] = sum[c] / static_cast<double>(count[c]);
                continue;
            }
            // Empty cluster: move it onto the worst-fitted point.
            std::size_t worst = 0;
            double worst_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = std::abs(values[i] - centers[assign[i]]);
                if (count[assign[i]] > 1 && d > worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            --count[assign[worst]];
            assign[worst] = c;
            count[c] = 1;
            centers[c] = values[worst];
            changed = true;
        }
        if (!changed) break;
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
    std::vector<std::size_t> rank(k);
    KMeansResult out;
    out.means.resize(k);
    for (std::size_t r = 0; r < k; ++r) {
        rank[order[r]] = r;
        out.means[r] = centers[order[r]];
    }
    out.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.assignments[i] = rank[assign[i]];
    return out;
}

}  // namespace hmminf
