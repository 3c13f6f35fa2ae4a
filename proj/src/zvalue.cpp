#include <algorithm>
#include <cmath>

#include "hmminf/outliers.hpp"

namespace hmminf {

namespace {
constexpr double kSigmaFloor = 1e-12;
}

double ZScores::statistic() const {
    double mx = 0.0;
    for (double v : z) mx = std::max(mx, std::abs(v));
    return mx;
}

ZScores z_value_scores(std::span<const double> values, std::size_t k, std::uint64_t seed) {
    ZScores out;
    out.clusters = kmeans_1d(values, k, seed);
    const auto& assign = out.clusters.assignments;

    std::vector<double> sum(k, 0.0), sq(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum[assign[i]] += values[i];
        ++count[assign[i]];
    }
    std::vector<double> mean(k);
    for (std::size_t c = 0; c < k; ++c) mean[c] = sum[c] / static_cast<double>(count[c]);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - mean[assign[i]];
        sq[assign[i]] += d * d;
    }
    std::vector<double> sigma(k);
    for (std::size_t c = 0; c < k; ++c) {
        sigma[c] = std::sqrt(sq[c] / static_cast<double>(count[c]));
        if (sigma[c] < kSigmaFloor) {
            sigma[c] = kSigmaFloor;
            out.degenerate = true;
        }
    }
    out.z.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out.z[i] = (values[i] - mean[assign[i]]) / sigma[assign[i]];
    return out;
}

}  // namespace hmminf
