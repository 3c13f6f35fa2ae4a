#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmminf/error.hpp"
#include "hmminf/outliers.hpp"

namespace hmminf {

namespace {

constexpr double kReachFloor = 1e-12;
constexpr std::size_t kLofMinR = 10;
constexpr std::size_t kLofMaxR = 20;

struct Neighbor {
    double dist;
    std::size_t index;
};

// For each point, every other point sorted by distance (ties by index).
std::vector<std::vector<Neighbor>> sorted_neighbors(std::span<const Point2> pts) {
    const std::size_t n = pts.size();
    std::vector<std::vector<Neighbor>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) out[i].push_back({std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y), j});
        std::sort(out[i].begin(), out[i].end(), [](const Neighbor& a, const Neighbor& b) {
            return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
        });
    }
    return out;
}

std::vector<double> lof_from_neighbors(const std::vector<std::vector<Neighbor>>& nb, std::size_t r) {
    const std::size_t n = nb.size();
    std::vector<double> kdist(n);
    std::vector<std::size_t> size(n);
    for (std::size_t i = 0; i < n; ++i) {
        kdist[i] = nb[i][r - 1].dist;
        std::size_t c = r;
        while (c < nb[i].size() && nb[i][c].dist <= kdist[i]) ++c;
        size[i] = c;
    }
    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double reach = 0.0;
        for (std::size_t a = 0; a < size[i]; ++a) reach += std::max(kdist[nb[i][a].index], nb[i][a].dist);
        lrd[i] = 1.0 / std::max(reach / static_cast<double>(size[i]), kReachFloor);
    }
    std::vector<double> lof(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t a = 0; a < size[i]; ++a) acc += lrd[nb[i][a].index];
        lof[i] = acc / (static_cast<double>(size[i]) * lrd[i]);
    }
    return lof;
}

std::vector<double> standardize(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sd > 0.0 ? (v[i] - mean) / sd : 0.0;
    return out;
}

}  // namespace

std::vector<double> lof_scores(std::span<const Point2> points, std::size_t r) {
    if (r < 1 || r >= points.size()) throw InvalidArgument("LOF needs 1 <= r < number of points");
    return lof_from_neighbors(sorted_neighbors(points), r);
}

double LofStatistic::statistic() const {
    return scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
}

LofStatistic lof_statistic(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 3) throw InvalidArgument("LOF statistic needs at least 3 points");

    std::vector<double> index(n);
    std::iota(index.begin(), index.end(), 1.0);
    const auto t = standardize(index);
    const auto x = standardize(series);
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {t[i], x[i]};

    LofStatistic out;
    out.r_max = std::min(kLofMaxR, n - 1);
    out.r_min = std::min(kLofMinR, out.r_max);
    out.clipped = out.r_max < kLofMaxR;
    out.scores.assign(n, 0.0);
    const auto nb = sorted_neighbors(pts);
    for (std::size_t r = out.r_min; r <= out.r_max; ++r) {
        const auto lof = lof_from_neighbors(nb, r);
        for (std::size_t i = 0; i < n; ++i) out.scores[i] = std::max(out.scores[i], lof[i]);
    }
    return out;
}

}  // namespace hmminf
