#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hmminf/training.hpp"

namespace hmminf {

// ---------------------------------------------------------------------------
// Z-value
// ---------------------------------------------------------------------------

struct ZScores {
    std::vector<double> z;
    KMeansResult clusters;
    /// Some cluster had zero spread; its sigma was floored at 1e-12.
    bool degenerate = false;

    double statistic() const;  // max |z|
};

/// Residual of each value relative to the mean and population standard
/// deviation of its k-means cluster.
ZScores z_value_scores(std::span<const double> values, std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Local outlier factor
// ---------------------------------------------------------------------------

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// LOF with neighborhood size r (Euclidean). The r-distance neighborhood
/// includes every point tied with the r-th nearest one.
std::vector<double> lof_scores(std::span<const Point2> points, std::size_t r);

struct LofStatistic {
    std::vector<double> scores;  // per point, max over the r range
    std::size_t r_min = 10;
    std::size_t r_max = 20;
    bool clipped = false;  // r range shortened because the series is short

    double statistic() const;
};

/// Standardizes the index axis and the value axis, then takes for each point
/// the largest LOF over r in {10..20} (clipped to r < n for short series).
LofStatistic lof_statistic(std::span<const double> series);

// ---------------------------------------------------------------------------
// ROC
// ---------------------------------------------------------------------------

struct RocResult {
    double auc = 0.5;
    double level = 0.95;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    /// (score, is_h1) ascending by score.
    std::vector<std::pair<double, bool>> ranked;
};

/// Mann-Whitney estimate of P(h1 > h0) with ties counted 1/2.
double auc_mann_whitney(std::span<const double> scores_h1, std::span<const double> scores_h0);

/// AUC with a percentile bootstrap interval (both samples resampled).
RocResult empirical_auc(std::span<const double> scores_h1, std::span<const double> scores_h0,
                        std::size_t bootstrap = 2000, std::uint64_t seed = 0x5EED, double level = 0.95);

// ---------------------------------------------------------------------------
// Semi-parametric simulation
// ---------------------------------------------------------------------------

enum class Hypothesis { H0, H1 };

const char* to_string(Hypothesis h);
Hypothesis parse_hypothesis(const std::string& s);

struct SimulationConfig {
    std::vector<double> source;
    std::size_t n = 53;
    double contamination = 0.05;
    double delta = 3.0;
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    std::size_t num_states = 3;
    std::size_t em_restarts = 5;
    std::size_t max_resamples = 50;
};

void validate(const SimulationConfig& cfg);

struct ScoredReplicate {
    Hypothesis label = Hypothesis::H0;
    std::size_t replicate = 0;
    double delta = 0.0;  // 0 for H0
    double t_kld = 0.0;
    double s_z = 0.0;
    double l_lof = 0.0;
    std::vector<std::size_t> outliers;  // positions in the subsample
    std::size_t resamples = 0;          // redraws after degenerate EM fits
    bool z_degenerate = false;
    bool lof_clipped = false;
};

/// Draws the subsample (order preserved) and, under H1, contaminates each
/// point with probability `contamination` by N(0, delta^2) noise. The random
/// stream depends on (seed, hypothesis, replicate) only, so the noise draws
/// are shared across values of delta.
ObservationSequence draw_replicate(const SimulationConfig& cfg, Hypothesis hypothesis, std::size_t replicate,
                                   std::size_t attempt, std::vector<std::size_t>* outliers = nullptr);

/// One replicate: per-replicate EM fit, then the three global statistics.
ScoredReplicate simulate(const SimulationConfig& cfg, Hypothesis hypothesis, std::size_t replicate);

struct BenchmarkConfig {
    SimulationConfig simulation;
    std::vector<double> deltas{0.5, 2.0, 3.0};
    std::size_t bootstrap = 2000;
    std::size_t threads = 1;
};

struct BenchmarkRow {
    std::string method;
    double delta = 0.0;
    RocResult roc;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    std::vector<ScoredReplicate> replicates;
};

/// H0 replicates are computed once and shared by every delta.
/// `done` holds previously computed replicates that are reused as-is.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, std::span<const ScoredReplicate> done = {});

/// AUC table (methods kld, z, lof for each delta) from scored replicates.
std::vector<BenchmarkRow> evaluate_replicates(std::span<const ScoredReplicate> replicates, std::size_t bootstrap,
                                              std::uint64_t seed);

/// TSV: method, delta, auc, ci_lo, ci_hi, replicates, seed.
void write_benchmark_tsv(std::ostream& os, std::span<const BenchmarkRow> rows);

std::string to_json_line(const ScoredReplicate& r);
ScoredReplicate replicate_from_json(const std::string& line);

}  // namespace hmminf
