#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hmminf/error.hpp"
#include "hmminf/model.hpp"

namespace hmminf {

/// Every EM restart ended in a degenerate state (a state with no posterior weight).
class EmDegenerate : public NumericError {
public:
    using NumericError::NumericError;
};

struct KMeansResult {
    std::vector<std::size_t> assignments;
    std::vector<double> means;  // ascending
};

/// Lloyd's algorithm on scalars with k-means++ seeding. Clusters are
/// relabeled so that means ascend. Throws InvalidArgument when k exceeds the
/// number of distinct values.
KMeansResult kmeans_1d(std::span<const double> values, std::size_t k, std::uint64_t seed);

enum class InitStrategy { KMeans, PerturbedQuantiles };

struct EmConfig {
    std::size_t num_states = 3;
    std::size_t max_iters = 500;
    /// Stop when |delta log-likelihood| <= tolerance * |log-likelihood|.
    double tolerance = 1e-8;
    std::size_t num_restarts = 20;
    std::uint64_t seed = 1;
    /// alpha(i, i) = 1 - eta, alpha(i, j) = eta / (m - 1).
    bool tie_transitions = false;
    /// One sigma shared by all states (Gaussian emissions).
    bool homoscedastic = true;
    /// Keep gamma uniform instead of re-estimating it from the first posterior.
    bool uniform_initial = false;
    InitStrategy init = InitStrategy::KMeans;
    /// 0 selects Gaussian emissions; otherwise categorical over this many symbols.
    std::size_t discrete_symbols = 0;
    /// Worker threads for restarts; results do not depend on it.
    std::size_t threads = 1;
};

void validate(const EmConfig& cfg);

struct RestartSummary {
    std::size_t index = 0;
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool degenerate = false;
};

struct EmResult {
    HmmModel model;
    /// Log-likelihood of the initial model followed by one entry per iteration.
    std::vector<double> log_likelihood;
    bool converged = false;
    std::size_t best_restart = 0;
    std::vector<RestartSummary> restarts;

    std::size_t iterations() const noexcept { return log_likelihood.empty() ? 0 : log_likelihood.size() - 1; }
};

/// Baum-Welch with optional tied transitions and shared variance; best of
/// `num_restarts` runs by final log-likelihood.
EmResult em_fit(const ObservationSequence& obs, const EmConfig& cfg);

/// Single EM run from a given starting model (used by em_fit and tests).
EmResult em_run(const ObservationSequence& obs, HmmModel start, const EmConfig& cfg);

/// Tied transition matrix with stay probability 1 - eta.
Matrix tied_transition(std::size_t m, double eta);

/// Off-diagonal mass of row 0 of a tied matrix (eta); 0 for m == 1.
double tied_rate(const Matrix& transition);

}  // namespace hmminf
