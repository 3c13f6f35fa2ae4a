#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hmminf/matrix.hpp"

namespace hmminf {

/// Categorical emissions: table(s, x) = P(X = x | S = s) over `symbols()` symbols.
struct DiscreteEmission {
    Matrix table;

    std::size_t symbols() const noexcept { return table.cols(); }
};

/// Gaussian emissions sharing one standard deviation across states.
struct GaussianHomoscedastic {
    std::vector<double> means;
    double sigma = 1.0;
};

/// Gaussian emissions with a standard deviation per state.
struct GaussianGeneral {
    std::vector<double> means;
    std::vector<double> sigmas;
};

using EmissionModel = std::variant<DiscreteEmission, GaussianHomoscedastic, GaussianGeneral>;

/// Homogeneous first-order HMM.
///
/// `transition(r, s)` is P(S_i = s | S_{i-1} = r); `initial[s]` is P(S_1 = s).
/// Construct through `make_model` (or call `validate`) so the stochastic
/// invariants are checked once.
struct HmmModel {
    std::vector<double> initial;
    Matrix transition;
    EmissionModel emission;

    std::size_t num_states() const noexcept { return initial.size(); }
    bool is_discrete() const noexcept { return std::holds_alternative<DiscreteEmission>(emission); }
};

/// Throws InvalidArgument when a stochastic invariant is broken
/// (tolerance 1e-12 on row sums, all sigmas > 0, matching dimensions).
void validate(const HmmModel& model);

HmmModel make_model(std::vector<double> initial, Matrix transition, EmissionModel emission);

/// Observed values with opaque labels. Discrete symbols are stored as
/// integral doubles.
struct ObservationSequence {
    std::vector<double> values;
    std::vector<std::string> labels;

    std::size_t size() const noexcept { return values.size(); }

    /// Labels "1".."n".
    static ObservationSequence from_values(std::vector<double> values);
};

/// beta(state, x). Gaussian densities may exceed 1.
double emission_density(const HmmModel& model, std::size_t state, double x);

/// log beta(state, x); -inf for zero-probability symbols.
double log_emission_density(const HmmModel& model, std::size_t state, double x);

/// n x m matrix of log beta(s, x_i). Validates symbols for discrete models.
Matrix log_emission_matrix(const HmmModel& model, std::span<const double> values);

/// Reorders states by ascending emission mean (Gaussian models only).
HmmModel canonicalize(const HmmModel& model);

/// Means of a Gaussian emission model, empty for discrete.
std::vector<double> emission_means(const EmissionModel& emission);

}  // namespace hmminf
