#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hmminf/matrix.hpp"
#include "hmminf/model.hpp"

namespace hmminf {

/// Scaled forward/backward quantities.
///
/// F_i(s) = fwd(i, s) * exp(log_scale_fwd[i]) and
/// B_i(s) = bwd(i, s) * exp(log_scale_bwd[i]). Forward rows sum to 1,
/// backward rows have max entry 1. `log_emission` is the n x m matrix of
/// log beta(s, x_i) the recursions were run on.
struct ForwardBackward {
    Matrix fwd;
    std::vector<double> log_scale_fwd;
    Matrix bwd;
    std::vector<double> log_scale_bwd;
    Matrix log_emission;
    double log_evidence = 0.0;

    std::size_t size() const noexcept { return fwd.rows(); }
    std::size_t num_states() const noexcept { return fwd.cols(); }
};

ForwardBackward forward_backward(const HmmModel& model, const ObservationSequence& obs);

/// Runs the recursions on precomputed log emissions. A row of zeros stands
/// for an observation that is marginalized out (beta == 1 for every state).
/// Throws ImpossibleEvidence when P(E) == 0.
ForwardBackward forward_backward(const HmmModel& model, Matrix log_emission);

/// Row j is P(S_j = . | E).
Matrix posterior_marginals(const ForwardBackward& fb);

std::vector<double> posterior_marginal(const ForwardBackward& fb, std::size_t j);

/// Per-index maximum of the log-emission row (-inf when the whole row is -inf).
double row_max(std::span<const double> row);

/// log(sum_k exp(v_k)), -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

}  // namespace hmminf
