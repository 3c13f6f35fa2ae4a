#pragma once

// Slow reference computations: exhaustive path enumeration and the quadratic
// per-index rerun of forward/backward. They validate the linear-time engine
// and serve as the `naive` CLI engine.

#include <cstddef>
#include <vector>

#include "hmminf/influence.hpp"
#include "hmminf/matrix.hpp"
#include "hmminf/model.hpp"

namespace hmminf::reference {

/// Largest number of hidden paths the enumeration routines accept.
inline constexpr std::size_t kMaxPaths = std::size_t{1} << 24;

/// Log joint weight log P(S = path, X = x) summed over all m^n paths.
double enumerate_log_evidence(const HmmModel& model, const Matrix& log_emission);

/// P(S_j = . | E) by exhaustive enumeration.
Matrix enumerate_posterior_marginals(const HmmModel& model, const Matrix& log_emission);

/// KLD between P(S_{1:n} | E minus observations first..first+count-1) and
/// P(S_{1:n} | E), summed over every hidden path.
double enumerate_path_kld(const HmmModel& model, const ObservationSequence& obs, std::size_t first, std::size_t count);

/// Entry j: enumerate_path_kld(model, obs, j, h).
std::vector<double> enumerate_window_influence(const HmmModel& model, const ObservationSequence& obs, std::size_t h);

/// Discrete models: sum over symbols y of P(S_j = s, E with X_j replaced by y),
/// by enumeration; unnormalized.
std::vector<double> enumerate_symbol_sum(const HmmModel& model, const ObservationSequence& obs, std::size_t j);

/// Marginals of the prior chain (gamma, alpha): row i is gamma alpha^i.
Matrix chain_marginals(const HmmModel& model, std::size_t n);

/// O(n^2 m^2) influence: for every j the recursions are rerun with X_j
/// marginalized and the two marginals at j compared directly.
InfluenceProfile kld_influence_naive(const HmmModel& model, const ObservationSequence& obs);

}  // namespace hmminf::reference
