#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hmminf/forward_backward.hpp"
#include "hmminf/matrix.hpp"
#include "hmminf/model.hpp"

namespace hmminf {

/// Forward quantities with the i-th emission factor left out:
/// F*_1 = gamma, F*_i(s) = sum_r F_{i-1}(r) alpha(r, s).
/// F*_i(s) = fstar(i, s) * exp(log_scale[i]); row i shares the scale of F_{i-1}.
struct StarForward {
    Matrix fstar;
    std::vector<double> log_scale;
};

StarForward forward_star(const HmmModel& model, const ForwardBackward& fb);

/// P(S_j = . | E_{-j}), proportional to F*_j(s) B_j(s).
std::vector<double> loo_marginal(const StarForward& star, const ForwardBackward& fb, std::size_t j);

/// Influence K_j (nats) of every observation on the hidden-path posterior.
struct InfluenceProfile {
    std::vector<double> k;
    Matrix loo_marginals;
    Matrix marginals;
    std::vector<std::string> labels;
};

/// Linear-time influence of all observations from one forward/backward pass.
InfluenceProfile kld_influence(const HmmModel& model, const ObservationSequence& obs);
InfluenceProfile kld_influence(const HmmModel& model, const ForwardBackward& fb);

/// KLD of the hidden-path posterior when the h consecutive observations
/// starting at index j are removed. Entry j covers j..j+h-1.
struct WindowInfluenceProfile {
    std::size_t h = 1;
    std::vector<double> k;
    std::vector<std::string> first_labels;
    std::vector<std::string> last_labels;
};

WindowInfluenceProfile windowed_influence(const HmmModel& model, const ObservationSequence& obs, std::size_t h);

/// Closed form of K_j evaluated literally on one index's forward, star-forward
/// and backward rows. Each row may carry an arbitrary positive scale.
double closed_form_kld(std::span<const double> fstar, std::span<const double> fwd, std::span<const double> bwd);

/// sum_s p(s) log(p(s) / q(s)) with 0 log(0/q) = 0 and p log(p/0) = +inf.
double relative_entropy(std::span<const double> p, std::span<const double> q);

/// TSV: label, K, p_loo_1..m, p_post_1..m.
void write_influence_tsv(std::ostream& os, const InfluenceProfile& profile);

/// TSV: first_label, last_label, K.
void write_window_influence_tsv(std::ostream& os, const WindowInfluenceProfile& profile);

/// TSV: label, p_post_1..m.
void write_marginals_tsv(std::ostream& os, const Matrix& marginals, std::span<const std::string> labels);

}  // namespace hmminf
