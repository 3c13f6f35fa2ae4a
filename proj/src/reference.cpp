#include "hmminf/reference.hpp"

#include <cmath>
#include <limits>

#include "hmminf/error.hpp"
#include "hmminf/forward_backward.hpp"

namespace hmminf::reference {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

// Calls fn(path, log_weight) for each of the m^n hidden paths.
template <class Fn>
void for_each_path(const HmmModel& model, const Matrix& log_emission, Fn&& fn) {
    const std::size_t n = log_emission.rows();
    const std::size_t m = model.num_states();
    double total = 1.0;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(m);
    if (n == 0 || total > static_cast<double>(kMaxPaths)) throw InvalidArgument("too many hidden paths to enumerate");

    std::vector<std::size_t> path(n, 0);
    while (true) {
        double lw = safe_log(model.initial[path[0]]) + log_emission(0, path[0]);
        for (std::size_t i = 1; i < n; ++i)
            lw += safe_log(model.transition(path[i - 1], path[i])) + log_emission(i, path[i]);
        fn(path, lw);

        std::size_t i = 0;
        while (i < n && ++path[i] == m) path[i++] = 0;
        if (i == n) break;
    }
}

std::vector<double> path_log_weights(const HmmModel& model, const Matrix& log_emission) {
    std::vector<double> w;
    for_each_path(model, log_emission, [&](const std::vector<std::size_t>&, double lw) { w.push_back(lw); });
    return w;
}

}  // namespace

double enumerate_log_evidence(const HmmModel& model, const Matrix& log_emission) {
    return log_sum_exp(path_log_weights(model, log_emission));
}

Matrix enumerate_posterior_marginals(const HmmModel& model, const Matrix& log_emission) {
    const double log_z = enumerate_log_evidence(model, log_emission);
    if (!std::isfinite(log_z)) throw ImpossibleEvidence("impossible evidence");
    Matrix out(log_emission.rows(), model.num_states());
    for_each_path(model, log_emission, [&](const std::vector<std::size_t>& path, double lw) {
        const double p = std::exp(lw - log_z);
        for (std::size_t i = 0; i < path.size(); ++i) out(i, path[i]) += p;
    });
    return out;
}

double enumerate_path_kld(const HmmModel& model, const ObservationSequence& obs, std::size_t first, std::size_t count) {
    const Matrix full = log_emission_matrix(model, obs.values);
    if (count == 0 || first + count > full.rows()) throw InvalidArgument("window out of range");
    Matrix reduced = full;
    for (std::size_t i = first; i < first + count; ++i)
        for (double& v : reduced.row(i)) v = 0.0;

    const std::vector<double> lw = path_log_weights(model, full);
    const std::vector<double> lw_star = path_log_weights(model, reduced);
    const double log_z = log_sum_exp(lw);
    const double log_z_star = log_sum_exp(lw_star);
    if (!std::isfinite(log_z) || !std::isfinite(log_z_star)) throw ImpossibleEvidence("impossible evidence");

    double k = 0.0;
    for (std::size_t p = 0; p < lw.size(); ++p) {
        if (lw_star[p] == kNegInf) continue;
        if (lw[p] == kNegInf) return std::numeric_limits<double>::infinity();
        const double log_ratio = (lw_star[p] - log_z_star) - (lw[p] - log_z);
        k += std::exp(lw_star[p] - log_z_star) * log_ratio;
    }
    return k;
}

std::vector<double> enumerate_window_influence(const HmmModel& model, const ObservationSequence& obs, std::size_t h) {
    if (h == 0 || h > obs.size()) throw InvalidArgument("window length must lie in [1, n]");
    std::vector<double> k(obs.size() - h + 1);
    for (std::size_t j = 0; j < k.size(); ++j) k[j] = enumerate_path_kld(model, obs, j, h);
    return k;
}

std::vector<double> enumerate_symbol_sum(const HmmModel& model, const ObservationSequence& obs, std::size_t j) {
    const auto* disc = std::get_if<DiscreteEmission>(&model.emission);
    if (disc == nullptr) throw InvalidArgument("symbol summation needs a discrete emission model");
    if (j >= obs.size()) throw InvalidArgument("index out of range");
    std::vector<double> out(model.num_states(), 0.0);
    ObservationSequence variant = obs;
    for (std::size_t y = 0; y < disc->symbols(); ++y) {
        variant.values[j] = static_cast<double>(y);
        const Matrix le = log_emission_matrix(model, variant.values);
        for_each_path(model, le, [&](const std::vector<std::size_t>& path, double lw) { out[path[j]] += std::exp(lw); });
    }
    return out;
}

Matrix chain_marginals(const HmmModel& model, std::size_t n) {
    const std::size_t m = model.num_states();
    Matrix out(n, m);
    if (n == 0) return out;
    std::copy(model.initial.begin(), model.initial.end(), out.row(0).begin());
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t s = 0; s < m; ++s) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) acc += out(i - 1, r) * model.transition(r, s);
            out(i, s) = acc;
        }
    return out;
}

InfluenceProfile kld_influence_naive(const HmmModel& model, const ObservationSequence& obs) {
    const Matrix log_emission = log_emission_matrix(model, obs.values);
    const ForwardBackward full = forward_backward(model, log_emission);
    const std::size_t n = obs.size();
    const std::size_t m = model.num_states();

    InfluenceProfile out;
    out.k.resize(n);
    out.marginals = posterior_marginals(full);
    out.loo_marginals = Matrix(n, m);
    out.labels = obs.labels;
    for (std::size_t j = 0; j < n; ++j) {
        Matrix reduced = log_emission;
        for (double& v : reduced.row(j)) v = 0.0;
        const ForwardBackward fb = forward_backward(model, std::move(reduced));
        const std::vector<double> p_star = posterior_marginal(fb, j);
        std::copy(p_star.begin(), p_star.end(), out.loo_marginals.row(j).begin());
        out.k[j] = relative_entropy(p_star, out.marginals.row(j));
    }
    return out;
}

}  // namespace hmminf::reference
