#include "hmminf/forward_backward.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hmminf/error.hpp"

namespace hmminf {

double row_max(std::span<const double> row) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : row) mx = std::max(mx, v);
    return mx;
}

double log_sum_exp(std::span<const double> v) {
    const double mx = row_max(v);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

ForwardBackward forward_backward(const HmmModel& model, const ObservationSequence& obs) {
    return forward_backward(model, log_emission_matrix(model, obs.values));
}

ForwardBackward forward_backward(const HmmModel& model, Matrix log_emission) {
    const std::size_t n = log_emission.rows();
    const std::size_t m = model.num_states();
    if (n == 0) throw InvalidArgument("observation sequence is empty");
    if (log_emission.cols() != m) throw InvalidArgument("log-emission matrix does not match the number of states");

    const Matrix& alpha = model.transition;

    // Emission factors rescaled by their per-index maximum.
    Matrix emit(n, m);
    std::vector<double> emit_shift(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double mx = row_max(log_emission.row(i));
        if (!std::isfinite(mx))
            throw ImpossibleEvidence("impossible evidence: observation " + std::to_string(i + 1) +
                                     " has zero probability under every state");
        emit_shift[i] = mx;
        for (std::size_t s = 0; s < m; ++s) emit(i, s) = std::exp(log_emission(i, s) - mx);
    }

    ForwardBackward fb;
    fb.fwd = Matrix(n, m);
    fb.bwd = Matrix(n, m);
    fb.log_scale_fwd.assign(n, 0.0);
    fb.log_scale_bwd.assign(n, 0.0);

    double prev_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = fb.fwd.row(i);
        double c = 0.0;
        for (std::size_t s = 0; s < m; ++s) {
            double pred;
            if (i == 0) {
                pred = model.initial[s];
            } else {
                pred = 0.0;
                for (std::size_t r = 0; r < m; ++r) pred += fb.fwd(i - 1, r) * alpha(r, s);
            }
            row[s] = pred * emit(i, s);
            c += row[s];
        }
        if (!(c > 0.0))
            throw ImpossibleEvidence("impossible evidence: forward probability vanishes at observation " +
                                     std::to_string(i + 1));
        for (double& v : row) v /= c;
        prev_scale += std::log(c) + emit_shift[i];
        fb.log_scale_fwd[i] = prev_scale;
    }
    fb.log_evidence = fb.log_scale_fwd[n - 1];

    for (double& v : fb.bwd.row(n - 1)) v = 1.0;
    for (std::size_t i = n - 1; i > 0; --i) {
        auto out = fb.bwd.row(i - 1);
        double d = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0;
            for (std::size_t s = 0; s < m; ++s) acc += alpha(r, s) * emit(i, s) * fb.bwd(i, s);
            out[r] = acc;
            d = std::max(d, acc);
        }
        if (!(d > 0.0))
            throw ImpossibleEvidence("impossible evidence: backward probability vanishes at observation " +
                                     std::to_string(i));
        for (double& v : out) v /= d;
        fb.log_scale_bwd[i - 1] = fb.log_scale_bwd[i] + emit_shift[i] + std::log(d);
    }

    fb.log_emission = std::move(log_emission);
    return fb;
}

std::vector<double> posterior_marginal(const ForwardBackward& fb, std::size_t j) {
    if (j >= fb.size()) throw InvalidArgument("index out of range");
    const std::size_t m = fb.num_states();
    std::vector<double> p(m);
    double z = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        p[s] = fb.fwd(j, s) * fb.bwd(j, s);
        z += p[s];
    }
    for (double& v : p) v /= z;
    return p;
}

Matrix posterior_marginals(const ForwardBackward& fb) {
    Matrix out(fb.size(), fb.num_states());
    for (std::size_t j = 0; j < fb.size(); ++j) {
        const auto p = posterior_marginal(fb, j);
        std::copy(p.begin(), p.end(), out.row(j).begin());
    }
    return out;
}

}  // namespace hmminf
