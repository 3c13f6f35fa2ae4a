#include "hmminf/influence.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hmminf/error.hpp"

namespace hmminf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : -kInf; }

// KLD between the leave-out marginal at one index, proportional to
// fstar * bstar, and the full-evidence marginal, proportional to
// fstar * beta * bwd. Working with the star row on both sides uses the
// identity F_j(s) = F*_j(s) beta(s, x_j), so a vanishing emission factor
// never has to be represented in linear space.
double marginal_kld(std::span<const double> fstar, std::span<const double> bstar, std::span<const double> bwd,
                    std::span<const double> log_emit, std::vector<double>& scratch) {
    const std::size_t m = fstar.size();
    double z_star = 0.0;
    for (std::size_t s = 0; s < m; ++s) z_star += fstar[s] * bstar[s];
    if (!(z_star > 0.0)) throw ImpossibleEvidence("impossible leave-one-out evidence");

    scratch.resize(m);
    for (std::size_t s = 0; s < m; ++s) scratch[s] = safe_log(fstar[s]) + log_emit[s] + safe_log(bwd[s]);
    const double log_z = log_sum_exp(scratch);

    double k = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        const double w = fstar[s] * bstar[s];
        if (w == 0.0) continue;
        const double p = w / z_star;
        const double log_ratio = safe_log(bstar[s]) - log_emit[s] - safe_log(bwd[s]);
        if (log_ratio == kInf) return kInf;
        k += p * log_ratio;
    }
    k += log_z - std::log(z_star);
    // Gibbs' inequality; rounding can leave a tiny negative residue.
    return k < 0.0 && k > -1e-13 ? 0.0 : k;
}

void check_same_shape(const HmmModel& model, const ForwardBackward& fb) {
    if (fb.num_states() != model.num_states())
        throw InvalidArgument("forward/backward quantities do not match the model");
}

}  // namespace

double relative_entropy(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw InvalidArgument("distributions differ in length");
    double k = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
        if (p[s] == 0.0) continue;
        if (q[s] == 0.0) return kInf;
        k += p[s] * std::log(p[s] / q[s]);
    }
    return k;
}

double closed_form_kld(std::span<const double> fstar, std::span<const double> fwd, std::span<const double> bwd) {
    const std::size_t m = fstar.size();
    if (fwd.size() != m || bwd.size() != m) throw InvalidArgument("rows differ in length");
    double z_star = 0.0;
    double z = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        z_star += fstar[r] * bwd[r];
        z += fwd[r] * bwd[r];
    }
    double k = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        const double w = fstar[s] * bwd[s] / z_star;
        if (w == 0.0) continue;
        if (fwd[s] == 0.0) return kInf;
        k += w * std::log(fstar[s] / fwd[s] * (z / z_star));
    }
    return k;
}

StarForward forward_star(const HmmModel& model, const ForwardBackward& fb) {
    check_same_shape(model, fb);
    const std::size_t n = fb.size();
    const std::size_t m = fb.num_states();
    StarForward star{Matrix(n, m), std::vector<double>(n, 0.0)};
    std::copy(model.initial.begin(), model.initial.end(), star.fstar.row(0).begin());
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t s = 0; s < m; ++s) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) acc += fb.fwd(i - 1, r) * model.transition(r, s);
            star.fstar(i, s) = acc;
        }
        star.log_scale[i] = fb.log_scale_fwd[i - 1];
    }
    return star;
}

std::vector<double> loo_marginal(const StarForward& star, const ForwardBackward& fb, std::size_t j) {
    if (j >= fb.size()) throw InvalidArgument("index out of range");
    const std::size_t m = fb.num_states();
    std::vector<double> p(m);
    double z = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        p[s] = star.fstar(j, s) * fb.bwd(j, s);
        z += p[s];
    }
    if (!(z > 0.0)) throw ImpossibleEvidence("impossible leave-one-out evidence at observation " + std::to_string(j + 1));
    for (double& v : p) v /= z;
    return p;
}

InfluenceProfile kld_influence(const HmmModel& model, const ForwardBackward& fb) {
    const StarForward star = forward_star(model, fb);
    const std::size_t n = fb.size();
    const std::size_t m = fb.num_states();

    InfluenceProfile out;
    out.k.resize(n);
    out.loo_marginals = Matrix(n, m);
    out.marginals = posterior_marginals(fb);
    std::vector<double> scratch;
    for (std::size_t j = 0; j < n; ++j) {
        out.k[j] = marginal_kld(star.fstar.row(j), fb.bwd.row(j), fb.bwd.row(j), fb.log_emission.row(j), scratch);
        const auto p = loo_marginal(star, fb, j);
        std::copy(p.begin(), p.end(), out.loo_marginals.row(j).begin());
    }
    return out;
}

InfluenceProfile kld_influence(const HmmModel& model, const ObservationSequence& obs) {
    auto profile = kld_influence(model, forward_backward(model, obs));
    profile.labels = obs.labels;
    return profile;
}

WindowInfluenceProfile windowed_influence(const HmmModel& model, const ObservationSequence& obs, std::size_t h) {
    const std::size_t n = obs.size();
    if (h < 1 || h > n) throw InvalidArgument("window length must lie in [1, n]");
    const ForwardBackward fb = forward_backward(model, obs);
    const StarForward star = forward_star(model, fb);
    const std::size_t m = model.num_states();
    const Matrix& alpha = model.transition;

    WindowInfluenceProfile out;
    out.h = h;
    out.k.resize(n - h + 1);

    // bstar(t - j, .) is the emission-free backward quantity inside the window.
    Matrix bstar(h, m);
    std::vector<double> p_star(m), p_next(m), log_term(m), scratch;
    for (std::size_t j = 0; j + h <= n; ++j) {
        const std::size_t last = j + h - 1;
        std::copy(fb.bwd.row(last).begin(), fb.bwd.row(last).end(), bstar.row(h - 1).begin());
        for (std::size_t t = h - 1; t > 0; --t) {
            double mx = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
                double acc = 0.0;
                for (std::size_t s = 0; s < m; ++s) acc += alpha(r, s) * bstar(t, s);
                bstar(t - 1, r) = acc;
                mx = std::max(mx, acc);
            }
            for (double& v : bstar.row(t - 1)) v /= mx;
        }

        double k = marginal_kld(star.fstar.row(j), bstar.row(0), fb.bwd.row(j), fb.log_emission.row(j), scratch);

        double z = 0.0;
        for (std::size_t s = 0; s < m; ++s) {
            p_star[s] = star.fstar(j, s) * bstar(0, s);
            z += p_star[s];
        }
        for (double& v : p_star) v /= z;

        // Chain rule: expected KLD of successive transition kernels.
        for (std::size_t t = j; t < last && std::isfinite(k); ++t) {
            const auto b_next = bstar.row(t + 1 - j);
            const auto le_next = fb.log_emission.row(t + 1);
            const auto bwd_next = fb.bwd.row(t + 1);
            std::fill(p_next.begin(), p_next.end(), 0.0);
            for (std::size_t s = 0; s < m && std::isfinite(k); ++s) {
                double z_row = 0.0;
                for (std::size_t u = 0; u < m; ++u) {
                    z_row += alpha(s, u) * b_next[u];
                    log_term[u] = safe_log(alpha(s, u)) + le_next[u] + safe_log(bwd_next[u]);
                }
                if (p_star[s] == 0.0 || z_row == 0.0) continue;
                const double log_z_row = log_sum_exp(log_term);
                double row_kld = log_z_row - std::log(z_row);
                for (std::size_t u = 0; u < m; ++u) {
                    const double q = alpha(s, u) * b_next[u] / z_row;
                    if (q == 0.0) continue;
                    p_next[u] += p_star[s] * q;
                    const double log_ratio = safe_log(b_next[u]) - le_next[u] - safe_log(bwd_next[u]);
                    if (log_ratio == kInf) {
                        row_kld = kInf;
                        break;
                    }
                    row_kld += q * log_ratio;
                }
                k += p_star[s] * row_kld;
            }
            std::swap(p_star, p_next);
        }
        out.k[j] = k < 0.0 && k > -1e-13 ? 0.0 : k;
    }

    out.first_labels.reserve(out.k.size());
    out.last_labels.reserve(out.k.size());
    for (std::size_t j = 0; j < out.k.size(); ++j) {
        out.first_labels.push_back(j < obs.labels.size() ? obs.labels[j] : std::to_string(j + 1));
        const std::size_t last = j + h - 1;
        out.last_labels.push_back(last < obs.labels.size() ? obs.labels[last] : std::to_string(last + 1));
    }
    return out;
}

void write_influence_tsv(std::ostream& os, const InfluenceProfile& profile) {
    const std::size_t m = profile.marginals.cols();
    fmt::print(os, "label\tK");
    for (std::size_t s = 1; s <= m; ++s) fmt::print(os, "\tp_loo_{}", s);
    for (std::size_t s = 1; s <= m; ++s) fmt::print(os, "\tp_post_{}", s);
    fmt::print(os, "\n");
    for (std::size_t j = 0; j < profile.k.size(); ++j) {
        const std::string label = j < profile.labels.size() ? profile.labels[j] : std::to_string(j + 1);
        fmt::print(os, "{}\t{:.17g}", label, profile.k[j]);
        for (double v : profile.loo_marginals.row(j)) fmt::print(os, "\t{:.17g}", v);
        for (double v : profile.marginals.row(j)) fmt::print(os, "\t{:.17g}", v);
        fmt::print(os, "\n");
    }
}

void write_window_influence_tsv(std::ostream& os, const WindowInfluenceProfile& profile) {
    fmt::print(os, "first_label\tlast_label\tK\n");
    for (std::size_t j = 0; j < profile.k.size(); ++j)
        fmt::print(os, "{}\t{}\t{:.17g}\n", profile.first_labels[j], profile.last_labels[j], profile.k[j]);
}

void write_marginals_tsv(std::ostream& os, const Matrix& marginals, std::span<const std::string> labels) {
    fmt::print(os, "label");
    for (std::size_t s = 1; s <= marginals.cols(); ++s) fmt::print(os, "\tp_post_{}", s);
    fmt::print(os, "\n");
    for (std::size_t j = 0; j < marginals.rows(); ++j) {
        fmt::print(os, "{}", j < labels.size() ? labels[j] : std::to_string(j + 1));
        for (double v : marginals.row(j)) fmt::print(os, "\t{:.17g}", v);
        fmt::print(os, "\n");
    }
}

}  // namespace hmminf
