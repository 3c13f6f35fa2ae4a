#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "hmminf/forward_backward.hpp"
#include "hmminf/rng.hpp"
#include "hmminf/training.hpp"

namespace hmminf {

namespace {

constexpr double kVarianceFloor = 1e-8;
constexpr double kMinStateWeight = 1e-12;
constexpr double kInitialEta = 0.1;

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

Moments moments(std::span<const double> x) {
    Moments out;
    for (double v : x) out.mean += v;
    out.mean /= static_cast<double>(x.size());
    for (double v : x) out.sd += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(out.sd / static_cast<double>(x.size()));
    return out;
}

Matrix initial_transition(const EmConfig& cfg) {
    return tied_transition(cfg.num_states, kInitialEta);
}

HmmModel initial_model(const ObservationSequence& obs, const EmConfig& cfg, std::size_t restart) {
    const std::size_t m = cfg.num_states;
    Rng rng = make_rng(cfg.seed, {0x494E4954ULL, restart});
    std::vector<double> initial(m, 1.0 / static_cast<double>(m));

    if (cfg.discrete_symbols > 0) {
        // Uniform rows perturbed by up to +-25 %.
        std::uniform_real_distribution<double> jitter(0.75, 1.25);
        Matrix table(m, cfg.discrete_symbols);
        for (std::size_t s = 0; s < m; ++s) {
            double z = 0.0;
            for (double& v : table.row(s)) z += (v = jitter(rng));
            for (double& v : table.row(s)) v /= z;
        }
        return make_model(std::move(initial), initial_transition(cfg), DiscreteEmission{std::move(table)});
    }

    const Moments mom = moments(obs.values);
    const double sd = std::max(mom.sd, std::sqrt(kVarianceFloor));
    std::vector<double> means;
    std::normal_distribution<double> noise(0.0, 1.0);
    if (cfg.init == InitStrategy::KMeans) {
        means = kmeans_1d(obs.values, m, rng()).means;
        if (restart > 0)
            for (double& mu : means) mu += 0.25 * sd * noise(rng);
    } else {
        std::vector<double> sorted = obs.values;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t s = 0; s < m; ++s) {
            const double q = (static_cast<double>(s) + 0.5) / static_cast<double>(m);
            const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
            means.push_back(sorted[idx] + 0.1 * sd * noise(rng));
        }
    }
    EmissionModel emission = cfg.homoscedastic ? EmissionModel(GaussianHomoscedastic{means, sd})
                                               : EmissionModel(GaussianGeneral{means, std::vector<double>(m, sd)});
    return make_model(std::move(initial), initial_transition(cfg), std::move(emission));
}

struct Degenerate {};

HmmModel m_step(const HmmModel& model, const ForwardBackward& fb, const ObservationSequence& obs, const EmConfig& cfg) {
    const std::size_t n = fb.size();
    const std::size_t m = fb.num_states();
    const Matrix post = posterior_marginals(fb);

    std::vector<double> weight(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < m; ++s) weight[s] += post(i, s);
    for (double w : weight)
        if (w < kMinStateWeight) throw Degenerate{};

    // Expected transition counts.
    Matrix counts(m, m);
    Matrix xi(m, m);
    std::vector<double> emit(m);
    for (std::size_t i = 1; i < n; ++i) {
        const double mx = row_max(fb.log_emission.row(i));
        for (std::size_t s = 0; s < m; ++s) emit[s] = std::exp(fb.log_emission(i, s) - mx);
        double z = 0.0;
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t s = 0; s < m; ++s) {
                xi(r, s) = fb.fwd(i - 1, r) * model.transition(r, s) * emit[s] * fb.bwd(i, s);
                z += xi(r, s);
            }
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t s = 0; s < m; ++s) counts(r, s) += xi(r, s) / z;
    }

    Matrix transition(m, m);
    if (cfg.tie_transitions) {
        double off = 0.0;
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t s = 0; s < m; ++s)
                if (r != s) off += counts(r, s);
        const double eta = n > 1 ? off / static_cast<double>(n - 1) : 0.0;
        transition = tied_transition(m, eta);
    } else {
        for (std::size_t r = 0; r < m; ++r) {
            double z = 0.0;
            for (std::size_t s = 0; s < m; ++s) z += counts(r, s);
            for (std::size_t s = 0; s < m; ++s)
                transition(r, s) = z > 0.0 ? counts(r, s) / z : model.transition(r, s);
        }
    }

    std::vector<double> initial(post.row(0).begin(), post.row(0).end());
    if (cfg.uniform_initial) std::fill(initial.begin(), initial.end(), 1.0);

    EmissionModel emission;
    if (cfg.discrete_symbols > 0) {
        Matrix table(m, cfg.discrete_symbols);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < m; ++s) table(s, static_cast<std::size_t>(obs.values[i])) += post(i, s);
        for (std::size_t s = 0; s < m; ++s)
            for (double& v : table.row(s)) v /= weight[s];
        emission = DiscreteEmission{std::move(table)};
    } else {
        std::vector<double> means(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < m; ++s) means[s] += post(i, s) * obs.values[i];
        for (std::size_t s = 0; s < m; ++s) means[s] /= weight[s];
        std::vector<double> ss(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < m; ++s) {
                const double d = obs.values[i] - means[s];
                ss[s] += post(i, s) * d * d;
            }
        if (cfg.homoscedastic) {
            const double var = std::accumulate(ss.begin(), ss.end(), 0.0) / static_cast<double>(n);
            emission = GaussianHomoscedastic{std::move(means), std::sqrt(std::max(var, kVarianceFloor))};
        } else {
            std::vector<double> sigmas(m);
            for (std::size_t s = 0; s < m; ++s) sigmas[s] = std::sqrt(std::max(ss[s] / weight[s], kVarianceFloor));
            emission = GaussianGeneral{std::move(means), std::move(sigmas)};
        }
    }

    // Renormalize against rounding so validation at 1e-12 always holds.
    auto renorm = [](std::span<double> row) {
        const double z = std::accumulate(row.begin(), row.end(), 0.0);
        for (double& v : row) v /= z;
    };
    renorm(initial);
    for (std::size_t r = 0; r < m; ++r) renorm(transition.row(r));
    if (auto* d = std::get_if<DiscreteEmission>(&emission))
        for (std::size_t s = 0; s < m; ++s) renorm(d->table.row(s));
    return make_model(std::move(initial), std::move(transition), std::move(emission));
}

void check_observations(const ObservationSequence& obs, const EmConfig& cfg) {
    if (obs.size() <= cfg.num_states) throw InvalidArgument("EM needs more observations than states");
    for (double v : obs.values) {
        if (!std::isfinite(v)) throw InvalidArgument("non-finite observation");
        if (cfg.discrete_symbols > 0 &&
            (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(cfg.discrete_symbols)))
            throw InvalidArgument("observation is not a valid symbol");
    }
}

}  // namespace

Matrix tied_transition(std::size_t m, double eta) {
    Matrix t(m, m);
    if (m == 1) {
        t(0, 0) = 1.0;
        return t;
    }
    eta = std::clamp(eta, 0.0, 1.0);
    const double off = eta / static_cast<double>(m - 1);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t s = 0; s < m; ++s) t(r, s) = r == s ? 1.0 - eta : off;
    return t;
}

double tied_rate(const Matrix& transition) {
    return transition.rows() > 1 ? 1.0 - transition(0, 0) : 0.0;
}

void validate(const EmConfig& cfg) {
    if (cfg.num_states < 1) throw InvalidArgument("EM needs at least one state");
    if (!(cfg.tolerance > 0.0)) throw InvalidArgument("EM tolerance must be positive");
    if (cfg.num_restarts < 1) throw InvalidArgument("EM needs at least one restart");
    if (cfg.max_iters < 1) throw InvalidArgument("EM needs at least one iteration");
}

EmResult em_run(const ObservationSequence& obs, HmmModel start, const EmConfig& cfg) {
    validate(cfg);
    check_observations(obs, cfg);
    validate(start);

    EmResult out;
    out.model = std::move(start);
    ForwardBackward fb = forward_backward(out.model, obs);
    out.log_likelihood.push_back(fb.log_evidence);
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        HmmModel next;
        try {
            next = m_step(out.model, fb, obs, cfg);
        } catch (const Degenerate&) {
            throw EmDegenerate("EM degenerate: a state lost all posterior weight");
        }
        fb = forward_backward(next, obs);
        out.model = std::move(next);
        const double prev = out.log_likelihood.back();
        out.log_likelihood.push_back(fb.log_evidence);
        if (std::abs(fb.log_evidence - prev) <= cfg.tolerance * std::abs(fb.log_evidence)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

EmResult em_fit(const ObservationSequence& obs, const EmConfig& cfg) {
    validate(cfg);
    check_observations(obs, cfg);

    std::vector<std::optional<EmResult>> runs(cfg.num_restarts);
    std::vector<RestartSummary> summary(cfg.num_restarts);
    auto work = [&](std::size_t r) {
        summary[r].index = r;
        try {
            EmResult run = em_run(obs, initial_model(obs, cfg, r), cfg);
            summary[r].log_likelihood = run.log_likelihood.back();
            summary[r].iterations = run.iterations();
            summary[r].converged = run.converged;
            runs[r] = std::move(run);
        } catch (const NumericError&) {
            summary[r].degenerate = true;
            summary[r].log_likelihood = -std::numeric_limits<double>::infinity();
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, cfg.num_restarts);
    if (workers == 1) {
        for (std::size_t r = 0; r < cfg.num_restarts; ++r) work(r);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t r = w; r < cfg.num_restarts; r += workers) work(r);
            });
    }

    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < cfg.num_restarts; ++r)
        if (runs[r] && (!best || summary[r].log_likelihood > summary[*best].log_likelihood)) best = r;
    if (!best)
        throw EmDegenerate("EM degenerate in all " + std::to_string(cfg.num_restarts) + " restarts");

    EmResult out = std::move(*runs[*best]);
    out.best_restart = *best;
    out.restarts = std::move(summary);
    return out;
}

}  // namespace hmminf
