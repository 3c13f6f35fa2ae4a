#include "hmminf/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "hmminf/error.hpp"

namespace hmminf {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(std::span<const double> p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(what + " has a negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kStochasticTol)
        throw InvalidArgument(what + " does not sum to 1 (sum = " + std::to_string(sum) + ")");
}

double gaussian_log_density(double x, double mean, double sigma) {
    const double z = (x - mean) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

std::size_t symbol_index(const DiscreteEmission& e, double x) {
    if (!(x >= 0.0) || x != std::floor(x) || x >= static_cast<double>(e.symbols()))
        throw InvalidArgument("symbol " + std::to_string(x) + " outside [0, " + std::to_string(e.symbols()) + ")");
    return static_cast<std::size_t>(x);
}

struct EmissionChecker {
    std::size_t m;

    void operator()(const DiscreteEmission& e) const {
        if (e.table.rows() != m) throw InvalidArgument("emission table row count differs from number of states");
        if (e.table.cols() == 0) throw InvalidArgument("emission table has no symbols");
        for (std::size_t s = 0; s < m; ++s) check_distribution(e.table.row(s), "emission row " + std::to_string(s));
    }
    void operator()(const GaussianHomoscedastic& e) const {
        if (e.means.size() != m) throw InvalidArgument("number of means differs from number of states");
        if (!(e.sigma > 0.0) || !std::isfinite(e.sigma)) throw InvalidArgument("sigma must be positive");
        for (double mu : e.means)
            if (!std::isfinite(mu)) throw InvalidArgument("non-finite emission mean");
    }
    void operator()(const GaussianGeneral& e) const {
        if (e.means.size() != m || e.sigmas.size() != m)
            throw InvalidArgument("number of means/sigmas differs from number of states");
        for (double s : e.sigmas)
            if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("sigma must be positive");
        for (double mu : e.means)
            if (!std::isfinite(mu)) throw InvalidArgument("non-finite emission mean");
    }
};

}  // namespace

void validate(const HmmModel& model) {
    const std::size_t m = model.num_states();
    if (m == 0) throw InvalidArgument("model needs at least one state");
    check_distribution(model.initial, "initial distribution");
    if (model.transition.rows() != m || model.transition.cols() != m)
        throw InvalidArgument("transition matrix must be m x m");
    for (std::size_t r = 0; r < m; ++r) check_distribution(model.transition.row(r), "transition row " + std::to_string(r));
    std::visit(EmissionChecker{m}, model.emission);
}

HmmModel make_model(std::vector<double> initial, Matrix transition, EmissionModel emission) {
    HmmModel model{std::move(initial), std::move(transition), std::move(emission)};
    validate(model);
    return model;
}

ObservationSequence ObservationSequence::from_values(std::vector<double> values) {
    ObservationSequence obs;
    obs.labels.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) obs.labels.push_back(std::to_string(i + 1));
    obs.values = std::move(values);
    return obs;
}

double log_emission_density(const HmmModel& model, std::size_t state, double x) {
    if (state >= model.num_states()) throw InvalidArgument("state index out of range");
    return std::visit(
        [&](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, DiscreteEmission>) {
                const double p = e.table(state, symbol_index(e, x));
                return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
            } else if constexpr (std::is_same_v<T, GaussianHomoscedastic>) {
                return gaussian_log_density(x, e.means[state], e.sigma);
            } else {
                return gaussian_log_density(x, e.means[state], e.sigmas[state]);
            }
        },
        model.emission);
}

double emission_density(const HmmModel& model, std::size_t state, double x) {
    if (const auto* d = std::get_if<DiscreteEmission>(&model.emission)) {
        if (state >= model.num_states()) throw InvalidArgument("state index out of range");
        return d->table(state, symbol_index(*d, x));
    }
    return std::exp(log_emission_density(model, state, x));
}

Matrix log_emission_matrix(const HmmModel& model, std::span<const double> values) {
    const std::size_t m = model.num_states();
    Matrix out(values.size(), m);
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t s = 0; s < m; ++s) out(i, s) = log_emission_density(model, s, values[i]);
    return out;
}

std::vector<double> emission_means(const EmissionModel& emission) {
    if (const auto* g = std::get_if<GaussianHomoscedastic>(&emission)) return g->means;
    if (const auto* g = std::get_if<GaussianGeneral>(&emission)) return g->means;
    return {};
}

HmmModel canonicalize(const HmmModel& model) {
    const std::vector<double> means = emission_means(model.emission);
    if (means.empty()) return model;
    const std::size_t m = model.num_states();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });

    HmmModel out = model;
    for (std::size_t a = 0; a < m; ++a) {
        out.initial[a] = model.initial[order[a]];
        for (std::size_t b = 0; b < m; ++b) out.transition(a, b) = model.transition(order[a], order[b]);
    }
    std::visit(
        [&](auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, GaussianHomoscedastic>) {
                for (std::size_t a = 0; a < m; ++a) e.means[a] = means[order[a]];
            } else if constexpr (std::is_same_v<T, GaussianGeneral>) {
                const auto& src = std::get<GaussianGeneral>(model.emission);
                for (std::size_t a = 0; a < m; ++a) {
                    e.means[a] = src.means[order[a]];
                    e.sigmas[a] = src.sigmas[order[a]];
                }
            }
        },
        out.emission);
    return out;
}

}  // namespace hmminf
