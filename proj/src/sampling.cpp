#include "hmminf/sampling.hpp"

#include <span>

#include "hmminf/error.hpp"

namespace hmminf {

namespace {

std::size_t draw_categorical(std::span<const double> p, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) last_positive = k;
        acc += p[k];
        if (u < acc && p[k] > 0.0) return k;
    }
    return last_positive;
}

double draw_emission(const HmmModel& model, std::size_t s, Rng& rng) {
    return std::visit(
        [&](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, DiscreteEmission>) {
                return static_cast<double>(draw_categorical(e.table.row(s), rng));
            } else if constexpr (std::is_same_v<T, GaussianHomoscedastic>) {
                return std::normal_distribution<double>(e.means[s], e.sigma)(rng);
            } else {
                return std::normal_distribution<double>(e.means[s], e.sigmas[s])(rng);
            }
        },
        model.emission);
}

}  // namespace

SampledSequence sample(const HmmModel& model, std::size_t n, Rng& rng) {
    if (n == 0) throw InvalidArgument("sample length must be at least 1");
    SampledSequence out;
    out.states.reserve(n);
    std::vector<double> values;
    values.reserve(n);
    std::size_t s = draw_categorical(model.initial, rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) s = draw_categorical(model.transition.row(s), rng);
        out.states.push_back(s);
        values.push_back(draw_emission(model, s, rng));
    }
    out.observations = ObservationSequence::from_values(std::move(values));
    return out;
}

SampledSequence sample(const HmmModel& model, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(model, n, rng);
}

}  // namespace hmminf
