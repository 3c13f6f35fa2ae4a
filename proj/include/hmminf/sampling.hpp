#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hmminf/model.hpp"
#include "hmminf/rng.hpp"

namespace hmminf {

struct SampledSequence {
    std::vector<std::size_t> states;
    ObservationSequence observations;
};

/// Ancestral sampling of (S_{1:n}, X_{1:n}); deterministic given `seed`.
SampledSequence sample(const HmmModel& model, std::size_t n, std::uint64_t seed);

SampledSequence sample(const HmmModel& model, std::size_t n, Rng& rng);

}  // namespace hmminf
