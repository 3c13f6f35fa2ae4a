#include <gtest/gtest.h>

#include <cmath>

#include "hmminf/sampling.hpp"
#include "test_support.hpp"

namespace hmminf::test {
namespace {

TEST(Sample, IdentityTransitionKeepsInitialState) {
    const auto model = make_model({0.0, 1.0, 0.0}, Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}),
                                  GaussianHomoscedastic{{0, 1, 2}, 0.5});
    const auto out = sample(model, 200, 99);
    for (std::size_t s : out.states) EXPECT_EQ(s, 1u);
}

TEST(Sample, DeterministicGivenSeed) {
    Rng rng(3);
    const auto model = random_gaussian_model(3, rng);
    const auto a = sample(model, 500, 1234);
    const auto b = sample(model, 500, 1234);
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.observations.values, b.observations.values);
    EXPECT_NE(a.observations.values, sample(model, 500, 1235).observations.values);
}

TEST(Sample, TransitionFrequenciesWithinThreeStandardErrors) {
    const auto model = make_model({0.5, 0.5}, Matrix::from_rows({{0.8, 0.2}, {0.35, 0.65}}),
                                  DiscreteEmission{Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})});
    const auto out = sample(model, 100000, 42);
    double count[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 1; i < out.states.size(); ++i) count[out.states[i - 1]][out.states[i]] += 1;
    for (std::size_t r = 0; r < 2; ++r) {
        const double row = count[r][0] + count[r][1];
        for (std::size_t s = 0; s < 2; ++s) {
            const double p = model.transition(r, s);
            const double se = std::sqrt(p * (1 - p) / row);
            EXPECT_NEAR(count[r][s] / row, p, 3 * se);
        }
    }
}

TEST(Sample, DiscreteSymbolsInRange) {
    Rng rng(5);
    const auto model = random_discrete_model(2, 5, rng);
    for (double x : sample(model, 1000, 8).observations.values) {
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 5.0);
        EXPECT_EQ(x, std::floor(x));
    }
}

}  // namespace
}  // namespace hmminf::test
