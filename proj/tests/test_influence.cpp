#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "hmminf/error.hpp"
#include "hmminf/influence.hpp"
#include "hmminf/reference.hpp"
#include "hmminf/sampling.hpp"
#include "test_support.hpp"

namespace hmminf::test {
namespace {

std::vector<double> normalized(std::vector<double> v) {
    double z = 0.0;
    for (double x : v) z += x;
    for (double& x : v) x /= z;
    return v;
}

TEST(ForwardStar, SingleStateIsConstantOne) {
    const auto model = make_model({1.0}, Matrix::from_rows({{1.0}}), GaussianHomoscedastic{{0.0}, 1.0});
    const auto obs = ObservationSequence::from_values({0.3, 1.2, -0.4, 2.0});
    const auto star = forward_star(model, forward_backward(model, obs));
    for (std::size_t i = 0; i < obs.size(); ++i) EXPECT_DOUBLE_EQ(star.fstar(i, 0), 1.0);
}

TEST(ForwardStar, ReconstructsForwardQuantities) {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto model = random_gaussian_model(4, rng);
        const auto obs = sample(model, 80, rng).observations;
        const auto fb = forward_backward(model, obs);
        const auto star = forward_star(model, fb);
        for (std::size_t i = 0; i < obs.size(); ++i)
            for (std::size_t s = 0; s < 4; ++s) {
                // log F*_i(s) + log beta(s, x_i) == log F_i(s)
                const double lhs = std::log(star.fstar(i, s)) + star.log_scale[i] + fb.log_emission(i, s);
                const double rhs = std::log(fb.fwd(i, s)) + fb.log_scale_fwd[i];
                EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
            }
    }
}

TEST(LooMarginal, SingleObservationGivesInitial) {
    Rng rng(22);
    const auto model = random_discrete_model(3, 2, rng);
    const auto obs = ObservationSequence::from_values({1});
    const auto fb = forward_backward(model, obs);
    const auto p = loo_marginal(forward_star(model, fb), fb, 0);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_DOUBLE_EQ(p[s], model.initial[s]);
}

TEST(LooMarginal, UninformativeEmissionsGiveChainMarginals) {
    Rng rng(23);
    const auto model = uninformative_model(3, 3, rng);
    const auto obs = random_symbols(9, 3, rng);
    const auto fb = forward_backward(model, obs);
    const auto star = forward_star(model, fb);
    const auto chain = reference::chain_marginals(model, obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
        const auto p = loo_marginal(star, fb, j);
        for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(p[s], chain(j, s), 1e-12);
    }
}

TEST(LooMarginal, MatchesEnumerationWithObservationMarginalized) {
    Rng rng(24);
    const auto model = random_discrete_model(3, 3, rng);
    const auto obs = random_symbols(6, 3, rng);
    const auto fb = forward_backward(model, obs);
    const auto star = forward_star(model, fb);
    const Matrix le = log_emission_matrix(model, obs.values);
    for (std::size_t j = 0; j < obs.size(); ++j) {
        Matrix reduced = le;
        for (double& v : reduced.row(j)) v = 0.0;
        const Matrix brute = reference::enumerate_posterior_marginals(model, reduced);
        const auto p = loo_marginal(star, fb, j);
        for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(p[s], brute(j, s), 1e-12);
    }
}

TEST(LooMarginal, MatchesNaiveRerun) {
    Rng rng(25);
    const auto model = random_gaussian_model(3, rng);
    const auto obs = sample(model, 40, rng).observations;
    const auto fast = kld_influence(model, obs);
    const auto naive = reference::kld_influence_naive(model, obs);
    for (std::size_t j = 0; j < obs.size(); ++j)
        for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(fast.loo_marginals(j, s), naive.loo_marginals(j, s), 1e-12);
}

TEST(KldInfluence, ZeroForUninformativeEmissions) {
    Rng rng(26);
    const auto model = uninformative_model(3, 4, rng);
    const auto obs = random_symbols(30, 4, rng);
    for (double k : kld_influence(model, obs).k) EXPECT_LE(std::abs(k), 1e-12);
    for (std::size_t h : {1u, 2u, 5u})
        for (double k : windowed_influence(model, obs, h).k) EXPECT_LE(std::abs(k), 1e-12);
}

TEST(KldInfluence, MatchesFullPathEnumerationTwoStates) {
    Rng rng(27);
    const auto model = random_discrete_model(2, 3, rng);
    const auto obs = random_symbols(5, 3, rng);
    const auto profile = kld_influence(model, obs);
    for (std::size_t j = 0; j < obs.size(); ++j)
        EXPECT_NEAR(profile.k[j], reference::enumerate_path_kld(model, obs, j, 1), 1e-10);
}

TEST(KldInfluence, SingleObservationClosedForm) {
    Rng rng(28);
    const auto model = random_gaussian_model(3, rng);
    const auto obs = ObservationSequence::from_values({0.4});
    const auto post = posterior_marginal(forward_backward(model, obs), 0);
    double expected = 0.0;
    for (std::size_t s = 0; s < 3; ++s) expected += model.initial[s] * std::log(model.initial[s] / post[s]);
    EXPECT_NEAR(kld_influence(model, obs).k[0], expected, 1e-14);
    EXPECT_NEAR(reference::kld_influence_naive(model, obs).k[0], expected, 1e-14);
}

TEST(KldInfluence, NonNegativeAndRowsNormalized) {
    Rng rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const auto model = random_gaussian_model(5, rng, trial % 2 == 0);
        const auto obs = sample(model, 150, rng).observations;
        const auto profile = kld_influence(model, obs);
        for (std::size_t j = 0; j < obs.size(); ++j) {
            EXPECT_GE(profile.k[j], -1e-12);
            double a = 0.0, b = 0.0;
            for (std::size_t s = 0; s < 5; ++s) {
                a += profile.loo_marginals(j, s);
                b += profile.marginals(j, s);
            }
            EXPECT_NEAR(a, 1.0, 1e-12);
            EXPECT_NEAR(b, 1.0, 1e-12);
        }
    }
}

TEST(KldInfluence, DiscreteZeroEmissionGivesInfinity) {
    // State 1 can never emit symbol 0; removing x_j = 0 reopens state 1.
    const auto model = make_model({0.5, 0.5}, Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}),
                                  DiscreteEmission{Matrix::from_rows({{0.5, 0.5}, {0.0, 1.0}})});
    const auto obs = ObservationSequence::from_values({1, 0, 1});
    const auto profile = kld_influence(model, obs);
    EXPECT_EQ(profile.k[1], std::numeric_limits<double>::infinity());
    EXPECT_TRUE(std::isfinite(profile.k[0]));
    EXPECT_EQ(reference::kld_influence_naive(model, obs).k[1], std::numeric_limits<double>::infinity());
    EXPECT_EQ(reference::enumerate_path_kld(model, obs, 1, 1), std::numeric_limits<double>::infinity());
}

TEST(KldInfluence, ExtremeOutlierStaysFinite) {
    const auto model = make_model({0.5, 0.5}, Matrix::from_rows({{0.9, 0.1}, {0.1, 0.9}}),
                                  GaussianHomoscedastic{{0.0, 1.0}, 0.05});
    // 400 standard deviations away: the emission ratio underflows in linear space.
    const auto obs = ObservationSequence::from_values({0.0, 0.1, 20.0, 0.05, 0.9, 1.0});
    const auto profile = kld_influence(model, obs);
    for (double k : profile.k) EXPECT_TRUE(std::isfinite(k));
    EXPECT_GT(profile.k[2], 1.0);
}

TEST(ClosedFormKld, InvariantUnderPerIndexRescaling) {
    Rng rng(30);
    std::uniform_real_distribution<double> scale(-30.0, 30.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto model = random_gaussian_model(4, rng);
        const auto obs = sample(model, 50, rng).observations;
        const auto fb = forward_backward(model, obs);
        const auto star = forward_star(model, fb);
        const auto profile = kld_influence(model, fb);
        std::vector<double> f(4), fs(4), b(4);
        for (std::size_t j = 0; j < obs.size(); ++j) {
            const double cf = std::exp(scale(rng)), cs = std::exp(scale(rng)), cb = std::exp(scale(rng));
            for (std::size_t s = 0; s < 4; ++s) {
                f[s] = fb.fwd(j, s) * cf;
                fs[s] = star.fstar(j, s) * cs;
                b[s] = fb.bwd(j, s) * cb;
            }
            EXPECT_NEAR(closed_form_kld(fs, f, b), profile.k[j], 1e-10);
        }
    }
}

TEST(RelativeEntropy, Conventions) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_DOUBLE_EQ(relative_entropy(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}), std::log(2.0));
    EXPECT_EQ(relative_entropy(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), inf);
    EXPECT_DOUBLE_EQ(relative_entropy(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7}), 0.0);
}

TEST(WindowedInfluence, SingleWindowEqualsKld) {
    Rng rng(31);
    const auto model = random_gaussian_model(3, rng);
    const auto obs = sample(model, 120, rng).observations;
    const auto a = kld_influence(model, obs);
    const auto b = windowed_influence(model, obs, 1);
    ASSERT_EQ(a.k.size(), b.k.size());
    for (std::size_t j = 0; j < a.k.size(); ++j) EXPECT_EQ(a.k[j], b.k[j]);
}

TEST(WindowedInfluence, MatchesEnumeration) {
    Rng rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const auto model = random_discrete_model(3, 3, rng);
        const auto obs = random_symbols(7, 3, rng);
        for (std::size_t h : {2u, 3u}) {
            const auto fast = windowed_influence(model, obs, h);
            const auto brute = reference::enumerate_window_influence(model, obs, h);
            for (std::size_t j = 0; j < brute.size(); ++j) EXPECT_NEAR(fast.k[j], brute[j], 1e-10);
        }
    }
}

TEST(WindowedInfluence, WholeSequencePriorVersusPosterior) {
    Rng rng(33);
    for (std::size_t n = 1; n <= 6; ++n) {
        const auto model = random_discrete_model(3, 2, rng);
        const auto obs = random_symbols(n, 2, rng);
        const auto fast = windowed_influence(model, obs, n);
        ASSERT_EQ(fast.k.size(), 1u);
        EXPECT_NEAR(fast.k[0], reference::enumerate_path_kld(model, obs, 0, n), 1e-10);
    }
}

TEST(WindowedInfluence, RejectsBadWindow) {
    const auto model = test::temperature_model();
    const auto obs = ObservationSequence::from_values({0.1, 0.2});
    EXPECT_THROW(windowed_influence(model, obs, 0), InvalidArgument);
    EXPECT_THROW(windowed_influence(model, obs, 3), InvalidArgument);
}

TEST(InfluenceTsv, HeaderAndColumns) {
    const auto model = test::temperature_model();
    ObservationSequence obs{{-0.3, 0.1}, {"1880", "1881"}};
    std::ostringstream os;
    write_influence_tsv(os, kld_influence(model, obs));
    std::istringstream lines(os.str());
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    EXPECT_EQ(header, "label\tK\tp_loo_1\tp_loo_2\tp_loo_3\tp_post_1\tp_post_2\tp_post_3");
    EXPECT_EQ(row.substr(0, 5), "1880\t");
    EXPECT_EQ(std::count(row.begin(), row.end(), '\t'), 7);
}

}  // namespace
}  // namespace hmminf::test

namespace hmminf::test {
namespace {

TEST(LooMarginal, EqualsSumOverReplacementSymbols) {
    Rng rng(34);
    for (int trial = 0; trial < 10; ++trial) {
        const auto model = random_discrete_model(3, 4, rng);
        const auto obs = random_symbols(6, 4, rng);
        const auto fb = forward_backward(model, obs);
        const auto star = forward_star(model, fb);
        for (std::size_t j = 0; j < obs.size(); ++j) {
            const auto expected = normalized(reference::enumerate_symbol_sum(model, obs, j));
            const auto p = loo_marginal(star, fb, j);
            for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(p[s], expected[s], 1e-12);
        }
    }
}

}  // namespace
}  // namespace hmminf::test
