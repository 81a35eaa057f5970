#include <gtest/gtest.h>

#include <cmath>

#include "gibbsel/oracle.hpp"
#include "test_support.hpp"

using namespace gibbsel;
using gibbsel::testing::exp1_models;

namespace {

// Evidence by direct triple sum over (alpha node, beta node, x), no factorization.
double brute_evidence(const DiscreteField& y, const ModelSpec& m, int nodes)
{
    const LatticeShape s = y.shape();
    const int k = y.colors();
    const std::size_t n = s.sites();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(k);
    std::vector<int> x(n);
    auto decode = [&](std::size_t idx) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<int>(idx % static_cast<std::size_t>(k));
            idx /= static_cast<std::size_t>(k);
        }
    };
    auto node = [&](const Interval& iv, int j) { return iv.low + (j + 0.5) * (iv.high - iv.low) / nodes; };
    double e = 0.0;
    for (int ia = 0; ia < nodes; ++ia) {
        const double alpha = node(m.noise.range, ia);
        for (int ib = 0; ib < nodes; ++ib) {
            const double beta = node(m.beta, ib);
            double z = 0.0, acc = 0.0;
            for (std::size_t idx = 0; idx < total; ++idx) {
                decode(idx);
                const double w = std::exp(beta * gibbsel::testing::brute_monochrome(s, m.graph, x));
                z += w;
                double like = 1.0;
                for (std::size_t i = 0; i < n; ++i)
                    like *= (x[i] == y[i] ? std::exp(alpha) : std::exp(-alpha)) /
                            (std::exp(alpha) + (k - 1) * std::exp(-alpha));
                acc += w * like;
            }
            e += acc / z;
        }
    }
    return e / (nodes * nodes);
}

}  // namespace

TEST(ExactPosterior, IdenticalModelsAreEven)
{
    auto models = exp1_models();
    models[1].graph = GraphKind::G4;
    models[1].beta = models[0].beta;
    Rng rng(1);
    const auto y = gibbsel::testing::random_field({3, 3}, 2, rng);
    const auto p = exact_model_posterior(y, models, 8);
    EXPECT_NEAR(p.posterior[0], 0.5, 1e-12);
    EXPECT_NEAR(p.posterior[1], 0.5, 1e-12);
    EXPECT_EQ(p.map_model, 1);
}

TEST(ExactPosterior, MatchesBruteForceTripleSum)
{
    Rng rng(5);
    for (int k : {2, 3}) {
        const auto models = exp1_models(k);
        for (int rep = 0; rep < 3; ++rep) {
            const auto y = gibbsel::testing::random_field({2, 2}, k, rng);
            const auto p = exact_model_posterior(y, models, 6);
            for (std::size_t m = 0; m < 2; ++m)
                EXPECT_NEAR(p.evidence[m], brute_evidence(y, models[m], 6), 1e-12 * p.evidence[m]);
            const double post = p.evidence[0] / (p.evidence[0] + p.evidence[1]);
            EXPECT_NEAR(p.posterior[0], post, 1e-12);
        }
    }
}

TEST(ExactPosterior, SumsToOneAndCheckerboardPicksG8)
{
    Rng rng(9);
    const auto models = exp1_models();
    for (int rep = 0; rep < 10; ++rep) {
        const auto y = gibbsel::testing::random_field({3, 4}, 2, rng);
        const auto p = exact_model_posterior(y, models);
        EXPECT_NEAR(p.posterior[0] + p.posterior[1], 1.0, 1e-10);
    }
    // a checkerboard has no G4 monochrome edges but many G8 ones
    const auto board = exact_model_posterior(gibbsel::testing::checkerboard({3, 4}), models);
    EXPECT_EQ(board.map_model, 2);
}

TEST(ExactPosterior, RelabelInvariant)
{
    auto models = exp1_models();
    models[0].weight = 0.3;
    models[1].weight = 0.7;
    auto swapped = models;
    std::swap(swapped[0], swapped[1]);
    swapped[0].index = 1;
    swapped[1].index = 2;
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        const auto y = gibbsel::testing::random_field({3, 3}, 2, rng);
        const auto a = exact_model_posterior(y, models, 16);
        const auto b = exact_model_posterior(y, swapped, 16);
        EXPECT_NEAR(a.posterior[0], b.posterior[1], 1e-12);
        EXPECT_NEAR(a.posterior[1], b.posterior[0], 1e-12);
    }
}

TEST(ExactPosterior, PriorWeightsEnterLinearly)
{
    auto models = exp1_models();
    Rng rng(4);
    const auto y = gibbsel::testing::random_field({3, 3}, 2, rng);
    const auto even = exact_model_posterior(y, models, 16);
    models[0].weight = 0.2;
    models[1].weight = 0.8;
    const auto skew = exact_model_posterior(y, models, 16);
    const double odds_even = even.posterior[0] / even.posterior[1];
    EXPECT_NEAR(skew.posterior[0] / skew.posterior[1], odds_even * 0.25, 1e-10 * odds_even);
}

TEST(ExactPosterior, Errors)
{
    auto models = exp1_models();
    EXPECT_THROW(exact_model_posterior(DiscreteField({5, 5}, 2), models), CapacityError);
    models[1].noise = {NoiseFamily::Gaussian, {0.39, 0.39}};
    EXPECT_THROW(exact_model_posterior(DiscreteField({2, 2}, 2), models), UnsupportedChannel);
    EXPECT_THROW(exact_model_posterior(DiscreteField({2, 2}, 3), exp1_models()), InvalidArgument);
}

TEST(ExactPosterior, QuadratureConverges)
{
    Rng rng(6);
    const auto y = gibbsel::testing::random_field({3, 3}, 2, rng);
    EXPECT_LT(quadrature_convergence(y, exp1_models()), 1e-3);
}

TEST(ExactPosterior, SixteenColorPath)
{
    auto models = exp1_models(16);
    models[0].noise.range = {1.78, 4.8};
    models[1].noise.range = {1.78, 4.8};
    Rng rng(3);
    const auto y = gibbsel::testing::random_field({2, 3}, 16, rng);
    const auto p = exact_model_posterior(y, models, 4);
    EXPECT_NEAR(p.posterior[0] + p.posterior[1], 1.0, 1e-10);
    // direct-sum check on a 1x3 strip
    const auto q = exact_model_posterior(DiscreteField({1, 3}, 16, std::vector<int>{0, 5, 5}), models, 4);
    const DiscreteField small({1, 3}, 16, std::vector<int>{0, 5, 5});
    EXPECT_NEAR(q.evidence[0], brute_evidence(small, models[0], 4), 1e-12 * q.evidence[0]);
}
