#include <gtest/gtest.h>

#include <algorithm>

#include "gibbsel/summaries.hpp"
#include "test_support.hpp"

using namespace gibbsel;

namespace {

// independent summaries from the brute-force helpers
SummaryVector brute_summaries(const DiscreteField& f)
{
    const std::vector<int> v(f.values().begin(), f.values().end());
    SummaryVector out;
    int slot = 0;
    for (auto kind : {GraphKind::G4, GraphKind::G8}) {
        const auto labels = gibbsel::testing::union_find_labels(f.shape(), kind, v);
        const int t = *std::max_element(labels.begin(), labels.end()) + 1;
        std::vector<int> sizes(static_cast<std::size_t>(t), 0);
        for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
        out.values[static_cast<std::size_t>(slot)] = gibbsel::testing::brute_monochrome(f.shape(), kind, v);
        out.values[static_cast<std::size_t>(slot + 2)] = t;
        out.values[static_cast<std::size_t>(slot + 4)] = *std::max_element(sizes.begin(), sizes.end());
        ++slot;
    }
    return out;
}

}  // namespace

TEST(GeometricSummaries, Examples)
{
    const LatticeShape s{5, 5};
    EXPECT_EQ(geometric_summaries(DiscreteField(s, 2, 0)).values, (std::array<std::int64_t, 6>{40, 72, 1, 1, 25, 25}));
    EXPECT_EQ(geometric_summaries(gibbsel::testing::checkerboard(s)).values,
              (std::array<std::int64_t, 6>{0, 32, 25, 2, 1, 13}));
    EXPECT_EQ(geometric_summaries(DiscreteField({1, 1}, 2, 1)).values, (std::array<std::int64_t, 6>{0, 0, 1, 1, 1, 1}));
}

TEST(GeometricSummaries, MatchBruteForceAndOrderings)
{
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const LatticeShape s{1 + trial % 11, 1 + (trial * 3) % 13};
        const auto f = gibbsel::testing::random_field(s, 2 + trial % 4, rng);
        const auto v = geometric_summaries(f);
        EXPECT_EQ(v, brute_summaries(f));
        EXPECT_LE(v.r4(), v.r8());
        EXPECT_GE(v.t4(), v.t8());
        EXPECT_LE(v.u4(), v.u8());
    }
}

TEST(GeometricSummaries, EngineReuse)
{
    Rng rng(2);
    SummaryEngine engine({9, 7});
    for (int i = 0; i < 10; ++i) {
        const auto f = gibbsel::testing::random_field({9, 7}, 3, rng);
        EXPECT_EQ(engine(f), geometric_summaries(f));
    }
    EXPECT_THROW(engine(DiscreteField({7, 9}, 2)), InvalidArgument);
}

TEST(StatSubset, ProjectAndParse)
{
    const SummaryVector a{{40, 72, 1, 1, 25, 25}}, b{{0, 32, 25, 2, 1, 13}};
    EXPECT_EQ(project(a, StatSubset::D2), (std::vector<double>{40, 72}));
    EXPECT_EQ(project(b, StatSubset::D4), (std::vector<double>{0, 32, 25, 2}));
    EXPECT_EQ(project(b, StatSubset::D6), (std::vector<double>{0, 32, 25, 2, 1, 13}));
    EXPECT_EQ(parse_stat_subset("4d"), StatSubset::D4);
    EXPECT_EQ(parse_stat_subset("D6"), StatSubset::D6);
    EXPECT_EQ(to_string(StatSubset::D2), "2d");
    EXPECT_THROW(parse_stat_subset("3d"), InvalidArgument);
}

TEST(KMeans, SeparatedClusters)
{
    std::vector<double> v(12, 0.0);
    v.insert(v.end(), 13, 1.0);
    std::shuffle(v.begin(), v.end(), Rng(4));
    Rng rng(1);
    const auto q = kmeans_quantize(ContinuousField({5, 5}, v), 2, rng);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(q[i], v[i] == 1.0 ? 1 : 0);
}

TEST(KMeans, IdentityOnNoiselessField)
{
    Rng rng(6), src(7);
    for (int k : {2, 3, 5}) {
        const auto x = gibbsel::testing::random_field({20, 20}, k, src);
        std::vector<double> y(x.values().begin(), x.values().end());
        EXPECT_EQ(kmeans_quantize(ContinuousField(x.shape(), y), k, rng), x) << k;
    }
}

TEST(KMeans, GaussianMixtureMisassignment)
{
    Rng rng(10), src(11);
    const auto x = gibbsel::testing::random_field({100, 100}, 2, src);
    std::normal_distribution<double> eps(0.0, 0.1);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + eps(src);
    const auto q = kmeans_quantize(ContinuousField(x.shape(), y), 2, rng);
    std::size_t wrong = 0, wrong_threshold = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        wrong += q[i] != x[i];
        wrong_threshold += (y[i] > 0.5 ? 1 : 0) != x[i];
    }
    EXPECT_LT(static_cast<double>(wrong) / 1e4, 0.01);
    EXPECT_LE(wrong, wrong_threshold + 20);
}

TEST(KMeans, CentersMatchLloydFixedPoint)
{
    Rng rng(3);
    const std::vector<double> v{0.0, 0.1, 0.2, 5.0, 5.2, 9.9, 10.0, 10.1};
    const auto c = kmeans_centers(v, 3, rng);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_NEAR(c[0], 0.1, 1e-12);
    EXPECT_NEAR(c[1], 5.1, 1e-12);
    EXPECT_NEAR(c[2], 10.0, 1e-12);
}

TEST(KMeans, DegenerateAndDeterministic)
{
    Rng rng(1);
    EXPECT_THROW(kmeans_quantize(ContinuousField({2, 2}, {1.0, 1.0, 1.0, 1.0}), 2, rng), DegenerateInput);
    EXPECT_THROW(kmeans_quantize(ContinuousField({2, 2}, {1.0, 2.0, 1.0, 2.0}), 3, rng), DegenerateInput);
    EXPECT_THROW(kmeans_quantize(ContinuousField({2, 2}, {1.0, 2.0, 1.0, 2.0}), 1, rng), InvalidArgument);

    Rng src(5);
    std::normal_distribution<double> eps(0.0, 0.6);
    std::vector<double> y(400);
    for (double& v : y) v = eps(src);
    Rng a(77), b(77);
    const ContinuousField f({20, 20}, y);
    EXPECT_EQ(kmeans_quantize(f, 3, a), kmeans_quantize(f, 3, b));
}
