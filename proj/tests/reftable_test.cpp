#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gibbsel/reftable.hpp"
#include "test_support.hpp"

using namespace gibbsel;
using gibbsel::testing::exp1_models;

namespace {

std::string csv_text(const ReferenceTable& t)
{
    std::ostringstream os;
    write_table_csv(os, t);
    return os.str();
}

GenerationOptions with_ancillary(int q)
{
    GenerationOptions o;
    o.ancillary = q;
    return o;
}

std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("gibbsel_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(SamplePrior, BetaUniformOnUnitInterval)
{
    const auto spec = exp1_models()[0];
    Rng rng(123);
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const auto d = sample_prior(spec, rng);
        sum += d.beta;
        lo = std::min(lo, d.beta);
        hi = std::max(hi, d.beta);
        ASSERT_GE(d.noise, 0.42);
        ASSERT_LE(d.noise, 2.3);
    }
    EXPECT_NEAR(sum / 1e5, 0.5, 0.005);
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 1.0);
}

TEST(SamplePrior, DeterministicAndValidated)
{
    const auto spec = exp1_models()[1];
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) {
        const auto x = sample_prior(spec, a), y = sample_prior(spec, b);
        EXPECT_EQ(x.beta, y.beta);
        EXPECT_EQ(x.noise, y.noise);
    }
    auto bad = exp1_models();
    bad[0].beta = {0.3, 0.3};
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad = exp1_models();
    bad[1].weight = 0.6;
    EXPECT_THROW(validate(bad), InvalidArgument);
    bad = exp1_models();
    bad[1].index = 3;
    EXPECT_THROW(validate(bad), InvalidArgument);
}

TEST(GenerateTable, ModelFrequencyMatchesPrior)
{
    const auto t = generate_table(exp1_models(), 10000, {6, 6}, 5, 77);
    std::size_t ones = 0;
    double max_beta_g8 = 0.0;
    for (const auto& r : t.records) {
        ones += r.model == 1;
        if (r.model == 2) max_beta_g8 = std::max(max_beta_g8, r.theta.beta);
        EXPECT_LE(r.summary.r4(), r.summary.r8());
        EXPECT_GE(r.summary.t4(), r.summary.t8());
    }
    EXPECT_NEAR(static_cast<double>(ones) / 1e4, 0.5, 0.01);
    EXPECT_LE(max_beta_g8, 0.35);
}

TEST(GenerateTable, ByteIdenticalForSameSeed)
{
    const auto a = generate_table(exp1_models(), 200, {8, 8}, 20, 9, "train", with_ancillary(2));
    const auto b = generate_table(exp1_models(), 200, {8, 8}, 20, 9, "train", with_ancillary(2));
    EXPECT_EQ(csv_text(a), csv_text(b));
    const auto c = generate_table(exp1_models(), 200, {8, 8}, 20, 10, "train", with_ancillary(2));
    EXPECT_NE(csv_text(a), csv_text(c));
    // a prefix of a larger table reproduces the smaller one
    const auto big = generate_table(exp1_models(), 300, {8, 8}, 20, 9, "train", with_ancillary(2));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.records[i], big.records[i]);
}

TEST(GenerateTable, AncillaryIndependentOfSummaries)
{
    // ancillary values come from their own stream: summaries match a table without them
    const auto plain = generate_table(exp1_models(), 50, {8, 8}, 10, 4);
    const auto anc = generate_table(exp1_models(), 50, {8, 8}, 10, 4, "train", with_ancillary(3));
    for (std::size_t i = 0; i < plain.size(); ++i) {
        EXPECT_EQ(plain.records[i].summary, anc.records[i].summary);
        ASSERT_EQ(anc.records[i].ancillary.size(), 3u);
        for (double a : anc.records[i].ancillary) {
            EXPECT_GE(a, 0.0);
            EXPECT_LT(a, 1.0);
        }
    }
}

TEST(GenerateTable, GaussianChannelQuantizes)
{
    auto models = exp1_models();
    for (auto& m : models) m.noise = {NoiseFamily::Gaussian, {0.39, 0.39}};
    std::atomic<std::size_t> seen{0};
    GenerationOptions opt;
    opt.field_sink = [&](std::size_t, const SimulatedRecord& s) {
        EXPECT_TRUE(std::holds_alternative<ContinuousField>(s.observed));
        ++seen;
    };
    const auto t = generate_table(models, 40, {10, 10}, 10, 3, "test", opt);
    EXPECT_EQ(seen.load(), 40u);
    for (const auto& r : t.records) EXPECT_EQ(r.theta.noise, 0.39);
}

TEST(GenerateTable, Errors)
{
    EXPECT_THROW(generate_table(exp1_models(), 0, {4, 4}, 5, 1), InvalidArgument);
    EXPECT_THROW(generate_table(exp1_models(), 5, {4, 4}, 5, 1, "bogus"), InvalidArgument);
    EXPECT_THROW(generate_table(exp1_models(), 5, {4, 4}, 0, 1), InvalidArgument);
}

TEST(Scales, ExamplesAndScaling)
{
    ReferenceTable t;
    t.records.resize(2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t c = 0; c < kSummaryDim; ++c) t.records[i].summary.values[c] = static_cast<std::int64_t>(2 * i * (c + 1));
    const auto s = scales(t);
    for (std::size_t c = 0; c < kSummaryDim; ++c) EXPECT_NEAR(s[c], std::sqrt(2.0) * (c + 1), 1e-12);

    auto scaled = t;
    for (auto& r : scaled.records)
        for (auto& v : r.summary.values) v *= 3;
    const auto s3 = scales(scaled);
    for (std::size_t c = 0; c < kSummaryDim; ++c) EXPECT_NEAR(s3[c], 3 * s[c], 1e-12);

    t.records[1].summary.values[2] = 0;
    EXPECT_THROW(scales(t), DegenerateInput);
    EXPECT_EQ(scales_or_unit(t)[2], 1.0);
}

TEST(Scales, PositiveOnSimulatedTable)
{
    const auto t = generate_table(exp1_models(), 500, {16, 16}, 30, 12);
    for (double s : scales(t)) EXPECT_GT(s, 0.0);
}

TEST(Persistence, RoundTrip)
{
    const auto dir = temp_dir("reftable");
    const auto t = generate_table(exp1_models(), 100, {8, 8}, 10, 31, "valid", with_ancillary(2));
    save_table(t, dir / "t.csv");
    EXPECT_TRUE(std::filesystem::exists(dir / "t.csv.meta.json"));
    const auto back = load_table(dir / "t.csv");
    EXPECT_EQ(back.records, t.records);
    EXPECT_EQ(back.meta.seed, 31u);
    EXPECT_EQ(back.meta.role, "valid");
    EXPECT_EQ(back.meta.sweeps, 10);
    EXPECT_EQ(back.meta.ancillary, 2);
    EXPECT_EQ(back.meta.shape, (LatticeShape{8, 8}));
    ASSERT_EQ(back.meta.specs.size(), 2u);
    EXPECT_EQ(back.meta.specs[1].graph, GraphKind::G8);
    EXPECT_EQ(back.meta.specs[1].beta.high, 0.35);
    EXPECT_EQ(csv_text(back), csv_text(t));
    std::filesystem::remove_all(dir);
}

TEST(Persistence, HeaderAndFormatErrors)
{
    const auto t = generate_table(exp1_models(), 3, {4, 4}, 5, 1);
    const std::string text = csv_text(t);
    EXPECT_EQ(text.substr(0, text.find('\n')), "model,alpha,beta,r4,r8,t4,t8,u4,u8");

    std::istringstream bad_header("m,a,b\n1,2,3\n");
    EXPECT_THROW(read_table_csv(bad_header, {}), FormatError);
    std::istringstream short_row("model,alpha,beta,r4,r8,t4,t8,u4,u8\n1,0.5,0.2,1,2\n");
    EXPECT_THROW(read_table_csv(short_row, {}), FormatError);
    std::istringstream bad_number("model,alpha,beta,r4,r8,t4,t8,u4,u8\n1,x,0.2,1,2,3,4,5,6\n");
    EXPECT_THROW(read_table_csv(bad_number, {}), FormatError);
    EXPECT_THROW(validate_role("holdout"), InvalidArgument);
}
