#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "gibbsel/gibbsel.hpp"

using namespace gibbsel;
using nlohmann::json;

namespace {

const std::string cli = GIBBSEL_CLI;
const std::filesystem::path configs = GIBBSEL_CONFIG_DIR;

struct Outcome {
    int status;
    std::string out;
};

// runs the CLI with stderr folded into the captured output
Outcome run(const std::string& args)
{
    const std::string cmd = "\"" + cli + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int raw = pclose(pipe);
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        // one directory per process so ctest -j cannot interleave suites
        dir = std::filesystem::temp_directory_path() / ("gibbsel_cli_test_" + std::to_string(getpid()));
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        const char* roles[] = {"train", "valid", "test"};
        const int sizes[] = {300, 200, 200};
        for (int r = 0; r < 3; ++r) {
            const auto o = run("gen --config " + (configs / "exp1.json").string() + " --n " + std::to_string(sizes[r]) +
                               " --seed " + std::to_string(r + 1) + " --role " + roles[r] + " --out " +
                               (dir / (std::string(roles[r]) + ".csv")).string() +
                               " --height 6 --width 6 --sweeps 5" + (r == 2 ? " --keep-fields " + (dir / "fields").string() : ""));
            ASSERT_EQ(o.status, 0) << o.out;
        }
    }
    static void TearDownTestSuite() { std::filesystem::remove_all(dir); }

    static std::string path(const std::string& name) { return (dir / name).string(); }
    static std::filesystem::path dir;
};

std::filesystem::path Cli::dir;

}  // namespace

TEST_F(Cli, GenMatchesLibrary)
{
    const auto c = load_config(configs / "exp1.json");
    const auto table = generate_table(c.models, 300, {6, 6}, 5, 1, "train");
    std::ostringstream expected;
    write_table_csv(expected, table);
    EXPECT_EQ(slurp(path("train.csv")), expected.str());
    const auto meta = json::parse(slurp(path("train.csv.meta.json")));
    EXPECT_EQ(meta["seed"], 1);
    EXPECT_EQ(meta["sweeps"], 5);
    EXPECT_TRUE(std::filesystem::exists(dir / "fields" / "0_latent.pgm"));
    EXPECT_TRUE(std::filesystem::exists(dir / "fields" / "199_obs.pgm"));
}

TEST_F(Cli, CalibrateReport)
{
    const auto o = run("calibrate --train " + path("train.csv") + " --valid " + path("valid.csv") +
                       " --stats 4d --grid 1,3,10 --out " + path("cal.json"));
    ASSERT_EQ(o.status, 0) << o.out;
    const auto j = json::parse(slurp(path("cal.json")));
    const auto train = std::make_shared<const ReferenceTable>(load_table(path("train.csv")));
    const auto cal = calibrate_k(train, load_table(path("valid.csv")), StatSubset::D4, {1, 3, 10});
    EXPECT_EQ(j["k"], cal.best_k);
    EXPECT_EQ(j["curve"].size(), 3u);
    EXPECT_DOUBLE_EQ(j["valid_error"].get<double>(), cal.best_error);
}

TEST_F(Cli, ClassifyMatchesVote)
{
    const auto o = run("classify --train " + path("train.csv") + " --k 7 --stats 2d --obs " +
                       (dir / "fields" / "5_obs.pgm").string());
    ASSERT_EQ(o.status, 0) << o.out;
    const auto j = json::parse(o.out);
    const auto train = std::make_shared<const ReferenceTable>(load_table(path("train.csv")));
    const auto test = load_table(path("test.csv"));
    const KnnModelChoice clf(train, StatSubset::D2, 7);
    const auto vote = clf.vote(clf.select(test, 5));
    EXPECT_EQ(j["predicted"], vote.predicted);
    EXPECT_EQ(j["frequencies"].get<std::vector<double>>(), vote.frequencies);
    EXPECT_EQ(j["summaries"]["r4"], test.records[5].summary.values[0]);
}

TEST_F(Cli, AdaptiveAndLocalError)
{
    auto o = run("adaptive --train " + path("train.csv") + " --valid " + path("valid.csv") + " --test " +
                 path("test.csv") + " --stats 2d,4d --out " + path("adaptive.json"));
    ASSERT_EQ(o.status, 0) << o.out;
    const auto j = json::parse(slurp(path("adaptive.json")));
    EXPECT_EQ(j["lambda_share"].size(), 2u);
    const double err = j["adaptive_error"].get<double>();
    EXPECT_GE(err, 0.0);
    EXPECT_LE(err, 1.0);

    o = run("local-error --train " + path("train.csv") + " --valid " + path("valid.csv") +
            " --stats 2d --s2 0,1 --grid 5 --k 10 --out " + path("surface.csv") + " --report " + path("le.json"));
    ASSERT_EQ(o.status, 0) << o.out;
    const std::string surface = slurp(path("surface.csv"));
    EXPECT_EQ(surface.substr(0, surface.find('\n')), "s2_1,s2_2,tau,support");
    EXPECT_EQ(std::count(surface.begin(), surface.end(), '\n'), 26);
    const auto le = json::parse(slurp(path("le.json")));
    const auto train = std::make_shared<const ReferenceTable>(load_table(path("train.csv")));
    EXPECT_DOUBLE_EQ(le["global_error"].get<double>(),
                     prior_error_rate(KnnModelChoice(train, StatSubset::D2, 10), load_table(path("valid.csv"))));
}

TEST_F(Cli, OracleMatchesLibrary)
{
    std::ofstream(path("tiny.pgm")) << "P2\n3 2\n1\n0 1 0\n1 0 1\n";
    const auto o = run("oracle --config " + (configs / "exp1.json").string() + " --obs " + path("tiny.pgm") + " --nodes 8");
    ASSERT_EQ(o.status, 0) << o.out;
    const auto j = json::parse(o.out);
    const auto c = load_config(configs / "exp1.json");
    const auto post = exact_model_posterior(load_pgm(path("tiny.pgm")), c.models, 8);
    EXPECT_EQ(j["posterior"].get<std::vector<double>>(), post.posterior);
    EXPECT_EQ(j["map_model"], 2);
}

TEST_F(Cli, RunWritesArtifacts)
{
    const auto o = run("run --config " + (configs / "exp1.json").string() + " --out " + path("run") +
                       " --height 6 --width 6 --sweeps 5 --train 200 --valid 100 --test 100");
    ASSERT_EQ(o.status, 0) << o.out;
    for (const char* f : {"report.json", "curves.csv", "surface.csv"}) EXPECT_TRUE(std::filesystem::exists(dir / "run" / f));
    auto c = load_config(configs / "exp1.json");
    c.shape = {6, 6};
    c.sweeps = 5;
    c.train_size = 200;
    c.valid_size = 100;
    c.test_size = 100;
    const auto expected = run_experiment(c);
    const auto got = json::parse(slurp(dir / "run" / "report.json"));
    EXPECT_EQ(deterministic_part(got).dump(), deterministic_part(expected.report).dump());
}

TEST_F(Cli, FailuresAreStageTagged)
{
    auto o = run("calibrate --train " + path("train.csv") + " --valid " + path("valid.csv") + " --grid 1,100000");
    EXPECT_NE(o.status, 0);
    EXPECT_NE(o.out.find("calibrate 2d:"), std::string::npos) << o.out;

    std::ofstream(path("broken.csv")) << "model,alpha\n1,2\n";
    o = run("calibrate --train " + path("broken.csv") + " --valid " + path("valid.csv"));
    EXPECT_NE(o.status, 0);
    EXPECT_NE(o.out.find("load train:"), std::string::npos) << o.out;

    o = run("classify --train " + path("train.csv") + " --k 3 --obs " + (dir / "fields" / "5_obs.pgm").string() +
            " --sigma-known 0.39");
    EXPECT_NE(o.status, 0);
    EXPECT_NE(o.out.find("observation:"), std::string::npos) << o.out;

    o = run("gen --config " + (configs / "exp1.json").string() + " --n 5 --seed 1 --out " + path("x.csv") + " --sweeps -2");
    EXPECT_NE(o.status, 0);
    o = run("bogus");
    EXPECT_NE(o.status, 0);
}
