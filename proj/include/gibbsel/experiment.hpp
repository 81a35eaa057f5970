#pragma once

// Full experiment: train/validation/test tables, k calibration per statistic
// subset, adaptive classifier, local-error surface, JSON/CSV report.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbsel/adaptive.hpp"
#include "gibbsel/error.hpp"
#include "gibbsel/knn.hpp"
#include "gibbsel/local_error.hpp"
#include "gibbsel/model.hpp"
#include "gibbsel/potts.hpp"
#include "gibbsel/reftable.hpp"
#include "gibbsel/summaries.hpp"

namespace gibbsel {

inline constexpr int kReportVersion = 1;

struct ExperimentConfig {
    std::string name = "experiment";
    LatticeShape shape{32, 32};
    std::optional<int> sweeps;  // default_sweeps(shape) when unset
    std::vector<ModelSpec> models;
    std::size_t train_size = 20000;
    std::size_t valid_size = 10000;
    std::size_t test_size = 10000;
    std::uint64_t train_seed = 1;
    std::uint64_t valid_seed = 2;
    std::uint64_t test_seed = 3;
    std::vector<StatSubset> stats{StatSubset::D2, StatSubset::D4, StatSubset::D6};
    std::vector<StatSubset> adaptive{StatSubset::D2, StatSubset::D4, StatSubset::D6};
    std::vector<int> k_grid;  // empty: default grid
    int ancillary = 0;
    StatSubset surface_classifier = StatSubset::D2;
    int surface_grid = 64;
    std::vector<double> bandwidth_multipliers;  // empty: default grid

    int effective_sweeps() const { return sweeps.value_or(default_sweeps(shape)); }
};

inline void validate(const ExperimentConfig& c)
{
    if (!c.shape.valid()) throw InvalidArgument("config: lattice shape must be at least 1x1");
    validate(c.models);
    if (c.train_size < 1 || c.valid_size < 1 || c.test_size < 1)
        throw InvalidArgument("config: table sizes must be >= 1");
    if (c.train_seed == c.valid_seed || c.train_seed == c.test_seed || c.valid_seed == c.test_seed)
        throw InvalidArgument("config: train, valid and test seeds must be distinct");
    if (c.stats.empty()) throw InvalidArgument("config: at least one statistic subset is required");
    if (c.ancillary < 0) throw InvalidArgument("config: ancillary count must be >= 0");
    if (c.sweeps && *c.sweeps < 1) throw InvalidArgument("config: sweeps must be >= 1");
}

inline std::vector<StatSubset> parse_stat_list(const nlohmann::json& j)
{
    std::vector<StatSubset> out;
    for (const auto& s : j) out.push_back(parse_stat_subset(s.get<std::string>()));
    return out;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j)
{
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.shape = {j.value("height", c.shape.height), j.value("width", c.shape.width)};
    if (j.contains("sweeps") && !j.at("sweeps").is_null()) c.sweeps = j.at("sweeps").get<int>();
    c.models = model_specs_from_json(j.at("models"));
    if (j.contains("sizes")) {
        const auto& s = j.at("sizes");
        c.train_size = s.value("train", c.train_size);
        c.valid_size = s.value("valid", c.valid_size);
        c.test_size = s.value("test", c.test_size);
    }
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        c.train_seed = s.value("train", c.train_seed);
        c.valid_seed = s.value("valid", c.valid_seed);
        c.test_seed = s.value("test", c.test_seed);
    }
    if (j.contains("stats")) c.stats = parse_stat_list(j.at("stats"));
    c.adaptive = j.contains("adaptive") ? parse_stat_list(j.at("adaptive")) : c.stats;
    if (j.contains("k_grid")) c.k_grid = j.at("k_grid").get<std::vector<int>>();
    c.ancillary = j.value("ancillary", 0);
    if (j.contains("surface")) {
        const auto& s = j.at("surface");
        c.surface_classifier = parse_stat_subset(s.value("classifier", std::string("2d")));
        c.surface_grid = s.value("grid", c.surface_grid);
    }
    if (j.contains("bandwidth_multipliers"))
        c.bandwidth_multipliers = j.at("bandwidth_multipliers").get<std::vector<double>>();
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : c.models) models.push_back(to_json(m));
    auto names = [](const std::vector<StatSubset>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (auto s : v) a.push_back(to_string(s));
        return a;
    };
    return {{"name", c.name},
            {"height", c.shape.height},
            {"width", c.shape.width},
            {"sweeps", c.effective_sweeps()},
            {"models", models},
            {"sizes", {{"train", c.train_size}, {"valid", c.valid_size}, {"test", c.test_size}}},
            {"seeds", {{"train", c.train_seed}, {"valid", c.valid_seed}, {"test", c.test_seed}}},
            {"stats", names(c.stats)},
            {"adaptive", names(c.adaptive)},
            {"k_grid", c.k_grid},
            {"ancillary", c.ancillary},
            {"surface", {{"classifier", to_string(c.surface_classifier)}, {"grid", c.surface_grid}}},
            {"bandwidth_multipliers", c.bandwidth_multipliers}};
}

/// Error tagged with the pipeline stage that raised it.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(stage)
    {
    }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

struct SubsetResult {
    std::string name;
    FeatureSelection columns;
    Calibration calibration;
    double test_error = 0.0;
};

struct ExperimentTables {
    std::shared_ptr<const ReferenceTable> train;
    std::shared_ptr<const ReferenceTable> valid;
    std::shared_ptr<const ReferenceTable> test;
};

struct ExperimentResult {
    nlohmann::json report;
    ExperimentTables tables;
    std::vector<SubsetResult> subsets;
    LocalErrorSurface surface;
};

inline ExperimentTables generate_experiment_tables(const ExperimentConfig& c)
{
    const int sweeps = c.effective_sweeps();
    GenerationOptions opts;
    opts.ancillary = c.ancillary;
    auto gen = [&](std::size_t n, std::uint64_t seed, const char* role) {
        return std::make_shared<const ReferenceTable>(
            run_stage(std::string("generate ") + role,
                      [&] { return generate_table(c.models, n, c.shape, sweeps, seed, role, opts); }));
    };
    ExperimentTables t;
    t.train = gen(c.train_size, c.train_seed, "train");
    t.valid = gen(c.valid_size, c.valid_seed, "valid");
    t.test = gen(c.test_size, c.test_seed, "test");
    return t;
}

/// Runs every stage on already generated tables.
inline ExperimentResult run_experiment(const ExperimentConfig& c, ExperimentTables tables,
                                       nlohmann::json runtime = nlohmann::json::object())
{
    using clock = std::chrono::steady_clock;
    validate(c);
    ExperimentResult result;
    result.tables = tables;
    auto& report = result.report;
    report["version"] = kReportVersion;
    report["config"] = to_json(c);

    auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    auto evaluate_subset = [&](const std::string& name, const FeatureSelection& cols) {
        return run_stage("calibrate " + name, [&] {
            SubsetResult r;
            r.name = name;
            r.columns = cols;
            r.calibration = calibrate_k(tables.train, *tables.valid, cols, c.k_grid);
            const KnnModelChoice clf(tables.train, cols, r.calibration.best_k);
            r.test_error = prior_error_rate(clf, *tables.test);
            return r;
        });
    };

    auto t0 = clock::now();
    for (StatSubset s : c.stats) result.subsets.push_back(evaluate_subset(to_string(s), selection(s)));
    if (c.ancillary > 0) {
        std::vector<int> counts{std::min(2, c.ancillary), c.ancillary};
        counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
        for (int q : counts)
            result.subsets.push_back(evaluate_subset("2d+anc" + std::to_string(q),
                                                     selection_with_ancillary(StatSubset::D2, static_cast<std::size_t>(q))));
    }
    runtime["classifiers_s"] = seconds_since(t0);

    nlohmann::json subsets = nlohmann::json::array();
    for (const auto& r : result.subsets) {
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& p : r.calibration.curve) curve.push_back({{"k", p.k}, {"error", p.error}});
        subsets.push_back({{"name", r.name},
                           {"columns", r.columns},
                           {"k", r.calibration.best_k},
                           {"valid_error", r.calibration.best_error},
                           {"test_error", r.test_error},
                           {"curve", curve}});
    }
    report["subsets"] = subsets;

    auto fitted = [&](StatSubset s) {
        for (const auto& r : result.subsets)
            if (r.name == to_string(s)) return KnnModelChoice(tables.train, r.columns, r.calibration.best_k);
        const auto cal = calibrate_k(tables.train, *tables.valid, selection(s), c.k_grid);
        return KnnModelChoice(tables.train, selection(s), cal.best_k);
    };

    t0 = clock::now();
    std::optional<AdaptiveClassifier> adaptive;
    if (!c.adaptive.empty()) {
        adaptive = run_stage("adaptive", [&] {
            std::vector<KnnModelChoice> constituents;
            for (StatSubset s : c.adaptive) constituents.push_back(fitted(s));
            AdaptiveOptions opts;
            opts.bandwidth_multipliers = c.bandwidth_multipliers;
            return fit_adaptive(std::move(constituents), *tables.valid, opts);
        });
        const AdaptiveEvaluation ev = run_stage("adaptive test", [&] { return evaluate_adaptive(*adaptive, *tables.test); });
        nlohmann::json constituents = nlohmann::json::array();
        for (const auto& clf : adaptive->classifiers())
            constituents.push_back({{"dimension", clf.dimension()}, {"k", clf.k()}});
        nlohmann::json bandwidths = nlohmann::json::array();
        for (const auto& le : adaptive->local_errors()) bandwidths.push_back(le.bandwidth());
        double best_constituent = 1.0;
        for (const auto& clf : adaptive->classifiers())
            for (const auto& r : result.subsets)
                if (r.columns == clf.columns()) best_constituent = std::min(best_constituent, r.test_error);
        report["adaptive"] = {{"test_error", ev.error},
                              {"lambda_share", ev.lambda_share},
                              {"constituents", constituents},
                              {"best_constituent_error", best_constituent},
                              {"lda_axes", adaptive->projection().rows()},
                              {"lda_center", adaptive->projection().center()},
                              {"lda_scale", adaptive->projection().scale()},
                              {"lda_fallback", adaptive->lda_fallback()},
                              {"bandwidths", bandwidths}};
    }
    runtime["adaptive_s"] = seconds_since(t0);

    t0 = clock::now();
    run_stage("local error", [&] {
        AffineProjection s2;
        if (adaptive && adaptive->projection().output_dimension() >= 2) {
            const auto& p = adaptive->projection();
            s2 = AffineProjection(p.center(), p.scale(), {p.rows()[0], p.rows()[1]});
        } else {
            const std::size_t cols[] = {0, 1};
            s2 = AffineProjection::coordinates(cols, kSummaryDim);
        }
        const KnnModelChoice clf = fitted(c.surface_classifier);
        result.surface = error_surface(clf, *tables.test, s2, c.surface_grid, c.bandwidth_multipliers);
        report["local_error"] = {{"classifier", to_string(c.surface_classifier)},
                                 {"table", "test"},
                                 {"bandwidth", result.surface.bandwidth},
                                 {"global_error", result.surface.global_error},
                                 {"mean_local_error", result.surface.mean_at_points()},
                                 {"projection", s2.rows()}};
        return 0;
    });
    runtime["local_error_s"] = seconds_since(t0);
    report["runtime"] = runtime;
    return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c)
{
    using clock = std::chrono::steady_clock;
    validate(c);
    const auto t0 = clock::now();
    ExperimentTables tables = generate_experiment_tables(c);
    nlohmann::json runtime;
    runtime["generate_s"] = std::chrono::duration<double>(clock::now() - t0).count();
    return run_experiment(c, std::move(tables), std::move(runtime));
}

/// Report without the timing block, for reproducibility comparisons.
inline nlohmann::json deterministic_part(nlohmann::json report)
{
    report.erase("runtime");
    return report;
}

inline void write_curves_csv(std::ostream& os, const std::vector<SubsetResult>& subsets)
{
    os << "subset,k,error\n";
    for (const auto& r : subsets)
        for (const auto& p : r.calibration.curve) os << r.name << ',' << p.k << ',' << detail::format_double(p.error) << '\n';
}

inline void write_surface_csv(std::ostream& os, const LocalErrorSurface& surface)
{
    os << "s2_1,s2_2,tau,support\n";
    for (const auto& cell : surface.grid)
        os << detail::format_double(cell.x) << ',' << detail::format_double(cell.y) << ','
           << detail::format_double(cell.tau) << ',' << (cell.supported ? 1 : 0) << '\n';
}

/// Writes report.json, curves.csv and surface.csv into `dir`.
inline void write_experiment(const ExperimentResult& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "report.json");
        os << r.report.dump(2) << '\n';
    }
    {
        std::ofstream os(dir / "curves.csv");
        write_curves_csv(os, r.subsets);
    }
    std::ofstream os(dir / "surface.csv");
    write_surface_csv(os, r.surface);
}

}  // namespace gibbsel
