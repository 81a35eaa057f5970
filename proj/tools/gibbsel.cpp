#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gibbsel/gibbsel.hpp"

using namespace gibbsel;
using nlohmann::json;

namespace {

// "2d", "4d", "6d", optionally "+ancQ" for Q appended ancillary columns
struct NamedSelection {
    std::string name;
    StatSubset subset;
    FeatureSelection columns;
};

NamedSelection parse_selection(const std::string& text)
{
    const auto plus = text.find('+');
    const StatSubset s = parse_stat_subset(text.substr(0, plus));
    if (plus == std::string::npos) return {text, s, selection(s)};
    const std::string rest = text.substr(plus + 1);
    if (rest.rfind("anc", 0) != 0) throw InvalidArgument("bad statistic subset '" + text + "'");
    int q = 0;
    try {
        q = std::stoi(rest.substr(3));
    } catch (const std::exception&) {
        throw InvalidArgument("bad ancillary count in '" + text + "'");
    }
    if (q < 0) throw InvalidArgument("bad ancillary count in '" + text + "'");
    return {text, s, selection_with_ancillary(s, static_cast<std::size_t>(q))};
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::shared_ptr<const ReferenceTable> load(const std::string& path, const std::string& role)
{
    return run_stage("load " + role, [&] { return std::make_shared<const ReferenceTable>(load_table(path)); });
}

void write_json(const json& j, const std::string& path)
{
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(2) << '\n';
}

json curve_json(const Calibration& cal)
{
    json curve = json::array();
    for (const auto& p : cal.curve) curve.push_back({{"k", p.k}, {"error", p.error}});
    return curve;
}

bool has_suffix(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// ---------------------------------------------------------------------------

struct GenArgs {
    std::string config, out, role = "train", keep_fields;
    std::size_t n = 0;
    std::uint64_t seed = 1;
    std::optional<int> sweeps, ancillary, height, width;
};

int cmd_gen(const GenArgs& a)
{
    ExperimentConfig c = run_stage("config", [&] { return load_config(a.config); });
    if (a.height) c.shape.height = *a.height;
    if (a.width) c.shape.width = *a.width;
    if (a.sweeps) c.sweeps = *a.sweeps;
    GenerationOptions opts;
    opts.ancillary = a.ancillary.value_or(c.ancillary);
    if (!a.keep_fields.empty()) {
        const std::filesystem::path dir = a.keep_fields;
        std::filesystem::create_directories(dir);
        opts.field_sink = [dir](std::size_t i, const SimulatedRecord& s) {
            const std::string stem = std::to_string(i);
            save_pgm(s.latent, dir / (stem + "_latent.pgm"));
            if (const auto* y = std::get_if<DiscreteField>(&s.observed))
                save_pgm(*y, dir / (stem + "_obs.pgm"));
            else
                save_csv_field(std::get<ContinuousField>(s.observed), dir / (stem + "_obs.csv"));
        };
    }
    const auto table = run_stage("generate " + a.role, [&] {
        return generate_table(c.models, a.n, c.shape, c.effective_sweeps(), a.seed, a.role, opts);
    });
    run_stage("write", [&] {
        save_table(table, a.out);
        return 0;
    });
    std::cerr << "wrote " << table.size() << " records to " << a.out << '\n';
    return 0;
}

struct CalibrateArgs {
    std::string train, valid, stats = "2d", out;
    std::vector<int> grid;
};

int cmd_calibrate(const CalibrateArgs& a)
{
    const auto train = load(a.train, "train");
    const auto valid = load(a.valid, "valid");
    const auto sel = run_stage("stats", [&] { return parse_selection(a.stats); });
    const auto cal = run_stage("calibrate " + sel.name, [&] { return calibrate_k(train, *valid, sel.columns, a.grid); });
    write_json({{"version", kReportVersion},
                {"stats", sel.name},
                {"columns", sel.columns},
                {"k", cal.best_k},
                {"valid_error", cal.best_error},
                {"curve", curve_json(cal)}},
               a.out);
    return 0;
}

struct ClassifyArgs {
    std::string train, stats = "2d", obs;
    int k = 0;
    std::optional<double> sigma_known;
    std::uint64_t seed = 1;
};

int cmd_classify(const ClassifyArgs& a)
{
    const auto train = load(a.train, "train");
    const auto sel = run_stage("stats", [&] { return parse_selection(a.stats); });
    const auto summary = run_stage("observation", [&] {
        const auto& specs = train->meta.specs;
        if (specs.empty()) throw InvalidArgument("training table has no model metadata");
        const bool gaussian = specs.front().noise.family == NoiseFamily::Gaussian;
        if (a.sigma_known) {
            if (!gaussian) throw InvalidArgument("--sigma-known given but the training channel is not Gaussian");
            for (const auto& m : specs)
                if (!m.noise.range.fixed() || std::abs(m.noise.range.low - *a.sigma_known) > 1e-12)
                    throw InvalidArgument("--sigma-known " + std::to_string(*a.sigma_known) +
                                          " does not match the training sigma of model " + std::to_string(m.index));
        }
        std::optional<DiscreteField> y;
        if (has_suffix(a.obs, ".pgm")) {
            if (gaussian) throw UnsupportedChannel("training table is Gaussian; pass the observation as a .csv field");
            const auto raw = load_pgm(a.obs);
            if (raw.colors() > specs.front().colors)
                throw InvalidArgument("observation uses more colors than the training models");
            y.emplace(raw.shape(), specs.front().colors, std::vector<int>(raw.values().begin(), raw.values().end()));
        } else if (has_suffix(a.obs, ".csv")) {
            if (!gaussian) throw UnsupportedChannel("training table is discrete; pass the observation as a .pgm field");
            Rng rng = make_stream(a.seed, 0, StreamTag::experiment);
            y = kmeans_quantize(load_csv_field(a.obs), specs.front().colors, rng);
        } else {
            throw InvalidArgument("observation must be a .pgm or .csv file");
        }
        if (train->meta.shape.valid() && !(y->shape() == train->meta.shape))
            throw InvalidArgument("observation is " + std::to_string(y->shape().height) + "x" +
                                  std::to_string(y->shape().width) + " but the table was simulated on " +
                                  std::to_string(train->meta.shape.height) + "x" +
                                  std::to_string(train->meta.shape.width));
        return geometric_summaries(*y);
    });
    const auto vote = run_stage("classify", [&] {
        for (std::size_t col : sel.columns)
            if (col >= kSummaryDim) throw InvalidArgument("observations carry no ancillary coordinates");
        const KnnModelChoice clf(train, sel.columns, a.k);
        const std::vector<double> f(summary.values.begin(), summary.values.end());
        return clf.vote(clf.select(f));
    });
    json s = json::object();
    for (std::size_t j = 0; j < kSummaryDim; ++j) s[std::string(kSummaryNames[j])] = summary.values[j];
    write_json({{"frequencies", vote.frequencies}, {"predicted", vote.predicted}, {"k", a.k}, {"stats", sel.name},
                {"summaries", s}},
               "-");
    return 0;
}

struct LocalErrorArgs {
    std::string train, valid, stats = "2d", s2 = "lda", out, report;
    int grid = 64, k = 0;
};

int cmd_local_error(const LocalErrorArgs& a)
{
    const auto train = load(a.train, "train");
    const auto valid = load(a.valid, "valid");
    const auto sel = run_stage("stats", [&] { return parse_selection(a.stats); });
    const KnnModelChoice clf = run_stage("calibrate " + sel.name, [&] {
        const int k = a.k > 0 ? a.k : calibrate_k(train, *valid, sel.columns).best_k;
        return KnnModelChoice(train, sel.columns, k);
    });
    const AffineProjection s2 = run_stage("projection", [&] {
        if (a.s2 != "lda") {
            std::vector<std::size_t> cols;
            for (const auto& item : split_list(a.s2)) cols.push_back(static_cast<std::size_t>(std::stoul(item)));
            if (cols.empty()) throw InvalidArgument("--s2 needs 'lda' or a coordinate list");
            return AffineProjection::coordinates(cols, valid->feature_count());
        }
        std::vector<KnnModelChoice> constituents;
        for (StatSubset s : {StatSubset::D2, StatSubset::D4, StatSubset::D6})
            constituents.push_back(KnnModelChoice(train, selection(s), calibrate_k(train, *valid, s).best_k));
        const auto p = fit_adaptive(std::move(constituents), *valid).projection();
        if (p.output_dimension() < 2) {
            const std::size_t cols[] = {0, 1};
            return AffineProjection::coordinates(cols, kSummaryDim);
        }
        return AffineProjection(p.center(), p.scale(), {p.rows()[0], p.rows()[1]});
    });
    const auto surface = run_stage("local error", [&] { return error_surface(clf, *valid, s2, a.grid); });
    run_stage("write", [&] {
        if (const auto parent = std::filesystem::path(a.out).parent_path(); !parent.empty())
            std::filesystem::create_directories(parent);
        std::ofstream os(a.out);
        if (!os) throw std::runtime_error("cannot write " + a.out);
        write_surface_csv(os, surface);
        return 0;
    });
    const json summary{{"stats", sel.name},
                       {"k", clf.k()},
                       {"projection", s2.rows()},
                       {"bandwidth", surface.bandwidth},
                       {"global_error", surface.global_error},
                       {"mean_local_error", surface.mean_at_points()}};
    write_json(summary, a.report.empty() ? "-" : a.report);
    return 0;
}

struct AdaptiveArgs {
    std::string train, valid, test, stats = "2d,4d,6d", out;
};

int cmd_adaptive(const AdaptiveArgs& a)
{
    const auto train = load(a.train, "train");
    const auto valid = load(a.valid, "valid");
    const auto test = load(a.test, "test");
    std::vector<NamedSelection> sels;
    run_stage("stats", [&] {
        for (const auto& s : split_list(a.stats)) sels.push_back(parse_selection(s));
        if (sels.empty()) throw InvalidArgument("--stats needs at least one subset");
        return 0;
    });
    std::vector<KnnModelChoice> constituents;
    json per = json::array();
    for (const auto& s : sels) {
        run_stage("calibrate " + s.name, [&] {
            const auto cal = calibrate_k(train, *valid, s.columns);
            constituents.emplace_back(train, s.columns, cal.best_k);
            per.push_back({{"stats", s.name},
                           {"k", cal.best_k},
                           {"valid_error", cal.best_error},
                           {"test_error", prior_error_rate(constituents.back(), *test)}});
            return 0;
        });
    }
    const auto fitted = run_stage("adaptive", [&] { return fit_adaptive(constituents, *valid); });
    const auto ev = run_stage("adaptive test", [&] { return evaluate_adaptive(fitted, *test); });
    // fit_adaptive orders constituents by dimension; report lambda in that order
    json lambdas = json::array();
    for (std::size_t l = 0; l < fitted.size(); ++l) {
        const auto& c = fitted.classifiers()[l];
        json entry{{"lambda", l + 1}, {"dimension", c.dimension()}, {"k", c.k()},
                   {"bandwidth", fitted.local_errors()[l].bandwidth()}, {"share", ev.lambda_share[l]}};
        for (std::size_t i = 0; i < sels.size(); ++i)
            if (sels[i].columns == c.columns()) entry["stats"] = sels[i].name, entry["test_error"] = per[i]["test_error"];
        lambdas.push_back(entry);
    }
    write_json({{"version", kReportVersion},
                {"constituents", per},
                {"lambdas", lambdas},
                {"adaptive_error", ev.error},
                {"lambda_share", ev.lambda_share},
                {"lda_axes", fitted.projection().rows()},
                {"lda_center", fitted.projection().center()},
                {"lda_scale", fitted.projection().scale()},
                {"lda_fallback", fitted.lda_fallback()}},
               a.out);
    return 0;
}

struct RunArgs {
    std::string config, out;
    std::optional<int> height, width, sweeps, ancillary;
    std::optional<std::size_t> train, valid, test;
};

int cmd_run(const RunArgs& a)
{
    ExperimentConfig c = run_stage("config", [&] {
        ExperimentConfig cfg = load_config(a.config);
        if (a.height) cfg.shape.height = *a.height;
        if (a.width) cfg.shape.width = *a.width;
        if (a.sweeps) cfg.sweeps = *a.sweeps;
        if (a.ancillary) cfg.ancillary = *a.ancillary;
        if (a.train) cfg.train_size = *a.train;
        if (a.valid) cfg.valid_size = *a.valid;
        if (a.test) cfg.test_size = *a.test;
        validate(cfg);
        return cfg;
    });
    const auto result = run_experiment(c);
    run_stage("write", [&] {
        write_experiment(result, a.out);
        return 0;
    });
    for (const auto& s : result.report["subsets"])
        std::cout << s["name"].get<std::string>() << "  k=" << s["k"] << "  test error " << s["test_error"] << '\n';
    if (result.report.contains("adaptive"))
        std::cout << "adaptive  test error " << result.report["adaptive"]["test_error"] << '\n';
    return 0;
}

struct OracleArgs {
    std::string config, obs;
    int nodes = kDefaultQuadratureNodes;
};

int cmd_oracle(const OracleArgs& a)
{
    const auto models = run_stage("config", [&] {
        std::ifstream is(a.config);
        if (!is) throw std::runtime_error("cannot open " + a.config);
        json j;
        try {
            j = json::parse(is);
        } catch (const json::exception& e) {
            throw FormatError(std::string("bad JSON: ") + e.what());
        }
        return model_specs_from_json(j.at("models"));
    });
    const auto y = run_stage("observation", [&] { return load_pgm(a.obs); });
    const auto post = run_stage("oracle", [&] {
        DiscreteField z = y;
        if (y.colors() < models.front().colors)
            z = DiscreteField(y.shape(), models.front().colors, std::vector<int>(y.values().begin(), y.values().end()));
        return exact_model_posterior(z, models, a.nodes);
    });
    write_json({{"posterior", post.posterior}, {"evidence", post.evidence}, {"map_model", post.map_model}}, "-");
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"gibbsel: ABC model choice for hidden Potts fields"};
    app.require_subcommand(1);
    int rc = 0;
    std::function<int()> action;

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "simulate a reference table");
    g->add_option("--config", gen.config, "experiment config JSON")->required()->check(CLI::ExistingFile);
    g->add_option("--n", gen.n, "number of records")->required()->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "master seed")->required();
    g->add_option("--role", gen.role, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));
    g->add_option("--out", gen.out, "table CSV (sidecar <out>.meta.json)")->required();
    g->add_option("--sweeps", gen.sweeps, "Swendsen-Wang sweeps per record");
    g->add_option("--ancillary", gen.ancillary, "appended U(0,1) coordinates");
    g->add_option("--height", gen.height);
    g->add_option("--width", gen.width);
    g->add_option("--keep-fields", gen.keep_fields, "directory for latent and observed fields");
    g->callback([&] { action = [&] { return cmd_gen(gen); }; });

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "choose k on a validation table");
    c->add_option("--train", cal.train)->required()->check(CLI::ExistingFile);
    c->add_option("--valid", cal.valid)->required()->check(CLI::ExistingFile);
    c->add_option("--stats", cal.stats, "2d, 4d, 6d or 2d+ancQ");
    c->add_option("--out", cal.out, "report JSON (stdout if omitted)");
    c->add_option("--grid", cal.grid, "k grid")->delimiter(',');
    c->callback([&] { action = [&] { return cmd_calibrate(cal); }; });

    ClassifyArgs cls;
    auto* k = app.add_subcommand("classify", "kNN vote for one observed field");
    k->add_option("--train", cls.train)->required()->check(CLI::ExistingFile);
    k->add_option("--k", cls.k)->required()->check(CLI::PositiveNumber);
    k->add_option("--stats", cls.stats);
    k->add_option("--obs", cls.obs, ".pgm (discrete) or .csv (Gaussian) field")->required()->check(CLI::ExistingFile);
    k->add_option("--sigma-known", cls.sigma_known, "Gaussian sigma, checked against the table");
    k->add_option("--seed", cls.seed, "k-means seed for Gaussian fields");
    k->callback([&] { action = [&] { return cmd_classify(cls); }; });

    LocalErrorArgs le;
    auto* l = app.add_subcommand("local-error", "local misclassification surface");
    l->add_option("--train", le.train)->required()->check(CLI::ExistingFile);
    l->add_option("--valid", le.valid)->required()->check(CLI::ExistingFile);
    l->add_option("--stats", le.stats);
    l->add_option("--s2", le.s2, "lda or a coordinate list such as 0,1");
    l->add_option("--grid", le.grid)->check(CLI::PositiveNumber);
    l->add_option("--k", le.k, "skip calibration");
    l->add_option("--out", le.out, "surface CSV")->required();
    l->add_option("--report", le.report, "summary JSON (stdout if omitted)");
    l->callback([&] { action = [&] { return cmd_local_error(le); }; });

    AdaptiveArgs ad;
    auto* d = app.add_subcommand("adaptive", "fit and evaluate the adaptive classifier");
    d->add_option("--train", ad.train)->required()->check(CLI::ExistingFile);
    d->add_option("--valid", ad.valid)->required()->check(CLI::ExistingFile);
    d->add_option("--test", ad.test)->required()->check(CLI::ExistingFile);
    d->add_option("--stats", ad.stats, "comma-separated subsets");
    d->add_option("--out", ad.out, "report JSON (stdout if omitted)");
    d->callback([&] { action = [&] { return cmd_adaptive(ad); }; });

    RunArgs run;
    auto* r = app.add_subcommand("run", "full experiment");
    r->add_option("--config", run.config)->required()->check(CLI::ExistingFile);
    r->add_option("--out", run.out, "output directory")->required();
    r->add_option("--height", run.height);
    r->add_option("--width", run.width);
    r->add_option("--sweeps", run.sweeps);
    r->add_option("--ancillary", run.ancillary);
    r->add_option("--train", run.train);
    r->add_option("--valid", run.valid);
    r->add_option("--test", run.test);
    r->callback([&] { action = [&] { return cmd_run(run); }; });

    OracleArgs orc;
    auto* o = app.add_subcommand("oracle", "exact model posterior on a tiny lattice");
    o->add_option("--config", orc.config)->required()->check(CLI::ExistingFile);
    o->add_option("--obs", orc.obs, ".pgm field")->required()->check(CLI::ExistingFile);
    o->add_option("--nodes", orc.nodes, "quadrature nodes per axis")->check(CLI::PositiveNumber);
    o->callback([&] { action = [&] { return cmd_oracle(orc); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        rc = action();
    } catch (const StageError& e) {
        std::cerr << "gibbsel " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "gibbsel " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
        return 1;
    }
    return rc;
}
