#pragma once

// Reference tables: iid draws (m, theta, S(y)) from the joint Bayesian model,
// each record reproducible from (master seed, record index).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gibbsel/error.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/model.hpp"
#include "gibbsel/noise.hpp"
#include "gibbsel/parallel.hpp"
#include "gibbsel/potts.hpp"
#include "gibbsel/rng.hpp"
#include "gibbsel/summaries.hpp"

namespace gibbsel {

inline constexpr int kTableFormatVersion = 1;

struct ParameterDraw {
    double noise;  // alpha, or sigma for the Gaussian channel
    double beta;

    friend bool operator==(const ParameterDraw&, const ParameterDraw&) = default;
};

/// Independent uniform draws: noise parameter first, then beta.
inline ParameterDraw sample_prior(const ModelSpec& spec, Rng& rng)
{
    ParameterDraw d;
    d.noise = spec.noise.range.sample(rng);
    d.beta = spec.beta.sample(rng);
    return d;
}

struct ReferenceRecord {
    int model = 1;
    ParameterDraw theta{};
    SummaryVector summary;
    std::vector<double> ancillary;  // iid U(0,1), independent of (m, y)

    /// Summaries followed by ancillary coordinates.
    std::vector<double> features() const
    {
        std::vector<double> f(summary.values.begin(), summary.values.end());
        f.insert(f.end(), ancillary.begin(), ancillary.end());
        return f;
    }

    friend bool operator==(const ReferenceRecord&, const ReferenceRecord&) = default;
};

struct TableMetadata {
    std::uint64_t seed = 0;
    LatticeShape shape{};
    int sweeps = 0;
    std::string role = "train";
    std::vector<ModelSpec> specs;
    int ancillary = 0;
};

struct ReferenceTable {
    TableMetadata meta;
    std::vector<ReferenceRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    std::size_t feature_count() const noexcept { return kSummaryDim + static_cast<std::size_t>(meta.ancillary); }

    double feature(std::size_t record, std::size_t column) const
    {
        const ReferenceRecord& r = records[record];
        return column < kSummaryDim ? static_cast<double>(r.summary.values[column])
                                    : r.ancillary[column - kSummaryDim];
    }

    /// Largest model index present (the number of competing models).
    int model_count() const
    {
        int m = static_cast<int>(meta.specs.size());
        for (const auto& r : records) m = std::max(m, r.model);
        return m;
    }
};

inline void validate_role(std::string_view role)
{
    if (role != "train" && role != "valid" && role != "validation" && role != "test")
        throw InvalidArgument("table role must be train, valid or test, got '" + std::string(role) + "'");
}

using ObservedField = std::variant<DiscreteField, ContinuousField>;

/// One full draw from the joint model, fields included.
struct SimulatedRecord {
    ReferenceRecord record;
    DiscreteField latent;
    ObservedField observed;
};

/// Everything needed to simulate records of one table.
class TableSimulator {
public:
    TableSimulator(std::vector<ModelSpec> specs, LatticeShape shape, int sweeps, std::uint64_t seed,
                   int ancillary = 0)
        : specs_(std::move(specs)), shape_(shape), sweeps_(sweeps), seed_(seed), ancillary_(ancillary),
          engine_(shape), g4_(build_graph(shape, GraphKind::G4)), g8_(build_graph(shape, GraphKind::G8))
    {
        validate(specs_);
        if (sweeps < 1) throw InvalidArgument("sweeps must be >= 1");
        if (ancillary < 0) throw InvalidArgument("ancillary count must be >= 0");
    }

    const std::vector<ModelSpec>& specs() const noexcept { return specs_; }

    SimulatedRecord simulate(std::uint64_t index) const
    {
        Rng rng = make_stream(seed_, index, StreamTag::record);
        double u = uniform01(rng);
        std::size_t mi = 0;
        while (mi + 1 < specs_.size() && u >= specs_[mi].weight) {
            u -= specs_[mi].weight;
            ++mi;
        }
        const ModelSpec& spec = specs_[mi];
        ReferenceRecord rec;
        rec.model = spec.index;
        rec.theta = sample_prior(spec, rng);

        const PottsSpec potts(spec.graph == GraphKind::G4 ? g4_ : g8_, spec.colors, rec.theta.beta);
        DiscreteField latent = swendsen_wang_sample(potts, sweeps_, rng);
        ObservedField observed = latent;
        if (spec.noise.family == NoiseFamily::KColorSwitch) {
            DiscreteField y = apply_kcolor_noise(latent, rec.theta.noise, rng);
            rec.summary = engine_(y);
            observed = std::move(y);
        } else {
            ContinuousField y = apply_gaussian_noise(latent, rec.theta.noise, rng);
            rec.summary = engine_(kmeans_quantize(y, spec.colors, rng));
            observed = std::move(y);
        }
        if (ancillary_ > 0) {
            Rng aux = make_stream(seed_, index, StreamTag::ancillary);
            rec.ancillary.resize(static_cast<std::size_t>(ancillary_));
            for (double& a : rec.ancillary) a = uniform01(aux);
        }
        return {std::move(rec), std::move(latent), std::move(observed)};
    }

private:
    std::vector<ModelSpec> specs_;
    LatticeShape shape_;
    int sweeps_;
    std::uint64_t seed_;
    int ancillary_;
    SummaryEngine engine_;
    NeighborhoodGraph g4_;
    NeighborhoodGraph g8_;
};

struct GenerationOptions {
    int ancillary = 0;
    /// Called with every simulated record (fields included), possibly from
    /// several threads at once.
    std::function<void(std::size_t, const SimulatedRecord&)> field_sink;
};

/// Simulates n records in parallel; the table is identical for any schedule.
inline ReferenceTable generate_table(const std::vector<ModelSpec>& specs, std::size_t n, LatticeShape shape,
                                     int sweeps, std::uint64_t seed, std::string role = "train",
                                     const GenerationOptions& options = {})
{
    if (n < 1) throw InvalidArgument("table size must be >= 1");
    validate_role(role);
    const TableSimulator sim(specs, shape, sweeps, seed, options.ancillary);
    ReferenceTable table;
    table.meta = {seed, shape, sweeps, std::move(role), specs, options.ancillary};
    table.records.resize(n);
    parallel_for(n, [&](std::size_t i) {
        try {
            SimulatedRecord s = sim.simulate(i);
            if (options.field_sink) options.field_sink(i, s);
            table.records[i] = std::move(s.record);
        } catch (const std::exception& e) {
            throw std::runtime_error("record " + std::to_string(i) + ": " + e.what());
        }
    }, 4);
    return table;
}

// ---------------------------------------------------------------------------
// Scales

/// Sample standard deviation (denominator n - 1) of every feature column.
inline std::vector<double> scales(const ReferenceTable& table)
{
    if (table.size() < 2) throw InvalidArgument("scales need at least two records");
    const std::size_t d = table.feature_count();
    const double n = static_cast<double>(table.size());
    std::vector<double> out(d);
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < table.size(); ++i) mean += table.feature(i, c);
        mean /= n;
        double ss = 0.0;
        for (std::size_t i = 0; i < table.size(); ++i) {
            const double dev = table.feature(i, c) - mean;
            ss += dev * dev;
        }
        out[c] = std::sqrt(ss / (n - 1.0));
        if (!(out[c] > 0.0))
            throw DegenerateInput("coordinate " + std::to_string(c) + " is constant over the table");
    }
    return out;
}

/// As scales(), but constant coordinates get scale 1.
inline std::vector<double> scales_or_unit(const ReferenceTable& table)
{
    if (table.size() < 2) return std::vector<double>(table.feature_count(), 1.0);
    std::vector<double> out(table.feature_count(), 1.0);
    const double n = static_cast<double>(table.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        double mean = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < table.size(); ++i) mean += table.feature(i, c);
        mean /= n;
        for (std::size_t i = 0; i < table.size(); ++i) ss += std::pow(table.feature(i, c) - mean, 2);
        const double s = std::sqrt(ss / (n - 1.0));
        if (s > 0.0) out[c] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence: CSV body plus a JSON metadata sidecar at <path>.meta.json

namespace detail {

inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::size_t line)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw FormatError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

inline nlohmann::json to_json(const Interval& i) { return nlohmann::json::array({i.low, i.high}); }

inline Interval interval_from_json(const nlohmann::json& j)
{
    if (j.is_number()) return {j.get<double>(), j.get<double>()};
    if (!j.is_array() || j.size() != 2) throw FormatError("interval must be [low, high] or a number");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json to_json(const ModelSpec& m)
{
    return {{"index", m.index},
            {"graph", std::string(to_string(m.graph))},
            {"colors", m.colors},
            {"beta", to_json(m.beta)},
            {"noise", {{"family", std::string(to_string(m.noise.family))}, {"range", to_json(m.noise.range)}}},
            {"weight", m.weight}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j, int default_index)
{
    ModelSpec m;
    m.index = j.value("index", default_index);
    m.graph = parse_graph_kind(j.at("graph").get<std::string>());
    m.colors = j.value("colors", 2);
    m.beta = interval_from_json(j.at("beta"));
    const auto& noise = j.at("noise");
    m.noise.family = parse_noise_family(noise.at("family").get<std::string>());
    m.noise.range = interval_from_json(noise.at("range"));
    m.weight = j.value("weight", 0.0);
    return m;
}

/// Reads a model list; missing weights default to uniform.
inline std::vector<ModelSpec> model_specs_from_json(const nlohmann::json& j)
{
    std::vector<ModelSpec> specs;
    for (std::size_t i = 0; i < j.size(); ++i) specs.push_back(model_spec_from_json(j[i], static_cast<int>(i) + 1));
    bool any_weight = false;
    for (const auto& m : specs) any_weight |= m.weight > 0.0;
    if (!any_weight)
        for (auto& m : specs) m.weight = 1.0 / static_cast<double>(specs.size());
    validate(specs);
    return specs;
}

inline nlohmann::json to_json(const TableMetadata& meta)
{
    nlohmann::json specs = nlohmann::json::array();
    for (const auto& m : meta.specs) specs.push_back(to_json(m));
    return {{"version", kTableFormatVersion}, {"seed", meta.seed},   {"height", meta.shape.height},
            {"width", meta.shape.width},      {"sweeps", meta.sweeps}, {"role", meta.role},
            {"ancillary", meta.ancillary},    {"specs", specs}};
}

inline TableMetadata metadata_from_json(const nlohmann::json& j)
{
    TableMetadata meta;
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.shape = {j.at("height").get<int>(), j.at("width").get<int>()};
    meta.sweeps = j.at("sweeps").get<int>();
    meta.role = j.at("role").get<std::string>();
    meta.ancillary = j.value("ancillary", 0);
    meta.specs = model_specs_from_json(j.at("specs"));
    return meta;
}

inline std::string metadata_path(const std::filesystem::path& csv)
{
    return csv.string() + ".meta.json";
}

inline void write_table_csv(std::ostream& os, const ReferenceTable& table)
{
    os << "model,alpha,beta";
    for (auto name : kSummaryNames) os << ',' << name;
    for (int a = 0; a < table.meta.ancillary; ++a) os << ",a" << (a + 1);
    os << '\n';
    for (const auto& r : table.records) {
        os << r.model << ',' << detail::format_double(r.theta.noise) << ',' << detail::format_double(r.theta.beta);
        for (auto v : r.summary.values) os << ',' << v;
        for (double a : r.ancillary) os << ',' << detail::format_double(a);
        os << '\n';
    }
}

inline void save_table(const ReferenceTable& table, const std::filesystem::path& csv)
{
    {
        std::ofstream os(csv, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + csv.string());
        write_table_csv(os, table);
    }
    std::ofstream meta(metadata_path(csv), std::ios::binary);
    if (!meta) throw std::runtime_error("cannot write " + metadata_path(csv));
    meta << to_json(table.meta).dump(2) << '\n';
}

/// Parses the CSV body; `meta` supplies the schema (ancillary count).
inline ReferenceTable read_table_csv(std::istream& is, TableMetadata meta)
{
    ReferenceTable table;
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty table file");
    const auto header = detail::split(line, ',');
    if (header.size() < 3 + kSummaryDim || header[0] != "model")
        throw FormatError("table header must start with model,alpha,beta,r4,r8,t4,t8,u4,u8");
    const std::size_t ancillary = header.size() - 3 - kSummaryDim;
    meta.ancillary = static_cast<int>(ancillary);
    table.meta = std::move(meta);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != header.size())
            throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                              " columns");
        ReferenceRecord r;
        r.model = static_cast<int>(detail::parse_double(cells[0], lineno));
        r.theta.noise = detail::parse_double(cells[1], lineno);
        r.theta.beta = detail::parse_double(cells[2], lineno);
        for (std::size_t c = 0; c < kSummaryDim; ++c)
            r.summary.values[c] = static_cast<std::int64_t>(detail::parse_double(cells[3 + c], lineno));
        for (std::size_t a = 0; a < ancillary; ++a)
            r.ancillary.push_back(detail::parse_double(cells[3 + kSummaryDim + a], lineno));
        table.records.push_back(std::move(r));
    }
    return table;
}

/// Loads a table and its sidecar (when present).
inline ReferenceTable load_table(const std::filesystem::path& csv)
{
    std::ifstream is(csv, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + csv.string());
    TableMetadata meta;
    if (std::ifstream ms(metadata_path(csv)); ms) {
        nlohmann::json j;
        ms >> j;
        meta = metadata_from_json(j);
    }
    return read_table_csv(is, std::move(meta));
}

}  // namespace gibbsel
