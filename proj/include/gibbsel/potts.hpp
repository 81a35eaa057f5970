#pragma once

// Potts model: Swendsen-Wang simulation and exhaustive-enumeration oracles
// for lattices small enough to list every configuration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/rng.hpp"

namespace gibbsel {

/// pi(x | G, beta) proportional to exp(beta * R(G, x)).
struct PottsSpec {
    NeighborhoodGraph graph;
    int colors;
    double beta;

    PottsSpec(NeighborhoodGraph g, int k, double b) : graph(std::move(g)), colors(k), beta(b)
    {
        if (k < 2) throw InvalidArgument("Potts model needs at least 2 colors");
        if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("beta must be finite and >= 0");
    }
};

/// max(1000, 2 * sqrt(N) * 100) sweeps.
inline int default_sweeps(LatticeShape shape)
{
    const double scaled = 200.0 * std::sqrt(static_cast<double>(shape.sites()));
    return std::max(1000, static_cast<int>(std::ceil(scaled)));
}

namespace detail {

struct DisjointSets {
    std::vector<int> parent;
    std::vector<int> size;

    void reset(std::size_t n)
    {
        parent.resize(n);
        std::iota(parent.begin(), parent.end(), 0);
        size.assign(n, 1);
    }

    int find(int x) noexcept
    {
        while (parent[static_cast<std::size_t>(x)] != x) {
            auto& p = parent[static_cast<std::size_t>(x)];
            p = parent[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }

    void unite(int a, int b) noexcept
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size[static_cast<std::size_t>(a)] < size[static_cast<std::size_t>(b)]) std::swap(a, b);
        parent[static_cast<std::size_t>(b)] = a;
        size[static_cast<std::size_t>(a)] += size[static_cast<std::size_t>(b)];
    }
};

}  // namespace detail

/// Reusable buffers for repeated sweeps on one lattice.
class SwendsenWangWorkspace {
public:
    detail::DisjointSets clusters;
    std::vector<int> new_color;
};

/// One Swendsen-Wang sweep in place: each monochrome edge is activated with
/// probability 1 - exp(-beta), then every bond cluster gets a uniform color.
/// Clusters are recolored in order of their first site in a row-major scan.
inline void swendsen_wang_sweep(const PottsSpec& spec, DiscreteField& field, Rng& rng,
                                SwendsenWangWorkspace& ws)
{
    detail::check_same_shape(spec.graph, field);
    const std::size_t n = field.size();
    const double bond = -std::expm1(-spec.beta);
    ws.clusters.reset(n);
    if (bond > 0.0) {
        // u < bond with u = draw / 2^64, compared in integers
        const double scaled = std::ldexp(bond, 64);
        const std::uint64_t threshold = scaled >= 18446744073709551615.0 ? ~std::uint64_t{0}
                                                                         : static_cast<std::uint64_t>(scaled);
        const auto colors = field.values();
        for (const Edge& e : spec.graph.edges()) {
            if (colors[static_cast<std::size_t>(e.a)] == colors[static_cast<std::size_t>(e.b)] && rng() < threshold)
                ws.clusters.unite(e.a, e.b);
        }
    }
    ws.new_color.assign(n, -1);
    std::uniform_int_distribution<int> color(0, spec.colors - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = static_cast<std::size_t>(ws.clusters.find(static_cast<int>(i)));
        if (ws.new_color[root] < 0) ws.new_color[root] = color(rng);
        field.set(i, ws.new_color[root]);
    }
}

/// Uniform iid field on {0, ..., K-1}.
inline DiscreteField uniform_field(LatticeShape shape, int colors, Rng& rng)
{
    std::uniform_int_distribution<int> color(0, colors - 1);
    std::vector<int> values(shape.sites());
    for (int& v : values) v = color(rng);
    return DiscreteField(shape, colors, std::move(values));
}

/// Field after `iterations` sweeps from a uniform random start.
inline DiscreteField swendsen_wang_sample(const PottsSpec& spec, int iterations, Rng& rng)
{
    if (iterations < 1) throw InvalidArgument("Swendsen-Wang needs at least one iteration");
    DiscreteField field = uniform_field(spec.graph.shape(), spec.colors, rng);
    SwendsenWangWorkspace ws;
    for (int it = 0; it < iterations; ++it) swendsen_wang_sweep(spec, field, rng, ws);
    return field;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

/// Default cap on K^N for the enumeration oracles.
inline constexpr std::uint64_t kEnumerationCap = std::uint64_t{1} << 24;

/// K^N, or throws CapacityError when it exceeds `cap`.
inline std::uint64_t configuration_count(LatticeShape shape, int colors, std::uint64_t cap = kEnumerationCap)
{
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < shape.sites(); ++i) {
        if (count > cap / static_cast<std::uint64_t>(colors))
            throw CapacityError("enumeration of " + std::to_string(colors) + "^" +
                                std::to_string(shape.sites()) + " configurations exceeds the cap of " +
                                std::to_string(cap));
        count *= static_cast<std::uint64_t>(colors);
    }
    return count;
}

/// Configuration index <-> field: site i holds digit i (site 0 least
/// significant) in base K.
inline DiscreteField configuration_field(LatticeShape shape, int colors, std::uint64_t index)
{
    std::vector<int> values(shape.sites());
    for (int& v : values) {
        v = static_cast<int>(index % static_cast<std::uint64_t>(colors));
        index /= static_cast<std::uint64_t>(colors);
    }
    return DiscreteField(shape, colors, std::move(values));
}

inline std::uint64_t configuration_index(const DiscreteField& field)
{
    std::uint64_t index = 0;
    for (std::size_t i = field.size(); i-- > 0;)
        index = index * static_cast<std::uint64_t>(field.colors()) + static_cast<std::uint64_t>(field[i]);
    return index;
}

/// Calls f(index, R(G, x)) for every configuration in index order. Sites 0
/// and 1 vary fastest and are handled in blocks of K^2 from per-color
/// neighbor counts; the other sites update R incrementally as the odometer
/// rolls over.
template <typename F>
void for_each_monochrome_count(const NeighborhoodGraph& graph, int colors, std::uint64_t cap, F&& f)
{
    const std::uint64_t total = configuration_count(graph.shape(), colors, cap);
    const std::size_t n = graph.sites();
    const auto k = static_cast<std::uint64_t>(colors);
    if (n == 1) {
        for (std::uint64_t c = 0; c < k; ++c) f(c, 0);
        return;
    }
    bool adjacent = false;
    for (int nb : graph.neighbors(0)) adjacent |= nb == 1;
    std::vector<int> digits(n, 0);
    // monochrome edges touching neither site 0 nor site 1
    int rest = static_cast<int>(graph.edges().size() + (adjacent ? 1 : 0) - graph.neighbors(0).size() -
                                graph.neighbors(1).size());
    auto set_digit = [&](std::size_t i, int value) {
        for (int nb : graph.neighbors(i)) {
            if (nb < 2) continue;
            const int d = digits[static_cast<std::size_t>(nb)];
            rest += (d == value) - (d == digits[i]);
        }
        digits[i] = value;
    };
    std::vector<int> h0(k), h1(k);
    auto count_hits = [&](std::size_t site, std::vector<int>& h) {
        std::fill(h.begin(), h.end(), 0);
        for (int nb : graph.neighbors(site))
            if (nb >= 2) ++h[static_cast<std::size_t>(digits[static_cast<std::size_t>(nb)])];
    };
    for (std::uint64_t block = 0; block < total; block += k * k) {
        count_hits(0, h0);
        count_hits(1, h1);
        std::uint64_t idx = block;
        for (std::uint64_t c1 = 0; c1 < k; ++c1) {
            const int base = rest + h1[c1];
            for (std::uint64_t c0 = 0; c0 < k; ++c0) f(idx++, base + h0[c0] + (adjacent && c0 == c1 ? 1 : 0));
        }
        for (std::size_t i = 2; i < n; ++i) {
            if (digits[i] + 1 < colors) {
                set_digit(i, digits[i] + 1);
                break;
            }
            set_digit(i, 0);
        }
    }
}

/// R(G, x) for every configuration x, in configuration-index order.
inline std::vector<std::uint16_t> monochrome_counts_all(const NeighborhoodGraph& graph, int colors,
                                                        std::uint64_t cap = kEnumerationCap)
{
    std::vector<std::uint16_t> out(configuration_count(graph.shape(), colors, cap));
    for_each_monochrome_count(graph, colors, cap,
                              [&](std::uint64_t idx, int r) { out[idx] = static_cast<std::uint16_t>(r); });
    return out;
}

/// Number of configurations with R(G, x) = r, for r = 0..|E|.
inline std::vector<std::uint64_t> monochrome_spectrum(const NeighborhoodGraph& graph, int colors,
                                                      std::uint64_t cap = kEnumerationCap)
{
    std::vector<std::uint64_t> spectrum(graph.edges().size() + 1, 0);
    for_each_monochrome_count(graph, colors, cap, [&](std::uint64_t, int r) { ++spectrum[static_cast<std::size_t>(r)]; });
    return spectrum;
}

/// Z = sum over r of count(r) * exp(beta * r).
inline double partition_from_spectrum(std::span<const std::uint64_t> spectrum, double beta)
{
    double z = 0.0;
    for (std::size_t r = 0; r < spectrum.size(); ++r)
        if (spectrum[r] != 0) z += static_cast<double>(spectrum[r]) * std::exp(beta * static_cast<double>(r));
    return z;
}

inline double partition_function(const PottsSpec& spec, std::uint64_t cap = kEnumerationCap)
{
    return partition_from_spectrum(monochrome_spectrum(spec.graph, spec.colors, cap), spec.beta);
}

/// Exact Potts distribution over all K^N configurations.
struct ExactPottsTable {
    ExactPottsTable(PottsSpec s, std::vector<double> p, double z)
        : spec(std::move(s)), probabilities(std::move(p)), partition(z)
    {
    }

    PottsSpec spec;
    std::vector<double> probabilities;  // by configuration index
    double partition;

    /// E[R(G, x)].
    double mean_monochrome() const
    {
        const auto counts = monochrome_counts_all(spec.graph, spec.colors);
        double mean = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) mean += probabilities[i] * counts[i];
        return mean;
    }

    /// Inverse-CDF draw of one configuration.
    DiscreteField sample(Rng& rng) const
    {
        if (cdf_.empty()) {
            cdf_.resize(probabilities.size());
            std::partial_sum(probabilities.begin(), probabilities.end(), cdf_.begin());
        }
        const double u = uniform01(rng) * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto idx = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(
            it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
        return configuration_field(spec.graph.shape(), spec.colors, idx);
    }

private:
    mutable std::vector<double> cdf_;
};

inline ExactPottsTable exact_distribution(const PottsSpec& spec, std::uint64_t cap = kEnumerationCap)
{
    const auto counts = monochrome_counts_all(spec.graph, spec.colors, cap);
    std::vector<double> weight_by_r(spec.graph.edges().size() + 1);
    for (std::size_t r = 0; r < weight_by_r.size(); ++r)
        weight_by_r[r] = std::exp(spec.beta * static_cast<double>(r));
    std::vector<double> probabilities(counts.size());
    double z = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        probabilities[i] = weight_by_r[counts[i]];
        z += probabilities[i];
    }
    for (double& p : probabilities) p /= z;
    return ExactPottsTable(spec, std::move(probabilities), z);
}

}  // namespace gibbsel
