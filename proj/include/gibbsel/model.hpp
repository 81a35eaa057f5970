#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/rng.hpp"

namespace gibbsel {

/// Uniform prior on [low, high]; low == high is a point mass.
struct Interval {
    double low = 0.0;
    double high = 0.0;

    bool fixed() const noexcept { return low == high; }
    double width() const noexcept { return high - low; }

    double sample(Rng& rng) const
    {
        if (fixed()) return low;
        return std::uniform_real_distribution<double>(low, high)(rng);
    }

    /// Midpoints of `nodes` equal cells (a single node for a point mass).
    std::vector<double> midpoints(int nodes) const
    {
        if (fixed()) return {low};
        std::vector<double> out(static_cast<std::size_t>(nodes));
        for (int i = 0; i < nodes; ++i) out[static_cast<std::size_t>(i)] = low + (i + 0.5) * width() / nodes;
        return out;
    }
};

enum class NoiseFamily { KColorSwitch, Gaussian };

inline std::string_view to_string(NoiseFamily f) { return f == NoiseFamily::KColorSwitch ? "kcolor" : "gaussian"; }

inline NoiseFamily parse_noise_family(std::string_view s)
{
    if (s == "kcolor" || s == "switch") return NoiseFamily::KColorSwitch;
    if (s == "gaussian") return NoiseFamily::Gaussian;
    throw InvalidArgument("unknown noise family '" + std::string(s) + "' (expected kcolor or gaussian)");
}

/// Noise family with a uniform prior on its scalar (alpha or sigma).
struct NoisePrior {
    NoiseFamily family = NoiseFamily::KColorSwitch;
    Interval range;
};

/// One competing hidden Potts model: latent graph, color count, priors on
/// beta and on the noise parameter, and prior weight pi(m).
struct ModelSpec {
    int index = 1;  // 1-based model number
    GraphKind graph = GraphKind::G4;
    int colors = 2;
    Interval beta;
    NoisePrior noise;
    double weight = 1.0;
};

inline void validate(const ModelSpec& m)
{
    const std::string tag = "model " + std::to_string(m.index) + ": ";
    if (m.colors < 2) throw InvalidArgument(tag + "needs at least 2 colors");
    if (!(m.beta.low >= 0.0 && m.beta.low < m.beta.high) || !std::isfinite(m.beta.high))
        throw InvalidArgument(tag + "beta prior must satisfy 0 <= low < high");
    if (!(m.noise.range.low <= m.noise.range.high) || !std::isfinite(m.noise.range.high) ||
        !std::isfinite(m.noise.range.low))
        throw InvalidArgument(tag + "noise prior must satisfy low <= high");
    if (m.noise.family == NoiseFamily::Gaussian && !(m.noise.range.low > 0.0))
        throw InvalidArgument(tag + "Gaussian sigma prior must be positive");
    if (!(m.weight > 0.0)) throw InvalidArgument(tag + "prior weight must be positive");
}

/// Checks every spec, 1..M numbering and weights summing to one.
inline void validate(const std::vector<ModelSpec>& specs)
{
    if (specs.empty()) throw InvalidArgument("at least one model is required");
    double total = 0.0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        validate(specs[i]);
        if (specs[i].index != static_cast<int>(i) + 1)
            throw InvalidArgument("models must be numbered 1..M in order");
        if (specs[i].colors != specs.front().colors)
            throw InvalidArgument("all models must share the number of colors");
        total += specs[i].weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("model prior weights must sum to 1");
}

}  // namespace gibbsel
