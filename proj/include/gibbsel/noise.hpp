#pragma once

// Observation channels of the hidden Potts model: K-color uniform
// misassignment (which contains the binary pixel switch as K = 2) and
// homoscedastic Gaussian noise around the integer colors.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/rng.hpp"

namespace gibbsel {

struct KColorSwitch {
    double alpha;
    int colors;
};

struct GaussianNoise {
    double sigma;
};

using NoiseSpec = std::variant<KColorSwitch, GaussianNoise>;

/// Probability that the K-color channel keeps the latent color:
/// exp(alpha) / (exp(alpha) + (K - 1) exp(-alpha)).
inline double keep_probability(double alpha, int colors)
{
    return 1.0 / (1.0 + static_cast<double>(colors - 1) * std::exp(-2.0 * alpha));
}

/// Probability of one specific other color: exp(-alpha) / (exp(alpha) + (K - 1) exp(-alpha)).
inline double other_color_probability(double alpha, int colors)
{
    return 1.0 / (std::exp(2.0 * alpha) + static_cast<double>(colors - 1));
}

class ContinuousField {
public:
    ContinuousField(LatticeShape shape, std::vector<double> values) : shape_(shape), values_(std::move(values))
    {
        if (!shape.valid()) throw InvalidArgument("field shape must be at least 1x1");
        if (values_.size() != shape.sites())
            throw InvalidArgument("field has " + std::to_string(values_.size()) + " values for " +
                                  std::to_string(shape.sites()) + " sites");
        for (double v : values_)
            if (!std::isfinite(v)) throw InvalidArgument("continuous field values must be finite");
    }

    LatticeShape shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    friend bool operator==(const ContinuousField&, const ContinuousField&) = default;

private:
    LatticeShape shape_;
    std::vector<double> values_;
};

/// Each site keeps its color with keep_probability(alpha, K); otherwise it is
/// redrawn uniformly among the K - 1 other colors.
inline DiscreteField apply_kcolor_noise(const DiscreteField& x, double alpha, Rng& rng)
{
    const int k = x.colors();
    if (k < 2) throw InvalidArgument("K-color noise needs K >= 2");
    if (!std::isfinite(alpha)) throw InvalidArgument("alpha must be finite");
    const double keep = keep_probability(alpha, k);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> other(0, k - 2);
    std::vector<int> y(x.values().begin(), x.values().end());
    for (int& c : y) {
        if (u(rng) < keep) continue;
        const int draw = other(rng);
        c = draw >= c ? draw + 1 : draw;
    }
    return DiscreteField(x.shape(), k, std::move(y));
}

/// y_i = x_i + sigma * eps_i, eps_i iid standard normal.
inline ContinuousField apply_gaussian_noise(const DiscreteField& x, double sigma, Rng& rng)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive and finite");
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(x[i]) + sigma * eps(rng);
    return ContinuousField(x.shape(), std::move(y));
}

/// log P(y_i | x_i) for a discrete observation.
inline double noise_log_density(int y, int x, const NoiseSpec& spec)
{
    const auto* ch = std::get_if<KColorSwitch>(&spec);
    if (ch == nullptr) throw InvalidArgument("discrete observation passed to a Gaussian channel");
    if (ch->colors < 2) throw InvalidArgument("K-color noise needs K >= 2");
    if (y < 0 || y >= ch->colors || x < 0 || x >= ch->colors)
        throw InvalidArgument("color outside {0, ..., K-1}");
    return std::log(y == x ? keep_probability(ch->alpha, ch->colors)
                           : other_color_probability(ch->alpha, ch->colors));
}

/// log density of N(x_i, sigma^2) at y_i.
inline double noise_log_density(double y, int x, const NoiseSpec& spec)
{
    const auto* ch = std::get_if<GaussianNoise>(&spec);
    if (ch == nullptr) throw InvalidArgument("continuous observation passed to a discrete channel");
    if (!(ch->sigma > 0.0)) throw InvalidArgument("sigma must be positive");
    const double z = (y - static_cast<double>(x)) / ch->sigma;
    return -0.5 * z * z - std::log(ch->sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace gibbsel
