#pragma once

// Exact model posterior for hidden Potts models on lattices small enough to
// enumerate every latent configuration.
//
// For a discrete channel the integrand
//     sum_x exp(beta R(G,x)) / Z(G,beta) * prod_i P_alpha(y_i | x_i)
// depends on x only through R(G,x) and the agreement count A(x,y), and the
// uniform priors make the midpoint quadrature a product grid. The evidence
// therefore factors as sum_x wb[R(x)] * wa[A(x,y)] where wb averages
// exp(beta r)/Z over beta nodes and wa averages keep^A * other^(N-A) over
// alpha nodes. Both weight vectors are independent of y.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/model.hpp"
#include "gibbsel/noise.hpp"
#include "gibbsel/potts.hpp"

namespace gibbsel {

inline constexpr int kDefaultQuadratureNodes = 32;

struct ExactPosterior {
    std::vector<double> posterior;  // index m-1
    std::vector<double> evidence;   // e(m, y)
    int map_model = 1;              // argmax, smaller index on ties
};

/// Precomputed evidence evaluator for a fixed lattice shape and model list.
class ExactEvidence {
public:
    ExactEvidence(LatticeShape shape, std::vector<ModelSpec> models, int nodes = kDefaultQuadratureNodes,
                  std::uint64_t cap = kEnumerationCap)
        : shape_(shape), models_(std::move(models))
    {
        if (models_.empty()) throw InvalidArgument("oracle needs at least one model");
        if (nodes < 1) throw InvalidArgument("quadrature needs at least one node per axis");
        const std::size_t n = shape.sites();
        double total_weight = 0.0;
        for (const ModelSpec& m : models_) {
            validate(m);
            if (m.noise.family != NoiseFamily::KColorSwitch)
                throw UnsupportedChannel("exact posterior supports discrete channels only (model " +
                                         std::to_string(m.index) + " is Gaussian)");
            if (m.colors != models_.front().colors)
                throw InvalidArgument("all models must share the number of colors");
            total_weight += m.weight;
        }
        colors_ = models_.front().colors;
        configuration_count(shape, colors_, cap);

        for (const ModelSpec& m : models_) {
            PerModel pm;
            const NeighborhoodGraph graph = build_graph(shape, m.graph);
            pm.r = monochrome_counts_all(graph, colors_, cap);
            std::vector<std::uint64_t> spectrum(graph.edges().size() + 1, 0);
            for (std::uint16_t r : pm.r) ++spectrum[r];

            const auto betas = m.beta.midpoints(nodes);
            pm.beta_weight.assign(spectrum.size(), 0.0);
            for (double beta : betas) {
                const double z = partition_from_spectrum(spectrum, beta);
                for (std::size_t r = 0; r < spectrum.size(); ++r)
                    pm.beta_weight[r] += std::exp(beta * static_cast<double>(r)) / z;
            }
            for (double& w : pm.beta_weight) w /= static_cast<double>(betas.size());

            const auto alphas = m.noise.range.midpoints(nodes);
            pm.agree_weight.assign(n + 1, 0.0);
            for (double alpha : alphas) {
                const double keep = std::log(keep_probability(alpha, colors_));
                const double other = std::log(other_color_probability(alpha, colors_));
                for (std::size_t a = 0; a <= n; ++a)
                    pm.agree_weight[a] +=
                        std::exp(static_cast<double>(a) * keep + static_cast<double>(n - a) * other);
            }
            for (double& w : pm.agree_weight) w /= static_cast<double>(alphas.size());
            pm.prior = m.weight / total_weight;
            per_model_.push_back(std::move(pm));
        }
    }

    const std::vector<ModelSpec>& models() const noexcept { return models_; }

    /// e(m, y) for every model.
    std::vector<double> evidence(const DiscreteField& y) const
    {
        if (y.shape() != shape_) throw InvalidArgument("observation shape does not match the oracle lattice");
        if (y.colors() != colors_) throw InvalidArgument("observation color count does not match the models");
        const std::size_t n = y.size();
        const std::uint64_t total = per_model_.front().r.size();
        // histogram of (R, A) pairs per model
        std::vector<double> out(per_model_.size(), 0.0);
        std::vector<std::vector<std::uint64_t>> hist(per_model_.size());
        for (std::size_t m = 0; m < per_model_.size(); ++m)
            hist[m].assign(per_model_[m].beta_weight.size() * (n + 1), 0);

        auto accumulate = [&](std::uint64_t idx, std::size_t agree) {
            for (std::size_t m = 0; m < per_model_.size(); ++m)
                ++hist[m][static_cast<std::size_t>(per_model_[m].r[idx]) * (n + 1) + agree];
        };
        if (colors_ == 2) {
            const std::uint64_t yidx = configuration_index(y);
            for (std::uint64_t idx = 0; idx < total; ++idx)
                accumulate(idx, n - static_cast<std::size_t>(std::popcount(idx ^ yidx)));
        } else {
            std::vector<int> digits(n, 0);
            std::size_t agree = 0;
            for (std::size_t i = 0; i < n; ++i) agree += y[i] == 0;
            for (std::uint64_t idx = 0; idx < total; ++idx) {
                accumulate(idx, agree);
                for (std::size_t i = 0; i < n; ++i) {
                    agree -= digits[i] == y[i];
                    if (++digits[i] < colors_) {
                        agree += digits[i] == y[i];
                        break;
                    }
                    digits[i] = 0;
                    agree += y[i] == 0;
                }
            }
        }
        for (std::size_t m = 0; m < per_model_.size(); ++m) {
            const auto& pm = per_model_[m];
            double e = 0.0;
            for (std::size_t r = 0; r < pm.beta_weight.size(); ++r)
                for (std::size_t a = 0; a <= n; ++a) {
                    const std::uint64_t c = hist[m][r * (n + 1) + a];
                    if (c != 0) e += static_cast<double>(c) * pm.beta_weight[r] * pm.agree_weight[a];
                }
            out[m] = e;
        }
        return out;
    }

    ExactPosterior posterior(const DiscreteField& y) const
    {
        ExactPosterior out;
        out.evidence = evidence(y);
        out.posterior.resize(out.evidence.size());
        double total = 0.0;
        for (std::size_t m = 0; m < out.evidence.size(); ++m) {
            out.posterior[m] = per_model_[m].prior * out.evidence[m];
            total += out.posterior[m];
        }
        for (double& p : out.posterior) p /= total;
        const auto best = std::max_element(out.posterior.begin(), out.posterior.end());
        out.map_model = models_[static_cast<std::size_t>(best - out.posterior.begin())].index;
        return out;
    }

private:
    struct PerModel {
        std::vector<std::uint16_t> r;
        std::vector<double> beta_weight;
        std::vector<double> agree_weight;
        double prior = 0.0;
    };

    LatticeShape shape_;
    std::vector<ModelSpec> models_;
    int colors_ = 2;
    std::vector<PerModel> per_model_;
};

/// pi(m | y) by exhaustive latent enumeration and midpoint quadrature over the
/// (noise, beta) prior rectangle of each model.
inline ExactPosterior exact_model_posterior(const DiscreteField& y_obs, const std::vector<ModelSpec>& models,
                                            int nodes = kDefaultQuadratureNodes)
{
    return ExactEvidence(y_obs.shape(), models, nodes).posterior(y_obs);
}

/// Largest change in any posterior probability when the node count is doubled.
inline double quadrature_convergence(const DiscreteField& y_obs, const std::vector<ModelSpec>& models,
                                     int nodes = kDefaultQuadratureNodes)
{
    const auto coarse = exact_model_posterior(y_obs, models, nodes).posterior;
    const auto fine = exact_model_posterior(y_obs, models, 2 * nodes).posterior;
    double delta = 0.0;
    for (std::size_t m = 0; m < coarse.size(); ++m) delta = std::max(delta, std::abs(coarse[m] - fine[m]));
    return delta;
}

}  // namespace gibbsel
