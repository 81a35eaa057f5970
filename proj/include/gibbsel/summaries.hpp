#pragma once

// Geometric summaries of a discrete field: monochrome edge counts (R),
// component counts (T) and largest component sizes (U) of the graphs induced
// by G4 and G8, plus 1-D k-means quantization for continuous observations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/noise.hpp"
#include "gibbsel/rng.hpp"

namespace gibbsel {

inline constexpr std::size_t kSummaryDim = 6;
inline constexpr std::array<std::string_view, kSummaryDim> kSummaryNames{"r4", "r8", "t4", "t8", "u4", "u8"};

/// (r4, r8, t4, t8, u4, u8).
struct SummaryVector {
    std::array<std::int64_t, kSummaryDim> values{};

    std::int64_t r4() const noexcept { return values[0]; }
    std::int64_t r8() const noexcept { return values[1]; }
    std::int64_t t4() const noexcept { return values[2]; }
    std::int64_t t8() const noexcept { return values[3]; }
    std::int64_t u4() const noexcept { return values[4]; }
    std::int64_t u8() const noexcept { return values[5]; }

    friend bool operator==(const SummaryVector&, const SummaryVector&) = default;
};

/// Nested subsets: first 2, 4 or 6 coordinates.
enum class StatSubset { D2 = 2, D4 = 4, D6 = 6 };

inline std::size_t dimension(StatSubset s) { return static_cast<std::size_t>(s); }

inline StatSubset parse_stat_subset(std::string_view s)
{
    if (s == "2d" || s == "2D" || s == "D2") return StatSubset::D2;
    if (s == "4d" || s == "4D" || s == "D4") return StatSubset::D4;
    if (s == "6d" || s == "6D" || s == "D6") return StatSubset::D6;
    throw InvalidArgument("unknown statistic subset '" + std::string(s) + "' (expected 2d, 4d or 6d)");
}

inline std::string to_string(StatSubset s) { return std::to_string(dimension(s)) + "d"; }

inline std::vector<double> project(const SummaryVector& v, StatSubset subset)
{
    const std::size_t d = dimension(subset);
    return std::vector<double>(v.values.begin(), v.values.begin() + static_cast<std::ptrdiff_t>(d));
}

/// Holds the two graphs for one lattice shape so that repeated summaries do
/// not rebuild them.
class SummaryEngine {
public:
    explicit SummaryEngine(LatticeShape shape)
        : g4_(build_graph(shape, GraphKind::G4)), g8_(build_graph(shape, GraphKind::G8))
    {
    }

    LatticeShape shape() const noexcept { return g4_.shape(); }

    SummaryVector operator()(const DiscreteField& field) const
    {
        const ComponentPartition c4 = induced_components(g4_, field);
        const ComponentPartition c8 = induced_components(g8_, field);
        SummaryVector s;
        s.values = {static_cast<std::int64_t>(monochrome_edge_count(g4_, field)),
                    static_cast<std::int64_t>(monochrome_edge_count(g8_, field)),
                    static_cast<std::int64_t>(c4.count()),
                    static_cast<std::int64_t>(c8.count()),
                    c4.largest(),
                    c8.largest()};
        return s;
    }

private:
    NeighborhoodGraph g4_;
    NeighborhoodGraph g8_;
};

inline SummaryVector geometric_summaries(const DiscreteField& field)
{
    return SummaryEngine(field.shape())(field);
}

// ---------------------------------------------------------------------------
// k-means on site values

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 100;
};

namespace detail {

/// Lloyd iterations on sorted 1-D data. With sorted centers each cluster is a
/// contiguous range, so assignment is a binary search per boundary and the
/// update uses prefix sums. Returns the inertia; `centers` stays sorted.
inline double lloyd_sorted(std::span<const double> x, std::span<const double> prefix,
                           std::span<const double> prefix_sq, std::vector<double>& centers, int max_iterations)
{
    const std::size_t n = x.size();
    const std::size_t k = centers.size();
    std::vector<std::size_t> bounds(k + 1);
    auto assign = [&] {
        bounds[0] = 0;
        bounds[k] = n;
        for (std::size_t j = 1; j < k; ++j) {
            const double mid = 0.5 * (centers[j - 1] + centers[j]);
            // values equal to the midpoint go to the lower cluster
            bounds[j] = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), mid) - x.begin());
            bounds[j] = std::max(bounds[j], bounds[j - 1]);
        }
    };
    auto range_sse = [&](std::size_t lo, std::size_t hi, double c) {
        const double cnt = static_cast<double>(hi - lo);
        const double s = prefix[hi] - prefix[lo];
        const double sq = prefix_sq[hi] - prefix_sq[lo];
        return std::max(0.0, sq - 2.0 * c * s + cnt * c * c);
    };
    for (int it = 0; it < max_iterations; ++it) {
        assign();
        bool changed = false;
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t lo = bounds[j], hi = bounds[j + 1];
            double c = centers[j];
            if (hi > lo) {
                c = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
            } else {
                // empty cluster: reseed at the point farthest from its own center
                double worst = -1.0;
                for (std::size_t m = 0; m < k; ++m) {
                    if (bounds[m + 1] == bounds[m]) continue;
                    const double lo_d = std::abs(x[bounds[m]] - centers[m]);
                    const double hi_d = std::abs(x[bounds[m + 1] - 1] - centers[m]);
                    if (lo_d > worst) { worst = lo_d; c = x[bounds[m]]; }
                    if (hi_d > worst) { worst = hi_d; c = x[bounds[m + 1] - 1]; }
                }
            }
            if (c != centers[j]) changed = true;
            centers[j] = c;
        }
        std::sort(centers.begin(), centers.end());
        if (!changed) break;
    }
    assign();
    double inertia = 0.0;
    for (std::size_t j = 0; j < k; ++j) inertia += range_sse(bounds[j], bounds[j + 1], centers[j]);
    return inertia;
}

}  // namespace detail

/// Sorted cluster centers of a 1-D k-means with k-means++ seeding, keeping
/// the restart with the lowest inertia.
inline std::vector<double> kmeans_centers(std::span<const double> values, int k, Rng& rng,
                                          const KMeansOptions& options = {})
{
    if (k < 1) throw InvalidArgument("k-means needs k >= 1");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    std::size_t n_distinct = x.empty() ? 0 : 1;
    for (std::size_t i = 1; i < x.size(); ++i) n_distinct += x[i] != x[i - 1];
    if (n_distinct < static_cast<std::size_t>(k))
        throw DegenerateInput("k-means with k = " + std::to_string(k) + " on " + std::to_string(n_distinct) +
                              " distinct values");
    const std::size_t n = x.size();
    std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + x[i];
        prefix_sq[i + 1] = prefix_sq[i] + x[i] * x[i];
    }

    std::vector<double> best;
    double best_inertia = std::numeric_limits<double>::infinity();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> d2(n);
    for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        std::vector<double> centers{x[pick(rng)]};
        while (centers.size() < static_cast<std::size_t>(k)) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (double c : centers) m = std::min(m, (x[i] - c) * (x[i] - c));
                d2[i] = m;
                total += m;
            }
            double u = uniform01(rng) * total;
            std::size_t chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                u -= d2[i];
                if (u < 0.0) { chosen = i; break; }
            }
            if (d2[chosen] <= 0.0) {
                // all remaining mass rounded away; take any value not yet a center
                for (std::size_t i = 0; i < n; ++i)
                    if (d2[i] > 0.0) { chosen = i; break; }
            }
            centers.push_back(x[chosen]);
        }
        std::sort(centers.begin(), centers.end());
        const double inertia = detail::lloyd_sorted(x, prefix, prefix_sq, centers, options.max_iterations);
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best = centers;
        }
    }
    return best;
}

/// Quantizes site values into k colors; color c is the cluster with the c-th
/// smallest center.
inline DiscreteField kmeans_quantize(const ContinuousField& y, int k, Rng& rng, const KMeansOptions& options = {})
{
    if (k < 2) throw InvalidArgument("quantization needs k >= 2 colors");
    const std::vector<double> centers = kmeans_centers(y.values(), k, rng, options);
    std::vector<double> mids(centers.size() - 1);
    for (std::size_t j = 0; j + 1 < centers.size(); ++j) mids[j] = 0.5 * (centers[j] + centers[j + 1]);
    std::vector<int> colors(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        colors[i] = static_cast<int>(std::lower_bound(mids.begin(), mids.end(), y[i]) - mids.begin());
    return DiscreteField(y.shape(), k, std::move(colors));
}

}  // namespace gibbsel
