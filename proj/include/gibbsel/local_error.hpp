#pragma once

// Local misclassification rate tau(S2(y)): Nadaraya-Watson regression of the
// error indicators of a classifier on a projection S2 of the summaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/knn.hpp"
#include "gibbsel/parallel.hpp"
#include "gibbsel/reftable.hpp"

namespace gibbsel {

/// z = rows * ((x - center) / scale), applied to full feature vectors.
class AffineProjection {
public:
    AffineProjection() = default;

    AffineProjection(std::vector<double> center, std::vector<double> scale, std::vector<std::vector<double>> rows)
        : center_(std::move(center)), scale_(std::move(scale)), rows_(std::move(rows))
    {
        if (center_.size() != scale_.size()) throw InvalidArgument("projection center/scale size mismatch");
        for (const auto& r : rows_)
            if (r.size() != center_.size()) throw InvalidArgument("projection row has the wrong length");
        for (double s : scale_)
            if (!(s > 0.0)) throw InvalidArgument("projection scales must be positive");
    }

    /// Picks raw coordinates.
    static AffineProjection coordinates(std::span<const std::size_t> cols, std::size_t input_dim)
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t c : cols) {
            if (c >= input_dim) throw InvalidArgument("projection coordinate out of range");
            std::vector<double> r(input_dim, 0.0);
            r[c] = 1.0;
            rows.push_back(std::move(r));
        }
        return AffineProjection(std::vector<double>(input_dim, 0.0), std::vector<double>(input_dim, 1.0),
                                std::move(rows));
    }

    std::size_t input_dimension() const noexcept { return center_.size(); }
    std::size_t output_dimension() const noexcept { return rows_.size(); }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
    const std::vector<double>& center() const noexcept { return center_; }
    const std::vector<double>& scale() const noexcept { return scale_; }

    std::vector<double> operator()(std::span<const double> x) const
    {
        if (x.size() < center_.size()) throw InvalidArgument("feature vector too short for the projection");
        std::vector<double> z(rows_.size(), 0.0);
        for (std::size_t a = 0; a < rows_.size(); ++a)
            for (std::size_t j = 0; j < center_.size(); ++j) z[a] += rows_[a][j] * (x[j] - center_[j]) / scale_[j];
        return z;
    }

private:
    std::vector<double> center_;
    std::vector<double> scale_;
    std::vector<std::vector<double>> rows_;
};

struct ErrorIndicatorSet {
    std::size_t dim = 0;
    std::vector<double> points;         // row-major, size() x dim
    std::vector<unsigned char> delta;  // 1 when the classifier was wrong

    std::size_t size() const noexcept { return delta.size(); }
    std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, dim}; }

    double mean() const
    {
        double s = 0.0;
        for (unsigned char d : delta) s += d;
        return delta.empty() ? 0.0 : s / static_cast<double>(delta.size());
    }
};

inline ErrorIndicatorSet make_indicator_set(std::size_t dim, std::vector<double> points,
                                            std::vector<unsigned char> delta)
{
    if (dim == 0 || points.size() != dim * delta.size()) throw InvalidArgument("indicator set size mismatch");
    return ErrorIndicatorSet{dim, std::move(points), std::move(delta)};
}

/// delta_j = 1{prediction != m_j} together with S2 of every record.
inline ErrorIndicatorSet error_indicators(const KnnModelChoice& c, const ReferenceTable& table,
                                          const AffineProjection& s2)
{
    if (table.empty()) throw InvalidArgument("error indicators need a non-empty table");
    const auto predicted = predict_table(c, table);
    ErrorIndicatorSet set;
    set.dim = s2.output_dimension();
    set.points.resize(table.size() * set.dim);
    set.delta.resize(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        set.delta[i] = predicted[i] != table.records[i].model;
        const auto z = s2(table.records[i].features());
        std::copy(z.begin(), z.end(), set.points.begin() + static_cast<std::ptrdiff_t>(i * set.dim));
    }
    return set;
}

using Bandwidth = std::vector<double>;

struct KernelSums {
    double weighted = 0.0;  // sum of w_j * delta_j
    double total = 0.0;     // sum of w_j
};

/// Gaussian product kernel sums at `query`.
inline KernelSums kernel_sums(const ErrorIndicatorSet& set, const Bandwidth& h, std::span<const double> query)
{
    if (query.size() != set.dim || h.size() != set.dim) throw InvalidArgument("query/bandwidth dimension mismatch");
    std::vector<double> inv(set.dim);
    for (std::size_t a = 0; a < set.dim; ++a) inv[a] = 1.0 / (2.0 * h[a] * h[a]);
    KernelSums s;
    for (std::size_t j = 0; j < set.size(); ++j) {
        const double* p = &set.points[j * set.dim];
        double q = 0.0;
        for (std::size_t a = 0; a < set.dim; ++a) q += (p[a] - query[a]) * (p[a] - query[a]) * inv[a];
        const double w = std::exp(-q);
        s.total += w;
        if (set.delta[j]) s.weighted += w;
    }
    return s;
}

namespace detail {

inline double nearest_delta(const ErrorIndicatorSet& set, std::span<const double> query)
{
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (std::size_t j = 0; j < set.size(); ++j) {
        const double* p = &set.points[j * set.dim];
        double q = 0.0;
        for (std::size_t a = 0; a < set.dim; ++a) q += (p[a] - query[a]) * (p[a] - query[a]);
        if (q < best) {
            best = q;
            value = set.delta[j];
        }
    }
    return value;
}

}  // namespace detail

/// Nadaraya-Watson estimate; falls back to the nearest point's indicator when
/// every kernel weight underflows.
inline double nw_estimate(const ErrorIndicatorSet& set, const Bandwidth& h, std::span<const double> query)
{
    if (set.size() == 0) throw InvalidArgument("NW estimate needs at least one point");
    const KernelSums s = kernel_sums(set, h, query);
    if (!(s.total > 0.0)) return detail::nearest_delta(set, query);
    return std::clamp(s.weighted / s.total, 0.0, 1.0);
}

/// 15 multipliers log-spaced over [0.1, 10].
inline std::vector<double> default_bandwidth_multipliers()
{
    std::vector<double> m(15);
    for (int i = 0; i < 15; ++i) m[static_cast<std::size_t>(i)] = std::pow(10.0, -1.0 + 2.0 * i / 14.0);
    return m;
}

/// Per-axis std * n^(-1/(4+d)).
inline Bandwidth baseline_bandwidth(const ErrorIndicatorSet& set)
{
    const std::size_t n = set.size();
    if (n < 2) throw InvalidArgument("bandwidth baseline needs at least two points");
    Bandwidth h0(set.dim);
    const double factor = std::pow(static_cast<double>(n), -1.0 / (4.0 + static_cast<double>(set.dim)));
    for (std::size_t a = 0; a < set.dim; ++a) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += set.points[j * set.dim + a];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) ss += std::pow(set.points[j * set.dim + a] - mean, 2);
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sd > 0.0)) throw DegenerateInput("projection axis " + std::to_string(a) + " is constant");
        h0[a] = sd * factor;
    }
    return h0;
}

struct BandwidthSelection {
    Bandwidth bandwidth;
    double multiplier = 1.0;
    std::vector<double> multipliers;
    std::vector<double> loo_scores;  // mean squared leave-one-out error per multiplier
};

/// Leave-one-out squared-error selection of the bandwidth multiplier times
/// the baseline. The smallest bandwidth wins ties.
inline BandwidthSelection select_bandwidth(const ErrorIndicatorSet& set, std::vector<double> multipliers = {})
{
    if (set.size() < 10) throw InvalidArgument("bandwidth calibration needs at least 10 points");
    if (multipliers.empty()) multipliers = default_bandwidth_multipliers();
    std::sort(multipliers.begin(), multipliers.end());
    const Bandwidth h0 = baseline_bandwidth(set);
    const std::size_t n = set.size(), d = set.dim, g = multipliers.size();
    std::vector<double> coef(g);
    for (std::size_t mi = 0; mi < g; ++mi) coef[mi] = 1.0 / (2.0 * multipliers[mi] * multipliers[mi]);
    std::vector<double> inv_h0(d);
    for (std::size_t a = 0; a < d; ++a) inv_h0[a] = 1.0 / h0[a];

    std::vector<double> sq_err(n * g);
    parallel_for(n, [&](std::size_t j) {
        std::vector<double> num(g, 0.0), den(g, 0.0);
        double nearest = std::numeric_limits<double>::infinity();
        double nearest_delta = 0.0;
        const double* pj = &set.points[j * d];
        for (std::size_t l = 0; l < n; ++l) {
            if (l == j) continue;
            const double* pl = &set.points[l * d];
            double q = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                const double u = (pj[a] - pl[a]) * inv_h0[a];
                q += u * u;
            }
            if (q < nearest) {
                nearest = q;
                nearest_delta = set.delta[l];
            }
            // exp(-t) is exactly 0 in double precision beyond t ~ 745.2
            for (std::size_t mi = g; mi-- > 0;) {
                const double t = q * coef[mi];
                if (t > 746.0) break;
                const double w = std::exp(-t);
                den[mi] += w;
                if (set.delta[l]) num[mi] += w;
            }
        }
        for (std::size_t mi = 0; mi < g; ++mi) {
            const double pred = den[mi] > 0.0 ? num[mi] / den[mi] : nearest_delta;
            const double e = static_cast<double>(set.delta[j]) - pred;
            sq_err[j * g + mi] = e * e;
        }
    }, 8);

    BandwidthSelection out;
    out.multipliers = multipliers;
    out.loo_scores.assign(g, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t mi = 0; mi < g; ++mi) out.loo_scores[mi] += sq_err[j * g + mi];
    std::size_t best = 0;
    for (std::size_t mi = 0; mi < g; ++mi) {
        out.loo_scores[mi] /= static_cast<double>(n);
        if (out.loo_scores[mi] < out.loo_scores[best]) best = mi;
    }
    out.multiplier = multipliers[best];
    out.bandwidth.resize(d);
    for (std::size_t a = 0; a < d; ++a) out.bandwidth[a] = h0[a] * out.multiplier;
    return out;
}

inline Bandwidth calibrate_bandwidth(const ErrorIndicatorSet& set, std::vector<double> multipliers = {})
{
    return select_bandwidth(set, std::move(multipliers)).bandwidth;
}

/// 1 - frequency of the predicted model, for S1 = S2.
inline double plug_in_local_error(const ModelVote& vote)
{
    return 1.0 - vote.frequencies.at(static_cast<std::size_t>(vote.predicted - 1));
}

/// Fitted tau-hat: indicator set plus calibrated bandwidth.
class LocalErrorModel {
public:
    LocalErrorModel(ErrorIndicatorSet set, Bandwidth h) : set_(std::move(set)), h_(std::move(h)) {}

    static LocalErrorModel fit(ErrorIndicatorSet set, std::vector<double> multipliers = {})
    {
        Bandwidth h = calibrate_bandwidth(set, std::move(multipliers));
        return LocalErrorModel(std::move(set), std::move(h));
    }

    const ErrorIndicatorSet& indicators() const noexcept { return set_; }
    const Bandwidth& bandwidth() const noexcept { return h_; }

    double operator()(std::span<const double> s2) const { return nw_estimate(set_, h_, s2); }

    /// Low support when the total kernel weight is below 1e-6 * n.
    bool supported(std::span<const double> s2) const
    {
        return kernel_sums(set_, h_, s2).total >= 1e-6 * static_cast<double>(set_.size());
    }

private:
    ErrorIndicatorSet set_;
    Bandwidth h_;
};

struct SurfaceCell {
    double x;
    double y;
    double tau;
    bool supported;
};

struct LocalErrorSurface {
    Bandwidth bandwidth;
    std::vector<double> at_points;  // tau-hat at each table record
    std::vector<SurfaceCell> grid;  // only for 2-D projections
    double global_error = 0.0;      // mean of the indicators

    double mean_at_points() const
    {
        double s = 0.0;
        for (double t : at_points) s += t;
        return at_points.empty() ? 0.0 : s / static_cast<double>(at_points.size());
    }
};

/// Indicators, bandwidth calibration on `table`, then tau-hat at every record
/// and on a resolution x resolution grid spanning the projected points.
inline LocalErrorSurface error_surface(const KnnModelChoice& c, const ReferenceTable& table,
                                       const AffineProjection& s2, int resolution = 64,
                                       std::vector<double> multipliers = {})
{
    const LocalErrorModel model = LocalErrorModel::fit(error_indicators(c, table, s2), std::move(multipliers));
    const ErrorIndicatorSet& set = model.indicators();
    LocalErrorSurface out;
    out.bandwidth = model.bandwidth();
    out.global_error = set.mean();
    out.at_points.resize(set.size());
    parallel_for(set.size(), [&](std::size_t i) { out.at_points[i] = model(set.point(i)); });
    if (set.dim == 2 && resolution >= 2) {
        double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        double hi[2] = {-lo[0], -lo[1]};
        for (std::size_t i = 0; i < set.size(); ++i)
            for (std::size_t a = 0; a < 2; ++a) {
                lo[a] = std::min(lo[a], set.points[i * 2 + a]);
                hi[a] = std::max(hi[a], set.points[i * 2 + a]);
            }
        const auto r = static_cast<std::size_t>(resolution);
        out.grid.resize(r * r);
        parallel_for(r * r, [&](std::size_t cell) {
            const std::size_t ix = cell % r, iy = cell / r;
            const double pt[2] = {lo[0] + (hi[0] - lo[0]) * static_cast<double>(ix) / static_cast<double>(r - 1),
                                  lo[1] + (hi[1] - lo[1]) * static_cast<double>(iy) / static_cast<double>(r - 1)};
            const KernelSums ks = kernel_sums(set, model.bandwidth(), pt);
            const double tau = ks.total > 0.0 ? std::clamp(ks.weighted / ks.total, 0.0, 1.0)
                                              : detail::nearest_delta(set, pt);
            out.grid[cell] = {pt[0], pt[1], tau, ks.total >= 1e-6 * static_cast<double>(set.size())};
        });
    }
    return out;
}

}  // namespace gibbsel
