#pragma once

// k-nearest-neighbor ABC model choice on scaled summary coordinates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gibbsel/error.hpp"
#include "gibbsel/parallel.hpp"
#include "gibbsel/reftable.hpp"
#include "gibbsel/summaries.hpp"

namespace gibbsel {

/// Columns of the feature vector (summaries then ancillary) a classifier uses.
using FeatureSelection = std::vector<std::size_t>;

inline FeatureSelection selection(StatSubset subset)
{
    FeatureSelection cols(dimension(subset));
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return cols;
}

/// The first dimension(subset) summaries followed by `ancillary` appended
/// ancillary columns.
inline FeatureSelection selection_with_ancillary(StatSubset subset, std::size_t ancillary)
{
    FeatureSelection cols = selection(subset);
    for (std::size_t a = 0; a < ancillary; ++a) cols.push_back(kSummaryDim + a);
    return cols;
}

inline std::vector<int> default_k_grid(std::size_t n_train)
{
    static constexpr int grid[] = {1, 2, 3, 5, 7, 10, 16, 25, 40, 63, 100, 158, 251, 398, 631, 1000};
    std::vector<int> out;
    for (int k : grid)
        if (static_cast<std::size_t>(k) <= n_train) out.push_back(k);
    return out;
}

struct ModelVote {
    std::vector<double> frequencies;  // index m-1
    int predicted = 1;
};

struct Neighbor {
    double distance2;
    std::size_t record;
};

/// Most frequent model, smaller index on ties.
inline int argmax_model(std::span<const int> counts)
{
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()) + 1;
}

class KnnModelChoice {
public:
    KnnModelChoice(std::shared_ptr<const ReferenceTable> train, FeatureSelection columns, int k)
        : train_(std::move(train)), columns_(std::move(columns)), k_(k)
    {
        if (!train_ || train_->empty()) throw InvalidArgument("classifier needs a non-empty training table");
        if (columns_.empty()) throw InvalidArgument("classifier needs at least one coordinate");
        for (std::size_t c : columns_)
            if (c >= train_->feature_count())
                throw InvalidArgument("coordinate " + std::to_string(c) + " not present in the training table");
        if (k_ < 1 || static_cast<std::size_t>(k_) > train_->size())
            throw InvalidArgument("k = " + std::to_string(k_) + " outside [1, " + std::to_string(train_->size()) +
                                  "]");
        const auto all_scales = scales_or_unit(*train_);
        scales_.reserve(columns_.size());
        for (std::size_t c : columns_) {
            scales_.push_back(all_scales[c]);
            inverse_.push_back(1.0 / all_scales[c]);
        }
        const std::size_t n = train_->size(), d = columns_.size();
        points_.resize(n * d);
        labels_.resize(n);
        models_ = train_->model_count();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) points_[i * d + j] = train_->feature(i, columns_[j]);
            labels_[i] = train_->records[i].model;
        }
    }

    KnnModelChoice(std::shared_ptr<const ReferenceTable> train, StatSubset subset, int k)
        : KnnModelChoice(std::move(train), selection(subset), k)
    {
    }

    int k() const noexcept { return k_; }
    std::size_t dimension() const noexcept { return columns_.size(); }
    int model_count() const noexcept { return models_; }
    const FeatureSelection& columns() const noexcept { return columns_; }
    const std::vector<double>& scales() const noexcept { return scales_; }
    const std::shared_ptr<const ReferenceTable>& training_table() const noexcept { return train_; }

    /// Same classifier with another k.
    KnnModelChoice with_k(int k) const
    {
        KnnModelChoice copy = *this;
        if (k < 1 || static_cast<std::size_t>(k) > train_->size())
            throw InvalidArgument("k = " + std::to_string(k) + " outside [1, " + std::to_string(train_->size()) +
                                  "]");
        copy.k_ = k;
        return copy;
    }

    /// Selected coordinates of a full feature vector.
    std::vector<double> select(std::span<const double> features) const
    {
        std::vector<double> q(columns_.size());
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            if (columns_[j] >= features.size()) throw InvalidArgument("feature vector too short for the selection");
            q[j] = features[columns_[j]];
        }
        return q;
    }

    std::vector<double> select(const ReferenceTable& table, std::size_t record) const
    {
        std::vector<double> q(columns_.size());
        for (std::size_t j = 0; j < columns_.size(); ++j) q[j] = table.feature(record, columns_[j]);
        return q;
    }

    /// The `count` nearest training records sorted by (distance, index).
    std::vector<Neighbor> neighbors(std::span<const double> query, std::size_t count) const
    {
        check_query(query);
        const std::size_t n = labels_.size(), d = columns_.size();
        count = std::min(count, n);
        std::vector<Neighbor> all(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* p = &points_[i * d];
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = (p[j] - query[j]) * inverse_[j];
                s += diff * diff;
            }
            all[i] = {s, i};
        }
        auto less = [](const Neighbor& a, const Neighbor& b) {
            return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.record < b.record);
        };
        if (count < n) std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count), all.end(), less);
        all.resize(count);
        std::sort(all.begin(), all.end(), less);
        return all;
    }

    /// Relative model frequencies among the k nearest records and the most
    /// frequent model. `query` holds the selected coordinates, unscaled.
    ModelVote vote(std::span<const double> query) const
    {
        std::vector<int> counts(static_cast<std::size_t>(models_), 0);
        for (const Neighbor& nb : neighbors(query, static_cast<std::size_t>(k_)))
            ++counts[static_cast<std::size_t>(labels_[nb.record] - 1)];
        ModelVote v;
        v.frequencies.resize(counts.size());
        for (std::size_t m = 0; m < counts.size(); ++m) v.frequencies[m] = static_cast<double>(counts[m]) / k_;
        v.predicted = argmax_model(counts);
        return v;
    }

    int predict(std::span<const double> query) const { return vote(query).predicted; }

    int predict(const ReferenceTable& table, std::size_t record) const { return predict(select(table, record)); }

    int label(std::size_t record) const { return labels_[record]; }

private:
    void check_query(std::span<const double> query) const
    {
        if (query.size() != columns_.size())
            throw InvalidArgument("query has dimension " + std::to_string(query.size()) + ", classifier expects " +
                                  std::to_string(columns_.size()));
    }

    std::shared_ptr<const ReferenceTable> train_;
    FeatureSelection columns_;
    int k_;
    int models_ = 0;
    std::vector<double> scales_;
    std::vector<double> inverse_;
    std::vector<double> points_;  // row-major, unscaled; equal offsets give bit-equal distances
    std::vector<int> labels_;
};

inline ModelVote knn_vote(const KnnModelChoice& c, std::span<const double> s_obs) { return c.vote(s_obs); }

/// Predictions for every record of a table.
inline std::vector<int> predict_table(const KnnModelChoice& c, const ReferenceTable& table)
{
    std::vector<int> out(table.size());
    parallel_for(table.size(), [&](std::size_t i) { out[i] = c.predict(table, i); });
    return out;
}

/// Fraction of records whose predicted model differs from the true one.
inline double prior_error_rate(const KnnModelChoice& c, const ReferenceTable& eval)
{
    if (eval.empty()) throw InvalidArgument("error rate needs a non-empty evaluation table");
    const auto predicted = predict_table(c, eval);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < eval.size(); ++i) wrong += predicted[i] != eval.records[i].model;
    return static_cast<double>(wrong) / static_cast<double>(eval.size());
}

struct CalibrationPoint {
    int k;
    double error;
};

struct Calibration {
    int best_k = 1;
    double best_error = 1.0;
    std::vector<CalibrationPoint> curve;
};

/// Validation error for every k of the grid from one neighbor sort per
/// validation record; best_k is the smallest minimizer.
inline Calibration calibrate_k(std::shared_ptr<const ReferenceTable> train, const ReferenceTable& valid,
                               const FeatureSelection& columns, std::vector<int> grid = {})
{
    if (!train || train->empty()) throw InvalidArgument("calibration needs a non-empty training table");
    if (valid.empty()) throw InvalidArgument("calibration needs a non-empty validation table");
    if (grid.empty()) grid = default_k_grid(train->size());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (int k : grid)
        if (k < 1 || static_cast<std::size_t>(k) > train->size())
            throw InvalidArgument("grid value k = " + std::to_string(k) + " outside [1, " +
                                  std::to_string(train->size()) + "]");
    const KnnModelChoice base(train, columns, grid.back());
    const std::size_t g = grid.size();
    const auto models = static_cast<std::size_t>(base.model_count());
    std::vector<unsigned char> wrong(valid.size() * g, 0);
    parallel_for(valid.size(), [&](std::size_t i) {
        const auto nbs = base.neighbors(base.select(valid, i), static_cast<std::size_t>(grid.back()));
        std::vector<int> counts(models, 0);
        std::size_t used = 0;
        for (std::size_t gi = 0; gi < g; ++gi) {
            while (used < static_cast<std::size_t>(grid[gi])) ++counts[static_cast<std::size_t>(base.label(nbs[used++].record) - 1)];
            wrong[i * g + gi] = argmax_model(counts) != valid.records[i].model;
        }
    });
    Calibration out;
    out.best_error = 2.0;
    for (std::size_t gi = 0; gi < g; ++gi) {
        std::size_t errors = 0;
        for (std::size_t i = 0; i < valid.size(); ++i) errors += wrong[i * g + gi];
        const double rate = static_cast<double>(errors) / static_cast<double>(valid.size());
        out.curve.push_back({grid[gi], rate});
        if (rate < out.best_error) {
            out.best_error = rate;
            out.best_k = grid[gi];
        }
    }
    return out;
}

inline Calibration calibrate_k(std::shared_ptr<const ReferenceTable> train, const ReferenceTable& valid,
                               StatSubset subset, std::vector<int> grid = {})
{
    return calibrate_k(std::move(train), valid, selection(subset), std::move(grid));
}

}  // namespace gibbsel
