#pragma once

// Adaptive model choice: per query, use the constituent classifier whose
// estimated local error, knowing a common projection S0, is smallest. S0 is
// a Fisher discriminant of an error-contrast trait on the validation table.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gibbsel/error.hpp"
#include "gibbsel/knn.hpp"
#include "gibbsel/local_error.hpp"
#include "gibbsel/reftable.hpp"

namespace gibbsel {

/// Per-record label: lambda (1-based) when classifier lambda is the only
/// correct one, 0 otherwise (all agree, or no unique correct classifier).
inline std::vector<int> contrast_trait(std::span<const KnnModelChoice> classifiers, const ReferenceTable& valid)
{
    if (classifiers.size() < 2) throw InvalidArgument("error-contrast trait needs at least two classifiers");
    if (valid.empty()) throw InvalidArgument("error-contrast trait needs a non-empty table");
    std::vector<std::vector<int>> predicted;
    for (const auto& c : classifiers) predicted.push_back(predict_table(c, valid));
    std::vector<int> trait(valid.size(), 0);
    for (std::size_t i = 0; i < valid.size(); ++i) {
        const int truth = valid.records[i].model;
        bool agree = true;
        int correct = 0, which = 0;
        for (std::size_t l = 0; l < predicted.size(); ++l) {
            agree = agree && predicted[l][i] == predicted[0][i];
            if (predicted[l][i] == truth) {
                ++correct;
                which = static_cast<int>(l) + 1;
            }
        }
        trait[i] = (!agree && correct == 1) ? which : 0;
    }
    return trait;
}

struct LdaProjection {
    AffineProjection projection;
    std::vector<int> classes;         // observed trait values
    std::vector<double> eigenvalues;  // between/within ratio per kept axis
};

/// Fisher discriminant axes of `traits` given `x` (n rows of equal length).
/// Inputs are standardized per axis and the within-class scatter gets a ridge
/// of 1e-6 * trace / dim.
inline LdaProjection fit_lda(const std::vector<std::vector<double>>& x, std::span<const int> traits)
{
    if (x.empty() || x.size() != traits.size()) throw InvalidArgument("LDA needs one trait per row");
    const std::size_t n = x.size(), p = x.front().size();
    if (p == 0) throw InvalidArgument("LDA needs at least one coordinate");
    std::vector<int> classes(traits.begin(), traits.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw DegenerateInput("LDA needs at least two observed trait classes");

    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (const auto& row : x) {
        if (row.size() != p) throw InvalidArgument("LDA rows must have equal length");
        for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (const auto& row : x)
        for (std::size_t j = 0; j < p; ++j) sd[j] += std::pow(row[j] - mean[j], 2);
    for (double& s : sd) {
        s = n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
        if (!(s > 0.0)) s = 1.0;
    }

    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (x[i][j] - mean[j]) / sd[j];

    const auto c = static_cast<Eigen::Index>(classes.size());
    Eigen::MatrixXd class_mean = Eigen::MatrixXd::Zero(c, static_cast<Eigen::Index>(p));
    Eigen::VectorXd class_n = Eigen::VectorXd::Zero(c);
    std::vector<Eigen::Index> cls(n);
    for (std::size_t i = 0; i < n; ++i) {
        cls[i] = std::lower_bound(classes.begin(), classes.end(), traits[i]) - classes.begin();
        class_mean.row(cls[i]) += z.row(static_cast<Eigen::Index>(i));
        class_n(cls[i]) += 1.0;
    }
    for (Eigen::Index k = 0; k < c; ++k) class_mean.row(k) /= class_n(k);
    const Eigen::RowVectorXd grand = z.colwise().mean();

    Eigen::MatrixXd within = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::RowVectorXd d = z.row(static_cast<Eigen::Index>(i)) - class_mean.row(cls[i]);
        within.noalias() += d.transpose() * d;
    }
    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (Eigen::Index k = 0; k < c; ++k) {
        const Eigen::RowVectorXd d = class_mean.row(k) - grand;
        between.noalias() += class_n(k) * d.transpose() * d;
    }
    const double trace = within.trace();
    const double ridge = 1e-6 * (trace > 0.0 ? trace : 1.0) / static_cast<double>(p);
    within.diagonal().array() += ridge;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(between, within);
    if (solver.info() != Eigen::Success) throw DegenerateInput("LDA eigen-decomposition failed");
    const std::size_t axes = std::min<std::size_t>(classes.size() - 1, p);
    std::vector<std::vector<double>> rows;
    std::vector<double> values;
    for (std::size_t a = 0; a < axes; ++a) {
        const Eigen::Index col = static_cast<Eigen::Index>(p) - 1 - static_cast<Eigen::Index>(a);
        Eigen::VectorXd v = solver.eigenvectors().col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        rows.emplace_back(v.data(), v.data() + v.size());
        values.push_back(solver.eigenvalues()(col));
    }
    return {AffineProjection(std::move(mean), std::move(sd), std::move(rows)), std::move(classes), std::move(values)};
}

struct AdaptiveDecision {
    int model;
    int lambda;  // 1-based constituent index
};

class AdaptiveClassifier {
public:
    AdaptiveClassifier(std::vector<KnnModelChoice> classifiers, AffineProjection s0,
                       std::vector<LocalErrorModel> local_errors, bool lda_fallback = false)
        : classifiers_(std::move(classifiers)), s0_(std::move(s0)), local_errors_(std::move(local_errors)),
          lda_fallback_(lda_fallback)
    {
        if (classifiers_.empty() || classifiers_.size() != local_errors_.size())
            throw InvalidArgument("one local-error model per classifier is required");
    }

    std::size_t size() const noexcept { return classifiers_.size(); }
    const std::vector<KnnModelChoice>& classifiers() const noexcept { return classifiers_; }
    const AffineProjection& projection() const noexcept { return s0_; }
    const std::vector<LocalErrorModel>& local_errors() const noexcept { return local_errors_; }
    /// True when the trait had a single class and S0 fell back to standardized (r4, r8).
    bool lda_fallback() const noexcept { return lda_fallback_; }

    /// tau-hat of every constituent at S0(features).
    std::vector<double> local_error_rates(std::span<const double> features) const
    {
        const auto z = s0_(features);
        std::vector<double> tau;
        for (const auto& le : local_errors_) tau.push_back(le(z));
        return tau;
    }

    /// `features` is the full feature vector (summaries then ancillary).
    AdaptiveDecision predict(std::span<const double> features) const
    {
        std::size_t best = 0;
        if (classifiers_.size() > 1) {
            const auto tau = local_error_rates(features);
            best = static_cast<std::size_t>(std::min_element(tau.begin(), tau.end()) - tau.begin());
        }
        const auto& c = classifiers_[best];
        return {c.predict(c.select(features)), static_cast<int>(best) + 1};
    }

private:
    std::vector<KnnModelChoice> classifiers_;
    AffineProjection s0_;
    std::vector<LocalErrorModel> local_errors_;
    bool lda_fallback_ = false;
};

struct AdaptiveOptions {
    std::vector<double> bandwidth_multipliers;  // empty: default grid
};

/// Trait on the validation table, LDA projection S0 of its 6-D summaries,
/// and one NW local-error model per classifier on the same table.
inline AdaptiveClassifier fit_adaptive(std::vector<KnnModelChoice> classifiers, const ReferenceTable& valid,
                                       const AdaptiveOptions& options = {})
{
    if (classifiers.empty()) throw InvalidArgument("adaptive classifier needs at least one classifier");
    if (valid.empty()) throw InvalidArgument("adaptive classifier needs a non-empty validation table");
    std::stable_sort(classifiers.begin(), classifiers.end(),
                     [](const KnnModelChoice& a, const KnnModelChoice& b) { return a.dimension() < b.dimension(); });
    for (const auto& c : classifiers)
        if (c.training_table() != classifiers.front().training_table())
            throw InvalidArgument("constituent classifiers must share a training table");
    if (classifiers.front().training_table().get() == &valid)
        throw InvalidArgument("validation table must differ from the training table");

    std::vector<std::vector<double>> summaries(valid.size());
    for (std::size_t i = 0; i < valid.size(); ++i)
        summaries[i].assign(valid.records[i].summary.values.begin(), valid.records[i].summary.values.end());

    AffineProjection s0;
    bool fallback = false;
    try {
        if (classifiers.size() < 2) throw DegenerateInput("single classifier");
        const auto trait = contrast_trait(classifiers, valid);
        s0 = fit_lda(summaries, trait).projection;
    } catch (const DegenerateInput&) {
        // no contrast to learn: use standardized (r4, r8)
        const auto sc = scales_or_unit(valid);
        std::vector<double> mean(kSummaryDim, 0.0), scale(sc.begin(), sc.begin() + kSummaryDim);
        for (const auto& row : summaries)
            for (std::size_t j = 0; j < kSummaryDim; ++j) mean[j] += row[j] / static_cast<double>(valid.size());
        std::vector<std::vector<double>> rows(2, std::vector<double>(kSummaryDim, 0.0));
        rows[0][0] = 1.0;
        rows[1][1] = 1.0;
        s0 = AffineProjection(std::move(mean), std::move(scale), std::move(rows));
        fallback = true;
    }

    std::vector<LocalErrorModel> local;
    for (const auto& c : classifiers)
        local.push_back(LocalErrorModel::fit(error_indicators(c, valid, s0), options.bandwidth_multipliers));
    return AdaptiveClassifier(std::move(classifiers), std::move(s0), std::move(local), fallback);
}

inline AdaptiveDecision adaptive_predict(const AdaptiveClassifier& a, std::span<const double> s_obs)
{
    return a.predict(s_obs);
}

struct AdaptiveEvaluation {
    double error = 0.0;
    std::vector<double> lambda_share;  // fraction of records routed to each constituent
};

inline AdaptiveEvaluation evaluate_adaptive(const AdaptiveClassifier& a, const ReferenceTable& test)
{
    if (test.empty()) throw InvalidArgument("evaluation needs a non-empty table");
    std::vector<AdaptiveDecision> d(test.size());
    parallel_for(test.size(), [&](std::size_t i) { d[i] = a.predict(test.records[i].features()); });
    AdaptiveEvaluation out;
    out.lambda_share.assign(a.size(), 0.0);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        wrong += d[i].model != test.records[i].model;
        out.lambda_share[static_cast<std::size_t>(d[i].lambda - 1)] += 1.0;
    }
    const double n = static_cast<double>(test.size());
    out.error = static_cast<double>(wrong) / n;
    for (double& s : out.lambda_share) s /= n;
    return out;
}

}  // namespace gibbsel
