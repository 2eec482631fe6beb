#pragma once

#include "erm/data.hpp"
#include "erm/models.hpp"
#include "erm/numerics.hpp"
#include "erm/optimize.hpp"

#include <vector>

namespace erm {

/// Least squares w = (XᵀX)⁻¹Xᵀy.
///
/// Throws SingularityError when λmin(XᵀX) <= rank_tolerance·λmax(XᵀX); ridge
/// regression or GD still work in that case.
LinearModel fit_linreg_closed(const LabeledDataset& d);

/// Minimum-norm interpolating fit w = Xᵀ(XXᵀ)⁻¹y for m <= n with linearly
/// independent rows. The training error is zero.
LinearModel fit_linreg_min_norm(const LabeledDataset& d);

struct RidgeSpec {
    double lambda = 0.0;
};

/// w = (1/m)((1/m)XᵀX + λI)⁻¹Xᵀy. Needs λ > 0.
LinearModel fit_ridge_closed(const LabeledDataset& d, const RidgeSpec& spec);

struct GdFit {
    LinearModel model;
    GdTrace trace;
};

GdFit fit_linreg_gd(const LabeledDataset& d, const GdConfig& config = {});
GdFit fit_ridge_gd(const LabeledDataset& d, const RidgeSpec& spec, const GdConfig& config = {});

/// Logistic regression by GD from w = 0. Both classes must be present.
GdFit fit_logreg(const LabeledDataset& d, const GdConfig& config = {});

/// p(y = 1 | x) = 1 / (1 + exp(-wᵀx))
double logreg_probability(const LinearModel& model, std::span<const double> x);

struct GaussianEstimate {
    Vector mean;
    Matrix covariance; ///< normalized by 1/m
};

GaussianEstimate gaussian_ml(const LabeledDataset& points);

struct GaussianClassParams {
    Vector mu_plus;
    Vector mu_minus;
    Matrix sigma;
    std::size_t count_plus = 0;
    std::size_t count_minus = 0;
};

struct BayesFit {
    LinearModel model;
    GaussianClassParams params;
};

/// Linear Bayes classifier w = Σ̂⁻¹(μ̂₁ - μ̂₋₁).
///
/// Σ̂ is pooled over all points around the global mean. With `naive` its
/// off-diagonal entries are zeroed before solving.
BayesFit fit_bayes(const LabeledDataset& d, bool naive);

/// Midpoints between consecutive distinct values of every feature. A constant
/// feature gets its single value, which never separates anything.
std::vector<Vector> default_thresholds(const LabeledDataset& d);

/// Greedy tree growth: repeatedly replace the leaf split that lowers the
/// training squared error the most, until nothing improves or the depth cap
/// is reached. Leaves predict the label mean, or the majority label (ties to
/// +1) for binary labels.
DecisionTree grow_tree(const LabeledDataset& d, std::size_t max_depth,
                       const std::vector<Vector>& thresholds);

DecisionTree grow_tree(const LabeledDataset& d, std::size_t max_depth);

/// Decaying steps α_k = 1/(2λk) for 2000 iterations.
GdConfig svm_default_config(double lambda);

/// Soft-margin SVM by subgradient descent; returns the best iterate seen.
GdFit fit_svm(const LabeledDataset& d, double lambda, const GdConfig& config);
GdFit fit_svm(const LabeledDataset& d, double lambda);

} // namespace erm
