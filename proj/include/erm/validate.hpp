#pragma once

#include "erm/data.hpp"
#include "erm/losses.hpp"
#include "erm/models.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace erm {

struct TrainValErrors {
    double train_error = 0.0;
    double val_error = 0.0;
};

TrainValErrors train_val_errors(const Predictor& h, const SplitPair& split, const LossKind& loss);
TrainValErrors train_val_errors(const LinearModel& model, const SplitPair& split,
                                const LossKind& loss);

// ---------------------------------------------------------------------------
// Model selection

/// A hypothesis space: linear maps on φ(x), fitted by least squares (or by
/// ridge regression when ridge_lambda > 0).
struct CandidateSpec {
    std::string id;
    FeatureMapSpec feature_map = IdentityMap{};
    double ridge_lambda = 0.0;
};

struct CandidateResult {
    std::string id;
    double train_error = 0.0;
    double val_error = 0.0;
    bool failed = false;
    std::string failure;
    LinearModel model;
};

struct ModelSelectionReport {
    std::vector<CandidateResult> candidates;
    std::size_t chosen = 0;
    std::uint64_t split_seed = 0;
    double train_fraction = 0.0;

    std::string to_json() const;
};

LinearModel fit_candidate(const CandidateSpec& candidate, const LabeledDataset& train);

/// Fit every candidate on the training part, score on the validation part
/// with the squared loss, and pick the smallest validation error (ties go to
/// the earlier candidate). Candidates whose fit throws are marked failed and
/// skipped. Throws ConfigError for an empty list or when every candidate fails.
ModelSelectionReport select_model(const std::vector<CandidateSpec>& candidates,
                                  const SplitPair& split);
ModelSelectionReport select_model(const std::vector<CandidateSpec>& candidates,
                                  const LabeledDataset& d, double train_fraction,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Diagnosis

enum class Diagnosis { satisfactory, overfit, solver_issue, undetermined };

const char* to_string(Diagnosis diagnosis) noexcept;

/// Checked in order:
///   satisfactory  train <= 1.5 E0 and val <= 1.5 E0
///   overfit       val >= 5 train and train <= 1.5 E0
///   solver_issue  train >= 5 val
/// Anything else is undetermined.
Diagnosis diagnose(double train_error, double val_error, double target_error);

// ---------------------------------------------------------------------------
// Bias-variance laboratory

struct BiasVarianceResult {
    std::size_t r = 0;      ///< number of leading features used by the estimator
    double lambda = 0.0;    ///< ridge parameter (0 for least squares)
    std::size_t trials = 0;
    std::size_t sample_count = 0;
    double noise_variance = 0.0;

    double empirical_bias_sq = 0.0;
    double empirical_bias_sq_se = 0.0;
    double empirical_variance = 0.0;
    double empirical_variance_se = 0.0;
    double empirical_pred_error = 0.0;
    double empirical_pred_error_se = 0.0;
    /// E_pred - (B² + V + σ²) from the same trials, and its standard error.
    double decomposition_gap = 0.0;
    double decomposition_gap_se = 0.0;

    double analytic_bias_sq = 0.0;
    double analytic_variance = 0.0;
    double analytic_pred_error = 0.0;

    /// Least squares only: (σ² + Σ_{l>r} w_l²)·r/(m_t - r - 1). The omitted
    /// features act as extra label noise for the restricted fit.
    double analytic_variance_effective = 0.0;

    /// Ridge only: the squared-factor alternatives Σ(λ/(1+λ))²w² and
    /// σ²(n/m_t)/(1+λ)² for the large-sample approximations.
    double alternative_bias_sq = 0.0;
    double alternative_variance = 0.0;

    std::string to_json() const;
};

/// Least squares restricted to the first r features, zero-padded to length n.
///
/// Every trial draws a fresh training set of spec.sample_count points and one
/// fresh test point from its own stream Rng::substream(spec.seed, trial).
/// `threads` only affects speed; results do not depend on it.
/// Throws ValidityError unless m_t > r + 1 and trials >= 1.
BiasVarianceResult bias_variance_experiment(const ToyModelSpec& spec, std::size_t r,
                                            std::size_t trials, std::size_t threads = 1);

/// Same protocol with the full-dimension ridge estimator. λ = 0 falls back to
/// least squares on all features.
BiasVarianceResult ridge_bias_variance_experiment(const ToyModelSpec& spec, double lambda,
                                                  std::size_t trials, std::size_t threads = 1);

std::string sweep_to_csv(const std::vector<BiasVarianceResult>& rows);
std::string sweep_to_json(const std::vector<BiasVarianceResult>& rows);

} // namespace erm
