#pragma once

#include "erm/data.hpp"
#include "erm/models.hpp"

#include <functional>
#include <optional>
#include <span>
#include <variant>

namespace erm {

struct SquaredLoss {};
struct ZeroOneLoss {};
struct HingeLoss {};
struct LogisticLoss {};
/// Hinge loss plus λ‖w‖² (soft-margin SVM).
struct SvmRegularizedLoss {
    double lambda = 1.0;
};

using LossKind = std::variant<SquaredLoss, ZeroOneLoss, HingeLoss, LogisticLoss, SvmRegularizedLoss>;

bool is_binary_loss(const LossKind& kind);

/// Loss of predicting h_value for label y.
///
///   squared   (y - h)²
///   zero_one  1 if y·h < 0, else 0
///   hinge     max(0, 1 - y·h)
///   logistic  log(1 + exp(-y·h)), evaluated stably
///   svm_reg   hinge + λ‖w‖²  (requires w)
double loss(const LossKind& kind, double y, double h_value,
            std::optional<std::span<const double>> w = std::nullopt);

/// log(1 + exp(z)) without overflow.
double softplus(double z);

using Predictor = std::function<double(std::span<const double>)>;

/// (1/m) Σ_i L(y_i, h(x_i)).
double empirical_risk(const LossKind& kind, const Predictor& h, const LabeledDataset& d,
                      std::optional<std::span<const double>> w = std::nullopt);

double empirical_risk(const LossKind& kind, const LinearModel& model, const LabeledDataset& d);

} // namespace erm
