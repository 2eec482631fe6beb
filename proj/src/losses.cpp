#include "erm/losses.hpp"

#include "erm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace erm {

bool is_binary_loss(const LossKind& kind) { return !std::holds_alternative<SquaredLoss>(kind); }

double softplus(double z)
{
    if (z > 0.0)
        return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double loss(const LossKind& kind, double y, double h_value,
            std::optional<std::span<const double>> w)
{
    if (is_binary_loss(kind) && y != 1.0 && y != -1.0)
        throw DomainError("loss: binary loss needs label -1 or +1, got " + std::to_string(y));
    const double margin = y * h_value;
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, SquaredLoss>) {
                const double r = y - h_value;
                return r * r;
            } else if constexpr (std::is_same_v<T, ZeroOneLoss>) {
                return margin < 0.0 ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, HingeLoss>) {
                return std::max(0.0, 1.0 - margin);
            } else if constexpr (std::is_same_v<T, LogisticLoss>) {
                return softplus(-margin);
            } else {
                if (!(k.lambda > 0.0))
                    throw DomainError("svm_reg loss: lambda must be positive");
                if (!w)
                    throw DomainError("svm_reg loss: weight vector required");
                return std::max(0.0, 1.0 - margin) + k.lambda * dot(*w, *w);
            }
        },
        kind);
}

double empirical_risk(const LossKind& kind, const Predictor& h, const LabeledDataset& d,
                      std::optional<std::span<const double>> w)
{
    if (d.size() == 0)
        throw SizeError("empirical_risk: empty dataset");
    if (!d.has_labels())
        throw DomainError("empirical_risk: dataset has no labels");
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
        sum += loss(kind, d.labels[i], h(d.features.row(i)), w);
    return sum / static_cast<double>(d.size());
}

double empirical_risk(const LossKind& kind, const LinearModel& model, const LabeledDataset& d)
{
    return empirical_risk(
        kind, [&model](std::span<const double> x) { return predict_linear(model, x); }, d,
        std::span<const double>(model.weights));
}

} // namespace erm
