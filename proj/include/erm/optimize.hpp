#pragma once

#include "erm/data.hpp"
#include "erm/numerics.hpp"
#include "erm/rng.hpp"

#include <cstdint>
#include <string>
#include <variant>

namespace erm {

/// f(w) = (1/m) Σ (y_i - wᵀx_i)²
struct LinregObjective {};
/// f(w) = (1/m) Σ log(1 + exp(-y_i wᵀx_i))
struct LogregObjective {};
/// f(w) = (1/m) Σ (y_i - wᵀx_i)² + λ‖w‖²
struct RidgeObjective {
    double lambda = 0.0;
};
/// f(w) = (1/m) Σ max(0, 1 - y_i wᵀx_i) + λ‖w‖²   (minimized by subgradient steps)
struct HingeObjective {
    double lambda = 0.0;
};

using Objective = std::variant<LinregObjective, LogregObjective, RidgeObjective, HingeObjective>;

std::string describe(const Objective& objective);
bool is_smooth(const Objective& objective);

struct FixedStep {
    double alpha = 0.0;
};
/// α = 1/U with U an upper bound on λmax of the Hessian, see auto_step_size.
struct AutoStep {};
/// α_k = base / k
struct DecayingStep {
    double base = 1.0;
};
using StepRule = std::variant<FixedStep, AutoStep, DecayingStep>;

struct GdConfig {
    StepRule step = AutoStep{};
    std::size_t max_iters = 100000;
    /// Stop once |f(w_{k-1}) - f(w_k)| <= stop_tol (smooth objectives only).
    double stop_tol = 1e-10;
    std::uint64_t seed = 0;
};

/// Throws ConfigError for invalid settings.
void validate(const GdConfig& config);

struct GdTrace {
    Vector objective;     ///< f(w_0), f(w_1), ..., f(w_K)
    Vector weights;       ///< w_K
    Vector best_weights;  ///< argmin over the visited iterates
    double best_objective = 0.0;
    std::size_t iterations_used = 0;
    bool converged = false;
    double step_size = 0.0; ///< α for fixed/auto rules, α_1 for decaying ones
};

double objective_value(const Objective& objective, std::span<const double> w,
                       const LabeledDataset& d);

/// -(2/m) Σ (y_i - wᵀx_i) x_i
Vector linreg_gradient(std::span<const double> w, const LabeledDataset& d);
/// (1/m) Σ -y_i x_i / (1 + exp(y_i wᵀx_i))
Vector logreg_gradient(std::span<const double> w, const LabeledDataset& d);
Vector ridge_gradient(std::span<const double> w, const LabeledDataset& d, double lambda);
/// (1/m) Σ g_i + 2λw with g_i = -y_i x_i if y_i wᵀx_i < 1, else 0.
Vector hinge_subgradient(std::span<const double> w, const LabeledDataset& d, double lambda);

Vector gradient(const Objective& objective, std::span<const double> w, const LabeledDataset& d);

/// Gradient of the i-th summand of the objective (regularizer included), so
/// that the average over i equals gradient().
Vector sample_gradient(const Objective& objective, std::span<const double> w,
                       const LabeledDataset& d, std::size_t i);

/// d_i = σ(wᵀx_i)(1 - σ(wᵀx_i)), the diagonal of D in the logistic Hessian (1/m)XᵀDX.
Vector logreg_hessian_diagonal(std::span<const double> w, const LabeledDataset& d);

/// Hessian of a smooth objective at w.
Matrix hessian(const Objective& objective, std::span<const double> w, const LabeledDataset& d);

/// Step size 1/U where U bounds λmax of the Hessian for every w:
///   linreg  U = 2 λmax((1/m)XᵀX)
///   ridge   U = 2 (λmax((1/m)XᵀX) + λ)
///   logreg  U = λmax((1/m)XᵀX) / 4        (uses d_i <= 1/4)
/// Throws DomainError when the features are all zero.
double auto_step_size(const Objective& objective, const LabeledDataset& d);

/// w - α·grad
Vector gd_step(std::span<const double> w, std::span<const double> grad, double alpha);

/// Gradient (or subgradient) descent from w_0 = 0.
///
/// Throws DivergenceError when the objective exceeds 10x its initial value or
/// becomes non-finite on a smooth objective.
GdTrace run_gd(const Objective& objective, const LabeledDataset& d, const GdConfig& config);

/// One SGD update w - (1/k)·∇f_i(w) with i drawn uniformly from `rng`.
Vector sgd_step(const Objective& objective, std::span<const double> w, const LabeledDataset& d,
                std::size_t k, Rng& rng);

/// Same, with a stream constructed from `seed`.
Vector sgd_step(const Objective& objective, std::span<const double> w, const LabeledDataset& d,
                std::size_t k, std::uint64_t seed);

/// SGD with α_k = 1/k for config.max_iters steps. The run owns its stream
/// seeded from config.seed.
GdTrace run_sgd(const Objective& objective, const LabeledDataset& d, const GdConfig& config);

/// "iteration,objective" rows.
std::string trace_to_csv(const GdTrace& trace);

} // namespace erm
