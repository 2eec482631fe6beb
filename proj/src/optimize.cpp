#include "erm/optimize.hpp"

#include "erm/errors.hpp"
#include "erm/losses.hpp"

#include <cmath>
#include <sstream>

namespace erm {

namespace {

void require_labels(const LabeledDataset& d, std::size_t w_size, const char* op)
{
    if (d.size() == 0)
        throw SizeError(std::string(op) + ": empty dataset");
    if (!d.has_labels())
        throw DomainError(std::string(op) + ": dataset has no labels");
    if (d.dim() != w_size)
        throw ShapeError(std::string(op) + ": weight length " + std::to_string(w_size) +
                         " does not match " + std::to_string(d.dim()) + " features");
}

void require_binary(const LabeledDataset& d, const char* op)
{
    for (double y : d.labels)
        if (y != 1.0 && y != -1.0)
            throw DomainError(std::string(op) + ": labels must be -1 or +1");
}

double sigmoid(double z)
{
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double lambda_of(const Objective& objective)
{
    if (const auto* r = std::get_if<RidgeObjective>(&objective))
        return r->lambda;
    if (const auto* h = std::get_if<HingeObjective>(&objective))
        return h->lambda;
    return 0.0;
}

void check_lambda(const Objective& objective)
{
    const double lambda = lambda_of(objective);
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw DomainError("regularization parameter must be finite and nonnegative");
}

} // namespace

std::string describe(const Objective& objective)
{
    return std::visit(
        [](const auto& o) -> std::string {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinregObjective>)
                return "linreg";
            else if constexpr (std::is_same_v<T, LogregObjective>)
                return "logreg";
            else if constexpr (std::is_same_v<T, RidgeObjective>)
                return "ridge(" + std::to_string(o.lambda) + ")";
            else
                return "hinge(" + std::to_string(o.lambda) + ")";
        },
        objective);
}

bool is_smooth(const Objective& objective)
{
    return !std::holds_alternative<HingeObjective>(objective);
}

void validate(const GdConfig& config)
{
    if (config.max_iters < 1)
        throw ConfigError("GD: max_iters must be at least 1");
    if (!(config.stop_tol >= 0.0))
        throw ConfigError("GD: stop_tol must be nonnegative");
    if (const auto* f = std::get_if<FixedStep>(&config.step); f && !(f->alpha > 0.0))
        throw ConfigError("GD: step size must be positive");
    if (const auto* dcy = std::get_if<DecayingStep>(&config.step); dcy && !(dcy->base > 0.0))
        throw ConfigError("GD: decaying step base must be positive");
}

double objective_value(const Objective& objective, std::span<const double> w,
                       const LabeledDataset& d)
{
    require_labels(d, w.size(), "objective_value");
    check_lambda(objective);
    const double m = static_cast<double>(d.size());
    double sum = 0.0;
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double h = dot(w, d.features.row(i));
                const double y = d.labels[i];
                if constexpr (std::is_same_v<T, LinregObjective> || std::is_same_v<T, RidgeObjective>)
                    sum += (y - h) * (y - h);
                else if constexpr (std::is_same_v<T, LogregObjective>)
                    sum += softplus(-y * h);
                else
                    sum += std::max(0.0, 1.0 - y * h);
            }
        },
        objective);
    return sum / m + lambda_of(objective) * dot(w, w);
}

Vector linreg_gradient(std::span<const double> w, const LabeledDataset& d)
{
    require_labels(d, w.size(), "linreg_gradient");
    Vector g(w.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto x = d.features.row(i);
        const double e = d.labels[i] - dot(w, x);
        for (std::size_t j = 0; j < g.size(); ++j)
            g[j] += e * x[j];
    }
    const double factor = -2.0 / static_cast<double>(d.size());
    for (double& v : g)
        v *= factor;
    return g;
}

Vector logreg_gradient(std::span<const double> w, const LabeledDataset& d)
{
    require_labels(d, w.size(), "logreg_gradient");
    require_binary(d, "logreg_gradient");
    Vector g(w.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto x = d.features.row(i);
        const double y = d.labels[i];
        // -y / (1 + exp(y wᵀx)) = -y σ(-y wᵀx)
        const double coeff = -y * sigmoid(-y * dot(w, x));
        for (std::size_t j = 0; j < g.size(); ++j)
            g[j] += coeff * x[j];
    }
    for (double& v : g)
        v /= static_cast<double>(d.size());
    return g;
}

Vector ridge_gradient(std::span<const double> w, const LabeledDataset& d, double lambda)
{
    if (!(lambda >= 0.0))
        throw DomainError("ridge_gradient: lambda must be nonnegative");
    Vector g = linreg_gradient(w, d);
    for (std::size_t j = 0; j < g.size(); ++j)
        g[j] += 2.0 * lambda * w[j];
    return g;
}

Vector hinge_subgradient(std::span<const double> w, const LabeledDataset& d, double lambda)
{
    require_labels(d, w.size(), "hinge_subgradient");
    require_binary(d, "hinge_subgradient");
    if (!(lambda >= 0.0))
        throw DomainError("hinge_subgradient: lambda must be nonnegative");
    Vector g(w.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto x = d.features.row(i);
        const double y = d.labels[i];
        if (y * dot(w, x) < 1.0)
            for (std::size_t j = 0; j < g.size(); ++j)
                g[j] -= y * x[j];
    }
    for (std::size_t j = 0; j < g.size(); ++j)
        g[j] = g[j] / static_cast<double>(d.size()) + 2.0 * lambda * w[j];
    return g;
}

Vector gradient(const Objective& objective, std::span<const double> w, const LabeledDataset& d)
{
    return std::visit(
        [&](const auto& o) -> Vector {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinregObjective>)
                return linreg_gradient(w, d);
            else if constexpr (std::is_same_v<T, LogregObjective>)
                return logreg_gradient(w, d);
            else if constexpr (std::is_same_v<T, RidgeObjective>)
                return ridge_gradient(w, d, o.lambda);
            else
                return hinge_subgradient(w, d, o.lambda);
        },
        objective);
}

Vector sample_gradient(const Objective& objective, std::span<const double> w,
                       const LabeledDataset& d, std::size_t i)
{
    require_labels(d, w.size(), "sample_gradient");
    if (i >= d.size())
        throw ShapeError("sample_gradient: index out of range");
    auto x = d.features.row(i);
    const double y = d.labels[i];
    const double h = dot(w, x);
    double coeff = 0.0;
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinregObjective> || std::is_same_v<T, RidgeObjective>) {
                coeff = -2.0 * (y - h);
            } else if constexpr (std::is_same_v<T, LogregObjective>) {
                if (y != 1.0 && y != -1.0)
                    throw DomainError("sample_gradient: labels must be -1 or +1");
                coeff = -y * sigmoid(-y * h);
            } else {
                if (y != 1.0 && y != -1.0)
                    throw DomainError("sample_gradient: labels must be -1 or +1");
                coeff = y * h < 1.0 ? -y : 0.0;
            }
        },
        objective);
    const double lambda = lambda_of(objective);
    Vector g(w.size());
    for (std::size_t j = 0; j < g.size(); ++j)
        g[j] = coeff * x[j] + 2.0 * lambda * w[j];
    return g;
}

Vector logreg_hessian_diagonal(std::span<const double> w, const LabeledDataset& d)
{
    require_labels(d, w.size(), "logreg_hessian_diagonal");
    Vector diag(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double p = sigmoid(dot(w, d.features.row(i)));
        diag[i] = p * (1.0 - p);
    }
    return diag;
}

Matrix hessian(const Objective& objective, std::span<const double> w, const LabeledDataset& d)
{
    if (!is_smooth(objective))
        throw DomainError("hessian: hinge objective is not twice differentiable");
    require_labels(d, w.size(), "hessian");
    const double m = static_cast<double>(d.size());
    if (std::holds_alternative<LogregObjective>(objective)) {
        const Vector diag = logreg_hessian_diagonal(w, d);
        Matrix weighted = d.features;
        for (std::size_t i = 0; i < d.size(); ++i)
            for (double& v : weighted.row(i))
                v *= std::sqrt(diag[i]);
        return scale(gram(weighted), 1.0 / m);
    }
    return add_identity(scale(gram(d.features), 2.0 / m), 2.0 * lambda_of(objective));
}

double auto_step_size(const Objective& objective, const LabeledDataset& d)
{
    if (d.size() == 0)
        throw SizeError("auto_step_size: empty dataset");
    check_lambda(objective);
    if (!is_smooth(objective))
        throw ConfigError("auto_step_size: not defined for the hinge subgradient method");
    const Matrix q = scale(gram(d.features), 1.0 / static_cast<double>(d.size()));
    const double lmax = max_eigenvalue(q, 1e-12);
    if (!(lmax > 0.0))
        throw DomainError("auto_step_size: all features are zero");
    return std::visit(
        [lmax](const auto& o) -> double {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinregObjective>)
                return 1.0 / (2.0 * lmax);
            else if constexpr (std::is_same_v<T, RidgeObjective>)
                return 1.0 / (2.0 * (lmax + o.lambda));
            else
                return 4.0 / lmax;
        },
        objective);
}

Vector gd_step(std::span<const double> w, std::span<const double> grad, double alpha)
{
    if (!(alpha > 0.0))
        throw ConfigError("gd_step: step size must be positive");
    if (w.size() != grad.size())
        throw ShapeError("gd_step: gradient length does not match weights");
    if (!all_finite(grad))
        throw DomainError("gd_step: non-finite gradient");
    Vector out(w.begin(), w.end());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] -= alpha * grad[j];
    return out;
}

GdTrace run_gd(const Objective& objective, const LabeledDataset& d, const GdConfig& config)
{
    validate(config);
    check_lambda(objective);
    if (!is_smooth(objective) && std::holds_alternative<AutoStep>(config.step))
        throw ConfigError("run_gd: hinge subgradient needs a fixed or decaying step");

    const bool smooth = is_smooth(objective);
    double alpha = 0.0;
    if (std::holds_alternative<AutoStep>(config.step))
        alpha = auto_step_size(objective, d);
    else if (const auto* f = std::get_if<FixedStep>(&config.step))
        alpha = f->alpha;

    GdTrace trace;
    Vector w(d.dim(), 0.0);
    double f = objective_value(objective, w, d);
    const double f_initial = f;
    trace.objective.push_back(f);
    trace.best_weights = w;
    trace.best_objective = f;
    trace.step_size = std::holds_alternative<DecayingStep>(config.step)
                          ? std::get<DecayingStep>(config.step).base
                          : alpha;

    for (std::size_t k = 1; k <= config.max_iters; ++k) {
        double alpha_k = alpha;
        if (const auto* dcy = std::get_if<DecayingStep>(&config.step))
            alpha_k = dcy->base / static_cast<double>(k);
        const Vector g = gradient(objective, w, d);
        Vector next = gd_step(w, g, alpha_k);
        const double f_next = objective_value(objective, next, d);
        trace.iterations_used = k;
        trace.objective.push_back(f_next);

        if (smooth && (!std::isfinite(f_next) || f_next > 10.0 * f_initial + 1e-300)) {
            std::ostringstream msg;
            msg << "gradient descent diverged on " << describe(objective) << " at iteration " << k
                << " (objective " << f_next << " vs initial " << f_initial
                << "); choose a smaller step size";
            throw DivergenceError(msg.str());
        }
        const bool unchanged = next == w;
        const double decrease = f - f_next;
        w = std::move(next);
        f = f_next;
        if (f < trace.best_objective) {
            trace.best_objective = f;
            trace.best_weights = w;
        }
        if (unchanged || (smooth && std::abs(decrease) <= config.stop_tol)) {
            trace.converged = true;
            break;
        }
    }
    trace.weights = w;
    return trace;
}

Vector sgd_step(const Objective& objective, std::span<const double> w, const LabeledDataset& d,
                std::size_t k, Rng& rng)
{
    if (k < 1)
        throw ConfigError("sgd_step: iteration counter must start at 1");
    if (d.size() == 0)
        throw SizeError("sgd_step: empty dataset");
    const std::size_t i = rng.index(d.size());
    return gd_step(w, sample_gradient(objective, w, d, i), 1.0 / static_cast<double>(k));
}

Vector sgd_step(const Objective& objective, std::span<const double> w, const LabeledDataset& d,
                std::size_t k, std::uint64_t seed)
{
    Rng rng(seed);
    return sgd_step(objective, w, d, k, rng);
}

GdTrace run_sgd(const Objective& objective, const LabeledDataset& d, const GdConfig& config)
{
    validate(config);
    Rng rng(config.seed);
    GdTrace trace;
    Vector w(d.dim(), 0.0);
    trace.objective.push_back(objective_value(objective, w, d));
    trace.best_weights = w;
    trace.best_objective = trace.objective.back();
    trace.step_size = 1.0;
    for (std::size_t k = 1; k <= config.max_iters; ++k) {
        w = sgd_step(objective, w, d, k, rng);
        const double f = objective_value(objective, w, d);
        trace.objective.push_back(f);
        if (f < trace.best_objective) {
            trace.best_objective = f;
            trace.best_weights = w;
        }
        trace.iterations_used = k;
    }
    trace.weights = w;
    return trace;
}

std::string trace_to_csv(const GdTrace& trace)
{
    std::ostringstream out;
    out.precision(17);
    out << "iteration,objective\n";
    for (std::size_t k = 0; k < trace.objective.size(); ++k)
        out << k << ',' << trace.objective[k] << '\n';
    return out.str();
}

} // namespace erm
