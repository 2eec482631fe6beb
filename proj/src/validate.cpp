#include "erm/validate.hpp"

#include "erm/errors.hpp"
#include "erm/learners.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

namespace erm {

using nlohmann::json;

TrainValErrors train_val_errors(const Predictor& h, const SplitPair& split, const LossKind& loss)
{
    if (split.train.size() == 0 || split.val.size() == 0)
        throw SizeError("train_val_errors: empty training or validation part");
    return TrainValErrors{empirical_risk(loss, h, split.train, {}),
                          empirical_risk(loss, h, split.val, {})};
}

TrainValErrors train_val_errors(const LinearModel& model, const SplitPair& split,
                                const LossKind& loss)
{
    if (split.train.size() == 0 || split.val.size() == 0)
        throw SizeError("train_val_errors: empty training or validation part");
    return TrainValErrors{empirical_risk(loss, model, split.train),
                          empirical_risk(loss, model, split.val)};
}

// ---------------------------------------------------------------------------

LinearModel fit_candidate(const CandidateSpec& candidate, const LabeledDataset& train)
{
    validate(candidate.feature_map);
    const bool identity = std::holds_alternative<IdentityMap>(candidate.feature_map);
    const LabeledDataset mapped = identity ? train : map_features(candidate.feature_map, train);
    LinearModel model = candidate.ridge_lambda > 0.0
                            ? fit_ridge_closed(mapped, RidgeSpec{candidate.ridge_lambda})
                            : fit_linreg_closed(mapped);
    if (!identity)
        model.feature_map = candidate.feature_map;
    return model;
}

ModelSelectionReport select_model(const std::vector<CandidateSpec>& candidates,
                                  const SplitPair& split)
{
    if (candidates.empty())
        throw ConfigError("select_model: no candidate hypothesis spaces given");

    ModelSelectionReport report;
    report.split_seed = split.split_seed;
    report.train_fraction = split.train_fraction;
    bool any = false;
    double best = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        CandidateResult result;
        result.id = candidates[c].id;
        try {
            if (candidates[c].ridge_lambda < 0.0)
                throw ConfigError("ridge lambda must be nonnegative");
            result.model = fit_candidate(candidates[c], split.train);
            const TrainValErrors errors = train_val_errors(result.model, split, SquaredLoss{});
            result.train_error = errors.train_error;
            result.val_error = errors.val_error;
            if (!std::isfinite(result.val_error))
                throw DomainError("non-finite validation error");
        } catch (const Error& e) {
            result.failed = true;
            result.failure = e.what();
        }
        if (!result.failed && (!any || result.val_error < best)) {
            any = true;
            best = result.val_error;
            report.chosen = c;
        }
        report.candidates.push_back(std::move(result));
    }
    if (!any)
        throw ConfigError("select_model: every candidate failed to fit (first failure: " +
                          report.candidates.front().failure + ")");
    return report;
}

ModelSelectionReport select_model(const std::vector<CandidateSpec>& candidates,
                                  const LabeledDataset& d, double train_fraction,
                                  std::uint64_t seed)
{
    return select_model(candidates, split(d, train_fraction, seed));
}

std::string ModelSelectionReport::to_json() const
{
    json j;
    j["chosen"] = chosen;
    j["chosen_id"] = candidates.at(chosen).id;
    j["split_seed"] = split_seed;
    j["train_fraction"] = train_fraction;
    j["candidates"] = json::array();
    for (const auto& c : candidates) {
        json row{{"id", c.id}, {"failed", c.failed}};
        if (c.failed) {
            row["failure"] = c.failure;
        } else {
            row["train_error"] = c.train_error;
            row["val_error"] = c.val_error;
            row["model"] = json::parse(erm::to_json(c.model));
        }
        j["candidates"].push_back(row);
    }
    return j.dump(2);
}

// ---------------------------------------------------------------------------

const char* to_string(Diagnosis diagnosis) noexcept
{
    switch (diagnosis) {
    case Diagnosis::satisfactory: return "satisfactory";
    case Diagnosis::overfit: return "overfit";
    case Diagnosis::solver_issue: return "solver_issue";
    case Diagnosis::undetermined: return "undetermined";
    }
    return "unknown";
}

Diagnosis diagnose(double train_error, double val_error, double target_error)
{
    for (double v : {train_error, val_error, target_error})
        if (!std::isfinite(v) || v < 0.0)
            throw DomainError("diagnose: errors must be finite and nonnegative");
    const double ceiling = 1.5 * target_error;
    if (train_error <= ceiling && val_error <= ceiling)
        return Diagnosis::satisfactory;
    if (val_error >= 5.0 * train_error && train_error <= ceiling)
        return Diagnosis::overfit;
    if (train_error >= 5.0 * val_error)
        return Diagnosis::solver_issue;
    return Diagnosis::undetermined;
}

// ---------------------------------------------------------------------------

namespace {

struct TrialOutcome {
    Vector w_hat;
    double pred_error = 0.0;
};

using Estimator = std::function<Vector(const LabeledDataset&)>;

void check_spec(const ToyModelSpec& spec, std::size_t trials)
{
    if (spec.w_true.empty())
        throw ConfigError("toy model needs at least one feature");
    if (!(spec.noise_variance >= 0.0) || !std::isfinite(spec.noise_variance))
        throw ConfigError("noise variance must be finite and nonnegative");
    if (trials < 1)
        throw ValidityError("need at least one Monte-Carlo trial");
    if (spec.sample_count < 1)
        throw ValidityError("need at least one training point per trial");
}

std::vector<TrialOutcome> run_trials(const ToyModelSpec& spec, std::size_t trials,
                                     std::size_t threads, const Estimator& estimate)
{
    std::vector<TrialOutcome> out(trials);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            Rng rng = Rng::substream(spec.seed, t);
            const LabeledDataset train =
                generate_toy(spec.w_true, spec.noise_variance, spec.sample_count, rng);
            const LabeledDataset test = generate_toy(spec.w_true, spec.noise_variance, 1, rng);
            out[t].w_hat = estimate(train);
            const double residual = test.labels[0] - dot(out[t].w_hat, test.features.row(0));
            out[t].pred_error = residual * residual;
        }
    };

    threads = std::clamp<std::size_t>(threads, 1, trials);
    if (threads == 1) {
        work(0, trials);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(threads);
    const std::size_t chunk = (trials + threads - 1) / threads;
    for (std::size_t k = 0; k < threads; ++k) {
        const std::size_t begin = std::min(trials, k * chunk);
        const std::size_t end = std::min(trials, begin + chunk);
        pool.emplace_back([&, k, begin, end] {
            try {
                work(begin, end);
            } catch (...) {
                failures[k] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (const auto& f : failures)
        if (f)
            std::rethrow_exception(f);
    return out;
}

double mean_of(const Vector& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

// Standard error of the mean of v.
double standard_error(const Vector& v)
{
    if (v.size() < 2)
        return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void summarize(const ToyModelSpec& spec, const std::vector<TrialOutcome>& trials,
               BiasVarianceResult& result)
{
    const std::size_t n = spec.w_true.size();
    const double count = static_cast<double>(trials.size());
    Vector mean_w(n, 0.0);
    for (const auto& t : trials)
        for (std::size_t l = 0; l < n; ++l)
            mean_w[l] += t.w_hat[l];
    for (double& v : mean_w)
        v /= count;

    Vector coord_var(n, 0.0);
    Vector spread(trials.size());
    Vector pred(trials.size());
    Vector gap(trials.size());
    for (std::size_t k = 0; k < trials.size(); ++k) {
        const Vector& w = trials[k].w_hat;
        double s = 0.0;
        double e = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double dev = w[l] - mean_w[l];
            coord_var[l] += dev * dev;
            s += dev * dev;
            e += (w[l] - spec.w_true[l]) * (w[l] - spec.w_true[l]);
        }
        spread[k] = s;
        pred[k] = trials[k].pred_error;
        gap[k] = trials[k].pred_error - e - spec.noise_variance;
    }
    for (double& v : coord_var)
        v /= count;

    const Vector bias = subtract(mean_w, spec.w_true);
    result.empirical_bias_sq = dot(bias, bias);
    // Delta method: Var(Σ d̂_l²) ≈ Σ 4 d_l² v_l/T + 2 v_l²/T².
    double bias_var = 0.0;
    for (std::size_t l = 0; l < n; ++l)
        bias_var += 4.0 * bias[l] * bias[l] * coord_var[l] / count +
                    2.0 * coord_var[l] * coord_var[l] / (count * count);
    result.empirical_bias_sq_se = std::sqrt(bias_var);
    result.empirical_variance = mean_of(spread);
    result.empirical_variance_se = standard_error(spread);
    result.empirical_pred_error = mean_of(pred);
    result.empirical_pred_error_se = standard_error(pred);
    result.decomposition_gap = result.empirical_pred_error -
                               (result.empirical_bias_sq + result.empirical_variance +
                                spec.noise_variance);
    result.decomposition_gap_se = standard_error(gap);
}

Vector restricted_least_squares(const LabeledDataset& train, std::size_t r)
{
    const Matrix xr = train.features.leading_columns(r);
    const Vector head = solve_spd(gram(xr), transpose_matvec(xr, train.labels));
    Vector w(train.dim(), 0.0);
    std::copy(head.begin(), head.end(), w.begin());
    return w;
}

} // namespace

BiasVarianceResult bias_variance_experiment(const ToyModelSpec& spec, std::size_t r,
                                            std::size_t trials, std::size_t threads)
{
    check_spec(spec, trials);
    const std::size_t n = spec.w_true.size();
    if (r < 1 || r > n)
        throw ConfigError("bias_variance_experiment: r must lie in 1.." + std::to_string(n));
    if (spec.sample_count <= r + 1)
        throw ValidityError("bias_variance_experiment: the inverse-Wishart expectation needs "
                            "m_t > r + 1 (m_t = " + std::to_string(spec.sample_count) +
                            ", r = " + std::to_string(r) + ")");

    BiasVarianceResult result;
    result.r = r;
    result.trials = trials;
    result.sample_count = spec.sample_count;
    result.noise_variance = spec.noise_variance;

    const auto outcomes = run_trials(spec, trials, threads, [r](const LabeledDataset& train) {
        return restricted_least_squares(train, r);
    });
    summarize(spec, outcomes, result);

    double tail = 0.0;
    for (std::size_t l = r; l < n; ++l)
        tail += spec.w_true[l] * spec.w_true[l];
    const double dof = static_cast<double>(r) /
                       static_cast<double>(spec.sample_count - r - 1);
    result.analytic_bias_sq = tail;
    result.analytic_variance = spec.noise_variance * dof;
    result.analytic_pred_error = tail + result.analytic_variance + spec.noise_variance;
    result.analytic_variance_effective = (spec.noise_variance + tail) * dof;
    return result;
}

BiasVarianceResult ridge_bias_variance_experiment(const ToyModelSpec& spec, double lambda,
                                                  std::size_t trials, std::size_t threads)
{
    check_spec(spec, trials);
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ConfigError("ridge_bias_variance_experiment: lambda must be finite and nonnegative");
    const std::size_t n = spec.w_true.size();
    if (lambda == 0.0 && spec.sample_count <= n + 1)
        throw ValidityError("ridge_bias_variance_experiment: lambda = 0 needs m_t > n + 1");

    BiasVarianceResult result;
    result.r = n;
    result.lambda = lambda;
    result.trials = trials;
    result.sample_count = spec.sample_count;
    result.noise_variance = spec.noise_variance;

    const auto outcomes =
        run_trials(spec, trials, threads, [lambda, n](const LabeledDataset& train) {
            if (lambda == 0.0)
                return restricted_least_squares(train, n);
            return fit_ridge_closed(train, RidgeSpec{lambda}).weights;
        });
    summarize(spec, outcomes, result);

    const double w_sq = dot(spec.w_true, spec.w_true);
    const double shrink = lambda / (1.0 + lambda);
    const double ratio = static_cast<double>(n) / static_cast<double>(spec.sample_count);
    result.analytic_bias_sq = shrink * w_sq;
    result.analytic_variance = spec.noise_variance * ratio / (1.0 + lambda);
    result.analytic_pred_error =
        result.analytic_bias_sq + result.analytic_variance + spec.noise_variance;
    result.alternative_bias_sq = shrink * shrink * w_sq;
    result.alternative_variance =
        spec.noise_variance * ratio / ((1.0 + lambda) * (1.0 + lambda));
    return result;
}

namespace {

json result_json(const BiasVarianceResult& r)
{
    return json{{"r", r.r},
                {"lambda", r.lambda},
                {"trials", r.trials},
                {"sample_count", r.sample_count},
                {"noise_variance", r.noise_variance},
                {"empirical_bias_sq", r.empirical_bias_sq},
                {"empirical_bias_sq_se", r.empirical_bias_sq_se},
                {"empirical_variance", r.empirical_variance},
                {"empirical_variance_se", r.empirical_variance_se},
                {"empirical_pred_error", r.empirical_pred_error},
                {"empirical_pred_error_se", r.empirical_pred_error_se},
                {"decomposition_gap", r.decomposition_gap},
                {"decomposition_gap_se", r.decomposition_gap_se},
                {"analytic_bias_sq", r.analytic_bias_sq},
                {"analytic_variance", r.analytic_variance},
                {"analytic_pred_error", r.analytic_pred_error},
                {"analytic_variance_effective", r.analytic_variance_effective},
                {"alternative_bias_sq", r.alternative_bias_sq},
                {"alternative_variance", r.alternative_variance}};
}

} // namespace

std::string BiasVarianceResult::to_json() const
{
    return result_json(*this).dump(2);
}

std::string sweep_to_json(const std::vector<BiasVarianceResult>& rows)
{
    json j = json::array();
    for (const auto& r : rows)
        j.push_back(result_json(r));
    return j.dump(2);
}

std::string sweep_to_csv(const std::vector<BiasVarianceResult>& rows)
{
    std::ostringstream out;
    out.precision(10);
    out << "r,lambda,trials,empirical_bias_sq,empirical_bias_sq_se,empirical_variance,"
           "empirical_variance_se,empirical_pred_error,empirical_pred_error_se,"
           "analytic_bias_sq,analytic_variance,analytic_pred_error,"
           "analytic_variance_effective,alternative_bias_sq,alternative_variance\n";
    for (const auto& r : rows)
        out << r.r << ',' << r.lambda << ',' << r.trials << ',' << r.empirical_bias_sq << ','
            << r.empirical_bias_sq_se << ',' << r.empirical_variance << ','
            << r.empirical_variance_se << ',' << r.empirical_pred_error << ','
            << r.empirical_pred_error_se << ',' << r.analytic_bias_sq << ','
            << r.analytic_variance << ',' << r.analytic_pred_error << ','
            << r.analytic_variance_effective << ',' << r.alternative_bias_sq << ','
            << r.alternative_variance << '\n';
    return out.str();
}

} // namespace erm
