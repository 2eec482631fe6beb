#include "erm/learners.hpp"

#include "erm/errors.hpp"
#include "erm/losses.hpp"

#include <algorithm>
#include <cmath>

namespace erm {

namespace {

void require_real_labels(const LabeledDataset& d, const char* op)
{
    if (d.size() == 0)
        throw SizeError(std::string(op) + ": empty dataset");
    if (!d.has_labels())
        throw DomainError(std::string(op) + ": dataset has no labels");
}

void require_both_classes(const LabeledDataset& d, const char* op)
{
    require_real_labels(d, op);
    std::size_t plus = 0;
    std::size_t minus = 0;
    for (double y : d.labels) {
        if (y == 1.0)
            ++plus;
        else if (y == -1.0)
            ++minus;
        else
            throw DomainError(std::string(op) + ": labels must be -1 or +1");
    }
    if (plus == 0 || minus == 0)
        throw DegenerateDataError(std::string(op) + ": both classes must be present (found " +
                                  std::to_string(plus) + " positive, " + std::to_string(minus) +
                                  " negative)");
}

} // namespace

LinearModel fit_linreg_closed(const LabeledDataset& d)
{
    require_real_labels(d, "fit_linreg_closed");
    const Matrix g = gram(d.features);
    const SymmetricEvd evd = sym_evd(g);
    const double lmax = evd.eigenvalues.front();
    const double lmin = evd.eigenvalues.back();
    if (!(lmax > 0.0) || lmin <= rank_tolerance * lmax)
        throw SingularityError("fit_linreg_closed: XᵀX is singular (features linearly dependent "
                               "or fewer data points than features); use ridge regression or GD",
                               SingularityError::npos);
    return LinearModel{solve_spd(g, transpose_matvec(d.features, d.labels)), std::nullopt};
}

LinearModel fit_linreg_min_norm(const LabeledDataset& d)
{
    require_real_labels(d, "fit_linreg_min_norm");
    if (d.size() > d.dim())
        throw ShapeError("fit_linreg_min_norm: needs m <= n, got m = " + std::to_string(d.size()) +
                         ", n = " + std::to_string(d.dim()));
    const Matrix outer = matmul(d.features, d.features.transpose());
    Vector coeffs;
    try {
        coeffs = solve_spd(outer, d.labels);
    } catch (const SingularityError& e) {
        throw SingularityError("fit_linreg_min_norm: data points are linearly dependent",
                               e.pivot());
    }
    return LinearModel{transpose_matvec(d.features, coeffs), std::nullopt};
}

LinearModel fit_ridge_closed(const LabeledDataset& d, const RidgeSpec& spec)
{
    require_real_labels(d, "fit_ridge_closed");
    if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda))
        throw DomainError("fit_ridge_closed: lambda must be positive and finite");
    const double m = static_cast<double>(d.size());
    const Matrix a = add_identity(scale(gram(d.features), 1.0 / m), spec.lambda);
    Vector rhs = transpose_matvec(d.features, d.labels);
    for (double& v : rhs)
        v /= m;
    return LinearModel{solve_spd(a, rhs), std::nullopt};
}

GdFit fit_linreg_gd(const LabeledDataset& d, const GdConfig& config)
{
    require_real_labels(d, "fit_linreg_gd");
    GdTrace trace = run_gd(LinregObjective{}, d, config);
    return GdFit{LinearModel{trace.weights, std::nullopt}, std::move(trace)};
}

GdFit fit_ridge_gd(const LabeledDataset& d, const RidgeSpec& spec, const GdConfig& config)
{
    require_real_labels(d, "fit_ridge_gd");
    GdTrace trace = run_gd(RidgeObjective{spec.lambda}, d, config);
    return GdFit{LinearModel{trace.weights, std::nullopt}, std::move(trace)};
}

GdFit fit_logreg(const LabeledDataset& d, const GdConfig& config)
{
    require_both_classes(d, "fit_logreg");
    GdTrace trace = run_gd(LogregObjective{}, d, config);
    return GdFit{LinearModel{trace.weights, std::nullopt}, std::move(trace)};
}

double logreg_probability(const LinearModel& model, std::span<const double> x)
{
    const double h = predict_linear(model, x);
    return std::exp(-softplus(-h));
}

GaussianEstimate gaussian_ml(const LabeledDataset& points)
{
    const std::size_t m = points.size();
    const std::size_t n = points.dim();
    if (m == 0)
        throw SizeError("gaussian_ml: no data points");
    GaussianEstimate est{Vector(n, 0.0), Matrix(n, n)};
    for (std::size_t i = 0; i < m; ++i) {
        auto z = points.features.row(i);
        for (std::size_t j = 0; j < n; ++j)
            est.mean[j] += z[j];
    }
    for (double& v : est.mean)
        v /= static_cast<double>(m);
    Matrix centered = points.features;
    for (std::size_t i = 0; i < m; ++i) {
        auto z = centered.row(i);
        for (std::size_t j = 0; j < n; ++j)
            z[j] -= est.mean[j];
    }
    est.covariance = scale(gram(centered), 1.0 / static_cast<double>(m));
    return est;
}

BayesFit fit_bayes(const LabeledDataset& d, bool naive)
{
    require_both_classes(d, "fit_bayes");
    const std::size_t n = d.dim();
    GaussianClassParams params;
    params.mu_plus.assign(n, 0.0);
    params.mu_minus.assign(n, 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto x = d.features.row(i);
        Vector& target = d.labels[i] > 0 ? params.mu_plus : params.mu_minus;
        (d.labels[i] > 0 ? params.count_plus : params.count_minus) += 1;
        for (std::size_t j = 0; j < n; ++j)
            target[j] += x[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        params.mu_plus[j] /= static_cast<double>(params.count_plus);
        params.mu_minus[j] /= static_cast<double>(params.count_minus);
    }

    // Pooled estimate around the global mean, not the class means.
    params.sigma = gaussian_ml(d).covariance;
    if (naive)
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                if (r != c)
                    params.sigma(r, c) = 0.0;

    const Vector diff = subtract(params.mu_plus, params.mu_minus);
    Vector w;
    try {
        w = solve_spd(params.sigma, diff);
    } catch (const SingularityError& e) {
        if (naive)
            throw SingularityError("fit_bayes: a feature has zero variance, so the diagonal "
                                   "covariance estimate is singular",
                                   e.pivot());
        throw SingularityError("fit_bayes: estimated covariance matrix is singular (m = " +
                                   std::to_string(d.size()) + ", n = " + std::to_string(n) +
                                   "); retry with naive mode",
                               e.pivot());
    }
    return BayesFit{LinearModel{std::move(w), std::nullopt}, std::move(params)};
}

std::vector<Vector> default_thresholds(const LabeledDataset& d)
{
    std::vector<Vector> out(d.dim());
    for (std::size_t j = 0; j < d.dim(); ++j) {
        Vector values = d.features.column(j);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        if (values.size() == 1) {
            out[j] = values;
            continue;
        }
        for (std::size_t k = 0; k + 1 < values.size(); ++k)
            out[j].push_back(0.5 * (values[k] + values[k + 1]));
    }
    return out;
}

namespace {

struct LeafStats {
    double value = 0.0;
    double sse = 0.0;
};

LeafStats leaf_stats(const LabeledDataset& d, const std::vector<std::size_t>& idx)
{
    LeafStats s;
    double mean = 0.0;
    for (std::size_t i : idx)
        mean += d.labels[i];
    mean /= static_cast<double>(idx.size());
    for (std::size_t i : idx)
        s.sse += (d.labels[i] - mean) * (d.labels[i] - mean);
    s.value = mean;
    if (d.label_kind == LabelKind::binary)
        s.value = mean >= 0.0 ? 1.0 : -1.0;
    return s;
}

} // namespace

DecisionTree grow_tree(const LabeledDataset& d, std::size_t max_depth,
                       const std::vector<Vector>& thresholds)
{
    require_real_labels(d, "grow_tree");
    if (thresholds.size() != d.dim())
        throw ShapeError("grow_tree: need one threshold list per feature");
    for (std::size_t j = 0; j < thresholds.size(); ++j)
        if (thresholds[j].empty())
            throw ConfigError("grow_tree: empty threshold list for feature " + std::to_string(j));

    std::vector<std::size_t> all(d.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;

    DecisionTree tree = DecisionTree::leaf(leaf_stats(d, all).value);
    tree.max_depth = max_depth;
    std::vector<std::vector<std::size_t>> members{all};
    std::vector<std::size_t> depth{0};

    double total_sse = leaf_stats(d, all).sse;
    const double min_gain = 1e-12 * std::max(1.0, total_sse);

    while (true) {
        double best_gain = min_gain;
        std::size_t best_node = 0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;
        for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
            if (!tree.nodes[node].is_leaf || depth[node] >= max_depth)
                continue;
            const auto& idx = members[node];
            const double parent = leaf_stats(d, idx).sse;
            for (std::size_t j = 0; j < d.dim(); ++j) {
                for (double t : thresholds[j]) {
                    std::vector<std::size_t> yes;
                    std::vector<std::size_t> no;
                    for (std::size_t i : idx)
                        (d.features(i, j) <= t ? yes : no).push_back(i);
                    if (yes.empty() || no.empty())
                        continue;
                    const double gain = parent - leaf_stats(d, yes).sse - leaf_stats(d, no).sse;
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_node = node;
                        best_feature = j;
                        best_threshold = t;
                        found = true;
                    }
                }
            }
        }
        if (!found)
            break;

        std::vector<std::size_t> yes;
        std::vector<std::size_t> no;
        for (std::size_t i : members[best_node])
            (d.features(i, best_feature) <= best_threshold ? yes : no).push_back(i);

        const std::size_t yes_index = tree.nodes.size();
        DecisionTree::Node yes_leaf;
        yes_leaf.value = leaf_stats(d, yes).value;
        DecisionTree::Node no_leaf;
        no_leaf.value = leaf_stats(d, no).value;
        tree.nodes.push_back(yes_leaf);
        tree.nodes.push_back(no_leaf);

        DecisionTree::Node& split_node = tree.nodes[best_node];
        split_node.is_leaf = false;
        split_node.feature = best_feature;
        split_node.threshold = best_threshold;
        split_node.yes = yes_index;
        split_node.no = yes_index + 1;

        const std::size_t child_depth = depth[best_node] + 1;
        members.push_back(std::move(yes));
        members.push_back(std::move(no));
        depth.push_back(child_depth);
        depth.push_back(child_depth);
        total_sse -= best_gain;
    }
    return tree;
}

DecisionTree grow_tree(const LabeledDataset& d, std::size_t max_depth)
{
    return grow_tree(d, max_depth, default_thresholds(d));
}

GdConfig svm_default_config(double lambda)
{
    if (!(lambda > 0.0))
        throw DomainError("svm: lambda must be positive");
    GdConfig config;
    config.step = DecayingStep{1.0 / (2.0 * lambda)};
    config.max_iters = 2000;
    return config;
}

GdFit fit_svm(const LabeledDataset& d, double lambda, const GdConfig& config)
{
    require_both_classes(d, "fit_svm");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw DomainError("fit_svm: lambda must be positive and finite");
    GdTrace trace = run_gd(HingeObjective{lambda}, d, config);
    return GdFit{LinearModel{trace.best_weights, std::nullopt}, std::move(trace)};
}

GdFit fit_svm(const LabeledDataset& d, double lambda)
{
    return fit_svm(d, lambda, svm_default_config(lambda));
}

} // namespace erm
