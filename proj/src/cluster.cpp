#include "erm/cluster.hpp"

#include "erm/errors.hpp"
#include "erm/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace erm {

using nlohmann::json;

namespace {

void check_points(const LabeledDataset& d, std::size_t k, const char* op)
{
    if (d.size() == 0)
        throw SizeError(std::string(op) + ": empty dataset");
    if (k < 1)
        throw SizeError(std::string(op) + ": need at least one cluster");
    if (k > d.size())
        throw SizeError(std::string(op) + ": k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(d.size()) + " data points");
}

json matrix_json(const Matrix& a)
{
    json rows = json::array();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = a.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Vector sample_mean(const LabeledDataset& d)
{
    Vector mean(d.dim(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.dim(); ++j)
            mean[j] += d.features(i, j);
    for (double& v : mean)
        v /= static_cast<double>(d.size());
    return mean;
}

Matrix sample_covariance(const LabeledDataset& d, const Vector& mean)
{
    Matrix centered = d.features;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.dim(); ++j)
            centered(i, j) -= mean[j];
    return scale(gram(centered), 1.0 / static_cast<double>(d.size()));
}

// Means of the clusters that received points; the others keep `means`.
void update_means(const LabeledDataset& d, const std::vector<std::size_t>& assignments,
                  Matrix& means)
{
    const std::size_t k = means.rows();
    Matrix sums(k, d.dim());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::size_t c = assignments[i];
        ++counts[c];
        for (std::size_t j = 0; j < d.dim(); ++j)
            sums(c, j) += d.features(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0)
            continue;
        for (std::size_t j = 0; j < d.dim(); ++j)
            means(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
}

} // namespace

std::vector<std::size_t> assign_nearest(const LabeledDataset& d, const Matrix& means)
{
    if (means.rows() == 0 || means.cols() != d.dim())
        throw ShapeError("assign_nearest: means must be a k x n matrix with k >= 1");
    std::vector<std::size_t> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto x = d.features.row(i);
        std::size_t best = 0;
        double best_dist = squared_distance(x, means.row(0));
        for (std::size_t c = 1; c < means.rows(); ++c) {
            const double dist = squared_distance(x, means.row(c));
            if (dist < best_dist) {
                best_dist = dist;
                best = c;
            }
        }
        out[i] = best;
    }
    return out;
}

double clustering_error(const LabeledDataset& d, const Matrix& means,
                        const std::vector<std::size_t>& assignments)
{
    if (assignments.size() != d.size())
        throw ShapeError("clustering_error: one assignment per data point required");
    if (d.size() == 0)
        throw SizeError("clustering_error: empty dataset");
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (assignments[i] >= means.rows())
            throw ShapeError("clustering_error: assignment out of range");
        total += squared_distance(d.features.row(i), means.row(assignments[i]));
    }
    return total / static_cast<double>(d.size());
}

Matrix initial_means(const LabeledDataset& d, const KmeansConfig& config)
{
    check_points(d, config.k, "kmeans");
    const std::size_t k = config.k;
    const std::size_t n = d.dim();
    Rng rng(config.seed);
    return std::visit(
        [&](const auto& init) -> Matrix {
            using T = std::decay_t<decltype(init)>;
            if constexpr (std::is_same_v<T, ProvidedMeansInit>) {
                if (init.means.rows() != k || init.means.cols() != n)
                    throw ShapeError("kmeans: provided means must be " + std::to_string(k) +
                                     " x " + std::to_string(n));
                if (!all_finite(init.means))
                    throw DomainError("kmeans: provided means must be finite");
                return init.means;
            } else if constexpr (std::is_same_v<T, SamplePointsInit>) {
                std::vector<std::size_t> order(d.size());
                for (std::size_t i = 0; i < order.size(); ++i)
                    order[i] = i;
                for (std::size_t c = 0; c < k; ++c)
                    std::swap(order[c], order[c + rng.index(order.size() - c)]);
                order.resize(k);
                return d.features.select_rows(order);
            } else {
                const Vector mean = sample_mean(d);
                const SymmetricEvd evd = sym_evd(sample_covariance(d, mean));
                Matrix means(k, n);
                for (std::size_t c = 0; c < k; ++c) {
                    Vector z(n);
                    for (double& v : z)
                        v = rng.normal();
                    for (std::size_t j = 0; j < n; ++j) {
                        double v = mean[j];
                        for (std::size_t l = 0; l < n; ++l)
                            v += evd.eigenvectors(j, l) *
                                 std::sqrt(std::max(evd.eigenvalues[l], 0.0)) * z[l];
                        means(c, j) = v;
                    }
                }
                return means;
            }
        },
        config.init);
}

HardClustering kmeans(const LabeledDataset& d, const KmeansConfig& config)
{
    if (!(config.epsilon >= 0.0))
        throw ConfigError("kmeans: epsilon must be nonnegative");
    if (config.max_iters < 1)
        throw ConfigError("kmeans: max_iters must be at least 1");

    HardClustering result;
    result.means = initial_means(d, config);
    result.assignments = assign_nearest(d, result.means);
    result.error = clustering_error(d, result.means, result.assignments);
    result.error_trace.push_back(result.error);

    for (std::size_t r = 1; r <= config.max_iters; ++r) {
        result.assignments = assign_nearest(d, result.means);
        update_means(d, result.assignments, result.means);
        const double previous = result.error;
        result.error = clustering_error(d, result.means, result.assignments);
        result.error_trace.push_back(result.error);
        result.iterations = r;
        if (previous - result.error <= config.epsilon) {
            result.converged = true;
            break;
        }
    }
    return result;
}

HardClustering kmeans_multi_restart(const LabeledDataset& d, std::size_t k,
                                    std::size_t restarts, double epsilon, std::uint64_t seed,
                                    std::size_t threads)
{
    if (restarts < 1)
        throw ConfigError("kmeans_multi_restart: restarts must be at least 1");
    check_points(d, k, "kmeans_multi_restart");
    std::vector<HardClustering> runs(restarts);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            KmeansConfig config;
            config.k = k;
            config.epsilon = epsilon;
            config.seed = seed + r;
            runs[r] = kmeans(d, config);
        }
    };
    threads = std::clamp<std::size_t>(threads, 1, restarts);
    if (threads == 1) {
        work(0, restarts);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> failures(threads);
        const std::size_t chunk = (restarts + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(restarts, t * chunk);
            const std::size_t end = std::min(restarts, begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                try {
                    work(begin, end);
                } catch (...) {
                    failures[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool)
            th.join();
        for (const auto& f : failures)
            if (f)
                std::rethrow_exception(f);
    }
    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r)
        if (runs[r].error < runs[best].error)
            best = r;
    return runs[best];
}

std::vector<ElbowPoint> elbow_sweep(const LabeledDataset& d, std::size_t k_max,
                                    std::size_t restarts, std::uint64_t seed,
                                    std::size_t threads)
{
    check_points(d, k_max, "elbow_sweep");
    std::vector<ElbowPoint> out;
    HardClustering previous;
    for (std::size_t k = 1; k <= k_max; ++k) {
        HardClustering best = kmeans_multi_restart(d, k, restarts, 0.0, seed, threads);
        if (k > 1) {
            // Warm start: previous means plus the point farthest from them.
            std::size_t far = 0;
            double far_dist = -1.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double dist =
                    squared_distance(d.features.row(i), previous.means.row(previous.assignments[i]));
                if (dist > far_dist) {
                    far_dist = dist;
                    far = i;
                }
            }
            Matrix means(k, d.dim());
            for (std::size_t c = 0; c + 1 < k; ++c)
                for (std::size_t j = 0; j < d.dim(); ++j)
                    means(c, j) = previous.means(c, j);
            for (std::size_t j = 0; j < d.dim(); ++j)
                means(k - 1, j) = d.features(far, j);
            KmeansConfig config;
            config.k = k;
            config.init = ProvidedMeansInit{means};
            HardClustering warm = kmeans(d, config);
            if (warm.error < best.error)
                best = std::move(warm);
        }
        out.push_back(ElbowPoint{k, best.error});
        previous = std::move(best);
    }
    return out;
}

std::string elbow_to_csv(const std::vector<ElbowPoint>& points)
{
    std::ostringstream out;
    out.precision(17);
    out << "k,error\n";
    for (const auto& p : points)
        out << p.k << ',' << p.error << '\n';
    return out.str();
}

std::string HardClustering::to_csv() const
{
    std::ostringstream out;
    out << "index,cluster\n";
    for (std::size_t i = 0; i < assignments.size(); ++i)
        out << i << ',' << assignments[i] << '\n';
    return out.str();
}

std::string HardClustering::to_json() const
{
    json j{{"means", matrix_json(means)},
           {"error", error},
           {"iterations", iterations},
           {"converged", converged},
           {"error_trace", error_trace},
           {"assignments", assignments}};
    return j.dump(2);
}

// ---------------------------------------------------------------------------

double log_gaussian_density(std::span<const double> x, std::span<const double> mean,
                            const Matrix& cov)
{
    const std::size_t n = x.size();
    if (mean.size() != n || cov.rows() != n || cov.cols() != n)
        throw ShapeError("log_gaussian_density: dimension mismatch");
    const SymmetricEvd evd = sym_evd(cov);
    double log_det = 0.0;
    double quad = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double lambda = evd.eigenvalues[l];
        if (!(lambda > 0.0))
            throw DomainError("log_gaussian_density: covariance is not positive definite");
        double proj = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            proj += evd.eigenvectors(j, l) * (x[j] - mean[j]);
        log_det += std::log(lambda);
        quad += proj * proj / lambda;
    }
    return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

namespace {

// Precomputed eigen-factorization of every component covariance.
struct ComponentFactor {
    SymmetricEvd evd;
    double log_norm = 0.0; // -0.5 (n log 2π + log det C)
};

std::vector<ComponentFactor> factor_components(const GmmParams& params)
{
    std::vector<ComponentFactor> out;
    for (const Matrix& cov : params.covariances) {
        ComponentFactor f{sym_evd(cov), 0.0};
        double log_det = 0.0;
        for (double lambda : f.evd.eigenvalues) {
            if (!(lambda > 0.0))
                throw DomainError("gmm: covariance is not positive definite");
            log_det += std::log(lambda);
        }
        f.log_norm = -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) +
                             log_det);
        out.push_back(std::move(f));
    }
    return out;
}

double component_log_density(const ComponentFactor& f, std::span<const double> x,
                             std::span<const double> mean)
{
    const std::size_t n = x.size();
    double quad = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        double proj = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            proj += f.evd.eigenvectors(j, l) * (x[j] - mean[j]);
        quad += proj * proj / f.evd.eigenvalues[l];
    }
    return f.log_norm - 0.5 * quad;
}

void check_params(const GmmParams& params, std::size_t n)
{
    const std::size_t k = params.probabilities.size();
    if (k == 0 || params.means.rows() != k || params.means.cols() != n ||
        params.covariances.size() != k)
        throw ShapeError("gmm: inconsistent parameter shapes");
}

Matrix regularize(Matrix cov, double floor)
{
    const double lmin = sym_evd(cov).eigenvalues.back();
    if (lmin < floor) {
        const double n = static_cast<double>(cov.rows());
        cov = add_identity(cov, std::max(1e-6 * cov.trace() / n, floor));
    }
    return cov;
}

} // namespace

std::pair<Matrix, double> gmm_responsibilities(const LabeledDataset& d, const GmmParams& params)
{
    check_params(params, d.dim());
    const std::size_t k = params.k();
    const auto factors = factor_components(params);
    Matrix degrees(d.size(), k);
    double nll = 0.0;
    Vector logs(k);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto x = d.features.row(i);
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double p = params.probabilities[c];
            logs[c] = p > 0.0 ? std::log(p) + component_log_density(factors[c], x, params.means.row(c))
                              : -std::numeric_limits<double>::infinity();
            top = std::max(top, logs[c]);
        }
        if (!std::isfinite(top)) {
            for (std::size_t c = 0; c < k; ++c)
                degrees(i, c) = 1.0 / static_cast<double>(k);
            nll = std::numeric_limits<double>::infinity();
            continue;
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            degrees(i, c) = std::exp(logs[c] - top);
            sum += degrees(i, c);
        }
        for (std::size_t c = 0; c < k; ++c)
            degrees(i, c) /= sum;
        nll -= top + std::log(sum);
    }
    return {std::move(degrees), nll / static_cast<double>(d.size())};
}

namespace {

// M step. Components with (numerically) no mass keep their previous mean and
// covariance.
GmmParams maximize(const LabeledDataset& d, const Matrix& degrees, const GmmParams& previous,
                   double floor, bool update_covariances)
{
    const std::size_t k = previous.k();
    const std::size_t n = d.dim();
    const double m = static_cast<double>(d.size());
    GmmParams next = previous;
    for (std::size_t c = 0; c < k; ++c) {
        double mass = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
            mass += degrees(i, c);
        next.probabilities[c] = mass / m;
        if (!(mass > 1e-300))
            continue;
        Vector mean(n, 0.0);
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = 0; j < n; ++j)
                mean[j] += degrees(i, c) * d.features(i, j);
        for (std::size_t j = 0; j < n; ++j)
            next.means(c, j) = mean[j] / mass;
        if (!update_covariances)
            continue;
        Matrix cov(n, n);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double w = degrees(i, c);
            if (w == 0.0)
                continue;
            for (std::size_t a = 0; a < n; ++a) {
                const double da = d.features(i, a) - next.means(c, a);
                for (std::size_t b = a; b < n; ++b)
                    cov(a, b) += w * da * (d.features(i, b) - next.means(c, b));
            }
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a; b < n; ++b) {
                cov(a, b) /= mass;
                cov(b, a) = cov(a, b);
            }
        next.covariances[c] = regularize(std::move(cov), floor);
    }
    // Renormalize against rounding so the probabilities sum to one.
    double total = 0.0;
    for (double p : next.probabilities)
        total += p;
    for (double& p : next.probabilities)
        p /= total;
    return next;
}

} // namespace

SoftClustering gmm_em(const LabeledDataset& d, const GmmConfig& config)
{
    if (!(config.covariance_floor > 0.0))
        throw ConfigError("gmm_em: covariance floor must be positive");
    if (!(config.tol >= 0.0))
        throw ConfigError("gmm_em: tol must be nonnegative");
    if (config.max_iters < 1)
        throw ConfigError("gmm_em: max_iters must be at least 1");
    KmeansConfig init;
    init.k = config.k;
    init.init = config.init;
    init.seed = config.seed;

    SoftClustering result;
    GmmParams& params = result.params;
    params.means = initial_means(d, init);
    const Matrix start_cov =
        regularize(sample_covariance(d, sample_mean(d)), config.covariance_floor);
    params.covariances.assign(config.k, start_cov);
    params.probabilities.assign(config.k, 1.0 / static_cast<double>(config.k));

    auto [degrees, nll] = gmm_responsibilities(d, params);
    result.nll_trace.push_back(nll);
    for (std::size_t it = 1; it <= config.max_iters; ++it) {
        params = maximize(d, degrees, params, config.covariance_floor, true);
        auto [next_degrees, next_nll] = gmm_responsibilities(d, params);
        degrees = std::move(next_degrees);
        result.nll_trace.push_back(next_nll);
        result.iterations = it;
        const double decrease = nll - next_nll;
        nll = next_nll;
        if (decrease <= config.tol) {
            result.converged = true;
            break;
        }
    }
    result.degrees = std::move(degrees);
    return result;
}

std::string SoftClustering::to_csv() const
{
    std::ostringstream out;
    out.precision(17);
    out << "index";
    for (std::size_t c = 0; c < degrees.cols(); ++c)
        out << ",degree_" << c;
    out << '\n';
    for (std::size_t i = 0; i < degrees.rows(); ++i) {
        out << i;
        for (std::size_t c = 0; c < degrees.cols(); ++c)
            out << ',' << degrees(i, c);
        out << '\n';
    }
    return out.str();
}

std::string SoftClustering::to_json() const
{
    json covs = json::array();
    for (const auto& c : params.covariances)
        covs.push_back(matrix_json(c));
    json j{{"means", matrix_json(params.means)},
           {"covariances", covs},
           {"probabilities", params.probabilities},
           {"nll_trace", nll_trace},
           {"iterations", iterations},
           {"converged", converged}};
    return j.dump(2);
}

HardClustering gmm_hard_limit_check(const LabeledDataset& d, const Matrix& initial_means,
                                    double sigma_sq, std::size_t max_iters)
{
    if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq))
        throw ConfigError("gmm_hard_limit_check: sigma^2 must be positive");
    check_points(d, initial_means.rows(), "gmm_hard_limit_check");
    if (initial_means.cols() != d.dim())
        throw ShapeError("gmm_hard_limit_check: means have the wrong dimension");
    const std::size_t k = initial_means.rows();
    GmmParams params;
    params.means = initial_means;
    params.covariances.assign(k, scale(Matrix::identity(d.dim()), sigma_sq));
    params.probabilities.assign(k, 1.0 / static_cast<double>(k));

    auto round = [k](const Matrix& degrees) {
        std::vector<std::size_t> out(degrees.rows());
        for (std::size_t i = 0; i < degrees.rows(); ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c)
                if (degrees(i, c) > degrees(i, best))
                    best = c;
            out[i] = best;
        }
        return out;
    };

    HardClustering result;
    Matrix degrees = gmm_responsibilities(d, params).first;
    result.assignments = round(degrees);
    result.error_trace.push_back(clustering_error(d, params.means, result.assignments));
    for (std::size_t it = 1; it <= max_iters; ++it) {
        params = maximize(d, degrees, params, sigma_sq, false);
        degrees = gmm_responsibilities(d, params).first;
        std::vector<std::size_t> next = round(degrees);
        result.iterations = it;
        result.error_trace.push_back(clustering_error(d, params.means, next));
        const bool same = next == result.assignments;
        result.assignments = std::move(next);
        if (same) {
            result.converged = true;
            break;
        }
    }
    result.means = params.means;
    result.error = result.error_trace.back();
    return result;
}

HardClustering gmm_hard_limit_check(const LabeledDataset& d, std::size_t k, double sigma_sq,
                                    std::uint64_t seed)
{
    KmeansConfig config;
    config.k = k;
    config.seed = seed;
    return gmm_hard_limit_check(d, initial_means(d, config), sigma_sq);
}

} // namespace erm
