#pragma once

#include "erm/data.hpp"
#include "erm/numerics.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace erm {

// Cluster indices are 0-based throughout; the lowest index wins ties.

/// k distinct data points chosen uniformly at random.
struct SamplePointsInit {};
/// k draws from N(sample mean, sample covariance).
struct RandomNormalInit {};
/// Caller-supplied k x n matrix of means.
struct ProvidedMeansInit {
    Matrix means;
};
using KmeansInit = std::variant<SamplePointsInit, RandomNormalInit, ProvidedMeansInit>;

struct KmeansConfig {
    std::size_t k = 1;
    KmeansInit init = SamplePointsInit{};
    /// Stop once the error decrease E(r-1) - E(r) is <= epsilon.
    double epsilon = 0.0;
    /// Safeguard only; the fixed-point iteration terminates on its own.
    std::size_t max_iters = 10000;
    std::uint64_t seed = 0;
};

struct HardClustering {
    std::vector<std::size_t> assignments;
    Matrix means;             ///< k x n
    double error = 0.0;       ///< (1/m) Σ ‖x_i - m_{y_i}‖²
    std::size_t iterations = 0;
    Vector error_trace;       ///< E(0), E(1), ..., E(R)
    bool converged = false;

    std::string to_csv() const; ///< "index,cluster"
    std::string to_json() const;
};

/// Nearest mean for every point; ties go to the smallest cluster index.
std::vector<std::size_t> assign_nearest(const LabeledDataset& d, const Matrix& means);

double clustering_error(const LabeledDataset& d, const Matrix& means,
                        const std::vector<std::size_t>& assignments);

/// Initial means drawn according to config.init and config.seed.
Matrix initial_means(const LabeledDataset& d, const KmeansConfig& config);

/// k-Means II: alternate nearest-mean assignment (ties to the lowest index)
/// and mean updates of the clusters that received points. Empty clusters keep
/// their previous mean. E(0) is the error of the initial means with
/// nearest-mean assignments.
HardClustering kmeans(const LabeledDataset& d, const KmeansConfig& config);

/// Runs kmeans with seeds seed, seed + 1, ... and keeps the smallest error
/// (ties to the earliest run). restarts = 1 is a plain kmeans call.
HardClustering kmeans_multi_restart(const LabeledDataset& d, std::size_t k,
                                    std::size_t restarts, double epsilon, std::uint64_t seed,
                                    std::size_t threads = 1);

struct ElbowPoint {
    std::size_t k = 0;
    double error = 0.0;
};

/// Best clustering error for k = 1..k_max. Besides the random restarts each
/// k > 1 also tries the best (k-1) means plus the point farthest from them,
/// which makes the curve nonincreasing.
std::vector<ElbowPoint> elbow_sweep(const LabeledDataset& d, std::size_t k_max,
                                    std::size_t restarts, std::uint64_t seed,
                                    std::size_t threads = 1);

std::string elbow_to_csv(const std::vector<ElbowPoint>& points);

// ---------------------------------------------------------------------------
// Gaussian mixture models

struct GmmParams {
    Matrix means;                   ///< k x n
    std::vector<Matrix> covariances;
    Vector probabilities;

    std::size_t k() const noexcept { return probabilities.size(); }
};

struct GmmConfig {
    std::size_t k = 1;
    /// Means come from this initializer; covariances start at the sample
    /// covariance and probabilities at 1/k.
    KmeansInit init = SamplePointsInit{};
    std::size_t max_iters = 500;
    /// Stop once the per-point negative log-likelihood drops by <= tol.
    double tol = 1e-10;
    /// A covariance whose smallest eigenvalue falls below this is regularized.
    double covariance_floor = 1e-9;
    std::uint64_t seed = 0;
};

struct SoftClustering {
    Matrix degrees; ///< m x k, rows sum to one
    GmmParams params;
    /// Per-point negative log-likelihood -(1/m) Σ log p(x_i) after each E step.
    Vector nll_trace;
    std::size_t iterations = 0;
    bool converged = false;

    std::string to_csv() const;
    std::string to_json() const;
};

/// log N(x; mean, cov) for symmetric positive-definite cov.
double log_gaussian_density(std::span<const double> x, std::span<const double> mean,
                            const Matrix& cov);

/// Degrees of belonging (computed in log-space) and the per-point negative
/// log-likelihood. A point where every component density underflows gets
/// uniform degrees.
std::pair<Matrix, double> gmm_responsibilities(const LabeledDataset& d, const GmmParams& params);

SoftClustering gmm_em(const LabeledDataset& d, const GmmConfig& config);

/// EM with every covariance fixed at σ²I. Stops when the rounded assignments
/// stop changing; rounding picks the largest degree, ties to the lowest index.
HardClustering gmm_hard_limit_check(const LabeledDataset& d, const Matrix& initial_means,
                                    double sigma_sq, std::size_t max_iters = 10000);
HardClustering gmm_hard_limit_check(const LabeledDataset& d, std::size_t k, double sigma_sq,
                                    std::uint64_t seed);

} // namespace erm
