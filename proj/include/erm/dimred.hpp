#pragma once

#include "erm/data.hpp"
#include "erm/models.hpp"
#include "erm/numerics.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace erm {

struct PcaModel {
    Matrix compression;  ///< n x D, rows are the top-n eigenvectors of Q
    Vector spectrum;     ///< all D eigenvalues of Q, descending
    std::size_t pc_count = 0;
    bool centered = true;
    Vector center;       ///< sample mean when centered, zeros otherwise
    double error = 0.0;  ///< Σ_{r > n} λ_r

    std::string to_json() const;
};

/// PCA from the EVD of Q = (1/m) Σ z zᵀ, computed on centered points when
/// `center` is set. n = 0 keeps no component. Throws ShapeError for n > D.
PcaModel fit_pca(const LabeledDataset& d, std::size_t n, bool center = true);

/// x = W (z - center)
Vector compress(const PcaModel& model, std::span<const double> z);
/// ẑ = Wᵀ x + center
Vector reconstruct(const PcaModel& model, std::span<const double> x);

/// (1/m) Σ ‖z_i - reconstruct(compress(z_i))‖², evaluated point by point.
double reconstruction_error(const PcaModel& model, const LabeledDataset& d);

/// Dataset of compressed features; labels are carried over.
LabeledDataset compress_dataset(const PcaModel& model, const LabeledDataset& d);

/// "pc1,pc2" rows for a scatter plot. Needs a model with at least two PCs.
std::string scatter_csv(const PcaModel& model, const LabeledDataset& d);

enum class ProjectionDistribution { gaussian, bernoulli };

/// n x D matrix with i.i.d. N(0,1) or ±1 entries scaled by 1/√n.
Matrix random_projection(std::size_t D, std::size_t n, ProjectionDistribution dist,
                         std::uint64_t seed);

struct PcaRegression {
    PcaModel pca;
    LinearModel regression;

    double predict(std::span<const double> z) const;
};

/// PCA to n components followed by least squares (or ridge when `lambda` is
/// given) on the compressed features. Throws ValidityError unless n < m_t.
PcaRegression pca_regression(const LabeledDataset& d, std::size_t n,
                             std::optional<double> lambda = std::nullopt, bool center = true);

} // namespace erm
