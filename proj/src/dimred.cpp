#include "erm/dimred.hpp"

#include "erm/errors.hpp"
#include "erm/learners.hpp"
#include "erm/rng.hpp"

#include "json.hpp"

#include <cmath>
#include <sstream>

namespace erm {

using nlohmann::json;

PcaModel fit_pca(const LabeledDataset& d, std::size_t n, bool center)
{
    const std::size_t m = d.size();
    const std::size_t D = d.dim();
    if (m == 0)
        throw SizeError("fit_pca: empty dataset");
    if (n > D)
        throw ShapeError("fit_pca: cannot keep " + std::to_string(n) + " components of " +
                         std::to_string(D) + "-dimensional data");

    PcaModel model;
    model.pc_count = n;
    model.centered = center;
    model.center.assign(D, 0.0);
    if (center) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < D; ++j)
                model.center[j] += d.features(i, j);
        for (double& v : model.center)
            v /= static_cast<double>(m);
    }
    Matrix z = d.features;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < D; ++j)
            z(i, j) -= model.center[j];
    const SymmetricEvd evd = sym_evd(scale(gram(z), 1.0 / static_cast<double>(m)));

    model.spectrum = evd.eigenvalues;
    // Q is psd; tiny negative eigenvalues are rounding noise.
    for (double& lambda : model.spectrum)
        if (lambda < 0.0 && lambda > -1e-12 * std::max(1.0, std::abs(evd.eigenvalues.front())))
            lambda = 0.0;
    model.compression = Matrix(n, D);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < D; ++j)
            model.compression(r, j) = evd.eigenvectors(j, r);
    for (std::size_t r = n; r < D; ++r)
        model.error += model.spectrum[r];
    return model;
}

Vector compress(const PcaModel& model, std::span<const double> z)
{
    if (z.size() != model.center.size())
        throw ShapeError("compress: expected a point of length " +
                         std::to_string(model.center.size()));
    return matvec(model.compression, subtract(z, model.center));
}

Vector reconstruct(const PcaModel& model, std::span<const double> x)
{
    if (x.size() != model.pc_count)
        throw ShapeError("reconstruct: expected " + std::to_string(model.pc_count) + " features");
    if (model.pc_count == 0)
        return model.center;
    return add(transpose_matvec(model.compression, x), model.center);
}

double reconstruction_error(const PcaModel& model, const LabeledDataset& d)
{
    if (d.size() == 0)
        throw SizeError("reconstruction_error: empty dataset");
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto z = d.features.row(i);
        total += squared_distance(z, reconstruct(model, compress(model, z)));
    }
    return total / static_cast<double>(d.size());
}

LabeledDataset compress_dataset(const PcaModel& model, const LabeledDataset& d)
{
    Matrix features(d.size(), model.pc_count);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Vector x = compress(model, d.features.row(i));
        for (std::size_t r = 0; r < model.pc_count; ++r)
            features(i, r) = x[r];
    }
    LabeledDataset out;
    out.features = std::move(features);
    out.labels = d.labels;
    out.label_kind = d.label_kind;
    for (std::size_t r = 0; r < model.pc_count; ++r)
        out.feature_names.push_back("pc" + std::to_string(r + 1));
    return out;
}

std::string scatter_csv(const PcaModel& model, const LabeledDataset& d)
{
    if (model.pc_count < 2)
        throw ConfigError("scatter_csv: needs at least two principal components");
    std::ostringstream out;
    out.precision(17);
    out << "pc1,pc2\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Vector x = compress(model, d.features.row(i));
        out << x[0] << ',' << x[1] << '\n';
    }
    return out.str();
}

std::string PcaModel::to_json() const
{
    json rows = json::array();
    for (std::size_t r = 0; r < compression.rows(); ++r) {
        auto row = compression.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    json j{{"pc_count", pc_count},
           {"centered", centered},
           {"center", center},
           {"spectrum", spectrum},
           {"compression", rows},
           {"reconstruction_error", error}};
    return j.dump(2);
}

Matrix random_projection(std::size_t D, std::size_t n, ProjectionDistribution dist,
                         std::uint64_t seed)
{
    if (n == 0 || D == 0)
        throw ShapeError("random_projection: dimensions must be positive");
    if (n > D)
        throw ShapeError("random_projection: target dimension exceeds source dimension");
    Rng rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    Matrix w(n, D);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < D; ++c) {
            const double v = dist == ProjectionDistribution::gaussian
                                 ? rng.normal()
                                 : (rng.next_u64() >> 63 ? 1.0 : -1.0);
            w(r, c) = s * v;
        }
    return w;
}

double PcaRegression::predict(std::span<const double> z) const
{
    return predict_linear(regression, compress(pca, z));
}

PcaRegression pca_regression(const LabeledDataset& d, std::size_t n, std::optional<double> lambda,
                             bool center)
{
    if (!d.has_labels())
        throw DomainError("pca_regression: dataset has no labels");
    if (n >= d.size())
        throw ValidityError("pca_regression: keep fewer components than training points (n = " +
                            std::to_string(n) + ", m_t = " + std::to_string(d.size()) +
                            "), otherwise the fit can reach zero training error and overfit");
    if (n == 0)
        throw ConfigError("pca_regression: need at least one component");
    PcaRegression out;
    out.pca = fit_pca(d, n, center);
    const LabeledDataset compressed = compress_dataset(out.pca, d);
    out.regression = lambda && *lambda > 0.0 ? fit_ridge_closed(compressed, RidgeSpec{*lambda})
                                             : fit_linreg_closed(compressed);
    return out;
}

} // namespace erm
