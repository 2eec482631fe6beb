#include "doctest.h"
#include "helpers.hpp"

#include "erm/dimred.hpp"
#include "erm/errors.hpp"
#include "erm/learners.hpp"
#include "erm/losses.hpp"

#include <algorithm>
#include <cmath>

using namespace erm;
using namespace test_support;

namespace {

// (1/m)Σ‖z - ẑ‖² computed point by point.
double direct_error(const PcaModel& model, const LabeledDataset& d)
{
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Vector back = reconstruct(model, compress(model, d.features.row(i)));
        total += squared_distance(back, d.features.row(i));
    }
    return total / static_cast<double>(d.size());
}

Matrix gram_rows(const Matrix& w)
{
    return matmul(w, w.transpose());
}

} // namespace

TEST_CASE("fit_pca spectrum and reconstruction identity")
{
    Rng rng(111);
    for (int t = 0; t < 50; ++t) {
        const std::size_t dim = 1 + static_cast<std::size_t>(t) % 20;
        const LabeledDataset d = make_dataset(random_matrix(25, dim, rng));
        const bool center = t % 2 == 0;
        double previous = 1e300;
        for (std::size_t n = 0; n <= dim; ++n) {
            const PcaModel p = fit_pca(d, n, center);
            CHECK(std::abs(direct_error(p, d) - p.error) < 1e-8);
            CHECK(p.error <= previous + 1e-12);
            previous = p.error;
            if (n > 0)
                CHECK(max_abs(add(gram_rows(p.compression), scale(Matrix::identity(n), -1.0))) < 1e-9);
        }
        const PcaModel full = fit_pca(d, dim, center);
        CHECK(full.error < 1e-8);
        double trace = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double v = d.features(i, j) - full.center[j];
                s += v * v;
            }
            trace += s / 25.0;
        }
        double spectrum_sum = 0.0;
        for (std::size_t r = 0; r < dim; ++r) {
            CHECK(full.spectrum[r] >= 0.0);
            if (r > 0)
                CHECK(full.spectrum[r] <= full.spectrum[r - 1]);
            spectrum_sum += full.spectrum[r];
        }
        CHECK(std::abs(spectrum_sum - trace) < 1e-8);
    }
}

TEST_CASE("fit_pca special cases")
{
    Matrix line(6, 2);
    for (std::size_t i = 0; i < 6; ++i) {
        line(i, 0) = static_cast<double>(i) - 2.0;
        line(i, 1) = 2.0 * line(i, 0);
    }
    const PcaModel p = fit_pca(make_dataset(line), 1);
    CHECK(p.error < 1e-12);
    CHECK(p.compression(0, 0) == doctest::Approx(1.0 / std::sqrt(5.0)));
    CHECK(p.compression(0, 1) == doctest::Approx(2.0 / std::sqrt(5.0)));

    // n = 0 keeps nothing: the error is the mean squared norm of the data.
    Rng rng(113);
    const LabeledDataset d = make_dataset(random_matrix(10, 3, rng));
    const PcaModel none = fit_pca(d, 0, false);
    double ms = 0.0;
    for (std::size_t i = 0; i < 10; ++i)
        ms += dot(d.features.row(i), d.features.row(i)) / 10.0;
    CHECK(none.error == doctest::Approx(ms));

    CHECK_THROWS_AS(fit_pca(d, 4), ShapeError);
    CHECK(nlohmann_json_ok(fit_pca(d, 2).to_json()));
}

TEST_CASE("compress and reconstruct")
{
    Rng rng(115);
    const LabeledDataset d = make_dataset(random_matrix(30, 4, rng));
    const PcaModel p = fit_pca(d, 2, false);

    const Vector u0(p.compression.row(0).begin(), p.compression.row(0).end());
    const Vector along = scale(u0, -3.0);
    const PcaModel p1 = fit_pca(d, 1, false);
    CHECK(compress(p1, along)[0] == doctest::Approx(-3.0));

    const PcaModel all = fit_pca(d, 4, false);
    const Vector u3(all.compression.row(3).begin(), all.compression.row(3).end());
    CHECK(max_abs(compress(p, u3)) < 1e-12);

    const Vector in_span = add(scale(u0, 1.5), scale(Vector(p.compression.row(1).begin(),
                                                             p.compression.row(1).end()),
                                                      -0.7));
    CHECK(inf_norm_diff(reconstruct(p, compress(p, in_span)), in_span) < 1e-9);

    const PcaModel centered = fit_pca(d, 2, true);
    CHECK(inf_norm_diff(reconstruct(centered, Vector{0.0, 0.0}), centered.center) < 1e-15);

    for (int t = 0; t < 20; ++t) {
        const Vector z = random_vector(4, rng);
        const Vector residual = subtract(z, reconstruct(p, compress(p, z)));
        CHECK(max_abs(matvec(p.compression, residual)) < 1e-9);
        CHECK(inf_norm_diff(reconstruct(all, compress(all, z)), z) < 1e-9);
    }

    CHECK_THROWS_AS(compress(p, Vector{1.0}), ShapeError);
    CHECK_THROWS_AS(reconstruct(p, Vector{1.0}), ShapeError);

    const std::string csv = scatter_csv(p, d);
    CHECK(csv.rfind("pc1,pc2\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);
    CHECK(compress_dataset(p, d).dim() == 2);
}

TEST_CASE("random_projection")
{
    CHECK(random_projection(10, 3, ProjectionDistribution::gaussian, 4) ==
          random_projection(10, 3, ProjectionDistribution::gaussian, 4));
    CHECK_THROWS(random_projection(3, 4, ProjectionDistribution::gaussian, 1));

    const Matrix g = random_projection(2000, 500, ProjectionDistribution::gaussian, 7);
    double mean = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < 500; ++i)
        for (std::size_t j = 0; j < 2000; ++j) {
            const double v = g(i, j) * std::sqrt(500.0);
            mean += v;
            sq += v * v;
        }
    mean /= 1e6;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(sq / 1e6 - mean * mean - 1.0) < 0.02);

    const Matrix b = random_projection(50, 4, ProjectionDistribution::bernoulli, 7);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 50; ++j)
            CHECK(std::abs(b(i, j)) == doctest::Approx(0.5));

    for (ProjectionDistribution dist :
         {ProjectionDistribution::gaussian, ProjectionDistribution::bernoulli}) {
        Rng rng(117);
        const Matrix points = random_matrix(100, 1000, rng);
        const Matrix w = random_projection(1000, 200, dist, 9);
        const Matrix projected = matmul(points, w.transpose());
        int kept = 0;
        int pairs = 0;
        for (std::size_t i = 0; i < 100; ++i)
            for (std::size_t j = i + 1; j < 100; ++j) {
                const double before = std::sqrt(squared_distance(points.row(i), points.row(j)));
                const double after =
                    std::sqrt(squared_distance(projected.row(i), projected.row(j)));
                ++pairs;
                if (std::abs(after / before - 1.0) <= 0.3)
                    ++kept;
            }
        CHECK(kept >= 0.95 * pairs);
    }
}

TEST_CASE("pca_regression")
{
    ToyModelSpec spec{Vector(50, 0.2), 0.1, 20, 3};
    const LabeledDataset train = generate_toy(spec);
    spec.sample_count = 200;
    spec.seed = 4;
    const LabeledDataset val = generate_toy(spec);
    CHECK_THROWS_AS(fit_linreg_closed(train), SingularityError);
    const PcaRegression pipe = pca_regression(train, 10);
    const double val_error = empirical_risk(
        SquaredLoss{}, [&](std::span<const double> z) { return pipe.predict(z); }, val);
    CHECK(std::isfinite(val_error));

    // n = D without centering is plain least squares.
    Rng rng(119);
    const LabeledDataset d = random_regression(40, 4, rng);
    const PcaRegression same = pca_regression(d, 4, std::nullopt, false);
    const LinearModel ols = fit_linreg_closed(d);
    for (int t = 0; t < 10; ++t) {
        const Vector z = random_vector(4, rng);
        CHECK(std::abs(same.predict(z) - predict_linear(ols, z)) < 1e-8);
    }

    // Labels that depend on the leading principal direction only.
    Matrix x(60, 5);
    Vector y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        const double s = 5.0 * rng.normal();
        for (std::size_t j = 0; j < 5; ++j)
            x(i, j) = (j == 0 ? s : 0.0) + 0.01 * rng.normal();
        y[i] = 3.0 * x(i, 0);
    }
    const LabeledDataset lead = make_dataset(x, y, LabelKind::real);
    const PcaRegression one = pca_regression(lead, 1, 1e-9, false);
    const double err = empirical_risk(
        SquaredLoss{}, [&](std::span<const double> z) { return one.predict(z); }, lead);
    CHECK(err < 1e-2);

    CHECK_THROWS_AS(pca_regression(train, 20), ValidityError);
    CHECK_THROWS_AS(pca_regression(train, 0), ConfigError);
}
