#include "doctest.h"
#include "helpers.hpp"

#include "erm/errors.hpp"
#include "erm/learners.hpp"
#include "erm/losses.hpp"

#include <cmath>

using namespace erm;
using namespace test_support;

namespace {

// Residual of y after projecting onto the column span of x, by modified
// Gram-Schmidt.
Vector projection_residual(const Matrix& x, Vector y)
{
    std::vector<Vector> basis;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        Vector c(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i)
            c[i] = x(i, j);
        for (const Vector& q : basis)
            c = subtract(c, scale(q, dot(q, c)));
        basis.push_back(scale(c, 1.0 / norm2(c)));
    }
    for (const Vector& q : basis)
        y = subtract(y, scale(q, dot(q, y)));
    return y;
}

double mse(const LinearModel& m, const LabeledDataset& d)
{
    return empirical_risk(SquaredLoss{}, m, d);
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

} // namespace

TEST_CASE("fit_linreg_closed")
{
    const LinearModel id = fit_linreg_closed(
        make_dataset(Matrix::identity(3), Vector{1.0, -2.0, 0.5}, LabelKind::real));
    CHECK(inf_norm_diff(id.weights, Vector{1.0, -2.0, 0.5}) < 1e-14);

    Matrix x(6, 2);
    Vector y(6);
    for (std::size_t i = 0; i < 6; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = static_cast<double>(i);
        y[i] = 2.0 + 3.0 * static_cast<double>(i);
    }
    CHECK(inf_norm_diff(fit_linreg_closed(make_dataset(x, y, LabelKind::real)).weights,
                        Vector{2.0, 3.0}) < 1e-10);

    Rng rng(41);
    for (int t = 0; t < 20; ++t) {
        const LabeledDataset d = random_regression(15, 4, rng, 1.0);
        const LinearModel w = fit_linreg_closed(d);
        const Vector r = projection_residual(d.features, d.labels);
        CHECK(std::abs(mse(w, d) - dot(r, r) / 15.0) < 1e-8);
        CHECK(norm2(linreg_gradient(w.weights, d)) < 1e-8);
    }

    // Square system with independent rows: exact interpolation.
    const LabeledDataset square = random_regression(4, 4, rng, 1.0);
    CHECK(mse(fit_linreg_closed(square), square) < 1e-20);

    Matrix dup = random_matrix(5, 2, rng);
    for (std::size_t i = 0; i < 5; ++i)
        dup(i, 1) = dup(i, 0);
    CHECK_THROWS_AS(fit_linreg_closed(make_dataset(dup, random_vector(5, rng), LabelKind::real)),
                    SingularityError);
}

TEST_CASE("fit_linreg_min_norm interpolates when m <= n")
{
    Rng rng(43);
    for (std::size_t m = 1; m <= 5; ++m) {
        const LabeledDataset d = random_regression(m, 5, rng, 1.0);
        const LinearModel w = fit_linreg_min_norm(d);
        CHECK(mse(w, d) < 1e-20);
        // Minimum norm: w lies in the row space, so it is orthogonal to the
        // null space residual of any other interpolant.
        const Vector r = projection_residual(d.features.transpose(), w.weights);
        CHECK(norm2(r) < 1e-10);
    }
    CHECK_THROWS(fit_linreg_min_norm(random_regression(6, 5, rng)));
}

TEST_CASE("fit_ridge_closed")
{
    for (double lambda : {0.1, 1.0, 7.0}) {
        const LinearModel w = fit_ridge_closed(
            make_dataset(Matrix::identity(2), Vector{3.0, -1.0}, LabelKind::real), RidgeSpec{lambda});
        CHECK(inf_norm_diff(w.weights, Vector{3.0 / (1 + 2 * lambda), -1.0 / (1 + 2 * lambda)}) <
              1e-14);
    }
    Rng rng(47);
    const LabeledDataset d = random_regression(30, 3, rng);
    CHECK(inf_norm_diff(fit_ridge_closed(d, RidgeSpec{1e-12}).weights,
                        fit_linreg_closed(d).weights) < 1e-6);

    const LabeledDataset wide = random_regression(3, 6, rng);
    CHECK_THROWS_AS(fit_linreg_closed(wide), SingularityError);
    const LinearModel r = fit_ridge_closed(wide, RidgeSpec{0.1});
    CHECK(all_finite(r.weights));
    CHECK_THROWS_AS(fit_ridge_closed(d, RidgeSpec{0.0}), DomainError);

    // Ridge and GD agree.
    for (int t = 0; t < 20; ++t) {
        const LabeledDataset e = random_regression(25, 3, rng);
        GdConfig config;
        config.stop_tol = 0.0;
        config.max_iters = 20000;
        CHECK(inf_norm_diff(fit_ridge_gd(e, RidgeSpec{0.2}, config).model.weights,
                            fit_ridge_closed(e, RidgeSpec{0.2}).weights) < 1e-6);
        CHECK(inf_norm_diff(fit_linreg_gd(e, config).model.weights, fit_linreg_closed(e).weights) <
              1e-6);
    }
}

TEST_CASE("fit_logreg")
{
    const LabeledDataset two = make_dataset(Matrix{{1.0}, {-1.0}}, Vector{1, -1}, LabelKind::binary);
    const GdFit fit = fit_logreg(two);
    CHECK(fit.model.weights[0] > 0.0);
    CHECK(objective_value(LogregObjective{}, fit.model.weights, two) < std::log(2.0));
    // A scan of the 1-D objective confirms it is decreasing in w > 0.
    for (double w = 0.0; w < 5.0; w += 0.5)
        CHECK(objective_value(LogregObjective{}, Vector{w + 0.5}, two) <
              objective_value(LogregObjective{}, Vector{w}, two));

    CHECK(logreg_probability(LinearModel{{1.0, -1.0}, std::nullopt}, Vector{2.0, 2.0}) == 0.5);
    Rng rng(53);
    for (int t = 0; t < 50; ++t) {
        const Vector w = scale(random_vector(3, rng), 5.0);
        const Vector x = random_vector(3, rng);
        const double p_plus = logreg_probability(LinearModel{w, std::nullopt}, x);
        const double p_minus = logreg_probability(LinearModel{scale(w, -1.0), std::nullopt}, x);
        CHECK(p_plus + p_minus == doctest::Approx(1.0));
    }

    CHECK_THROWS_AS(fit_logreg(make_dataset(Matrix{{1.0}, {2.0}}, Vector{1, 1}, LabelKind::binary)),
                    DegenerateDataError);
}

TEST_CASE("gaussian_ml")
{
    const GaussianEstimate single = gaussian_ml(make_dataset(Matrix{{1.5, -2.0}}));
    CHECK(single.mean == Vector{1.5, -2.0});
    CHECK(max_abs(single.covariance) == 0.0);

    const GaussianEstimate pair = gaussian_ml(make_dataset(Matrix{{1.0, 0.0}, {-1.0, 0.0}}));
    CHECK(pair.mean == Vector{0.0, 0.0});
    CHECK(pair.covariance == Matrix{{1.0, 0.0}, {0.0, 0.0}});

    // Samples from N(μ0, Σ0) with Σ0 = LLᵀ.
    const Vector mu0{1.0, -2.0, 0.5};
    const Matrix chol{{1.0, 0.0, 0.0}, {0.5, 1.5, 0.0}, {-0.3, 0.2, 0.8}};
    const Matrix sigma0 = matmul(chol, chol.transpose());
    Rng rng(59);
    const std::size_t m = 100000;
    Matrix z(m, 3);
    for (std::size_t i = 0; i < m; ++i) {
        const Vector e{rng.normal(), rng.normal(), rng.normal()};
        const Vector s = add(mu0, matvec(chol, e));
        for (std::size_t j = 0; j < 3; ++j)
            z(i, j) = s[j];
    }
    const GaussianEstimate est = gaussian_ml(make_dataset(z));
    CHECK(norm2(subtract(est.mean, mu0)) < 0.02 * norm2(mu0));
    CHECK(frobenius_norm(add(est.covariance, scale(sigma0, -1.0))) < 0.02 * frobenius_norm(sigma0));
    CHECK(sym_evd(est.covariance).eigenvalues.back() >= -1e-10);

    CHECK_THROWS_AS(gaussian_ml(LabeledDataset{}), SizeError);
}

TEST_CASE("fit_bayes hand cases")
{
    // Class means ±(1,0); pooled second moments equal I.
    const LabeledDataset unit =
        make_dataset(Matrix{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}, Vector{1, 1, -1, -1}, LabelKind::binary);
    const BayesFit a = fit_bayes(unit, false);
    CHECK(inf_norm_diff(a.params.mu_plus, Vector{1.0, 0.0}) < 1e-15);
    CHECK(inf_norm_diff(a.model.weights, Vector{2.0, 0.0}) < 1e-12);
    CHECK(a.params.count_plus == 2);
    CHECK(a.params.count_minus == 2);

    const double s = std::sqrt(3.0);
    Matrix x(8, 2);
    Vector y(8);
    std::size_t row = 0;
    for (double label : {1.0, -1.0})
        for (double dx : {s, -s})
            for (double x2 : {1.0, -1.0}) {
                x(row, 0) = label + dx;
                x(row, 1) = x2;
                y[row] = label;
                ++row;
            }
    const BayesFit b = fit_bayes(make_dataset(x, y, LabelKind::binary), false);
    CHECK(max_abs(add(b.params.sigma, scale(Matrix{{4.0, 0.0}, {0.0, 1.0}}, -1.0))) < 1e-12);
    CHECK(inf_norm_diff(b.model.weights, Vector{0.5, 0.0}) < 1e-12);

    Rng rng(61);
    const LabeledDataset wide = random_classification(3, 5, rng);
    CHECK_THROWS_AS(fit_bayes(wide, false), SingularityError);
    CHECK(all_finite(fit_bayes(wide, true).model.weights));

    const LabeledDataset corr = random_classification(40, 3, rng);
    const BayesFit naive = fit_bayes(corr, true);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j)
                CHECK(naive.params.sigma(i, j) == 0.0);
}

TEST_CASE("fit_bayes approaches the optimal error on Gaussian classes")
{
    const Vector mu{0.6, 0.3};
    const Matrix chol{{1.0, 0.0}, {0.4, 0.6}};
    const Matrix sigma = matmul(chol, chol.transpose());
    Rng rng(67);
    auto draw = [&](std::size_t m) {
        Matrix x(m, 2);
        Vector y(m);
        for (std::size_t i = 0; i < m; ++i) {
            y[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
            const Vector p = add(scale(mu, y[i]), matvec(chol, Vector{rng.normal(), rng.normal()}));
            x(i, 0) = p[0];
            x(i, 1) = p[1];
        }
        return make_dataset(x, y, LabelKind::binary);
    };
    const LabeledDataset train = draw(10000);
    const LabeledDataset test = draw(10000);
    const BayesFit fit = fit_bayes(train, false);
    const double accuracy = 1.0 - empirical_risk(ZeroOneLoss{}, fit.model, test);
    // Distance between the class means in the Σ metric.
    const Vector diff = scale(mu, 2.0);
    const double delta = std::sqrt(dot(diff, solve_spd(sigma, diff)));
    CHECK(std::abs(accuracy - normal_cdf(delta / 2.0)) < 0.02);

    // The classifier is linear: scaling a point by a positive factor keeps its label.
    for (std::size_t i = 0; i < 50; ++i) {
        const Vector p{test.features(i, 0), test.features(i, 1)};
        CHECK(classify(predict_linear(fit.model, p)) ==
              classify(predict_linear(fit.model, scale(p, 3.7))));
    }
}

TEST_CASE("grow_tree")
{
    const LabeledDataset quad = make_dataset(Matrix{{1, 1}, {1, 5}, {5, 1}, {5, 5}},
                                             Vector{-1, 1, -1, -1}, LabelKind::binary);
    const std::vector<Vector> thresholds{{3.0}, {3.0}};
    const DecisionTree t = grow_tree(quad, 2, thresholds);
    CHECK(empirical_risk(ZeroOneLoss{}, [&](std::span<const double> x) { return tree_predict(t, x); },
                         quad) == 0.0);
    CHECK(t.depth() <= 2);

    const LabeledDataset real =
        make_dataset(Matrix{{0.0}, {1.0}, {2.0}}, Vector{1.0, 2.0, 6.0}, LabelKind::real);
    const DecisionTree stump = grow_tree(real, 0);
    CHECK(stump.nodes.size() == 1);
    CHECK(tree_predict(stump, Vector{10.0}) == doctest::Approx(3.0));

    const LabeledDataset flat =
        make_dataset(Matrix{{0.0}, {1.0}, {2.0}}, Vector{4.0, 4.0, 4.0}, LabelKind::real);
    CHECK(grow_tree(flat, 5).nodes.size() == 1);

    CHECK(default_thresholds(real)[0] == Vector{0.5, 1.5});
    CHECK(default_thresholds(flat).size() == 1);

    Rng rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        const LabeledDataset d = random_regression(40, 3, rng, 1.0);
        double previous = 1e300;
        for (std::size_t depth = 0; depth <= 6; ++depth) {
            const DecisionTree tree = grow_tree(d, depth);
            CHECK(tree.depth() <= depth);
            const double risk = empirical_risk(
                SquaredLoss{}, [&](std::span<const double> x) { return tree_predict(tree, x); }, d);
            CHECK(risk <= previous + 1e-12);
            previous = risk;
        }
    }
}

TEST_CASE("fit_svm")
{
    const LabeledDataset sep = make_dataset(
        Matrix{{2.0, 1.0}, {1.5, 2.5}, {3.0, 0.5}, {-1.0, -2.0}, {-2.5, -0.5}, {-1.5, -1.5}},
        Vector{1, 1, 1, -1, -1, -1}, LabelKind::binary);
    const GdFit fit = fit_svm(sep, 0.01);
    CHECK(empirical_risk(ZeroOneLoss{}, fit.model, sep) == 0.0);
    CHECK(objective_value(HingeObjective{0.01}, fit.model.weights, sep) <=
          objective_value(HingeObjective{0.01}, Vector{0.0, 0.0}, sep));

    CHECK(norm2(fit_svm(sep, 1e6).model.weights) <= 1e-2);

    Rng rng(73);
    for (int t = 0; t < 10; ++t) {
        const LabeledDataset d = random_classification(30, 3, rng, 0.3);
        const GdFit f = fit_svm(d, 0.1);
        CHECK(objective_value(HingeObjective{0.1}, f.model.weights, d) <=
              objective_value(HingeObjective{0.1}, Vector(3, 0.0), d));
    }
    CHECK_THROWS(fit_svm(sep, 0.0));
    CHECK_THROWS_AS(fit_svm(make_dataset(Matrix{{1.0}}, Vector{1}, LabelKind::binary), 0.1),
                    DegenerateDataError);
}
