#include "doctest.h"
#include "helpers.hpp"

#include "erm/cluster.hpp"
#include "erm/errors.hpp"
#include "erm/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace erm;
using namespace test_support;

namespace {

LabeledDataset blobs(std::size_t per_blob, double spread, Rng& rng,
                     const std::vector<Vector>& centers = {{0, 0}, {10, 0}, {0, 10}})
{
    Matrix x(per_blob * centers.size(), centers[0].size());
    std::size_t row = 0;
    for (const Vector& c : centers)
        for (std::size_t i = 0; i < per_blob; ++i, ++row)
            for (std::size_t j = 0; j < c.size(); ++j)
                x(row, j) = c[j] + spread * rng.normal();
    return make_dataset(x);
}

// Minimum clustering error over every assignment of the points to k labels.
double brute_force_error(const LabeledDataset& d, std::size_t k)
{
    const std::size_t m = d.size();
    const std::size_t n = d.dim();
    std::vector<std::size_t> labels(m, 0);
    double best = 1e300;
    while (true) {
        Matrix sums(k, n, 0.0);
        std::vector<double> counts(k, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            counts[labels[i]] += 1.0;
            for (std::size_t j = 0; j < n; ++j)
                sums(labels[i], j) += d.features(i, j);
        }
        double err = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double diff = d.features(i, j) - sums(labels[i], j) / counts[labels[i]];
                err += diff * diff;
            }
        best = std::min(best, err / static_cast<double>(m));
        std::size_t pos = 0;
        while (pos < m && ++labels[pos] == k)
            labels[pos++] = 0;
        if (pos == m)
            break;
    }
    return best;
}

double total_variance(const LabeledDataset& d)
{
    const GaussianEstimate g = gaussian_ml(d);
    double t = 0.0;
    for (std::size_t j = 0; j < d.dim(); ++j)
        t += g.covariance(j, j);
    return t;
}

} // namespace

TEST_CASE("kmeans basics")
{
    Rng rng(91);
    const LabeledDataset d = blobs(5, 1.0, rng);
    KmeansConfig one;
    one.k = 1;
    const HardClustering single = kmeans(d, one);
    CHECK(inf_norm_diff(single.means.row(0), gaussian_ml(d).mean) < 1e-12);
    CHECK(single.error == doctest::Approx(total_variance(d)).epsilon(1e-12));

    // Two tight pairs, means started on the pairs.
    const LabeledDataset pairs = make_dataset(Matrix{{0, 0}, {0, 1}, {10, 0}, {10, 1}});
    KmeansConfig two;
    two.k = 2;
    two.init = ProvidedMeansInit{Matrix{{0, 0.5}, {10, 0.5}}};
    const HardClustering p = kmeans(pairs, two);
    CHECK(p.iterations == 1);
    CHECK(p.error == doctest::Approx(0.25));
    CHECK(p.error == doctest::Approx(brute_force_error(pairs, 2)));

    // A point equidistant to two means goes to the lower index.
    const LabeledDataset mid = make_dataset(Matrix{{0.0}});
    CHECK(assign_nearest(mid, Matrix{{-1.0}, {1.0}})[0] == 0);
    CHECK(assign_nearest(mid, Matrix{{1.0}, {-1.0}})[0] == 0);

    KmeansConfig too_many;
    too_many.k = 5;
    CHECK_THROWS_AS(kmeans(pairs, too_many), SizeError);
}

TEST_CASE("kmeans fixed point and error bookkeeping")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const LabeledDataset d = blobs(15, 2.5, rng);
        KmeansConfig config;
        config.k = 3 + seed % 2;
        config.seed = seed;
        config.init = seed % 3 == 0 ? KmeansInit{RandomNormalInit{}} : KmeansInit{SamplePointsInit{}};
        const HardClustering c = kmeans(d, config);
        CHECK(c.converged);
        for (std::size_t r = 1; r + 1 < c.error_trace.size(); ++r)
            CHECK(c.error_trace[r] < c.error_trace[r - 1]);
        CHECK(c.error == doctest::Approx(clustering_error(d, c.means, c.assignments)).epsilon(1e-10));
        for (std::size_t a : c.assignments)
            CHECK(a < config.k);
        // One more assignment step changes nothing.
        CHECK(assign_nearest(d, c.means) == c.assignments);
    }
}

TEST_CASE("kmeans is invariant to point order")
{
    Rng rng(93);
    const LabeledDataset d = blobs(6, 1.0, rng);
    const Matrix init{{1, 1}, {9, 1}, {1, 9}};
    KmeansConfig config;
    config.k = 3;
    config.init = ProvidedMeansInit{init};
    const HardClustering a = kmeans(d, config);
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    const HardClustering b = kmeans(make_dataset(d.features.select_rows(order)), config);
    CHECK(max_abs(add(a.means, scale(b.means, -1.0))) < 1e-12);
}

TEST_CASE("multi-restart and elbow")
{
    Rng rng(95);
    const LabeledDataset d = blobs(4, 0.3, rng);
    const HardClustering best = kmeans_multi_restart(d, 3, 20, 0.0, 5);
    CHECK(best.error == doctest::Approx(brute_force_error(d, 3)).epsilon(1e-10));
    for (std::size_t blob = 0; blob < 3; ++blob)
        for (std::size_t i = 1; i < 4; ++i)
            CHECK(best.assignments[4 * blob + i] == best.assignments[4 * blob]);

    KmeansConfig config;
    config.k = 3;
    config.seed = 5;
    const HardClustering single = kmeans(d, config);
    const HardClustering one = kmeans_multi_restart(d, 3, 1, 0.0, 5);
    CHECK(one.assignments == single.assignments);
    CHECK(one.error == single.error);

    // A bad start lands in a local minimum that restarts escape.
    KmeansConfig trap;
    trap.k = 3;
    trap.init = ProvidedMeansInit{Matrix{{0, 0}, {0.1, 0.1}, {5, 5}}};
    CHECK(best.error <= kmeans(d, trap).error);

    const HardClustering again = kmeans_multi_restart(d, 3, 20, 0.0, 5, 3);
    CHECK(again.assignments == best.assignments);

    const std::vector<ElbowPoint> elbow = elbow_sweep(d, d.size(), 5, 3);
    CHECK(elbow.size() == d.size());
    CHECK(elbow.front().error == doctest::Approx(total_variance(d)));
    CHECK(elbow.back().error < 1e-20);
    for (std::size_t i = 1; i < elbow.size(); ++i)
        CHECK(elbow[i].error <= elbow[i - 1].error);
    const double drop23 = elbow[1].error - elbow[2].error;
    const double drop34 = elbow[2].error - elbow[3].error;
    CHECK(drop23 > 20.0 * drop34);
    CHECK(elbow_to_csv(elbow).rfind("k,error\n", 0) == 0);
}

TEST_CASE("gmm_em")
{
    Rng rng(97);
    const LabeledDataset d = blobs(30, 1.0, rng);
    GmmConfig one;
    one.k = 1;
    const SoftClustering s = gmm_em(d, one);
    const GaussianEstimate g = gaussian_ml(d);
    CHECK(inf_norm_diff(s.params.means.row(0), g.mean) < 1e-10);
    CHECK(max_abs(add(s.params.covariances[0], scale(g.covariance, -1.0))) < 1e-10);
    CHECK(s.params.probabilities[0] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < d.size(); ++i)
        CHECK(s.degrees(i, 0) == doctest::Approx(1.0));

    // Mirror-symmetric mixture: the midpoint belongs equally to both.
    GmmParams sym;
    sym.means = Matrix{{-2.0, 0.0}, {2.0, 0.0}};
    sym.covariances = {Matrix::identity(2), Matrix::identity(2)};
    sym.probabilities = {0.5, 0.5};
    const auto [deg, nll] = gmm_responsibilities(make_dataset(Matrix{{0.0, 3.0}}), sym);
    CHECK(deg(0, 0) == doctest::Approx(0.5));
    CHECK(deg(0, 1) == doctest::Approx(0.5));
    CHECK(std::isfinite(nll));

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        GmmConfig config;
        config.k = 3;
        config.seed = seed;
        const SoftClustering run = gmm_em(d, config);
        for (std::size_t t = 1; t < run.nll_trace.size(); ++t)
            CHECK(run.nll_trace[t] <= run.nll_trace[t - 1] + 1e-9);
        double total = 0.0;
        for (double p : run.params.probabilities)
            total += p;
        CHECK(std::abs(total - 1.0) < 1e-10);
        for (std::size_t i = 0; i < d.size(); ++i) {
            double row = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(run.degrees(i, c) >= 0.0);
                row += run.degrees(i, c);
            }
            CHECK(std::abs(row - 1.0) < 1e-10);
        }
        for (const Matrix& c : run.params.covariances)
            CHECK(sym_evd(c).eigenvalues.back() > 0.0);
    }
}

TEST_CASE("gmm survives a collapsing component")
{
    // Three identical points and k = 2: a component can shrink onto them.
    const LabeledDataset d = make_dataset(Matrix{{1, 1}, {1, 1}, {1, 1}, {4, 2}, {5, 3}});
    GmmConfig config;
    config.k = 2;
    config.init = ProvidedMeansInit{Matrix{{1, 1}, {4.5, 2.5}}};
    const SoftClustering run = gmm_em(d, config);
    CHECK(all_finite(run.params.means));
    for (const Matrix& c : run.params.covariances)
        CHECK(all_finite(c));
}

TEST_CASE("gmm_hard_limit_check")
{
    Rng rng(99);
    const LabeledDataset d = blobs(10, 1.0, rng);
    const Matrix init{{1, 1}, {8, 1}, {1, 8}};
    KmeansConfig config;
    config.k = 3;
    config.init = ProvidedMeansInit{init};
    const HardClustering km = kmeans(d, config);
    const HardClustering hard = gmm_hard_limit_check(d, init, 1e-9);
    CHECK(hard.assignments == km.assignments);

    GmmParams wide;
    wide.means = init;
    wide.covariances = std::vector<Matrix>(3, scale(Matrix::identity(2), 1e8));
    wide.probabilities = Vector(3, 1.0 / 3.0);
    const Matrix deg = gmm_responsibilities(d, wide).first;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(std::abs(deg(i, c) - 1.0 / 3.0) < 1e-3);

    const HardClustering k1 = gmm_hard_limit_check(d, 1, 1e-9, 3);
    for (std::size_t a : k1.assignments)
        CHECK(a == 0);
}

TEST_CASE("cluster exports")
{
    Rng rng(101);
    const LabeledDataset d = blobs(3, 0.5, rng);
    const HardClustering c = kmeans_multi_restart(d, 3, 5, 0.0, 1);
    const std::string csv = c.to_csv();
    CHECK(csv.rfind("index,cluster\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
    CHECK(nlohmann_json_ok(c.to_json()));
    GmmConfig config;
    config.k = 2;
    CHECK(nlohmann_json_ok(gmm_em(d, config).to_json()));
}
