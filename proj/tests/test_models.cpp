#include "doctest.h"
#include "helpers.hpp"

#include "erm/errors.hpp"
#include "erm/models.hpp"

#include <cmath>

using namespace erm;
using namespace test_support;

TEST_CASE("predict_linear")
{
    CHECK(predict_linear(LinearModel{{1.0, 0.2}, std::nullopt}, Vector{1, 1}) ==
          doctest::Approx(1.2));
    CHECK(predict_linear(LinearModel{{0.7}, std::nullopt}, Vector{2}) == doctest::Approx(1.4));
    CHECK(predict_linear(LinearModel{{0, 0, 0}, std::nullopt}, Vector{3, -1, 2}) == 0.0);
    CHECK_THROWS_AS(predict_linear(LinearModel{{1, 2}, std::nullopt}, Vector{1}), ShapeError);

    // Linearity on random triples.
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const LinearModel m{random_vector(4, rng), std::nullopt};
        const Vector x = random_vector(4, rng);
        const Vector z = random_vector(4, rng);
        const double a = rng.normal();
        const double b = rng.normal();
        Vector combo(4);
        for (std::size_t j = 0; j < 4; ++j)
            combo[j] = a * x[j] + b * z[j];
        CHECK(predict_linear(m, combo) ==
              doctest::Approx(a * predict_linear(m, x) + b * predict_linear(m, z)));
    }
}

TEST_CASE("feature maps")
{
    CHECK(apply_feature_map(PolynomialMap{3}, 2.0) == Vector{1, 2, 4, 8});
    CHECK(apply_feature_map(PolynomialMap{0}, 5.0) == Vector{1});
    CHECK(apply_feature_map(GaussianMap{{0.0}, 1.0}, 0.0)[0] == 1.0);
    CHECK(apply_feature_map(GaussianMap{{1.0}, 1.0}, 1.0)[0] == 1.0);
    const Vector g = apply_feature_map(GaussianMap{{0.0, 2.0}, 0.5}, 1.0);
    CHECK(g[0] == doctest::Approx(std::exp(-1.0)));
    CHECK(g[1] == doctest::Approx(std::exp(-1.0)));
    CHECK_THROWS_AS(validate(FeatureMapSpec{GaussianMap{{0.0}, 0.0}}), DomainError);

    // A degree-0 model reduces to its bias.
    const LinearModel constant{{3.5}, FeatureMapSpec{PolynomialMap{0}}};
    CHECK(predict_linear(constant, Vector{-10}) == 3.5);
    CHECK(feature_map_size(PolynomialMap{4}) == 5u);
}

TEST_CASE("classify")
{
    CHECK(classify(10.0) == 1.0);
    CHECK(classify(0.01) == 1.0);
    CHECK(classify(-0.5) == -1.0);
    CHECK(classify(0.0) == 1.0);
    for (double h : {-3.0, -0.1, 0.0, 0.2, 7.0})
        for (double s : {0.5, 1.0, 100.0})
            CHECK(classify(s * h) == classify(h));
}

namespace {

AnnSpec triangle(Activation g)
{
    AnnSpec spec;
    spec.input_dim = 2;
    spec.hidden_dim = 3;
    // Hidden units see (x0 = 1, x): x + 1, x, x - 1.
    spec.weights_in = Matrix{{1, 1}, {0, 1}, {-1, 1}};
    spec.weights_out = {1, -2, 1};
    spec.activation = g;
    return spec;
}

} // namespace

TEST_CASE("ann_forward triangle")
{
    const AnnSpec spec = triangle(Relu{});
    auto h = [&](double x) { return ann_forward(spec, Vector{1.0, x}); };
    CHECK(h(-0.5) == 0.5);
    CHECK(h(0.0) == 1.0);
    CHECK(h(-1.0) == 0.0);
    CHECK(h(1.0) == 0.0);
    CHECK(h(2.0) == 0.0);
    CHECK(h(-2.0) == 0.0);

    AnnSpec zero = spec;
    zero.weights_out = {0, 0, 0};
    CHECK(ann_forward(zero, Vector{1.0, 0.3}) == 0.0);

    // A linear activation gives an affine map: second differences vanish.
    const AnnSpec lin = triangle(LinearActivation{10.0});
    auto g = [&](double x) { return ann_forward(lin, Vector{1.0, x}); };
    for (double x : {-2.0, -0.5, 0.0, 1.5})
        CHECK(std::abs(g(x - 1.0) - 2.0 * g(x) + g(x + 1.0)) < 1e-12);

    CHECK_THROWS_AS(ann_forward(spec, Vector{1.0}), ShapeError);
    CHECK(activate(Sigmoid{}, 0.0) == 0.5);
}

namespace {

// Quadrant tree: x1 <= 3 then x2 <= 3; only the upper-left quadrant is +1.
DecisionTree quadrant_tree()
{
    DecisionTree t;
    t.max_depth = 2;
    DecisionTree::Node root;
    root.is_leaf = false;
    root.feature = 0;
    root.threshold = 3.0;
    root.yes = 1;
    root.no = 2;
    DecisionTree::Node left;
    left.is_leaf = false;
    left.feature = 1;
    left.threshold = 3.0;
    left.yes = 3;
    left.no = 4;
    DecisionTree::Node right;
    right.value = -1.0;
    DecisionTree::Node ll;
    ll.value = -1.0;
    DecisionTree::Node lu;
    lu.value = 1.0;
    t.nodes = {root, left, right, ll, lu};
    return t;
}

} // namespace

TEST_CASE("tree_predict")
{
    CHECK(tree_predict(DecisionTree::leaf(5.0), Vector{1, 2, 3}) == 5.0);
    const DecisionTree t = quadrant_tree();
    CHECK(tree_predict(t, Vector{1, 5}) == 1.0);
    CHECK(tree_predict(t, Vector{1, 1}) == -1.0);
    CHECK(tree_predict(t, Vector{5, 5}) == -1.0);
    CHECK(tree_predict(t, Vector{5, 1}) == -1.0);
    // Boundary goes to the yes branch.
    CHECK(tree_predict(t, Vector{3, 3}) == -1.0);
    CHECK(tree_predict(t, Vector{3, 3.0001}) == 1.0);
    CHECK(t.depth() == 2);
    CHECK(t.leaf_count() == 3);

    // Every grid point is claimed by exactly one leaf region.
    std::vector<int> claims(t.nodes.size(), 0);
    for (double a = 0.0; a <= 6.0; a += 0.5)
        for (double b = 0.0; b <= 6.0; b += 0.5) {
            const std::size_t leaf = t.leaf_for(Vector{a, b});
            CHECK(t.nodes[leaf].is_leaf);
            ++claims[leaf];
        }
    int total = 0;
    for (int c : claims)
        total += c;
    CHECK(total == 13 * 13);

    CHECK_THROWS_AS(tree_predict(t, Vector{1}), ShapeError);

    const DecisionTree back = tree_from_json(to_json(t));
    CHECK(back.nodes.size() == t.nodes.size());
    CHECK(tree_predict(back, Vector{1, 5}) == 1.0);
}

TEST_CASE("knn_predict")
{
    const LabeledDataset d =
        make_dataset(Matrix{{0.0}, {1.0}, {2.0}, {10.0}}, Vector{1, 2, 3, 10}, LabelKind::real);
    CHECK(knn_predict(d, 1, Vector{0.9}, KnnMode::mean) == 2.0);
    CHECK(knn_predict(d, 4, Vector{0.9}, KnnMode::mean) == 4.0);
    // 0.5 is equidistant to points 0 and 1: the lower index wins.
    CHECK(knn_predict(d, 1, Vector{0.5}, KnnMode::mean) == 1.0);

    const LabeledDataset b =
        make_dataset(Matrix{{0.0}, {1.0}, {2.0}, {3.0}}, Vector{-1, 1, -1, 1}, LabelKind::binary);
    CHECK(knn_predict(b, 2, Vector{0.4}, KnnMode::majority) == 1.0);
    CHECK(knn_predict(b, 3, Vector{0.4}, KnnMode::majority) == -1.0);
    CHECK_THROWS(knn_predict(b, 5, Vector{0.0}, KnnMode::majority));
}

TEST_CASE("linear model json round trip")
{
    const LinearModel m{{1.0, -2.5, 3.25}, FeatureMapSpec{PolynomialMap{2}}};
    const LinearModel back = linear_model_from_json(to_json(m));
    CHECK(back.weights == m.weights);
    CHECK(back.feature_map.has_value());
    CHECK(predict_linear(back, Vector{2.0}) == predict_linear(m, Vector{2.0}));
}
