#pragma once

#include "erm/data.hpp"
#include "erm/numerics.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace erm {

// ---------------------------------------------------------------------------
// Feature maps for scalar raw features.

struct IdentityMap {};

/// x -> (1, x, x², ..., x^degree)
struct PolynomialMap {
    std::size_t degree = 0;
};

/// x -> (exp(-(x-μ_1)²/(2σ²)), ..., exp(-(x-μ_k)²/(2σ²))); no constant term.
struct GaussianMap {
    Vector means;
    double variance = 1.0;
};

using FeatureMapSpec = std::variant<IdentityMap, PolynomialMap, GaussianMap>;

/// Throws DomainError when the spec violates its invariants.
void validate(const FeatureMapSpec& spec);

Vector apply_feature_map(const FeatureMapSpec& spec, double x);

/// Length of the mapped vector, or nullopt for the identity map (length of input).
std::optional<std::size_t> feature_map_size(const FeatureMapSpec& spec);

/// Map every row of a single-column dataset through `spec`.
LabeledDataset map_features(const FeatureMapSpec& spec, const LabeledDataset& d);

// ---------------------------------------------------------------------------

/// h(x) = wᵀφ(x). Without a feature map φ is the identity on the full vector;
/// with one, x must be a single raw feature.
struct LinearModel {
    Vector weights;
    std::optional<FeatureMapSpec> feature_map;
};

double predict_linear(const LinearModel& model, std::span<const double> x);

/// +1 iff h >= 0.
double classify(double h_value);

// ---------------------------------------------------------------------------

struct Relu {};
struct Sigmoid {};
struct LinearActivation {
    double scale = 1.0;
};
using Activation = std::variant<Relu, Sigmoid, LinearActivation>;

double activate(const Activation& g, double z);

/// One hidden layer, scalar output: h(x) = Σ_j out_j · g(Σ_i in_{j,i} x_i).
struct AnnSpec {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Matrix weights_in; ///< hidden_dim x input_dim
    Vector weights_out;
    Activation activation = Relu{};
};

double ann_forward(const AnnSpec& spec, std::span<const double> x);

// ---------------------------------------------------------------------------

/// Binary tree with axis-aligned tests x_j <= t. A test routes to `yes` when
/// it holds. Node 0 is the root.
struct DecisionTree {
    struct Node {
        bool is_leaf = true;
        std::size_t feature = 0;
        double threshold = 0.0;
        double value = 0.0;
        std::size_t yes = 0;
        std::size_t no = 0;
    };

    std::vector<Node> nodes;
    std::size_t max_depth = 0;

    static DecisionTree leaf(double value);
    std::size_t depth() const;
    std::size_t leaf_count() const;
    /// Index of the leaf whose region contains x.
    std::size_t leaf_for(std::span<const double> x) const;
};

double tree_predict(const DecisionTree& tree, std::span<const double> x);

// ---------------------------------------------------------------------------

enum class KnnMode { mean, majority };

/// k-NN with Euclidean distance. Distance ties go to the smaller data-point
/// index; majority ties go to +1.
double knn_predict(const LabeledDataset& train, std::size_t k, std::span<const double> x,
                   KnnMode mode);

// ---------------------------------------------------------------------------
// JSON serialization (text in, text out keeps json.hpp out of this header).

std::string to_json(const LinearModel& model);
LinearModel linear_model_from_json(const std::string& text);
std::string to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const std::string& text);
std::string to_json(const AnnSpec& spec);

} // namespace erm
