#include "erm/models.hpp"

#include "erm/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace erm {

using nlohmann::json;

void validate(const FeatureMapSpec& spec)
{
    if (const auto* g = std::get_if<GaussianMap>(&spec)) {
        if (!(g->variance > 0.0) || !std::isfinite(g->variance))
            throw DomainError("gaussian feature map: variance must be positive");
        if (g->means.empty())
            throw DomainError("gaussian feature map: need at least one mean");
        if (!all_finite(g->means))
            throw DomainError("gaussian feature map: means must be finite");
    }
}

Vector apply_feature_map(const FeatureMapSpec& spec, double x)
{
    validate(spec);
    return std::visit(
        [x](const auto& map) -> Vector {
            using T = std::decay_t<decltype(map)>;
            if constexpr (std::is_same_v<T, IdentityMap>) {
                return {x};
            } else if constexpr (std::is_same_v<T, PolynomialMap>) {
                Vector out(map.degree + 1);
                double power = 1.0;
                for (auto& v : out) {
                    v = power;
                    power *= x;
                }
                return out;
            } else {
                Vector out(map.means.size());
                for (std::size_t j = 0; j < out.size(); ++j) {
                    const double d = x - map.means[j];
                    out[j] = std::exp(-d * d / (2.0 * map.variance));
                }
                return out;
            }
        },
        spec);
}

std::optional<std::size_t> feature_map_size(const FeatureMapSpec& spec)
{
    if (const auto* p = std::get_if<PolynomialMap>(&spec))
        return p->degree + 1;
    if (const auto* g = std::get_if<GaussianMap>(&spec))
        return g->means.size();
    return std::nullopt;
}

LabeledDataset map_features(const FeatureMapSpec& spec, const LabeledDataset& d)
{
    if (std::holds_alternative<IdentityMap>(spec))
        return d;
    if (d.dim() != 1)
        throw ShapeError("feature maps apply to a single raw feature, dataset has " +
                         std::to_string(d.dim()));
    const std::size_t width = *feature_map_size(spec);
    Matrix mapped(d.size(), width);
    for (std::size_t i = 0; i < d.size(); ++i) {
        Vector phi = apply_feature_map(spec, d.features(i, 0));
        std::copy(phi.begin(), phi.end(), mapped.row(i).begin());
    }
    LabeledDataset out = d;
    out.features = std::move(mapped);
    out.feature_names.clear();
    return out;
}

double predict_linear(const LinearModel& model, std::span<const double> x)
{
    if (model.feature_map && !std::holds_alternative<IdentityMap>(*model.feature_map)) {
        if (x.size() != 1)
            throw ShapeError("predict_linear: feature map expects one raw feature, got " +
                             std::to_string(x.size()));
        Vector phi = apply_feature_map(*model.feature_map, x[0]);
        if (phi.size() != model.weights.size())
            throw ShapeError("predict_linear: feature map yields " + std::to_string(phi.size()) +
                             " features for " + std::to_string(model.weights.size()) +
                             " weights");
        return dot(model.weights, phi);
    }
    if (x.size() != model.weights.size())
        throw ShapeError("predict_linear: " + std::to_string(x.size()) + " features for " +
                         std::to_string(model.weights.size()) + " weights");
    return dot(model.weights, x);
}

double classify(double h_value) { return h_value >= 0.0 ? 1.0 : -1.0; }

double activate(const Activation& g, double z)
{
    return std::visit(
        [z](const auto& act) -> double {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, Relu>)
                return z > 0.0 ? z : 0.0;
            else if constexpr (std::is_same_v<T, Sigmoid>)
                return 1.0 / (1.0 + std::exp(-z));
            else
                return act.scale * z;
        },
        g);
}

double ann_forward(const AnnSpec& spec, std::span<const double> x)
{
    if (spec.weights_in.rows() != spec.hidden_dim || spec.weights_in.cols() != spec.input_dim ||
        spec.weights_out.size() != spec.hidden_dim)
        throw ShapeError("ann_forward: inconsistent network dimensions");
    if (x.size() != spec.input_dim)
        throw ShapeError("ann_forward: expected " + std::to_string(spec.input_dim) +
                         " inputs, got " + std::to_string(x.size()));
    double out = 0.0;
    for (std::size_t j = 0; j < spec.hidden_dim; ++j)
        out += spec.weights_out[j] * activate(spec.activation, dot(spec.weights_in.row(j), x));
    return out;
}

DecisionTree DecisionTree::leaf(double value)
{
    DecisionTree t;
    DecisionTree::Node node;
    node.value = value;
    t.nodes.push_back(node);
    return t;
}

std::size_t DecisionTree::depth() const
{
    if (nodes.empty())
        return 0;
    // (node, depth) stack
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        auto [idx, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes[idx].is_leaf) {
            stack.emplace_back(nodes[idx].yes, d + 1);
            stack.emplace_back(nodes[idx].no, d + 1);
        }
    }
    return deepest;
}

std::size_t DecisionTree::leaf_count() const
{
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf; }));
}

std::size_t DecisionTree::leaf_for(std::span<const double> x) const
{
    if (nodes.empty())
        throw ShapeError("tree_predict: empty tree");
    std::size_t idx = 0;
    while (!nodes[idx].is_leaf) {
        const Node& node = nodes[idx];
        if (node.feature >= x.size())
            throw ShapeError("tree_predict: test on feature " + std::to_string(node.feature) +
                             " but input has " + std::to_string(x.size()) + " features");
        idx = x[node.feature] <= node.threshold ? node.yes : node.no;
    }
    return idx;
}

double tree_predict(const DecisionTree& tree, std::span<const double> x)
{
    return tree.nodes[tree.leaf_for(x)].value;
}

double knn_predict(const LabeledDataset& train, std::size_t k, std::span<const double> x,
                   KnnMode mode)
{
    const std::size_t m = train.size();
    if (m == 0)
        throw SizeError("knn_predict: empty training set");
    if (!train.has_labels())
        throw DomainError("knn_predict: training set has no labels");
    if (k < 1 || k > m)
        throw SizeError("knn_predict: k must lie in [1, " + std::to_string(m) + "]");
    if (x.size() != train.dim())
        throw ShapeError("knn_predict: query has wrong dimension");

    std::vector<std::pair<double, std::size_t>> dist(m);
    for (std::size_t i = 0; i < m; ++i)
        dist[i] = {squared_distance(train.features.row(i), x), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    if (mode == KnnMode::mean) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            sum += train.labels[dist[i].second];
        return sum / static_cast<double>(k);
    }
    double vote = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        vote += train.labels[dist[i].second] >= 0.0 ? 1.0 : -1.0;
    return vote >= 0.0 ? 1.0 : -1.0;
}

namespace {

json map_to_json(const FeatureMapSpec& spec)
{
    return std::visit(
        [](const auto& map) -> json {
            using T = std::decay_t<decltype(map)>;
            if constexpr (std::is_same_v<T, IdentityMap>)
                return {{"kind", "identity"}};
            else if constexpr (std::is_same_v<T, PolynomialMap>)
                return {{"kind", "polynomial"}, {"degree", map.degree}};
            else
                return {{"kind", "gaussian"}, {"means", map.means}, {"variance", map.variance}};
        },
        spec);
}

FeatureMapSpec map_from_json(const json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity")
        return IdentityMap{};
    if (kind == "polynomial")
        return PolynomialMap{j.at("degree").get<std::size_t>()};
    if (kind == "gaussian")
        return GaussianMap{j.at("means").get<Vector>(), j.at("variance").get<double>()};
    throw ConfigError("unknown feature map kind \"" + kind + "\"");
}

json node_to_json(const DecisionTree& tree, std::size_t idx)
{
    const auto& node = tree.nodes.at(idx);
    if (node.is_leaf)
        return {{"leaf", node.value}};
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"yes", node_to_json(tree, node.yes)},
            {"no", node_to_json(tree, node.no)}};
}

std::size_t node_from_json(DecisionTree& tree, const json& j)
{
    const std::size_t idx = tree.nodes.size();
    tree.nodes.emplace_back();
    if (j.contains("leaf")) {
        tree.nodes[idx].value = j.at("leaf").get<double>();
        return idx;
    }
    tree.nodes[idx].is_leaf = false;
    tree.nodes[idx].feature = j.at("feature").get<std::size_t>();
    tree.nodes[idx].threshold = j.at("threshold").get<double>();
    const std::size_t yes = node_from_json(tree, j.at("yes"));
    const std::size_t no = node_from_json(tree, j.at("no"));
    tree.nodes[idx].yes = yes;
    tree.nodes[idx].no = no;
    return idx;
}

} // namespace

std::string to_json(const LinearModel& model)
{
    json j{{"kind", "linear"}, {"weights", model.weights}};
    j["feature_map"] = model.feature_map ? map_to_json(*model.feature_map) : json(nullptr);
    return j.dump(2);
}

LinearModel linear_model_from_json(const std::string& text)
{
    const json j = json::parse(text);
    if (j.at("kind") != "linear")
        throw ConfigError("model JSON is not a linear model");
    LinearModel model;
    model.weights = j.at("weights").get<Vector>();
    if (j.contains("feature_map") && !j.at("feature_map").is_null())
        model.feature_map = map_from_json(j.at("feature_map"));
    return model;
}

std::string to_json(const DecisionTree& tree)
{
    json j{{"kind", "tree"}, {"max_depth", tree.max_depth}};
    j["root"] = tree.nodes.empty() ? json(nullptr) : node_to_json(tree, 0);
    return j.dump(2);
}

DecisionTree tree_from_json(const std::string& text)
{
    const json j = json::parse(text);
    if (j.at("kind") != "tree")
        throw ConfigError("model JSON is not a tree");
    DecisionTree tree;
    tree.max_depth = j.at("max_depth").get<std::size_t>();
    if (!j.at("root").is_null())
        node_from_json(tree, j.at("root"));
    return tree;
}

std::string to_json(const AnnSpec& spec)
{
    json j{{"kind", "ann"},
           {"input_dim", spec.input_dim},
           {"hidden_dim", spec.hidden_dim},
           {"weights_in", spec.weights_in.entries()},
           {"weights_out", spec.weights_out}};
    j["activation"] = std::visit(
        [](const auto& act) -> json {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, Relu>)
                return {{"kind", "relu"}};
            else if constexpr (std::is_same_v<T, Sigmoid>)
                return {{"kind", "sigmoid"}};
            else
                return {{"kind", "linear"}, {"scale", act.scale}};
        },
        spec.activation);
    return j.dump(2);
}

} // namespace erm
