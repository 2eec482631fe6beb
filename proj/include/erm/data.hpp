#pragma once

#include "erm/numerics.hpp"
#include "erm/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace erm {

enum class LabelKind { real, binary, none };

const char* to_string(LabelKind kind) noexcept;

/// m data points with n features each and an optional label per point.
///
/// Binary labels are stored as -1/+1. For LabelKind::none the label vector is
/// empty.
struct LabeledDataset {
    Matrix features;
    Vector labels;
    LabelKind label_kind = LabelKind::none;
    std::vector<std::string> feature_names;

    std::size_t size() const noexcept { return features.rows(); }
    std::size_t dim() const noexcept { return features.cols(); }
    bool has_labels() const noexcept { return label_kind != LabelKind::none; }

    LabeledDataset subset(std::span<const std::size_t> indices) const;
};

/// Build a dataset and check its invariants (m >= 1, finite values, binary
/// labels in {-1,+1}). Throws SizeError or DomainError.
LabeledDataset make_dataset(Matrix features, Vector labels, LabelKind kind);

/// Unlabeled dataset.
LabeledDataset make_dataset(Matrix features);

/// Real labels that happen to all lie in {-1,+1} are reported as binary.
LabelKind infer_label_kind(std::span<const double> labels);

/// Read a comma-separated file with a header row. Blank lines and lines
/// starting with '#' are skipped.
///
/// `feature_cols` selects columns by name; an empty list selects every column
/// except the label. When `label_col` is absent the dataset is unlabeled.
LabeledDataset load_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& feature_cols,
                        const std::optional<std::string>& label_col,
                        std::optional<LabelKind> forced_kind = std::nullopt);

/// Parse CSV text already in memory; `source` only labels error messages.
LabeledDataset parse_csv(const std::string& text,
                         const std::vector<std::string>& feature_cols,
                         const std::optional<std::string>& label_col,
                         std::optional<LabelKind> forced_kind = std::nullopt,
                         const std::string& source = "<memory>");

/// Write features (and labels under `label_name`) as CSV with a header.
void write_csv(const std::filesystem::path& path, const LabeledDataset& d,
               const std::string& label_name = "y");
std::string to_csv(const LabeledDataset& d, const std::string& label_name = "y");

/// Divide every value by the maximum value. Requires max > 0.
Vector min_max_scale(std::span<const double> values);

struct NormalizationParams {
    Vector means;
    Vector sigmas;

    /// Apply the same centering and scaling to another dataset.
    LabeledDataset apply(const LabeledDataset& d) const;
    std::string to_json() const;
    static NormalizationParams from_json(const std::string& text);
};

struct NormalizedDataset {
    LabeledDataset data;
    NormalizationParams params;
};

/// Center each feature and scale it to unit mean square.
///
/// The scale of feature j is sqrt((1/m) Σ_i (x_ij - mean_j)²), computed after
/// centering. Throws DegenerateDataError naming a constant column.
NormalizedDataset normalize(const LabeledDataset& d);

struct SplitPair {
    LabeledDataset train;
    LabeledDataset val;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> val_indices;
    std::uint64_t split_seed = 0;
    double train_fraction = 0.0;
};

/// Random train/validation split: shuffle the indices, take a prefix of
/// round(train_fraction·m) points for training. Deterministic per seed.
SplitPair split(const LabeledDataset& d, double train_fraction, std::uint64_t seed);

/// Linear Gaussian toy model y = w_trueᵀx + ε with x ~ N(0, I), ε ~ N(0, σ²).
struct ToyModelSpec {
    Vector w_true;
    double noise_variance = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
};

LabeledDataset generate_toy(const ToyModelSpec& spec);

/// Same model, drawing from a caller-owned stream.
LabeledDataset generate_toy(const Vector& w_true, double noise_variance, std::size_t count,
                            Rng& rng);

} // namespace erm
