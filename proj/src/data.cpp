#include "erm/data.hpp"

#include "erm/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace erm {

const char* to_string(LabelKind kind) noexcept
{
    switch (kind) {
    case LabelKind::real: return "real";
    case LabelKind::binary: return "binary";
    case LabelKind::none: return "none";
    }
    return "unknown";
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const
{
    LabeledDataset out;
    out.features = features.select_rows(indices);
    out.label_kind = label_kind;
    out.feature_names = feature_names;
    if (has_labels()) {
        out.labels.reserve(indices.size());
        for (std::size_t i : indices)
            out.labels.push_back(labels.at(i));
    }
    return out;
}

LabeledDataset make_dataset(Matrix features, Vector labels, LabelKind kind)
{
    if (features.rows() == 0)
        throw SizeError("dataset must contain at least one data point");
    if (!all_finite(features))
        throw DomainError("dataset features contain non-finite values");
    if (kind == LabelKind::none) {
        if (!labels.empty())
            throw ShapeError("unlabeled dataset given a label vector");
    } else {
        if (labels.size() != features.rows())
            throw ShapeError("label vector length " + std::to_string(labels.size()) +
                             " does not match " + std::to_string(features.rows()) + " data points");
        if (!all_finite(labels))
            throw DomainError("dataset labels contain non-finite values");
        if (kind == LabelKind::binary)
            for (double y : labels)
                if (y != 1.0 && y != -1.0)
                    throw DomainError("binary labels must be -1 or +1, got " + std::to_string(y));
    }
    LabeledDataset d;
    d.features = std::move(features);
    d.labels = std::move(labels);
    d.label_kind = kind;
    return d;
}

LabeledDataset make_dataset(Matrix features)
{
    return make_dataset(std::move(features), {}, LabelKind::none);
}

LabelKind infer_label_kind(std::span<const double> labels)
{
    const bool binary =
        std::all_of(labels.begin(), labels.end(), [](double y) { return y == 1.0 || y == -1.0; });
    return binary ? LabelKind::binary : LabelKind::real;
}

namespace {

std::string trim(std::string_view s)
{
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos)
        return {};
    auto end = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(begin, end - begin + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
        out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(const std::string& cell)
{
    if (cell.empty())
        return std::nullopt;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+')
        ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value))
        return std::nullopt;
    return value;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name)
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw SchemaError("column \"" + name + "\" not found in header", name);
    return static_cast<std::size_t>(it - header.begin());
}

// Lines starting with '#' carry report metadata and are skipped.
bool is_comment(const std::string& line)
{
    const std::string t = trim(line);
    return !t.empty() && t.front() == '#';
}

} // namespace

LabeledDataset parse_csv(const std::string& text, const std::vector<std::string>& feature_cols,
                         const std::optional<std::string>& label_col,
                         std::optional<LabelKind> forced_kind, const std::string& source)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty() && !is_comment(line)) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty())
        throw SchemaError(source + ": missing header row", "");

    std::optional<std::size_t> label_index;
    if (label_col)
        label_index = find_column(header, *label_col);

    std::vector<std::size_t> feature_index;
    std::vector<std::string> names;
    if (feature_cols.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (!label_index || c != *label_index) {
                feature_index.push_back(c);
                names.push_back(header[c]);
            }
    } else {
        for (const auto& name : feature_cols) {
            feature_index.push_back(find_column(header, name));
            names.push_back(name);
        }
    }
    if (feature_index.empty())
        throw SchemaError(source + ": no feature columns selected", "");

    std::vector<double> entries;
    Vector labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || is_comment(line))
            continue;
        auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw ParseError(source + ": line " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(header.size()),
                             line_no, "");
        auto read = [&](std::size_t c) {
            auto v = parse_number(fields[c]);
            if (!v)
                throw ParseError(source + ": cannot parse \"" + fields[c] + "\" at row " +
                                     std::to_string(line_no) + ", column \"" + header[c] + "\"",
                                 line_no, header[c]);
            return *v;
        };
        for (std::size_t c : feature_index)
            entries.push_back(read(c));
        if (label_index)
            labels.push_back(read(*label_index));
        ++rows;
    }
    if (rows == 0)
        throw SizeError(source + ": no data rows");

    LabelKind kind = LabelKind::none;
    if (label_index)
        kind = forced_kind ? *forced_kind : infer_label_kind(labels);
    LabeledDataset d = make_dataset(Matrix(rows, feature_index.size(), std::move(entries)),
                                    std::move(labels), kind);
    d.feature_names = std::move(names);
    return d;
}

LabeledDataset load_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& feature_cols,
                        const std::optional<std::string>& label_col,
                        std::optional<LabelKind> forced_kind)
{
    std::ifstream in(path);
    if (!in)
        throw SchemaError("cannot open " + path.string(), "");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), feature_cols, label_col, forced_kind, path.string());
}

std::string to_csv(const LabeledDataset& d, const std::string& label_name)
{
    std::ostringstream out;
    out.precision(17);
    for (std::size_t j = 0; j < d.dim(); ++j) {
        if (j > 0)
            out << ',';
        out << (j < d.feature_names.size() ? d.feature_names[j] : "x" + std::to_string(j + 1));
    }
    if (d.has_labels())
        out << ',' << label_name;
    out << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d.dim(); ++j) {
            if (j > 0)
                out << ',';
            out << d.features(i, j);
        }
        if (d.has_labels())
            out << ',' << d.labels[i];
        out << '\n';
    }
    return out.str();
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& d,
               const std::string& label_name)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << to_csv(d, label_name);
}

Vector min_max_scale(std::span<const double> values)
{
    if (values.empty())
        throw SizeError("min_max_scale: empty input");
    const double largest = *std::max_element(values.begin(), values.end());
    if (!(largest > 0.0))
        throw DomainError("min_max_scale: maximum value must be positive");
    return scale(values, 1.0 / largest);
}

NormalizedDataset normalize(const LabeledDataset& d)
{
    const std::size_t m = d.size();
    const std::size_t n = d.dim();
    if (m < 2)
        throw SizeError("normalize: need at least two data points");

    NormalizationParams params;
    params.means.assign(n, 0.0);
    params.sigmas.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            params.means[j] += d.features(i, j);
    for (double& mu : params.means)
        mu /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double c = d.features(i, j) - params.means[j];
            params.sigmas[j] += c * c;
        }
    for (std::size_t j = 0; j < n; ++j) {
        params.sigmas[j] = std::sqrt(params.sigmas[j] / static_cast<double>(m));
        if (!(params.sigmas[j] > 0.0)) {
            const std::string name =
                j < d.feature_names.size() ? d.feature_names[j] : "#" + std::to_string(j);
            throw DegenerateDataError("normalize: feature " + name + " is constant");
        }
    }
    NormalizedDataset out{params.apply(d), params};
    return out;
}

LabeledDataset NormalizationParams::apply(const LabeledDataset& d) const
{
    if (d.dim() != means.size() || d.dim() != sigmas.size())
        throw ShapeError("normalization parameters do not match feature count");
    LabeledDataset out = d;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.dim(); ++j)
            out.features(i, j) = (d.features(i, j) - means[j]) / sigmas[j];
    return out;
}

std::string NormalizationParams::to_json() const
{
    nlohmann::json j;
    j["means"] = means;
    j["sigmas"] = sigmas;
    return j.dump(2);
}

NormalizationParams NormalizationParams::from_json(const std::string& text)
{
    auto j = nlohmann::json::parse(text);
    NormalizationParams p;
    p.means = j.at("means").get<Vector>();
    p.sigmas = j.at("sigmas").get<Vector>();
    if (p.means.size() != p.sigmas.size())
        throw ShapeError("normalization parameters: means and sigmas differ in length");
    return p;
}

SplitPair split(const LabeledDataset& d, double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("split: train fraction must lie strictly between 0 and 1");
    const std::size_t m = d.size();
    const auto train_count =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m)));
    if (train_count == 0 || train_count >= m)
        throw SizeError("split: fraction " + std::to_string(train_fraction) + " of " +
                        std::to_string(m) + " points leaves an empty partition");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = m; i > 1; --i)
        std::swap(order[i - 1], order[rng.index(i)]);

    SplitPair out;
    out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
    out.val_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
    out.train = d.subset(out.train_indices);
    out.val = d.subset(out.val_indices);
    out.split_seed = seed;
    out.train_fraction = train_fraction;
    return out;
}

LabeledDataset generate_toy(const Vector& w_true, double noise_variance, std::size_t count,
                            Rng& rng)
{
    if (w_true.empty())
        throw ShapeError("generate_toy: w_true must have at least one entry");
    if (!(noise_variance >= 0.0))
        throw DomainError("generate_toy: noise variance must be nonnegative");
    if (count == 0)
        throw SizeError("generate_toy: sample count must be positive");
    const std::size_t n = w_true.size();
    const double noise_sd = std::sqrt(noise_variance);
    Matrix x(count, n);
    Vector y(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto row = x.row(i);
        for (double& v : row)
            v = rng.normal();
        y[i] = dot(row, w_true);
        if (noise_variance > 0.0)
            y[i] += noise_sd * rng.normal();
    }
    return make_dataset(std::move(x), std::move(y), LabelKind::real);
}

LabeledDataset generate_toy(const ToyModelSpec& spec)
{
    Rng rng(spec.seed);
    return generate_toy(spec.w_true, spec.noise_variance, spec.sample_count, rng);
}

} // namespace erm
