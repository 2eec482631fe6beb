#include "cli.hpp"

#include "erm/cluster.hpp"
#include "erm/data.hpp"
#include "erm/dimred.hpp"
#include "erm/errors.hpp"
#include "erm/learners.hpp"
#include "erm/losses.hpp"
#include "erm/models.hpp"
#include "erm/optimize.hpp"
#include "erm/validate.hpp"
#include "erm/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace erm::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t default_seed = 20240601;

struct Common {
    std::string data;
    std::string label = "y";
    std::vector<std::string> features;
    std::uint64_t seed = default_seed;
    std::size_t threads = 1;
    std::string out;
    std::string format = "json";
};

struct FitOptions {
    std::string algo;
    double lambda = 0.0;
    std::optional<std::size_t> degree;
    std::size_t k = 1;
    std::size_t max_depth = 3;
    double train_fraction = 0.8;
    bool naive = false;
    std::string solver = "closed";
    std::optional<double> alpha;
    std::size_t max_iters = 100000;
    double stop_tol = 1e-10;
    std::string model_out;
};

struct SelectOptions {
    std::vector<std::size_t> degrees;
    double lambda = 0.0;
    double train_fraction = 0.8;
};

struct BiasVarOptions {
    std::size_t n = 10;
    std::vector<double> w_true;
    double sigma2 = 1.0;
    std::size_t m_t = 50;
    std::vector<std::size_t> r_grid;
    std::vector<double> lambda_grid;
    std::size_t trials = 10000;
};

struct ClusterOptions {
    std::string method = "kmeans";
    std::size_t k = 2;
    std::size_t restarts = 10;
    double epsilon = 0.0;
    std::size_t elbow = 0;
    std::size_t max_iters = 500;
};

struct PcaOptions {
    std::size_t n_pc = 2;
    bool no_center = false;
};

struct NormalizeOptions {
    std::string params_out;
};

struct SplitOptions {
    double train_fraction = 0.8;
    std::string train_out;
    std::string val_out;
};

struct ToyOptions {
    std::size_t n = 10;
    std::vector<double> w_true;
    double sigma2 = 1.0;
    std::size_t m = 100;
};

// The report header every command embeds.
json report_header(const std::string& command, const std::vector<std::string>& args,
                   std::uint64_t seed)
{
    std::string echo = "erm";
    for (const auto& a : args)
        echo += " " + a;
    return json{{"command", command}, {"invocation", echo}, {"seed", seed},
                {"version", erm::version}};
}

std::string csv_preamble(const json& header, double seconds)
{
    std::ostringstream out;
    out << "# invocation: " << header["invocation"].get<std::string>() << '\n'
        << "# seed: " << header["seed"].get<std::uint64_t>() << '\n'
        << "# version: " << header["version"].get<std::string>() << '\n'
        << "# wall_clock_seconds: " << seconds << '\n';
    return out.str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw ConfigError("cannot write " + path);
    file << text;
}

void check_format(const std::string& format)
{
    if (format != "json" && format != "csv")
        throw ConfigError("--format must be json or csv, got \"" + format + "\"");
}

LabeledDataset load_labeled(const Common& c, std::optional<LabelKind> kind = std::nullopt)
{
    if (c.data.empty())
        throw ConfigError("--data is required");
    return load_csv(c.data, c.features, c.label, kind);
}

LabeledDataset load_unlabeled(const Common& c)
{
    if (c.data.empty())
        throw ConfigError("--data is required");
    return load_csv(c.data, c.features, std::nullopt);
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

GdConfig gd_config(const FitOptions& f, std::uint64_t seed)
{
    GdConfig config;
    if (f.alpha)
        config.step = FixedStep{*f.alpha};
    config.max_iters = f.max_iters;
    config.stop_tol = f.stop_tol;
    config.seed = seed;
    return config;
}

json cmd_fit(const Common& c, const FitOptions& f, json report, std::ostream& out)
{
    static const std::vector<std::string> algos{"linreg", "ridge", "logreg", "svm",
                                                "bayes",  "naive-bayes", "tree", "knn"};
    if (std::find(algos.begin(), algos.end(), f.algo) == algos.end())
        throw ConfigError("--algo must be one of linreg, ridge, logreg, svm, bayes, naive-bayes, "
                          "tree, knn; got \"" + f.algo + "\"");
    if (f.solver != "closed" && f.solver != "gd")
        throw ConfigError("--solver must be closed or gd");
    const bool classifier = f.algo == "logreg" || f.algo == "svm" || f.algo == "bayes" ||
                            f.algo == "naive-bayes";

    LabeledDataset raw = load_labeled(c, classifier ? std::optional{LabelKind::binary}
                                                    : std::nullopt);
    std::optional<FeatureMapSpec> map;
    if (f.degree) {
        if (raw.dim() != 1)
            throw ConfigError("--degree needs exactly one feature column, got " +
                              std::to_string(raw.dim()));
        map = PolynomialMap{*f.degree};
    }
    const SplitPair parts = split(raw, f.train_fraction, c.seed);
    const LabeledDataset train = map ? map_features(*map, parts.train) : parts.train;

    const bool binary = raw.label_kind == LabelKind::binary;
    json metrics;
    Predictor h;
    json model_json;
    std::size_t iterations = 0;
    double step_size = 0.0;

    auto linear = [&](LinearModel model) {
        if (map)
            model.feature_map = *map;
        model_json = json::parse(to_json(model));
        h = [model](std::span<const double> x) { return predict_linear(model, x); };
    };

    if (f.algo == "linreg" || f.algo == "ridge") {
        const bool ridge = f.algo == "ridge";
        if (ridge && !(f.lambda > 0.0))
            throw ConfigError("--lambda must be positive for ridge");
        if (f.solver == "closed") {
            linear(ridge ? fit_ridge_closed(train, RidgeSpec{f.lambda}) : fit_linreg_closed(train));
        } else {
            const GdFit fit = ridge ? fit_ridge_gd(train, RidgeSpec{f.lambda}, gd_config(f, c.seed))
                                    : fit_linreg_gd(train, gd_config(f, c.seed));
            iterations = fit.trace.iterations_used;
            step_size = fit.trace.step_size;
            linear(fit.model);
        }
    } else if (f.algo == "logreg") {
        const GdFit fit = fit_logreg(train, gd_config(f, c.seed));
        iterations = fit.trace.iterations_used;
        step_size = fit.trace.step_size;
        linear(fit.model);
    } else if (f.algo == "svm") {
        if (!(f.lambda > 0.0))
            throw ConfigError("--lambda must be positive for svm");
        GdConfig config = svm_default_config(f.lambda);
        if (f.alpha)
            config.step = DecayingStep{*f.alpha};
        config.max_iters = std::min<std::size_t>(f.max_iters, config.max_iters);
        const GdFit fit = fit_svm(train, f.lambda, config);
        iterations = fit.trace.iterations_used;
        step_size = fit.trace.step_size;
        linear(fit.model);
    } else if (f.algo == "bayes" || f.algo == "naive-bayes") {
        const BayesFit fit = fit_bayes(train, f.naive || f.algo == "naive-bayes");
        linear(fit.model);
    } else if (f.algo == "tree") {
        if (map)
            throw ConfigError("--degree does not apply to trees");
        const DecisionTree tree = grow_tree(train, f.max_depth);
        model_json = json::parse(to_json(tree));
        h = [tree](std::span<const double> x) { return tree_predict(tree, x); };
    } else {
        if (map)
            throw ConfigError("--degree does not apply to knn");
        if (f.k < 1 || f.k > train.size())
            throw ConfigError("--k must lie in 1.." + std::to_string(train.size()));
        const KnnMode mode = binary ? KnnMode::majority : KnnMode::mean;
        model_json = json{{"kind", "knn"}, {"k", f.k},
                          {"mode", mode == KnnMode::mean ? "mean" : "majority"}};
        h = [train, k = f.k, mode](std::span<const double> x) {
            return knn_predict(train, k, x, mode);
        };
    }

    // Classification is scored by misclassification rate of the thresholded
    // prediction, regression by mean squared error.
    Predictor scored = h;
    LossKind loss = SquaredLoss{};
    if (binary && f.algo != "linreg" && f.algo != "ridge") {
        scored = [h](std::span<const double> x) { return classify(h(x)); };
        loss = ZeroOneLoss{};
    }
    auto feature_view = [&](const LabeledDataset& d) { return map ? map_features(*map, d) : d; };
    const double train_error = empirical_risk(loss, scored, train, {});
    const double val_error = empirical_risk(loss, scored, feature_view(parts.val), {});

    report["algo"] = f.algo;
    report["loss"] = std::holds_alternative<ZeroOneLoss>(loss) ? "zero_one" : "squared";
    report["train_error"] = train_error;
    report["val_error"] = val_error;
    report["iterations"] = iterations;
    report["step_size"] = step_size;
    report["train_size"] = parts.train.size();
    report["val_size"] = parts.val.size();
    report["model"] = model_json;
    if (!f.model_out.empty())
        write_text(f.model_out, model_json.dump(2) + "\n", out);
    return report;
}

json cmd_select(const Common& c, const SelectOptions& s, json report, std::string& csv)
{
    if (s.degrees.empty())
        throw ConfigError("select: empty candidate list (--degrees)");
    const LabeledDataset d = load_labeled(c);
    if (d.dim() != 1)
        throw ConfigError("select: polynomial candidates need exactly one feature column");
    std::vector<CandidateSpec> candidates;
    for (std::size_t deg : s.degrees)
        candidates.push_back(CandidateSpec{"degree_" + std::to_string(deg), PolynomialMap{deg},
                                           s.lambda});
    const ModelSelectionReport sel = select_model(candidates, d, s.train_fraction, c.seed);
    report["selection"] = json::parse(sel.to_json());
    std::ostringstream table;
    table.precision(17);
    table << "id,train_error,val_error,failed\n";
    for (const auto& cand : sel.candidates)
        table << cand.id << ',' << cand.train_error << ',' << cand.val_error << ','
              << (cand.failed ? 1 : 0) << '\n';
    csv = table.str();
    return report;
}

json cmd_biasvar(const Common& c, const BiasVarOptions& b, json report, std::string& csv)
{
    if (b.trials < 1)
        throw ConfigError("--trials must be at least 1");
    if (!b.r_grid.empty() && !b.lambda_grid.empty())
        throw ConfigError("give either --r-grid or --lambda-grid, not both");
    ToyModelSpec spec;
    spec.w_true = b.w_true.empty() ? Vector(b.n, 1.0) : b.w_true;
    spec.noise_variance = b.sigma2;
    spec.sample_count = b.m_t;
    spec.seed = c.seed;
    std::vector<BiasVarianceResult> rows;
    if (!b.lambda_grid.empty()) {
        for (double lambda : b.lambda_grid)
            rows.push_back(ridge_bias_variance_experiment(spec, lambda, b.trials, c.threads));
    } else {
        std::vector<std::size_t> grid = b.r_grid;
        if (grid.empty())
            for (std::size_t r = 1; r <= spec.w_true.size(); ++r)
                if (spec.sample_count > r + 1)
                    grid.push_back(r);
        for (std::size_t r : grid)
            rows.push_back(bias_variance_experiment(spec, r, b.trials, c.threads));
    }
    report["n"] = spec.w_true.size();
    report["sample_count"] = spec.sample_count;
    report["noise_variance"] = spec.noise_variance;
    report["trials"] = b.trials;
    report["sweep"] = json::parse(sweep_to_json(rows));
    csv = sweep_to_csv(rows);
    return report;
}

json cmd_cluster(const Common& c, const ClusterOptions& o, json report, std::string& csv)
{
    if (o.method != "kmeans" && o.method != "gmm")
        throw ConfigError("--method must be kmeans or gmm");
    if (o.restarts < 1)
        throw ConfigError("--restarts must be at least 1");
    const LabeledDataset d = load_unlabeled(c);

    if (o.elbow > 0) {
        const auto points = elbow_sweep(d, o.elbow, o.restarts, c.seed, c.threads);
        json rows = json::array();
        for (const auto& p : points)
            rows.push_back(json{{"k", p.k}, {"error", p.error}});
        report["elbow"] = rows;
        csv = elbow_to_csv(points);
        return report;
    }

    if (o.method == "kmeans") {
        json table = json::array();
        std::optional<HardClustering> best;
        std::size_t best_run = 0;
        for (std::size_t r = 0; r < o.restarts; ++r) {
            KmeansConfig config;
            config.k = o.k;
            config.epsilon = o.epsilon;
            config.seed = c.seed + r;
            HardClustering run = kmeans(d, config);
            table.push_back(json{{"restart", r}, {"seed", config.seed}, {"error", run.error},
                                 {"iterations", run.iterations}});
            if (!best || run.error < best->error) {
                best = std::move(run);
                best_run = r;
            }
        }
        report["restarts"] = table;
        report["best_restart"] = best_run;
        report["clustering"] = json::parse(best->to_json());
        csv = best->to_csv();
    } else {
        GmmConfig config;
        config.k = o.k;
        config.seed = c.seed;
        config.max_iters = o.max_iters;
        const SoftClustering soft = gmm_em(d, config);
        report["clustering"] = json::parse(soft.to_json());
        csv = soft.to_csv();
    }
    return report;
}

json cmd_pca(const Common& c, const PcaOptions& p, json report, std::string& csv)
{
    const LabeledDataset d = load_unlabeled(c);
    const PcaModel model = fit_pca(d, p.n_pc, !p.no_center);
    report["pca"] = json::parse(model.to_json());
    if (p.n_pc >= 2)
        csv = scatter_csv(model, d);
    return report;
}

json cmd_normalize(const Common& c, const NormalizeOptions& o, json report, std::string& csv)
{
    if (c.data.empty())
        throw ConfigError("--data is required");
    std::optional<std::string> label;
    if (!c.label.empty() && c.label != "none")
        label = c.label;
    const NormalizedDataset result = normalize(load_csv(c.data, c.features, label));
    report["params"] = json::parse(result.params.to_json());
    csv = to_csv(result.data, label.value_or("y"));
    if (!o.params_out.empty()) {
        std::ofstream file(o.params_out);
        if (!file)
            throw ConfigError("cannot write " + o.params_out);
        file << result.params.to_json() << '\n';
    }
    return report;
}

json cmd_split(const Common& c, const SplitOptions& s, json report, std::ostream& out)
{
    if (c.data.empty())
        throw ConfigError("--data is required");
    std::optional<std::string> label;
    if (!c.label.empty() && c.label != "none")
        label = c.label;
    const SplitPair parts = split(load_csv(c.data, c.features, label), s.train_fraction, c.seed);
    report["train_fraction"] = s.train_fraction;
    report["train_indices"] = parts.train_indices;
    report["val_indices"] = parts.val_indices;
    if (!s.train_out.empty())
        write_text(s.train_out, to_csv(parts.train, label.value_or("y")), out);
    if (!s.val_out.empty())
        write_text(s.val_out, to_csv(parts.val, label.value_or("y")), out);
    return report;
}

json cmd_gen_toy(const Common& c, const ToyOptions& t, json report, std::string& csv)
{
    ToyModelSpec spec;
    spec.w_true = t.w_true.empty() ? Vector(t.n, 1.0) : t.w_true;
    spec.noise_variance = t.sigma2;
    spec.sample_count = t.m;
    spec.seed = c.seed;
    LabeledDataset d = generate_toy(spec);
    report["w_true"] = spec.w_true;
    report["noise_variance"] = spec.noise_variance;
    report["sample_count"] = spec.sample_count;
    csv = to_csv(d, "y");
    return report;
}

// CLI11 turns an empty list entry into 0; reject it instead.
const CLI::Validator non_empty_entry{[](std::string& value) {
                                         return value.empty() ? std::string("empty list entry")
                                                              : std::string();
                                     },
                                     "NONEMPTY"};

void add_common(CLI::App* sub, Common& c, bool data, bool label)
{
    if (data) {
        sub->add_option("--data", c.data, "input CSV file");
        sub->add_option("--features", c.features, "feature columns (default: all but the label)")
            ->delimiter(',');
    }
    if (label)
        sub->add_option("--label", c.label, "label column");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker threads for parallel inner loops");
    sub->add_option("--out", c.out, "report file (default: stdout)");
    sub->add_option("--format", c.format, "json or csv");
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Empirical risk minimization toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", erm::version);

    Common common;
    FitOptions fit;
    SelectOptions sel;
    BiasVarOptions bv;
    ClusterOptions cl;
    PcaOptions pca;
    NormalizeOptions norm;
    SplitOptions spl;
    ToyOptions toy;

    auto* fit_cmd = app.add_subcommand("fit", "train a model on a CSV dataset");
    add_common(fit_cmd, common, true, true);
    fit_cmd->add_option("--algo", fit.algo, "linreg, ridge, logreg, svm, bayes, naive-bayes, tree, knn")
        ->required();
    fit_cmd->add_option("--lambda", fit.lambda, "regularization parameter");
    fit_cmd->add_option("--degree", fit.degree, "polynomial feature map degree (single feature)");
    fit_cmd->add_option("--k", fit.k, "neighbours for knn");
    fit_cmd->add_option("--max-depth", fit.max_depth, "tree depth cap");
    fit_cmd->add_option("--train-fraction", fit.train_fraction, "training share of the split");
    fit_cmd->add_flag("--naive", fit.naive, "diagonal covariance for bayes");
    fit_cmd->add_option("--solver", fit.solver, "closed or gd (linreg, ridge)");
    fit_cmd->add_option("--alpha", fit.alpha, "fixed GD step size (svm: decaying step base)");
    fit_cmd->add_option("--max-iters", fit.max_iters, "GD iteration cap");
    fit_cmd->add_option("--stop-tol", fit.stop_tol, "GD objective-decrease threshold");
    fit_cmd->add_option("--model-out", fit.model_out, "write the fitted model as JSON");

    auto* sel_cmd = app.add_subcommand("select", "polynomial degree selection by validation error");
    add_common(sel_cmd, common, true, true);
    sel_cmd->add_option("--degrees", sel.degrees, "candidate degrees, comma separated")
        ->delimiter(',')
        ->check(non_empty_entry);
    sel_cmd->add_option("--lambda", sel.lambda, "ridge parameter for every candidate");
    sel_cmd->add_option("--train-fraction", sel.train_fraction, "training share of the split");

    auto* bv_cmd = app.add_subcommand("biasvar", "Monte-Carlo bias/variance sweep on the toy model");
    add_common(bv_cmd, common, false, false);
    bv_cmd->add_option("--n", bv.n, "feature dimension (w_true = ones)");
    bv_cmd->add_option("--w-true", bv.w_true, "true weights, comma separated")
        ->delimiter(',')
        ->check(non_empty_entry);
    bv_cmd->add_option("--sigma2", bv.sigma2, "noise variance");
    bv_cmd->add_option("--m-t", bv.m_t, "training points per trial");
    bv_cmd->add_option("--r-grid", bv.r_grid, "model sizes r")
        ->delimiter(',')
        ->check(non_empty_entry);
    bv_cmd->add_option("--lambda-grid", bv.lambda_grid, "ridge parameters")
        ->delimiter(',')
        ->check(non_empty_entry);
    bv_cmd->add_option("--trials", bv.trials, "Monte-Carlo trials per grid point");

    auto* cl_cmd = app.add_subcommand("cluster", "k-means or GMM clustering");
    add_common(cl_cmd, common, true, false);
    cl_cmd->add_option("--method", cl.method, "kmeans or gmm");
    cl_cmd->add_option("--k", cl.k, "number of clusters");
    cl_cmd->add_option("--restarts", cl.restarts, "k-means restarts");
    cl_cmd->add_option("--epsilon", cl.epsilon, "k-means stopping tolerance");
    cl_cmd->add_option("--elbow", cl.elbow, "sweep k = 1..K and report the error curve");
    cl_cmd->add_option("--max-iters", cl.max_iters, "EM iteration cap");

    auto* pca_cmd = app.add_subcommand("pca", "principal component analysis");
    add_common(pca_cmd, common, true, false);
    pca_cmd->add_option("--n-pc", pca.n_pc, "number of principal components");
    pca_cmd->add_flag("--no-center", pca.no_center, "use uncentered second moments");

    auto* norm_cmd = app.add_subcommand("normalize", "center and scale features");
    add_common(norm_cmd, common, true, true);
    norm_cmd->add_option("--params-out", norm.params_out, "write the normalization parameters");

    auto* split_cmd = app.add_subcommand("split", "random train/validation split");
    add_common(split_cmd, common, true, true);
    split_cmd->add_option("--train-fraction", spl.train_fraction, "training share");
    split_cmd->add_option("--train-out", spl.train_out, "training part CSV");
    split_cmd->add_option("--val-out", spl.val_out, "validation part CSV");

    auto* toy_cmd = app.add_subcommand("gen-toy", "sample the linear Gaussian toy model");
    add_common(toy_cmd, common, false, false);
    toy_cmd->add_option("--n", toy.n, "feature dimension (w_true = ones)");
    toy_cmd->add_option("--w-true", toy.w_true, "true weights, comma separated")
        ->delimiter(',')
        ->check(non_empty_entry);
    toy_cmd->add_option("--sigma2", toy.sigma2, "noise variance");
    toy_cmd->add_option("--m", toy.m, "number of data points");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }

    try {
        check_format(common.format);
        const auto start = std::chrono::steady_clock::now();
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        json report = report_header(name, args, common.seed);
        std::string csv;
        if (name == "fit")
            report = cmd_fit(common, fit, report, out);
        else if (name == "select")
            report = cmd_select(common, sel, report, csv);
        else if (name == "biasvar")
            report = cmd_biasvar(common, bv, report, csv);
        else if (name == "cluster")
            report = cmd_cluster(common, cl, report, csv);
        else if (name == "pca")
            report = cmd_pca(common, pca, report, csv);
        else if (name == "normalize")
            report = cmd_normalize(common, norm, report, csv);
        else if (name == "split")
            report = cmd_split(common, spl, report, out);
        else
            report = cmd_gen_toy(common, toy, report, csv);

        const double seconds = seconds_since(start);
        if (common.format == "csv") {
            if (csv.empty())
                throw ConfigError(name + " has no CSV output" +
                                  (name == "pca" ? std::string(" for fewer than 2 PCs") : ""));
            write_text(common.out, csv_preamble(report, seconds) + csv, out);
        } else {
            report["wall_clock_seconds"] = seconds;
            write_text(common.out, report.dump(2) + "\n", out);
        }
        return ok;
    } catch (const Error& e) {
        err << "error (" << to_string(e.category()) << "): " << e.what() << '\n';
        switch (e.category()) {
        case ErrorCategory::config: return config_error;
        case ErrorCategory::data: return data_error;
        case ErrorCategory::numeric: return numeric_error;
        }
        return internal_error;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return internal_error;
    }
}

} // namespace erm::cli
