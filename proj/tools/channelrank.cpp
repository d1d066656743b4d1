// channelrank command-line driver: rank, experiment, synth, sweep.

#include "channelrank/channelrank.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace channelrank;

namespace {

struct RankerFlags {
    std::optional<std::size_t> relief_iterations;
    std::optional<std::string> neighbor_mode;
    std::optional<std::string> probe_order;
    std::optional<std::size_t> bins;
    std::optional<std::size_t> laplacian_k;
    std::optional<double> kernel_width;
    std::optional<std::size_t> subsample_cap;

    void attach(CLI::App& cmd)
    {
        cmd.add_option("--relief-iterations", relief_iterations, "Relief probes m (default: every row once)");
        cmd.add_option("--neighbor-mode", neighbor_mode, "Relief hit/miss choice")
            ->check(CLI::IsMember({"nearest", "random"}));
        cmd.add_option("--probe-order", probe_order, "Relief probe order")->check(CLI::IsMember({"cycled", "random"}));
        cmd.add_option("--bins", bins, "mRMR discretization levels (3 = mean/sd)");
        cmd.add_option("--laplacian-k", laplacian_k, "Laplacian Score neighbours");
        cmd.add_option("--kernel-width", kernel_width, "Laplacian heat kernel width (default: auto)");
        cmd.add_option("--subsample-cap", subsample_cap, "Laplacian row cap, 0 disables");
    }

    void apply(RankerConfig& config, bool& relief_seed_set, bool& laplacian_seed_set, std::optional<std::uint64_t> seed) const
    {
        if (relief_iterations) config.relief.iterations = *relief_iterations;
        if (neighbor_mode) config.relief.neighbor_mode = parse_neighbor_mode(*neighbor_mode);
        if (probe_order) config.relief.probe_order = parse_probe_order(*probe_order);
        if (bins) config.mrmr.scheme = DiscretizationScheme::from_bins(*bins);
        if (laplacian_k) config.laplacian.k_neighbors = *laplacian_k;
        if (kernel_width) config.laplacian.kernel_width = *kernel_width;
        if (subsample_cap) config.laplacian.subsample_cap = *subsample_cap;
        if (seed) {
            config.relief.seed = *seed;
            config.laplacian.seed = *seed;
            relief_seed_set = true;
            laplacian_seed_set = true;
        }
    }
};

struct ClassifierFlags {
    std::optional<std::size_t> knn_k;
    std::optional<std::size_t> tree_max_depth;
    std::optional<std::size_t> tree_min_leaf;
    std::optional<double> lda_ridge;

    void attach(CLI::App& cmd)
    {
        cmd.add_option("--knn-k", knn_k, "kNN neighbours");
        cmd.add_option("--tree-max-depth", tree_max_depth, "CART depth limit");
        cmd.add_option("--tree-min-leaf", tree_min_leaf, "CART minimum leaf size");
        cmd.add_option("--lda-ridge", lda_ridge, "LDA ridge, relative to the mean covariance diagonal");
    }

    void apply(ClassifierSpec& spec) const
    {
        if (knn_k) spec.knn_k = *knn_k;
        if (tree_max_depth) spec.tree_max_depth = *tree_max_depth;
        if (tree_min_leaf) spec.tree_min_leaf = *tree_min_leaf;
        if (lda_ridge) spec.lda_ridge = *lda_ridge;
    }
};

Precision parse_precision(const std::string& text)
{
    if (text == "full") return Precision::full;
    if (text == "6") return Precision::six_significant;
    throw UsageError("--precision must be 6 or full");
}

TrialTensor load_input(const std::string& input, const std::optional<std::string>& manifest)
{
    return manifest ? load_dataset(input, *manifest) : load_dataset(input);
}

void create_parent(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
}

// ---------------------------------------------------------------------------

struct RankCommand {
    std::string method;
    std::string setting = "vertical";
    std::string input;
    std::optional<std::string> manifest;
    std::string out;
    std::uint64_t seed = 0;
    std::optional<double> threshold;
    RankerFlags ranker;

    int run(std::size_t threads) const
    {
        RankerConfig config;
        config.method = parse_rank_method(method);
        bool unused_a = false;
        bool unused_b = false;
        ranker.apply(config, unused_a, unused_b, seed);
        config.mrmr.scheme.validate();
        const Setting mode = parse_setting(setting);
        const TrialTensor tensor = load_input(input, manifest);

        OrderedJson doc;
        if (mode == Setting::vertical) {
            const RankingList list = rank(form_vertical(tensor), config, threads);
            doc = ranking_to_json(list, config);
            if (threshold) {
                doc["above_threshold"] = channels_above(list, *threshold);
            }
        } else {
            std::vector<RankingList> lists;
            const RankMatrix ranks = collect_rank_matrix(tensor, config, threads, &lists);
            doc = aggregation_to_json(ranks, aggregate(ranks), config);
        }
        create_parent(out);
        write_json(out, doc);
        return 0;
    }
};

struct ExperimentCommand {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::string precision = "6";
    std::vector<std::string> methods;
    std::optional<std::string> setting;
    std::vector<std::string> classifiers;
    std::optional<double> split_fraction;
    std::optional<std::string> horizontal_mode;
    RankerFlags ranker;
    ClassifierFlags classifier;

    int run(std::size_t threads) const
    {
        const Precision digits = parse_precision(precision);
        RunConfig config = load_run_config(config_path);
        if (out) config.output_dir = *out;
        if (seed) config.seed = *seed;
        if (!methods.empty()) {
            config.methods.clear();
            for (const auto& m : methods) config.methods.push_back(parse_rank_method(m));
        }
        if (setting) config.settings = parse_settings(*setting);
        if (split_fraction) config.split_fraction = *split_fraction;
        if (horizontal_mode) config.horizontal_mode = parse_horizontal_mode(*horizontal_mode);
        ranker.apply(config.ranker, config.relief_seed_set, config.laplacian_seed_set, std::nullopt);
        if (!classifiers.empty()) {
            const ClassifierSpec base = config.classifiers.front();
            config.classifiers.clear();
            for (const auto& name : classifiers) {
                ClassifierSpec spec = base;
                spec.kind = parse_classifier_kind(name);
                config.classifiers.push_back(spec);
            }
        }
        for (ClassifierSpec& spec : config.classifiers) classifier.apply(spec);
        config.validate();

        const TrialTensor tensor = load_run_dataset(config);
        const GridResult grid = run_experiment_grid(config, tensor, threads);
        write_grid_outputs(config.output_dir, config, grid, digits);
        for (const ReportRow& row : grid.rows) {
            if (!row.report) {
                std::cerr << "channelrank: " << row.method << '/' << row.setting << '/' << row.classifier
                          << " failed: " << row.error << '\n';
            }
        }
        return grid.failures == grid.rows.size() ? 1 : 0;
    }
};

struct SynthCommand {
    SynthSpec spec;
    std::vector<std::string> redundant;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<std::string> name;

    int run() const
    {
        SynthSpec full = spec;
        for (const auto& pair : redundant) {
            full.redundant_pairs.push_back(parse_redundant_pair(pair));
        }
        const TrialTensor tensor = generate_synthetic(full, seed);
        fs::path stem(out);
        if (stem.extension() == ".csv" || stem.extension() == ".json") {
            stem.replace_extension();
        }
        create_parent(stem);
        fs::path csv = stem;
        csv += ".csv";
        fs::path manifest = stem;
        manifest += ".json";
        save_dataset(tensor, csv, manifest, name.value_or(stem.filename().string()));
        return 0;
    }
};

struct SweepCommand {
    std::string input;
    std::optional<std::string> manifest;
    std::string ranking;
    std::string classifier = "knn";
    std::string setting = "vertical";
    double split_fraction = 0.7;
    std::uint64_t seed = 0;
    std::string out;
    std::string precision = "6";
    ClassifierFlags flags;

    int run(std::size_t threads) const
    {
        const Precision digits = parse_precision(precision);
        if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
            throw UsageError("--split-fraction must lie strictly between 0 and 1");
        }
        ClassifierSpec spec;
        spec.kind = parse_classifier_kind(classifier);
        flags.apply(spec);
        spec.validate();
        const Setting mode = parse_setting(setting);
        const std::vector<ChannelId> order = read_ranking_order(ranking);
        const TrialTensor tensor = load_input(input, manifest);

        ExperimentReport report;
        report.classifier = spec.kind;
        report.setting = mode;
        report.ranking = order;
        if (mode == Setting::vertical) {
            const TrainTestSplit parts = split(form_vertical(tensor), split_fraction, seed);
            report.sweep = sweep(order, parts.train, parts.test, spec, threads);
            report.selected = static_cast<double>(report.sweep->best_n);
            report.ca = report.sweep->best_accuracy;
            report.baseline_ca = report.sweep->baseline_accuracy;
        } else {
            const std::vector<std::size_t> trial_ids = tensor.paired_trial_indices();
            report.trials.resize(trial_ids.size());
            parallel_for(trial_ids.size(), threads, [&](std::size_t t) {
                const TrainTestSplit parts = split(form_horizontal(tensor, trial_ids[t]), split_fraction,
                                                   trial_split_seed(seed, trial_ids[t]));
                report.trials[t] = {trial_ids[t], order, channelrank::sweep(order, parts.train, parts.test, spec)};
            });
            for (const TrialOutcome& outcome : report.trials) {
                report.selected += static_cast<double>(outcome.sweep.best_n);
                report.ca += outcome.sweep.best_accuracy;
                report.baseline_ca += outcome.sweep.baseline_accuracy;
            }
            const double count = static_cast<double>(trial_ids.size());
            report.selected /= count;
            report.ca /= count;
            report.baseline_ca /= count;
        }
        finalize_report(report);
        create_parent(out);
        write_curve_csv(out, report, digits);
        std::cout << "selected=" << format_number(report.selected, digits)
                  << " ca=" << format_number(report.ca, digits)
                  << " baseline_ca=" << format_number(report.baseline_ca, digits)
                  << " rho=" << format_number(report.rho, digits) << '\n';
        return 0;
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Channel ranking, aggregation and top-n sweeps for trial-structured datasets"};
    app.require_subcommand(1);

    RankCommand rank_cmd;
    auto* rank_app = app.add_subcommand("rank", "Rank channels and write the ranking JSON");
    rank_app->add_option("--method", rank_cmd.method, "relief, mrmr or laplacian")
        ->required()
        ->check(CLI::IsMember({"relief", "mrmr", "laplacian", "ls"}));
    rank_app->add_option("--setting", rank_cmd.setting, "vertical or horizontal")
        ->check(CLI::IsMember({"vertical", "horizontal"}));
    rank_app->add_option("--input", rank_cmd.input, "Dataset CSV")->required();
    rank_app->add_option("--manifest", rank_cmd.manifest, "Manifest JSON (default: input with .json)");
    rank_app->add_option("--out", rank_cmd.out, "Output JSON")->required();
    rank_app->add_option("--seed", rank_cmd.seed, "Seed for randomized ranker options");
    rank_app->add_option("--threshold", rank_cmd.threshold, "Relief: also list channels with weight above this");
    rank_cmd.ranker.attach(*rank_app);

    ExperimentCommand exp_cmd;
    auto* exp_app = app.add_subcommand("experiment", "Run a (method, setting, classifier) grid from a JSON config");
    exp_app->add_option("--config", exp_cmd.config_path, "Config JSON")->required();
    exp_app->add_option("--out", exp_cmd.out, "Output directory (overrides output_dir)");
    exp_app->add_option("--seed", exp_cmd.seed, "Run seed (overrides seed)");
    exp_app->add_option("--precision", exp_cmd.precision, "6 significant digits or full")
        ->check(CLI::IsMember({"6", "full"}));
    exp_app->add_option("--methods", exp_cmd.methods, "Override methods");
    exp_app->add_option("--setting", exp_cmd.setting, "horizontal, vertical or both")
        ->check(CLI::IsMember({"horizontal", "vertical", "both"}));
    exp_app->add_option("--classifiers", exp_cmd.classifiers, "Override classifiers");
    exp_app->add_option("--split-fraction", exp_cmd.split_fraction, "Training fraction");
    exp_app->add_option("--horizontal-mode", exp_cmd.horizontal_mode, "shared_aggregate or per_trial");
    exp_cmd.ranker.attach(*exp_app);
    exp_cmd.classifier.attach(*exp_app);

    SynthCommand synth_cmd;
    auto* synth_app = app.add_subcommand("synth", "Write a synthetic dataset with planted channels");
    synth_app->add_option("--channels", synth_cmd.spec.channel_count, "Channel count");
    synth_app->add_option("--trials", synth_cmd.spec.trials_per_class, "Trials per class");
    synth_app->add_option("--samples", synth_cmd.spec.samples_per_trial, "Samples per trial");
    synth_app->add_option("--classes", synth_cmd.spec.class_count, "Class count");
    synth_app->add_option("--informative", synth_cmd.spec.informative_channels, "Informative channel ids");
    synth_app->add_option("--effect", synth_cmd.spec.effect_size, "Class-mean separation in noise sigmas");
    synth_app->add_option("--redundant", synth_cmd.redundant, "Redundant copies as source:copy");
    synth_app->add_option("--noise-sigma", synth_cmd.spec.noise_sigma, "Noise standard deviation");
    synth_app->add_option("--seed", synth_cmd.seed, "Generator seed");
    synth_app->add_option("--out", synth_cmd.out, "Output stem; writes <stem>.csv and <stem>.json")->required();
    synth_app->add_option("--name", synth_cmd.name, "Dataset name in the manifest");

    SweepCommand sweep_cmd;
    auto* sweep_app = app.add_subcommand("sweep", "Top-n sweep of an existing ranking");
    sweep_app->add_option("--input", sweep_cmd.input, "Dataset CSV")->required();
    sweep_app->add_option("--manifest", sweep_cmd.manifest, "Manifest JSON (default: input with .json)");
    sweep_app->add_option("--ranking", sweep_cmd.ranking, "Ranking JSON from `rank`")->required();
    sweep_app->add_option("--classifier", sweep_cmd.classifier, "knn, lda or tree")
        ->check(CLI::IsMember({"knn", "lda", "tree", "dt"}));
    sweep_app->add_option("--setting", sweep_cmd.setting, "vertical or horizontal")
        ->check(CLI::IsMember({"vertical", "horizontal"}));
    sweep_app->add_option("--split-fraction", sweep_cmd.split_fraction, "Training fraction");
    sweep_app->add_option("--seed", sweep_cmd.seed, "Split seed");
    sweep_app->add_option("--out", sweep_cmd.out, "Curve CSV")->required();
    sweep_app->add_option("--precision", sweep_cmd.precision, "6 significant digits or full")
        ->check(CLI::IsMember({"6", "full"}));
    sweep_cmd.flags.attach(*sweep_app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::size_t threads = threads_from_env();
        if (*rank_app) return rank_cmd.run(threads);
        if (*exp_app) return exp_cmd.run(threads);
        if (*synth_app) return synth_cmd.run();
        if (*sweep_app) return sweep_cmd.run(threads);
    } catch (const UsageError& e) {
        std::cerr << "channelrank: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "channelrank: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
