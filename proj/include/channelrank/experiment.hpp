#pragma once

#include "channelrank/dataset_io.hpp"
#include "channelrank/evaluation.hpp"
#include "channelrank/report_io.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace channelrank {

/// An experiment grid: one dataset, every (method, setting, classifier) combination.
struct RunConfig {
    std::string name = "dataset";
    std::optional<std::filesystem::path> data_csv;
    std::optional<std::filesystem::path> data_manifest;
    std::optional<SynthSpec> synth;
    std::optional<std::uint64_t> synth_seed; ///< unset = the run seed
    std::vector<RankMethod> methods;
    std::vector<Setting> settings;
    std::vector<ClassifierSpec> classifiers;
    double split_fraction = 0.7;
    std::uint64_t seed = 0;
    RankerConfig ranker;
    bool relief_seed_set = false;
    bool laplacian_seed_set = false;
    HorizontalMode horizontal_mode = HorizontalMode::shared_aggregate;
    std::filesystem::path output_dir = "results";

    void validate() const
    {
        if (methods.empty()) throw UsageError("config needs at least one method");
        if (settings.empty()) throw UsageError("config needs at least one setting");
        if (classifiers.empty()) throw UsageError("config needs at least one classifier");
        if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
            throw UsageError("split_fraction must lie strictly between 0 and 1");
        }
        if (synth.has_value() == data_csv.has_value()) {
            throw UsageError("config needs exactly one of \"dataset\" and \"synth\"");
        }
        if (synth) synth->validate();
        for (const ClassifierSpec& spec : classifiers) spec.validate();
        ranker.mrmr.scheme.validate();
        if (ranker.relief.iterations && *ranker.relief.iterations == 0) {
            throw UsageError("relief iterations must be positive");
        }
        if (ranker.laplacian.k_neighbors == 0) throw UsageError("laplacian k_neighbors must be positive");
        if (ranker.laplacian.kernel_width && !(*ranker.laplacian.kernel_width > 0.0)) {
            throw UsageError("laplacian kernel_width must be positive");
        }
    }

    /// Ranker parameters for one method; seeds not given explicitly follow the run seed.
    RankerConfig ranker_for(RankMethod method) const
    {
        RankerConfig out = ranker;
        out.method = method;
        if (!relief_seed_set) out.relief.seed = seed;
        if (!laplacian_seed_set) out.laplacian.seed = seed;
        return out;
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                                const std::string& where)
{
    if (!object.is_object()) {
        throw UsageError(where + " must be a JSON object");
    }
    for (const auto& item : object.items()) {
        if (std::ranges::find(allowed, std::string_view(item.key())) == allowed.end()) {
            throw UsageError("unknown key \"" + item.key() + "\" in " + where);
        }
    }
}

inline std::vector<std::string> string_list(const nlohmann::json& value)
{
    if (value.is_string()) return {value.get<std::string>()};
    return value.get<std::vector<std::string>>();
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& text)
{
    const std::filesystem::path p(text);
    return p.is_absolute() ? p : base / p;
}

} // namespace detail

inline std::vector<Setting> parse_settings(std::string_view name)
{
    if (name == "both") return {Setting::horizontal, Setting::vertical};
    return {parse_setting(name)};
}

inline HorizontalMode parse_horizontal_mode(std::string_view name)
{
    if (name == "shared_aggregate" || name == "shared") return HorizontalMode::shared_aggregate;
    if (name == "per_trial") return HorizontalMode::per_trial;
    throw UsageError("unknown horizontal_mode '" + std::string(name) + "' (expected shared_aggregate or per_trial)");
}

inline NeighborMode parse_neighbor_mode(std::string_view name)
{
    if (name == "nearest") return NeighborMode::nearest;
    if (name == "random") return NeighborMode::random;
    throw UsageError("unknown neighbor_mode '" + std::string(name) + "'");
}

inline ProbeOrder parse_probe_order(std::string_view name)
{
    if (name == "cycled") return ProbeOrder::cycled;
    if (name == "random") return ProbeOrder::random;
    throw UsageError("unknown probe_order '" + std::string(name) + "'");
}

/// Parses `"s:c"` into a (source, copy) pair.
inline std::pair<ChannelId, ChannelId> parse_redundant_pair(std::string_view text)
{
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw UsageError("redundant pair '" + std::string(text) + "' must look like source:copy");
    }
    const auto number = [&](std::string_view part) {
        ChannelId value = 0;
        const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (ec != std::errc{} || end != part.data() + part.size() || part.empty()) {
            throw UsageError("redundant pair '" + std::string(text) + "' is not two channel indices");
        }
        return value;
    };
    return {number(text.substr(0, colon)), number(text.substr(colon + 1))};
}

inline SynthSpec parse_synth_spec(const nlohmann::json& doc)
{
    detail::reject_unknown_keys(doc,
                                {"channels", "trials", "samples", "classes", "informative", "effect", "redundant",
                                 "noise_sigma", "seed"},
                                "synth");
    SynthSpec spec;
    spec.channel_count = doc.value("channels", spec.channel_count);
    spec.trials_per_class = doc.value("trials", spec.trials_per_class);
    spec.samples_per_trial = doc.value("samples", spec.samples_per_trial);
    spec.class_count = doc.value("classes", spec.class_count);
    spec.informative_channels = doc.value("informative", spec.informative_channels);
    spec.effect_size = doc.value("effect", spec.effect_size);
    spec.noise_sigma = doc.value("noise_sigma", spec.noise_sigma);
    if (doc.contains("redundant")) {
        for (const auto& pair : doc.at("redundant")) {
            if (pair.is_string()) {
                spec.redundant_pairs.push_back(parse_redundant_pair(pair.get<std::string>()));
            } else {
                const auto values = pair.get<std::vector<ChannelId>>();
                if (values.size() != 2) throw UsageError("redundant pairs have two entries");
                spec.redundant_pairs.emplace_back(values[0], values[1]);
            }
        }
    }
    return spec;
}

/// Relative paths in the document resolve against `base_dir`.
inline RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir)
{
    RunConfig config;
    try {
        detail::reject_unknown_keys(doc,
                                    {"name", "dataset", "synth", "methods", "setting", "classifiers",
                                     "split_fraction", "seed", "relief", "mrmr", "laplacian", "classifier_params",
                                     "horizontal_mode", "output_dir"},
                                    "config");
        config.name = doc.value("name", config.name);
        if (doc.contains("dataset")) {
            const auto& dataset = doc.at("dataset");
            detail::reject_unknown_keys(dataset, {"csv", "manifest"}, "dataset");
            config.data_csv = detail::resolve_path(base_dir, dataset.at("csv").get<std::string>());
            if (dataset.contains("manifest")) {
                config.data_manifest = detail::resolve_path(base_dir, dataset.at("manifest").get<std::string>());
            }
        }
        if (doc.contains("synth")) {
            config.synth = parse_synth_spec(doc.at("synth"));
            if (doc.at("synth").contains("seed")) {
                config.synth_seed = doc.at("synth").at("seed").get<std::uint64_t>();
            }
        }
        for (const auto& m : detail::string_list(doc.value("methods", nlohmann::json::array({"relief"})))) {
            config.methods.push_back(parse_rank_method(m));
        }
        config.settings = parse_settings(doc.value("setting", std::string("both")));
        config.split_fraction = doc.value("split_fraction", config.split_fraction);
        config.seed = doc.value("seed", config.seed);
        config.horizontal_mode = parse_horizontal_mode(doc.value("horizontal_mode", std::string("shared_aggregate")));
        if (doc.contains("output_dir")) {
            config.output_dir = detail::resolve_path(base_dir, doc.at("output_dir").get<std::string>());
        }

        if (doc.contains("relief")) {
            const auto& r = doc.at("relief");
            detail::reject_unknown_keys(r, {"iterations", "neighbor_mode", "probe_order", "seed"},
                                        "relief");
            if (r.contains("iterations") && !(r.at("iterations").is_string() && r.at("iterations") == "all")) {
                config.ranker.relief.iterations = r.at("iterations").get<std::size_t>();
            }
            config.ranker.relief.neighbor_mode = parse_neighbor_mode(r.value("neighbor_mode", std::string("nearest")));
            config.ranker.relief.probe_order = parse_probe_order(r.value("probe_order", std::string("cycled")));
            if (r.contains("seed")) {
                config.ranker.relief.seed = r.at("seed").get<std::uint64_t>();
                config.relief_seed_set = true;
            }
        }
        if (doc.contains("mrmr")) {
            const auto& m = doc.at("mrmr");
            detail::reject_unknown_keys(m, {"bins"}, "mrmr");
            config.ranker.mrmr.scheme = DiscretizationScheme::from_bins(m.value("bins", std::size_t{3}));
        }
        if (doc.contains("laplacian")) {
            const auto& l = doc.at("laplacian");
            detail::reject_unknown_keys(l, {"k_neighbors", "kernel_width", "subsample_cap", "seed"}, "laplacian");
            config.ranker.laplacian.k_neighbors = l.value("k_neighbors", config.ranker.laplacian.k_neighbors);
            if (l.contains("kernel_width") && !(l.at("kernel_width").is_string() && l.at("kernel_width") == "auto")) {
                config.ranker.laplacian.kernel_width = l.at("kernel_width").get<double>();
            }
            config.ranker.laplacian.subsample_cap = l.value("subsample_cap", config.ranker.laplacian.subsample_cap);
            if (l.contains("seed")) {
                config.ranker.laplacian.seed = l.at("seed").get<std::uint64_t>();
                config.laplacian_seed_set = true;
            }
        }

        ClassifierSpec base;
        if (doc.contains("classifier_params")) {
            const auto& c = doc.at("classifier_params");
            detail::reject_unknown_keys(c, {"knn_k", "tree_max_depth", "tree_min_leaf", "lda_ridge"},
                                        "classifier_params");
            base.knn_k = c.value("knn_k", base.knn_k);
            base.tree_max_depth = c.value("tree_max_depth", base.tree_max_depth);
            base.tree_min_leaf = c.value("tree_min_leaf", base.tree_min_leaf);
            base.lda_ridge = c.value("lda_ridge", base.lda_ridge);
        }
        for (const auto& name : detail::string_list(doc.value("classifiers", nlohmann::json::array({"knn"})))) {
            ClassifierSpec spec = base;
            spec.kind = parse_classifier_kind(name);
            config.classifiers.push_back(spec);
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return config;
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

inline TrialTensor load_run_dataset(const RunConfig& config)
{
    if (config.synth) {
        return generate_synthetic(*config.synth, config.synth_seed.value_or(config.seed));
    }
    if (config.data_manifest) {
        return load_dataset(*config.data_csv, *config.data_manifest);
    }
    return load_dataset(*config.data_csv);
}

struct GridResult {
    std::vector<ReportRow> rows;
    std::size_t failures = 0;
};

namespace detail {

inline std::vector<ExperimentReport> run_setting(const TrialTensor& tensor, const RankerConfig& ranker,
                                                 Setting setting, std::span<const ClassifierSpec> specs,
                                                 const ExperimentOptions& options)
{
    return setting == Setting::vertical ? run_vertical_experiments(tensor, ranker, specs, options)
                                        : run_horizontal_experiments(tensor, ranker, specs, options);
}

inline std::string combo_stem(RankMethod method, Setting setting)
{
    return std::string(to_string(method)) + "_" + std::string(to_string(setting));
}

} // namespace detail

/**
 * Runs every combination in config order (method, then setting, then
 * classifier). A failing combination becomes an error row; the others
 * still run.
 */
inline GridResult run_experiment_grid(const RunConfig& config, const TrialTensor& tensor, std::size_t threads)
{
    config.validate();
    ExperimentOptions options;
    options.dataset_name = config.name;
    options.split_fraction = config.split_fraction;
    options.seed = config.seed;
    options.horizontal_mode = config.horizontal_mode;
    options.threads = threads;

    GridResult result;
    for (RankMethod method : config.methods) {
        const RankerConfig ranker = config.ranker_for(method);
        for (Setting setting : config.settings) {
            std::vector<ReportRow> rows;
            for (const ClassifierSpec& spec : config.classifiers) {
                rows.push_back({config.name, std::string(to_string(method)), std::string(to_string(setting)),
                                std::string(to_string(spec.kind)), std::nullopt, {}});
            }
            try {
                auto reports = detail::run_setting(tensor, ranker, setting, config.classifiers, options);
                for (std::size_t s = 0; s < reports.size(); ++s) {
                    rows[s].report = std::move(reports[s]);
                }
            } catch (const UsageError&) {
                throw;
            } catch (const Error&) {
                // Isolate which classifiers fail; a ranking failure fails them all.
                for (std::size_t s = 0; s < config.classifiers.size(); ++s) {
                    try {
                        rows[s].report = detail::run_setting(tensor, ranker, setting,
                                                             std::span(&config.classifiers[s], 1), options)
                                             .front();
                    } catch (const UsageError&) {
                        throw;
                    } catch (const Error& e) {
                        rows[s].error = e.what();
                        ++result.failures;
                    }
                }
            }
            for (auto& row : rows) {
                result.rows.push_back(std::move(row));
            }
        }
    }
    return result;
}

/// report.csv, curves/, trials/ (horizontal) and rankings/ under `dir`.
inline void write_grid_outputs(const std::filesystem::path& dir, const RunConfig& config, const GridResult& grid,
                               Precision precision)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir / "curves");
    fs::create_directories(dir / "rankings");
    bool any_horizontal = false;
    for (const ReportRow& row : grid.rows) {
        any_horizontal = any_horizontal || (row.report && row.report->setting == Setting::horizontal);
    }
    if (any_horizontal) {
        fs::create_directories(dir / "trials");
    }
    write_report_csv(dir / "report.csv", grid.rows, precision);

    std::set<std::string> rankings_written;
    for (const ReportRow& row : grid.rows) {
        if (!row.report) {
            continue;
        }
        const ExperimentReport& r = *row.report;
        const std::string stem = detail::combo_stem(r.method, r.setting);
        write_curve_csv(dir / "curves" / (stem + "_" + std::string(to_string(r.classifier)) + ".csv"), r, precision);
        if (r.setting == Setting::horizontal) {
            write_trials_csv(dir / "trials" / (stem + "_" + std::string(to_string(r.classifier)) + ".csv"), r,
                             precision);
        }
        if (!rankings_written.insert(stem).second) {
            continue;
        }
        const RankerConfig ranker = config.ranker_for(r.method);
        if (r.setting == Setting::vertical) {
            RankingList list{r.method, r.ranking, r.ranking_scores, {}};
            write_json(dir / "rankings" / (stem + ".json"), ranking_to_json(list, ranker));
        } else {
            const RankMatrix ranks(r.rank_matrix, r.rank_matrix_trials);
            write_json(dir / "rankings" / (stem + ".json"), aggregation_to_json(ranks, *r.aggregation, ranker));
        }
    }
}

} // namespace channelrank
