#pragma once

#include "channelrank/aggregation.hpp"
#include "channelrank/classifiers.hpp"
#include "channelrank/dataset.hpp"
#include "channelrank/parallel.hpp"
#include "channelrank/random.hpp"
#include "channelrank/rankers.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace channelrank {

struct SweepPoint {
    std::size_t n = 0;
    double accuracy = 0.0;
};

/// Accuracy of every ranking prefix plus the all-channel baseline.
struct SweepResult {
    std::vector<SweepPoint> per_n;
    std::size_t best_n = 0;
    double best_accuracy = 0.0;
    double baseline_accuracy = 0.0;
};

/// Accuracy per selected channel, in percent per channel.
inline double rho(double ca_percent, double n_features)
{
    if (!(n_features > 0.0)) {
        throw Error("rho needs a positive feature count, got " + std::to_string(n_features));
    }
    return ca_percent / n_features;
}

namespace detail {

inline void check_sweep_inputs(std::span<const ChannelId> ranking, const LabeledMatrix& train,
                               const LabeledMatrix& test)
{
    if (ranking.empty()) {
        throw Error("sweep needs a non-empty ranking");
    }
    if (train.channel_ids() != test.channel_ids()) {
        throw Error("sweep: train and test partitions carry different channels");
    }
    std::set<ChannelId> seen;
    for (ChannelId id : ranking) {
        if (!seen.insert(id).second) {
            throw Error("sweep: channel " + std::to_string(id) + " appears twice in the ranking");
        }
        if (!train.column_of(id)) {
            throw Error("sweep: ranked channel " + std::to_string(id) + " is not in the dataset");
        }
    }
}

inline std::size_t count_matches(std::span<const Label> predicted, std::span<const Label> truth)
{
    std::size_t matches = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        matches += predicted[i] == truth[i] ? 1 : 0;
    }
    return matches;
}

// kNN over every prefix at once: the distance to each training row grows by
// one squared difference per added channel, in ranking order, which is the
// order a fresh fit on the prefix would sum in.
inline std::vector<std::size_t> knn_prefix_matches(const LabeledMatrix& train, const LabeledMatrix& test,
                                                   const ClassifierSpec& spec, std::size_t threads)
{
    const std::size_t prefixes = train.channels();
    const ColumnStore store(train.features());
    const std::vector<Label> classes = train.classes();
    constexpr std::size_t block = 32;
    const std::size_t blocks = (test.rows() + block - 1) / block;
    std::vector<std::vector<std::size_t>> per_block(blocks, std::vector<std::size_t>(prefixes, 0));
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t first = b * block;
        const std::size_t last = std::min(test.rows(), first + block);
        std::vector<std::vector<double>> dist(last - first, std::vector<double>(train.rows(), 0.0));
        for (std::size_t n = 0; n < prefixes; ++n) {
            const auto column = store.column(n);
            for (std::size_t r = first; r < last; ++r) {
                accumulate_squared_diff(column, test.features()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n)),
                                        dist[r - first]);
                const Label guess = knn_vote(dist[r - first], train.labels(), classes, spec.knn_k);
                per_block[b][n] += guess == test.labels()[r] ? 1 : 0;
            }
        }
    });
    std::vector<std::size_t> matches(prefixes, 0);
    for (const auto& counts : per_block) {
        for (std::size_t n = 0; n < prefixes; ++n) {
            matches[n] += counts[n];
        }
    }
    return matches;
}

// LDA statistics of a prefix are the leading block of the full statistics.
inline std::vector<std::size_t> lda_prefix_matches(const LabeledMatrix& train, const LabeledMatrix& test,
                                                   const ClassifierSpec& spec, std::size_t threads)
{
    const LdaStatistics stats = lda_statistics(train);
    for (std::size_t g = 0; g < stats.classes.size(); ++g) {
        if (stats.counts[g] < 2) {
            throw Error("lda needs at least two rows per class; class " + std::to_string(stats.classes[g]) +
                        " has " + std::to_string(stats.counts[g]));
        }
    }
    std::vector<std::size_t> matches(train.channels(), 0);
    parallel_for(train.channels(), threads, [&](std::size_t i) {
        try {
            const LdaModel model = lda_from_statistics(stats, i + 1, spec.lda_ridge);
            std::size_t hits = 0;
            for (std::size_t r = 0; r < test.rows(); ++r) {
                hits += lda_decide(model, test.features(), static_cast<Eigen::Index>(r)) == test.labels()[r] ? 1 : 0;
            }
            matches[i] = hits;
        } catch (const Error& e) {
            throw Error("top-" + std::to_string(i + 1) + ": " + e.what());
        }
    });
    return matches;
}

// Column sort orders do not depend on which other columns are present.
inline std::vector<std::size_t> tree_prefix_matches(const LabeledMatrix& train, const LabeledMatrix& test,
                                                    const ClassifierSpec& spec, std::size_t threads)
{
    const PresortedColumns sorted = presort_columns(train.features());
    const std::vector<std::size_t> codes = train.class_codes();
    const std::vector<Label> classes = train.classes();
    std::vector<std::size_t> matches(train.channels(), 0);
    parallel_for(train.channels(), threads, [&](std::size_t i) {
        PresortedColumns prefix(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(i + 1));
        const std::span<const ChannelId> ids(train.channel_ids().data(), i + 1);
        const TreeModel model = fit_tree(train.features(), codes, classes, ids, std::move(prefix), spec);
        std::size_t hits = 0;
        for (std::size_t r = 0; r < test.rows(); ++r) {
            hits += tree_decide(model, test.features(), static_cast<Eigen::Index>(r)) == test.labels()[r] ? 1 : 0;
        }
        matches[i] = hits;
    });
    return matches;
}

// All channels, ranked ones first, so a complete ranking's last prefix is the baseline projection.
inline std::vector<ChannelId> baseline_order(std::span<const ChannelId> ranking, const LabeledMatrix& train)
{
    std::vector<ChannelId> order(ranking.begin(), ranking.end());
    const std::set<ChannelId> ranked(ranking.begin(), ranking.end());
    for (ChannelId id : train.channel_ids()) {
        if (!ranked.contains(id)) {
            order.push_back(id);
        }
    }
    return order;
}

inline double baseline_accuracy(std::span<const ChannelId> ranking, const LabeledMatrix& train,
                                const LabeledMatrix& test, const ClassifierSpec& spec, std::size_t threads)
{
    const std::vector<ChannelId> order = baseline_order(ranking, train);
    const LabeledMatrix all_test = project_channels(test, order);
    const ClassifierModel model = fit(spec, project_channels(train, order));
    return accuracy(predict(model, all_test, threads), all_test.labels());
}

} // namespace detail

/**
 * Fits and scores the classifier on every prefix ranking[0..n) and on all
 * channels. The best n is the smallest one reaching the maximum accuracy.
 * The all-channel baseline lists the ranked channels first.
 */
inline SweepResult sweep(std::span<const ChannelId> ranking, const LabeledMatrix& train, const LabeledMatrix& test,
                         const ClassifierSpec& spec, std::size_t threads = 1)
{
    spec.validate();
    detail::check_sweep_inputs(ranking, train, test);
    require_supervised(train, "sweep");
    if (spec.kind == ClassifierKind::knn && spec.knn_k > train.rows()) {
        throw Error("knn_k = " + std::to_string(spec.knn_k) + " exceeds the " + std::to_string(train.rows()) +
                    " training rows");
    }

    const LabeledMatrix ranked_train = project_channels(train, ranking);
    const LabeledMatrix ranked_test = project_channels(test, ranking);
    std::vector<std::size_t> matches;
    switch (spec.kind) {
    case ClassifierKind::knn: matches = detail::knn_prefix_matches(ranked_train, ranked_test, spec, threads); break;
    case ClassifierKind::lda: matches = detail::lda_prefix_matches(ranked_train, ranked_test, spec, threads); break;
    case ClassifierKind::tree: matches = detail::tree_prefix_matches(ranked_train, ranked_test, spec, threads); break;
    }

    SweepResult result;
    const double total = static_cast<double>(test.rows());
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const double acc = 100.0 * static_cast<double>(matches[i]) / total;
        result.per_n.push_back({i + 1, acc});
        if (i == 0 || acc > result.best_accuracy) {
            result.best_accuracy = acc;
            result.best_n = i + 1;
        }
    }
    result.baseline_accuracy = ranking.size() == train.channels()
                                   ? result.per_n.back().accuracy
                                   : detail::baseline_accuracy(ranking, train, test, spec, threads);
    return result;
}

/// Reference sweep that refits from scratch on every projected prefix.
inline SweepResult sweep_by_refitting(std::span<const ChannelId> ranking, const LabeledMatrix& train,
                                      const LabeledMatrix& test, const ClassifierSpec& spec)
{
    detail::check_sweep_inputs(ranking, train, test);
    SweepResult result;
    for (std::size_t n = 1; n <= ranking.size(); ++n) {
        const auto prefix = ranking.first(n);
        const ClassifierModel model = fit(spec, project_channels(train, prefix));
        const double acc = accuracy(predict(model, project_channels(test, prefix)), test.labels());
        result.per_n.push_back({n, acc});
        if (n == 1 || acc > result.best_accuracy) {
            result.best_accuracy = acc;
            result.best_n = n;
        }
    }
    result.baseline_accuracy = detail::baseline_accuracy(ranking, train, test, spec, 1);
    return result;
}

// ---------------------------------------------------------------------------
// Experiment drivers

enum class Setting { horizontal, vertical };

inline std::string_view to_string(Setting setting)
{
    return setting == Setting::horizontal ? "horizontal" : "vertical";
}

inline Setting parse_setting(std::string_view name)
{
    if (name == "horizontal") return Setting::horizontal;
    if (name == "vertical") return Setting::vertical;
    throw UsageError("unknown setting '" + std::string(name) + "' (expected horizontal or vertical)");
}

/// Which ranking each horizontal trial is swept with.
enum class HorizontalMode {
    shared_aggregate, ///< the fused ranking, the same for every trial
    per_trial,        ///< each trial's own ranking
};

struct ExperimentOptions {
    std::string dataset_name;
    double split_fraction = 0.7;
    std::uint64_t seed = 0;
    HorizontalMode horizontal_mode = HorizontalMode::shared_aggregate;
    std::size_t threads = 1;
};

struct TrialOutcome {
    std::size_t trial_index = 0;
    std::vector<ChannelId> ranking;
    SweepResult sweep;
};

/**
 * One row of a results table. For the horizontal setting `selected`, `ca`
 * and `baseline_ca` are means over the per-trial outcomes; for the vertical
 * setting they come from the single sweep.
 */
struct ExperimentReport {
    std::string dataset;
    RankMethod method = RankMethod::relief;
    ClassifierKind classifier = ClassifierKind::knn;
    Setting setting = Setting::vertical;
    double selected = 0.0;
    double ca = 0.0;
    double baseline_ca = 0.0;
    double rho = 0.0;
    bool single_feature = false; ///< rho from a single channel, usually not a meaningful selection
    std::vector<ChannelId> ranking;
    std::vector<double> ranking_scores;                 ///< vertical only
    std::vector<std::vector<ChannelId>> rank_matrix;    ///< horizontal only, one column per trial
    std::vector<std::size_t> rank_matrix_trials;
    std::optional<AggregatedRanking> aggregation;
    std::optional<SweepResult> sweep;
    std::vector<TrialOutcome> trials;
    std::vector<std::string> warnings;
};

inline void finalize_report(ExperimentReport& report)
{
    report.rho = rho(report.ca, report.selected);
    report.single_feature = report.selected == 1.0;
}

/// Per-classifier warnings (for instance an even k on two classes) and ranker warnings.
inline std::vector<std::string> collect_warnings(const ClassifierSpec& spec, std::size_t classes,
                                                 const std::vector<std::string>& ranker)
{
    std::vector<std::string> out = ranker;
    for (auto& w : spec.warnings(classes)) {
        out.push_back(std::move(w));
    }
    return out;
}

/// Vertical setting for several classifiers sharing one split and one ranking.
inline std::vector<ExperimentReport> run_vertical_experiments(const TrialTensor& tensor, const RankerConfig& ranker,
                                                              std::span<const ClassifierSpec> specs,
                                                              const ExperimentOptions& options)
{
    const LabeledMatrix data = form_vertical(tensor);
    const TrainTestSplit parts = split(data, options.split_fraction, options.seed);
    // Only the training partition is visible to the ranker.
    const RankingList ranking = rank(parts.train, ranker, options.threads);

    std::vector<ExperimentReport> reports;
    for (const ClassifierSpec& spec : specs) {
        ExperimentReport report;
        report.dataset = options.dataset_name;
        report.method = ranker.method;
        report.classifier = spec.kind;
        report.setting = Setting::vertical;
        report.ranking = ranking.order;
        report.ranking_scores = ranking.scores;
        report.sweep = sweep(ranking.order, parts.train, parts.test, spec, options.threads);
        report.selected = static_cast<double>(report.sweep->best_n);
        report.ca = report.sweep->best_accuracy;
        report.baseline_ca = report.sweep->baseline_accuracy;
        report.warnings = collect_warnings(spec, tensor.class_count(), ranking.warnings);
        finalize_report(report);
        reports.push_back(std::move(report));
    }
    return reports;
}

inline ExperimentReport run_vertical_experiment(const TrialTensor& tensor, const RankerConfig& ranker,
                                                const ClassifierSpec& spec, const ExperimentOptions& options)
{
    return run_vertical_experiments(tensor, ranker, std::span(&spec, 1), options).front();
}

/// Split seed of one horizontal trial. Every trial uses the run seed, so
/// paired trials of equal shape are split at the same row positions.
inline std::uint64_t trial_split_seed(std::uint64_t seed, std::size_t /*trial_index*/)
{
    return seed;
}

/**
 * Horizontal setting for several classifiers.
 *
 * The rank matrix is built from whole trials; the positional mode and
 * first-occurrence deduplication give the fused ranking. Each trial is then
 * split on its own and swept, and the report averages the per-trial bests.
 */
inline std::vector<ExperimentReport> run_horizontal_experiments(const TrialTensor& tensor, const RankerConfig& ranker,
                                                                std::span<const ClassifierSpec> specs,
                                                                const ExperimentOptions& options)
{
    std::vector<RankingList> per_trial_rankings;
    const RankMatrix ranks = collect_rank_matrix(tensor, ranker, options.threads, &per_trial_rankings);
    const AggregatedRanking fused = aggregate(ranks);
    const std::vector<std::size_t>& trial_ids = ranks.trial_ids();

    std::vector<std::vector<TrialOutcome>> outcomes(specs.size(), std::vector<TrialOutcome>(trial_ids.size()));
    parallel_for(trial_ids.size(), options.threads, [&](std::size_t t) {
        const std::size_t trial = trial_ids[t];
        try {
            const TrainTestSplit parts = split(form_horizontal(tensor, trial), options.split_fraction,
                                               trial_split_seed(options.seed, trial));
            const std::vector<ChannelId>& ranking = options.horizontal_mode == HorizontalMode::shared_aggregate
                                                        ? fused.final
                                                        : per_trial_rankings[t].order;
            for (std::size_t s = 0; s < specs.size(); ++s) {
                outcomes[s][t] = {trial, ranking, sweep(ranking, parts.train, parts.test, specs[s])};
            }
        } catch (const UsageError&) {
            throw;
        } catch (const Error& e) {
            throw Error("trial " + std::to_string(trial) + ": " + e.what());
        }
    });

    std::vector<std::string> ranker_warnings;
    for (std::size_t t = 0; t < per_trial_rankings.size(); ++t) {
        for (const auto& w : per_trial_rankings[t].warnings) {
            ranker_warnings.push_back("trial " + std::to_string(trial_ids[t]) + ": " + w);
        }
    }

    std::vector<ExperimentReport> reports;
    const double count = static_cast<double>(trial_ids.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        ExperimentReport report;
        report.dataset = options.dataset_name;
        report.method = ranker.method;
        report.classifier = specs[s].kind;
        report.setting = Setting::horizontal;
        report.ranking = fused.final;
        report.aggregation = fused;
        report.rank_matrix = ranks.columns();
        report.rank_matrix_trials = trial_ids;
        double selected = 0.0;
        double ca = 0.0;
        double baseline = 0.0;
        for (const TrialOutcome& outcome : outcomes[s]) {
            selected += static_cast<double>(outcome.sweep.best_n);
            ca += outcome.sweep.best_accuracy;
            baseline += outcome.sweep.baseline_accuracy;
        }
        report.selected = selected / count;
        report.ca = ca / count;
        report.baseline_ca = baseline / count;
        report.trials = std::move(outcomes[s]);
        report.warnings = collect_warnings(specs[s], tensor.class_count(), ranker_warnings);
        finalize_report(report);
        reports.push_back(std::move(report));
    }
    return reports;
}

inline ExperimentReport run_horizontal_experiment(const TrialTensor& tensor, const RankerConfig& ranker,
                                                  const ClassifierSpec& spec, const ExperimentOptions& options)
{
    return run_horizontal_experiments(tensor, ranker, std::span(&spec, 1), options).front();
}

} // namespace channelrank
