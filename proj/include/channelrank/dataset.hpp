#pragma once

#include "channelrank/random.hpp"
#include "channelrank/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace channelrank {

/// One recording segment under a single class condition (samples x channels).
struct Trial {
    Label class_label = 0;
    std::size_t trial_index = 0;
    Matrix data;
};

/**
 * A full trial-structured dataset.
 *
 * Trials are kept sorted by (class label, trial index). Every trial has the
 * same shape and only finite values; at least two classes are present.
 * Equal trial counts per class are only required by the horizontal pairing
 * and are checked there.
 */
class TrialTensor {
public:
    TrialTensor(std::vector<Trial> trials, std::size_t channel_count, std::size_t samples_per_trial)
        : trials_(std::move(trials)), channel_count_(channel_count), samples_per_trial_(samples_per_trial)
    {
        if (channel_count_ == 0 || samples_per_trial_ == 0) {
            throw Error("trial tensor needs at least one channel and one sample per trial");
        }
        std::ranges::sort(trials_, [](const Trial& a, const Trial& b) {
            return std::pair(a.class_label, a.trial_index) < std::pair(b.class_label, b.trial_index);
        });
        std::set<Label> labels;
        for (std::size_t i = 0; i < trials_.size(); ++i) {
            const Trial& trial = trials_[i];
            if (static_cast<std::size_t>(trial.data.rows()) != samples_per_trial_ ||
                static_cast<std::size_t>(trial.data.cols()) != channel_count_) {
                throw Error("trial " + std::to_string(trial.trial_index) + " of class " +
                            std::to_string(trial.class_label) + " has shape " +
                            std::to_string(trial.data.rows()) + "x" + std::to_string(trial.data.cols()) +
                            ", expected " + std::to_string(samples_per_trial_) + "x" +
                            std::to_string(channel_count_));
            }
            if (!trial.data.allFinite()) {
                throw Error("trial " + std::to_string(trial.trial_index) + " of class " +
                            std::to_string(trial.class_label) + " contains non-finite values");
            }
            if (i > 0 && trials_[i - 1].class_label == trial.class_label &&
                trials_[i - 1].trial_index == trial.trial_index) {
                throw Error("duplicate trial index " + std::to_string(trial.trial_index) + " in class " +
                            std::to_string(trial.class_label));
            }
            labels.insert(trial.class_label);
        }
        if (labels.size() < 2) {
            throw Error("trial tensor needs at least two classes");
        }
        class_labels_.assign(labels.begin(), labels.end());
    }

    const std::vector<Trial>& trials() const noexcept { return trials_; }
    std::size_t channel_count() const noexcept { return channel_count_; }
    std::size_t samples_per_trial() const noexcept { return samples_per_trial_; }
    std::size_t class_count() const noexcept { return class_labels_.size(); }

    /// Sorted ascending.
    const std::vector<Label>& class_labels() const noexcept { return class_labels_; }

    /// Trials of one class in trial-index order.
    std::vector<const Trial*> trials_of(Label label) const
    {
        std::vector<const Trial*> out;
        for (const Trial& trial : trials_) {
            if (trial.class_label == label) {
                out.push_back(&trial);
            }
        }
        return out;
    }

    /// Common trial count; throws when classes differ.
    std::size_t trials_per_class() const
    {
        std::optional<std::size_t> common;
        for (Label label : class_labels_) {
            const std::size_t n = trials_of(label).size();
            if (common && *common != n) {
                throw Error("unequal trials per class: class " + std::to_string(label) + " has " +
                            std::to_string(n) + ", expected " + std::to_string(*common));
            }
            common = n;
        }
        return common.value_or(0);
    }

    /// Trial indices usable for horizontal pairing, ascending.
    std::vector<std::size_t> paired_trial_indices() const
    {
        trials_per_class();
        std::vector<std::size_t> indices;
        for (const Trial* trial : trials_of(class_labels_.front())) {
            indices.push_back(trial->trial_index);
        }
        return indices;
    }

private:
    std::vector<Trial> trials_;
    std::size_t channel_count_;
    std::size_t samples_per_trial_;
    std::vector<Label> class_labels_;
};

/// Flat rows x channels matrix with one class label per row.
class LabeledMatrix {
public:
    LabeledMatrix(Matrix features, std::vector<Label> labels, std::vector<ChannelId> channel_ids)
        : features_(std::move(features)), labels_(std::move(labels)), channel_ids_(std::move(channel_ids))
    {
        if (features_.rows() == 0 || features_.cols() == 0) {
            throw Error("labeled matrix must have at least one row and one channel");
        }
        if (labels_.size() != static_cast<std::size_t>(features_.rows())) {
            throw Error("label count " + std::to_string(labels_.size()) + " does not match row count " +
                        std::to_string(features_.rows()));
        }
        if (channel_ids_.size() != static_cast<std::size_t>(features_.cols())) {
            throw Error("channel id count " + std::to_string(channel_ids_.size()) +
                        " does not match column count " + std::to_string(features_.cols()));
        }
        std::vector<ChannelId> sorted = channel_ids_;
        std::ranges::sort(sorted);
        if (std::ranges::adjacent_find(sorted) != sorted.end()) {
            throw Error("channel ids must be distinct");
        }
    }

    const Matrix& features() const noexcept { return features_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::vector<ChannelId>& channel_ids() const noexcept { return channel_ids_; }
    std::size_t rows() const noexcept { return labels_.size(); }
    std::size_t channels() const noexcept { return channel_ids_.size(); }

    /// Distinct labels, ascending.
    std::vector<Label> classes() const
    {
        std::vector<Label> out = labels_;
        std::ranges::sort(out);
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::optional<std::size_t> column_of(ChannelId id) const
    {
        const auto it = std::ranges::find(channel_ids_, id);
        if (it == channel_ids_.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - channel_ids_.begin());
    }

    /// Dense 0..K-1 code per row, following the ascending label order of classes().
    std::vector<std::size_t> class_codes() const
    {
        const std::vector<Label> distinct = classes();
        std::vector<std::size_t> codes(labels_.size());
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            codes[i] = static_cast<std::size_t>(std::ranges::lower_bound(distinct, labels_[i]) - distinct.begin());
        }
        return codes;
    }

private:
    Matrix features_;
    std::vector<Label> labels_;
    std::vector<ChannelId> channel_ids_;
};

inline void require_supervised(const LabeledMatrix& matrix, std::string_view what)
{
    if (matrix.rows() < 2 || matrix.classes().size() < 2) {
        throw Error(std::string(what) + " needs at least two rows and two classes");
    }
}

inline std::vector<ChannelId> identity_channels(std::size_t count)
{
    std::vector<ChannelId> ids(count);
    for (std::size_t c = 0; c < count; ++c) {
        ids[c] = c;
    }
    return ids;
}

/// Trial i of every class stacked in ascending class order.
inline LabeledMatrix form_horizontal(const TrialTensor& tensor, std::size_t trial_index)
{
    tensor.trials_per_class();
    const std::size_t samples = tensor.samples_per_trial();
    Matrix features(static_cast<Eigen::Index>(samples * tensor.class_count()),
                    static_cast<Eigen::Index>(tensor.channel_count()));
    std::vector<Label> labels;
    labels.reserve(samples * tensor.class_count());

    Eigen::Index row = 0;
    for (Label label : tensor.class_labels()) {
        const Trial* match = nullptr;
        for (const Trial* trial : tensor.trials_of(label)) {
            if (trial->trial_index == trial_index) {
                match = trial;
                break;
            }
        }
        if (match == nullptr) {
            throw Error("class " + std::to_string(label) + " has no trial with index " + std::to_string(trial_index));
        }
        features.middleRows(row, static_cast<Eigen::Index>(samples)) = match->data;
        labels.insert(labels.end(), samples, label);
        row += static_cast<Eigen::Index>(samples);
    }
    return {std::move(features), std::move(labels), identity_channels(tensor.channel_count())};
}

/// Every trial stacked, grouped by class, trials in index order.
inline LabeledMatrix form_vertical(const TrialTensor& tensor)
{
    if (tensor.trials().empty()) {
        throw Error("cannot form a vertical dataset from an empty tensor");
    }
    const std::size_t samples = tensor.samples_per_trial();
    Matrix features(static_cast<Eigen::Index>(samples * tensor.trials().size()),
                    static_cast<Eigen::Index>(tensor.channel_count()));
    std::vector<Label> labels;
    labels.reserve(samples * tensor.trials().size());
    Eigen::Index row = 0;
    for (const Trial& trial : tensor.trials()) {
        features.middleRows(row, static_cast<Eigen::Index>(samples)) = trial.data;
        labels.insert(labels.end(), samples, trial.class_label);
        row += static_cast<Eigen::Index>(samples);
    }
    return {std::move(features), std::move(labels), identity_channels(tensor.channel_count())};
}

/// Selects rows in the given order; channel ids are preserved.
inline LabeledMatrix select_rows(const LabeledMatrix& matrix, std::span<const std::size_t> rows)
{
    Matrix features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(matrix.channels()));
    std::vector<Label> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        features.row(static_cast<Eigen::Index>(i)) = matrix.features().row(static_cast<Eigen::Index>(rows[i]));
        labels[i] = matrix.labels()[rows[i]];
    }
    return {std::move(features), std::move(labels), matrix.channel_ids()};
}

struct TrainTestSplit {
    LabeledMatrix train;
    LabeledMatrix test;
};

/// Rows of a class that go to the training side: ceil(fraction * n).
inline std::size_t train_count(double fraction, std::size_t class_rows)
{
    // The epsilon absorbs representation error such as 0.7 * 500 = 350.00000000000006.
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(class_rows) - 1e-9));
}

/**
 * Stratified row split.
 *
 * Each class's rows are shuffled with one seeded generator (classes visited in
 * ascending label order) and the first ceil(fraction * n) go to train. Both
 * outputs keep the input's row order.
 */
inline TrainTestSplit split(const LabeledMatrix& matrix, double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train fraction must lie strictly between 0 and 1");
    }
    Rng rng(seed);
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (Label label : matrix.classes()) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
            if (matrix.labels()[i] == label) {
                rows.push_back(i);
            }
        }
        const std::size_t n_train = train_count(train_fraction, rows.size());
        if (n_train == 0 || n_train >= rows.size()) {
            throw Error("class " + std::to_string(label) + " with " + std::to_string(rows.size()) +
                        " rows cannot be split at fraction " + std::to_string(train_fraction) +
                        " without an empty partition");
        }
        rng.shuffle(rows.begin(), rows.end());
        train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::ranges::sort(train_rows);
    std::ranges::sort(test_rows);
    return {select_rows(matrix, train_rows), select_rows(matrix, test_rows)};
}

/// Column subset/reorder by channel id.
inline LabeledMatrix project_channels(const LabeledMatrix& matrix, std::span<const ChannelId> channels)
{
    if (channels.empty()) {
        throw Error("channel projection needs at least one channel");
    }
    std::vector<std::size_t> columns;
    columns.reserve(channels.size());
    std::set<ChannelId> seen;
    for (ChannelId id : channels) {
        if (!seen.insert(id).second) {
            throw Error("duplicate channel id " + std::to_string(id) + " in projection");
        }
        const auto column = matrix.column_of(id);
        if (!column) {
            throw Error("unknown channel id " + std::to_string(id) + " in projection");
        }
        columns.push_back(*column);
    }
    Matrix features(static_cast<Eigen::Index>(matrix.rows()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        features.col(static_cast<Eigen::Index>(j)) = matrix.features().col(static_cast<Eigen::Index>(columns[j]));
    }
    return {std::move(features), matrix.labels(), std::vector<ChannelId>(channels.begin(), channels.end())};
}

// ---------------------------------------------------------------------------
// Synthetic datasets with planted structure

struct SynthSpec {
    std::size_t samples_per_trial = 500;
    std::size_t channel_count = 16;
    std::size_t trials_per_class = 5;
    std::size_t class_count = 2;
    std::vector<ChannelId> informative_channels;
    double effect_size = 0.0;
    std::vector<std::pair<ChannelId, ChannelId>> redundant_pairs; // (source, copy)
    double noise_sigma = 1.0;

    void validate() const
    {
        if (samples_per_trial == 0 || channel_count == 0 || trials_per_class == 0) {
            throw UsageError("synthetic spec needs positive samples, channels and trials");
        }
        if (class_count < 2) {
            throw UsageError("synthetic spec needs at least two classes");
        }
        if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
            throw UsageError("noise sigma must be positive");
        }
        if (!(effect_size >= 0.0) || !std::isfinite(effect_size)) {
            throw UsageError("effect size must be a non-negative real");
        }
        std::set<ChannelId> informative;
        for (ChannelId c : informative_channels) {
            if (c >= channel_count) {
                throw UsageError("informative channel " + std::to_string(c) + " out of range");
            }
            informative.insert(c);
        }
        std::set<ChannelId> copies;
        for (const auto& [source, copy] : redundant_pairs) {
            if (source >= channel_count || copy >= channel_count) {
                throw UsageError("redundant pair (" + std::to_string(source) + ", " + std::to_string(copy) +
                                 ") out of range");
            }
            if (source == copy) {
                throw UsageError("redundant copy cannot equal its source");
            }
            if (informative.contains(copy)) {
                throw UsageError("redundant copy " + std::to_string(copy) + " is also an informative channel");
            }
            if (!copies.insert(copy).second) {
                throw UsageError("channel " + std::to_string(copy) + " is the copy in more than one pair");
            }
        }
        for (const auto& pair : redundant_pairs) {
            if (copies.contains(pair.first)) {
                throw UsageError("redundant source " + std::to_string(pair.first) + " is itself a copy");
            }
        }
    }
};

/// Mean offset of class `code` (0..K-1): spread evenly over [-e*sigma/2, +e*sigma/2].
inline double class_offset(const SynthSpec& spec, std::size_t code)
{
    const double span = spec.effect_size * spec.noise_sigma;
    const double position = static_cast<double>(code) / static_cast<double>(spec.class_count - 1);
    return span * (position - 0.5);
}

/**
 * Gaussian noise channels with planted class-mean offsets.
 *
 * Class labels are 1..K. Informative channels are shifted by the class
 * offset; each redundant copy is its source plus N(0, (sigma/100)^2) jitter.
 */
inline TrialTensor generate_synthetic(const SynthSpec& spec, std::uint64_t seed)
{
    spec.validate();
    Rng rng(seed);
    std::vector<bool> informative(spec.channel_count, false);
    for (ChannelId c : spec.informative_channels) {
        informative[c] = true;
    }
    const double jitter = spec.noise_sigma / 100.0;

    std::vector<Trial> trials;
    trials.reserve(spec.class_count * spec.trials_per_class);
    for (std::size_t code = 0; code < spec.class_count; ++code) {
        const double offset = class_offset(spec, code);
        for (std::size_t t = 0; t < spec.trials_per_class; ++t) {
            Matrix data(static_cast<Eigen::Index>(spec.samples_per_trial),
                        static_cast<Eigen::Index>(spec.channel_count));
            for (Eigen::Index s = 0; s < data.rows(); ++s) {
                for (Eigen::Index c = 0; c < data.cols(); ++c) {
                    double value = spec.noise_sigma * rng.normal();
                    if (informative[static_cast<std::size_t>(c)]) {
                        value += offset;
                    }
                    data(s, c) = value;
                }
                for (const auto& [source, copy] : spec.redundant_pairs) {
                    data(s, static_cast<Eigen::Index>(copy)) =
                        data(s, static_cast<Eigen::Index>(source)) + jitter * rng.normal();
                }
            }
            trials.push_back({static_cast<Label>(code + 1), t, std::move(data)});
        }
    }
    return {std::move(trials), spec.channel_count, spec.samples_per_trial};
}

} // namespace channelrank
