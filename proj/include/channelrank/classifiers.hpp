#pragma once

#include "channelrank/dataset.hpp"
#include "channelrank/distance.hpp"
#include "channelrank/parallel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace channelrank {

enum class ClassifierKind { knn, lda, tree };

inline std::string_view to_string(ClassifierKind kind)
{
    switch (kind) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::lda: return "lda";
    case ClassifierKind::tree: return "tree";
    }
    return "unknown";
}

inline ClassifierKind parse_classifier_kind(std::string_view name)
{
    if (name == "knn") return ClassifierKind::knn;
    if (name == "lda") return ClassifierKind::lda;
    if (name == "tree" || name == "dt") return ClassifierKind::tree;
    throw UsageError("unknown classifier '" + std::string(name) + "' (expected knn, lda or tree)");
}

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::knn;
    std::size_t knn_k = 3;
    std::size_t tree_max_depth = 10;
    std::size_t tree_min_leaf = 5;
    double lda_ridge = 1e-6; ///< relative to the mean diagonal of the pooled covariance

    void validate() const
    {
        if (knn_k == 0) throw UsageError("knn_k must be positive");
        if (tree_max_depth == 0) throw UsageError("tree_max_depth must be positive");
        if (tree_min_leaf == 0) throw UsageError("tree_min_leaf must be positive");
        if (!(lda_ridge >= 0.0) || !std::isfinite(lda_ridge)) throw UsageError("lda_ridge must be non-negative");
    }

    /// Advisory notes that do not prevent fitting.
    std::vector<std::string> warnings(std::size_t class_count) const
    {
        std::vector<std::string> out;
        if (kind == ClassifierKind::knn && class_count == 2 && knn_k % 2 == 0) {
            out.push_back("knn_k = " + std::to_string(knn_k) + " is even for a two-class problem; votes can tie");
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// k-nearest neighbours

struct KnnModel {
    ColumnStore train;
    std::vector<Label> labels;
    std::vector<Label> classes; ///< ascending
    std::size_t k = 3;
};

/**
 * Majority label among the k smallest distances; distance ties go to the
 * lower training row, vote ties to the smallest label.
 */
inline Label knn_vote(std::span<const double> distances, const std::vector<Label>& labels,
                      const std::vector<Label>& classes, std::size_t k)
{
    const std::size_t n = distances.size();
    k = std::min(k, n);
    // Sorted by (distance, row); rows are visited in increasing order so a
    // strict comparison keeps the lower row on equal distance.
    std::vector<std::pair<double, std::size_t>> best;
    best.reserve(k + 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double d = distances[j];
        if (best.size() == k && !(d < best.back().first)) {
            continue;
        }
        auto pos = std::upper_bound(best.begin(), best.end(), d,
                                    [](double value, const auto& entry) { return value < entry.first; });
        best.insert(pos, {d, j});
        if (best.size() > k) {
            best.pop_back();
        }
    }
    std::vector<std::size_t> votes(classes.size(), 0);
    for (const auto& [d, j] : best) {
        ++votes[static_cast<std::size_t>(std::ranges::lower_bound(classes, labels[j]) - classes.begin())];
    }
    std::size_t winner = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
        if (votes[c] > votes[winner]) {
            winner = c;
        }
    }
    return classes[winner];
}

// ---------------------------------------------------------------------------
// Linear discriminant analysis

struct LdaModel {
    std::vector<Label> classes; ///< ascending
    Matrix means;               ///< classes x channels
    Matrix covariance;          ///< pooled, ridge added
    Matrix weights;             ///< classes x channels, row k = Sigma^-1 mu_k
    Vector bias;                ///< -mu_k' Sigma^-1 mu_k / 2 + log prior_k
    std::vector<double> priors;

    /// Discriminant direction between two classes: Sigma^-1 (mu_b - mu_a).
    Vector direction(std::size_t a, std::size_t b) const
    {
        return (weights.row(static_cast<Eigen::Index>(b)) - weights.row(static_cast<Eigen::Index>(a))).transpose();
    }
};

/// Per-class means and pooled scatter, accumulated entry by entry in row order.
struct LdaStatistics {
    std::vector<Label> classes;
    std::vector<std::size_t> counts;
    Matrix means;   ///< classes x channels
    Matrix scatter; ///< channels x channels, sum of centred outer products
    std::size_t rows = 0;
};

inline LdaStatistics lda_statistics(const LabeledMatrix& train)
{
    LdaStatistics stats;
    stats.classes = train.classes();
    const std::vector<std::size_t> codes = train.class_codes();
    const auto k = static_cast<Eigen::Index>(stats.classes.size());
    const Matrix& x = train.features();
    const Eigen::Index d = x.cols();
    stats.rows = train.rows();
    stats.counts.assign(stats.classes.size(), 0);
    stats.means = Matrix::Zero(k, d);
    for (std::size_t i = 0; i < train.rows(); ++i) {
        ++stats.counts[codes[i]];
        for (Eigen::Index c = 0; c < d; ++c) {
            stats.means(static_cast<Eigen::Index>(codes[i]), c) += x(static_cast<Eigen::Index>(i), c);
        }
    }
    for (Eigen::Index g = 0; g < k; ++g) {
        stats.means.row(g) /= static_cast<double>(stats.counts[static_cast<std::size_t>(g)]);
    }
    stats.scatter = Matrix::Zero(d, d);
    std::vector<double> centred(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < train.rows(); ++i) {
        const auto g = static_cast<Eigen::Index>(codes[i]);
        for (Eigen::Index c = 0; c < d; ++c) {
            centred[static_cast<std::size_t>(c)] = x(static_cast<Eigen::Index>(i), c) - stats.means(g, c);
        }
        for (Eigen::Index a = 0; a < d; ++a) {
            const double da = centred[static_cast<std::size_t>(a)];
            for (Eigen::Index b = a; b < d; ++b) {
                stats.scatter(a, b) += da * centred[static_cast<std::size_t>(b)];
            }
        }
    }
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < a; ++b) {
            stats.scatter(a, b) = stats.scatter(b, a);
        }
    }
    return stats;
}

/**
 * Gaussian LDA restricted to the first `channels` columns of `stats`.
 * Pooled covariance = scatter / (N - K) + ridge * mean(diag) * I.
 */
inline LdaModel lda_from_statistics(const LdaStatistics& stats, std::size_t channels, double ridge)
{
    const auto d = static_cast<Eigen::Index>(channels);
    const auto k = static_cast<Eigen::Index>(stats.classes.size());
    LdaModel model;
    model.classes = stats.classes;
    model.means = stats.means.leftCols(d);
    const double dof = static_cast<double>(stats.rows - stats.classes.size());
    model.covariance = stats.scatter.topLeftCorner(d, d) / dof;
    double trace = 0.0;
    for (Eigen::Index a = 0; a < d; ++a) {
        trace += model.covariance(a, a);
    }
    const double mean_diagonal = trace / static_cast<double>(d);
    if (!(mean_diagonal > 0.0)) {
        throw Error("lda: pooled covariance is singular (every channel is constant within classes)");
    }
    for (Eigen::Index a = 0; a < d; ++a) {
        model.covariance(a, a) += ridge * mean_diagonal;
    }
    const Eigen::LLT<Matrix> llt(model.covariance);
    if (llt.info() != Eigen::Success) {
        throw Error("lda: pooled covariance is singular even after ridge regularisation");
    }
    model.weights = llt.solve(model.means.transpose()).transpose();
    model.bias.resize(k);
    model.priors.resize(stats.classes.size());
    for (Eigen::Index g = 0; g < k; ++g) {
        const double prior = static_cast<double>(stats.counts[static_cast<std::size_t>(g)]) /
                             static_cast<double>(stats.rows);
        model.priors[static_cast<std::size_t>(g)] = prior;
        double quad = 0.0;
        for (Eigen::Index c = 0; c < d; ++c) {
            quad += model.weights(g, c) * model.means(g, c);
        }
        model.bias(g) = -0.5 * quad + std::log(prior);
    }
    if (!model.weights.allFinite() || !model.bias.allFinite()) {
        throw Error("lda: non-finite discriminant (covariance numerically singular)");
    }
    return model;
}

/// argmax discriminant; exact ties go to the smallest label.
inline Label lda_decide(const LdaModel& model, const Matrix& x, Eigen::Index row)
{
    std::size_t winner = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index g = 0; g < model.weights.rows(); ++g) {
        double score = model.bias(g);
        for (Eigen::Index c = 0; c < model.weights.cols(); ++c) {
            score += model.weights(g, c) * x(row, c);
        }
        if (g == 0 || score > best) {
            best = score;
            winner = static_cast<std::size_t>(g);
        }
    }
    return model.classes[winner];
}

// ---------------------------------------------------------------------------
// CART

struct TreeNode {
    std::optional<std::size_t> column; ///< unset for leaves
    ChannelId channel = 0;
    double threshold = 0.0; ///< x <= threshold goes left
    std::size_t left = 0;
    std::size_t right = 0;
    Label label = 0; ///< majority label of the node's training rows
};

struct TreeModel {
    std::vector<TreeNode> nodes; ///< nodes[0] is the root

    std::size_t depth() const { return depth_from(0); }

private:
    std::size_t depth_from(std::size_t i) const
    {
        const TreeNode& node = nodes[i];
        if (!node.column) {
            return 0;
        }
        return 1 + std::max(depth_from(node.left), depth_from(node.right));
    }
};

/// Row indices of each column sorted by (value, row).
using PresortedColumns = std::vector<std::vector<std::uint32_t>>;

inline PresortedColumns presort_columns(const Matrix& x)
{
    PresortedColumns sorted(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        auto& order = sorted[static_cast<std::size_t>(c)];
        order.resize(static_cast<std::size_t>(x.rows()));
        std::iota(order.begin(), order.end(), std::uint32_t{0});
        std::ranges::sort(order, [&](std::uint32_t a, std::uint32_t b) {
            const double va = x(a, c);
            const double vb = x(b, c);
            return va < vb || (va == vb && a < b);
        });
    }
    return sorted;
}

namespace detail {

// n - sum(n_k^2) / n, i.e. n times the Gini impurity.
inline double weighted_gini(std::span<const std::size_t> counts, std::size_t n)
{
    if (n == 0) {
        return 0.0;
    }
    double squares = 0.0;
    for (std::size_t c : counts) {
        squares += static_cast<double>(c) * static_cast<double>(c);
    }
    return static_cast<double>(n) - squares / static_cast<double>(n);
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const std::size_t> codes, std::size_t class_count,
                std::span<const ChannelId> ids, PresortedColumns sorted, const ClassifierSpec& spec)
        : x_(x), codes_(codes), classes_(class_count), ids_(ids), sorted_(std::move(sorted)), spec_(spec),
          goes_left_(static_cast<std::size_t>(x.rows()), 0), buffer_(static_cast<std::size_t>(x.rows()))
    {
    }

    TreeModel build(const std::vector<Label>& class_labels)
    {
        class_labels_ = &class_labels;
        TreeModel model;
        nodes_ = &model.nodes;
        grow(0, static_cast<std::size_t>(x_.rows()), 0);
        return model;
    }

private:
    struct Split {
        double impurity = std::numeric_limits<double>::infinity();
        std::size_t column = 0;
        double threshold = 0.0;
        std::size_t left_rows = 0;
        bool found = false;
    };

    std::size_t grow(std::size_t begin, std::size_t end, std::size_t depth)
    {
        const std::size_t n = end - begin;
        std::vector<std::size_t> counts(classes_, 0);
        for (std::size_t i = begin; i < end; ++i) {
            ++counts[codes_[sorted_[0][i]]];
        }
        std::size_t majority = 0;
        for (std::size_t c = 1; c < classes_; ++c) {
            if (counts[c] > counts[majority]) {
                majority = c;
            }
        }
        const std::size_t index = nodes_->size();
        nodes_->push_back({});
        (*nodes_)[index].label = (*class_labels_)[majority];

        const bool pure = counts[majority] == n;
        if (pure || depth >= spec_.tree_max_depth || n < 2 * spec_.tree_min_leaf) {
            return index;
        }
        const double parent = weighted_gini(counts, n);
        const Split split = best_split(begin, end, counts);
        if (!split.found || !(split.impurity < parent - 1e-12 * static_cast<double>(n))) {
            return index;
        }

        const auto& pivot = sorted_[split.column];
        for (std::size_t i = begin; i < end; ++i) {
            goes_left_[pivot[i]] = i < begin + split.left_rows ? 1 : 0;
        }
        for (auto& order : sorted_) {
            partition(order, begin, end);
        }
        const std::size_t middle = begin + split.left_rows;
        const std::size_t left = grow(begin, middle, depth + 1);
        const std::size_t right = grow(middle, end, depth + 1);
        TreeNode& node = (*nodes_)[index];
        node.column = split.column;
        node.channel = ids_[split.column];
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return index;
    }

    // Stable: both halves stay sorted by (value, row).
    void partition(std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end)
    {
        std::size_t out = begin;
        std::size_t spill = 0;
        for (std::size_t i = begin; i < end; ++i) {
            if (goes_left_[order[i]]) {
                order[out++] = order[i];
            } else {
                buffer_[spill++] = order[i];
            }
        }
        std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(spill),
                  order.begin() + static_cast<std::ptrdiff_t>(out));
    }

    Split best_split(std::size_t begin, std::size_t end, const std::vector<std::size_t>& counts) const
    {
        Split best;
        const std::size_t n = end - begin;
        const std::size_t min_leaf = spec_.tree_min_leaf;
        std::vector<std::size_t> left(classes_);
        std::vector<std::size_t> right(classes_);
        for (std::size_t col = 0; col < sorted_.size(); ++col) {
            const auto& order = sorted_[col];
            const auto c = static_cast<Eigen::Index>(col);
            std::fill(left.begin(), left.end(), 0);
            right = counts;
            for (std::size_t i = begin; i + 1 < end; ++i) {
                const std::size_t code = codes_[order[i]];
                ++left[code];
                --right[code];
                const std::size_t n_left = i - begin + 1;
                if (n_left < min_leaf) {
                    continue;
                }
                if (n - n_left < min_leaf) {
                    break;
                }
                const double lo = x_(order[i], c);
                const double hi = x_(order[i + 1], c);
                if (!(lo < hi)) {
                    continue;
                }
                const double impurity = weighted_gini(left, n_left) + weighted_gini(right, n - n_left);
                double threshold = 0.5 * (lo + hi);
                if (!(threshold < hi)) {
                    threshold = lo;
                }
                const bool better =
                    !best.found || impurity < best.impurity ||
                    (impurity == best.impurity &&
                     (ids_[col] < ids_[best.column] || (col == best.column && threshold < best.threshold)));
                if (better) {
                    best = {impurity, col, threshold, n_left, true};
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const std::size_t> codes_;
    std::size_t classes_;
    std::span<const ChannelId> ids_;
    PresortedColumns sorted_;
    const ClassifierSpec& spec_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> buffer_;
    const std::vector<Label>* class_labels_ = nullptr;
    std::vector<TreeNode>* nodes_ = nullptr;
};

} // namespace detail

/// CART with Gini impurity, midpoint thresholds and depth/leaf-size/purity stopping.
inline TreeModel fit_tree(const Matrix& x, const std::vector<std::size_t>& codes, const std::vector<Label>& classes,
                          std::span<const ChannelId> ids, PresortedColumns sorted, const ClassifierSpec& spec)
{
    detail::TreeBuilder builder(x, codes, classes.size(), ids, std::move(sorted), spec);
    return builder.build(classes);
}

inline Label tree_decide(const TreeModel& model, const Matrix& x, Eigen::Index row)
{
    std::size_t i = 0;
    while (model.nodes[i].column) {
        const TreeNode& node = model.nodes[i];
        i = x(row, static_cast<Eigen::Index>(*node.column)) <= node.threshold ? node.left : node.right;
    }
    return model.nodes[i].label;
}

// ---------------------------------------------------------------------------

/// A trained classifier bound to the channel ids (and order) it was fitted on.
class ClassifierModel {
public:
    using Payload = std::variant<KnnModel, LdaModel, TreeModel>;

    ClassifierModel(Payload payload, std::vector<ChannelId> channel_ids)
        : payload_(std::move(payload)), channel_ids_(std::move(channel_ids))
    {
    }

    ClassifierKind kind() const
    {
        switch (payload_.index()) {
        case 0: return ClassifierKind::knn;
        case 1: return ClassifierKind::lda;
        default: return ClassifierKind::tree;
        }
    }

    const Payload& payload() const noexcept { return payload_; }
    const std::vector<ChannelId>& channel_ids() const noexcept { return channel_ids_; }

private:
    Payload payload_;
    std::vector<ChannelId> channel_ids_;
};

inline ClassifierModel fit(const ClassifierSpec& spec, const LabeledMatrix& train)
{
    spec.validate();
    require_supervised(train, "classifier training");
    const std::vector<Label> classes = train.classes();
    switch (spec.kind) {
    case ClassifierKind::knn: {
        if (spec.knn_k > train.rows()) {
            throw Error("knn_k = " + std::to_string(spec.knn_k) + " exceeds the " + std::to_string(train.rows()) +
                        " training rows");
        }
        return {KnnModel{ColumnStore(train.features()), train.labels(), classes, spec.knn_k}, train.channel_ids()};
    }
    case ClassifierKind::lda: {
        const LdaStatistics stats = lda_statistics(train);
        for (std::size_t g = 0; g < stats.classes.size(); ++g) {
            if (stats.counts[g] < 2) {
                throw Error("lda needs at least two rows per class; class " + std::to_string(stats.classes[g]) +
                            " has " + std::to_string(stats.counts[g]));
            }
        }
        return {lda_from_statistics(stats, train.channels(), spec.lda_ridge), train.channel_ids()};
    }
    case ClassifierKind::tree:
        return {fit_tree(train.features(), train.class_codes(), classes, train.channel_ids(),
                         presort_columns(train.features()), spec),
                train.channel_ids()};
    }
    throw UsageError("unknown classifier kind");
}

inline std::vector<Label> predict(const ClassifierModel& model, const LabeledMatrix& test, std::size_t threads = 1)
{
    if (test.channel_ids() != model.channel_ids()) {
        throw Error("predict: test channels do not match the channels the model was trained on");
    }
    const Matrix& x = test.features();
    std::vector<Label> out(test.rows());
    constexpr std::size_t block = 64;
    const std::size_t blocks = (test.rows() + block - 1) / block;
    std::visit(
        [&](const auto& payload) {
            using T = std::decay_t<decltype(payload)>;
            parallel_for(blocks, threads, [&](std::size_t b) {
                const std::size_t end = std::min(test.rows(), (b + 1) * block);
                if constexpr (std::is_same_v<T, KnnModel>) {
                    std::vector<double> query;
                    std::vector<double> dist(payload.train.rows());
                    for (std::size_t r = b * block; r < end; ++r) {
                        copy_row(x, r, query);
                        squared_distances(payload.train, query, dist);
                        out[r] = knn_vote(dist, payload.labels, payload.classes, payload.k);
                    }
                } else if constexpr (std::is_same_v<T, LdaModel>) {
                    for (std::size_t r = b * block; r < end; ++r) {
                        out[r] = lda_decide(payload, x, static_cast<Eigen::Index>(r));
                    }
                } else {
                    for (std::size_t r = b * block; r < end; ++r) {
                        out[r] = tree_decide(payload, x, static_cast<Eigen::Index>(r));
                    }
                }
            });
        },
        model.payload());
    return out;
}

/// Percentage of matching labels.
inline double accuracy(std::span<const Label> predicted, std::span<const Label> truth)
{
    if (predicted.size() != truth.size()) {
        throw Error("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) {
        throw Error("accuracy of an empty prediction set is undefined");
    }
    std::size_t matches = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        matches += predicted[i] == truth[i] ? 1 : 0;
    }
    return 100.0 * static_cast<double>(matches) / static_cast<double>(truth.size());
}

} // namespace channelrank
