#pragma once

#include "channelrank/dataset.hpp"
#include "channelrank/distance.hpp"
#include "channelrank/information.hpp"
#include "channelrank/knn_graph.hpp"
#include "channelrank/parallel.hpp"
#include "channelrank/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace channelrank {

enum class RankMethod { relief, mrmr, laplacian };

inline std::string_view to_string(RankMethod method)
{
    switch (method) {
    case RankMethod::relief: return "relief";
    case RankMethod::mrmr: return "mrmr";
    case RankMethod::laplacian: return "laplacian";
    }
    return "unknown";
}

inline RankMethod parse_rank_method(std::string_view name)
{
    if (name == "relief") return RankMethod::relief;
    if (name == "mrmr") return RankMethod::mrmr;
    if (name == "laplacian" || name == "ls") return RankMethod::laplacian;
    throw UsageError("unknown ranking method '" + std::string(name) + "' (expected relief, mrmr or laplacian)");
}

/**
 * Output of one ranker: channel ids best first, with the score each channel
 * was ranked by. Relief and mRMR scores are higher-is-better; Laplacian
 * scores are lower-is-better, with +inf for constant channels.
 */
struct RankingList {
    RankMethod method = RankMethod::relief;
    std::vector<ChannelId> order;
    std::vector<double> scores;
    std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Relief

enum class NeighborMode { nearest, random };
enum class ProbeOrder { cycled, random };

struct ReliefParams {
    std::optional<std::size_t> iterations; ///< probes m; unset = one pass over all rows
    NeighborMode neighbor_mode = NeighborMode::nearest;
    ProbeOrder probe_order = ProbeOrder::cycled;
    std::uint64_t seed = 0;
};

namespace detail {

/// Sort positions best-first; equal scores keep the lower channel id first.
inline std::vector<std::size_t> order_by_score(const std::vector<double>& scores, const std::vector<ChannelId>& ids,
                                               bool higher_is_better)
{
    std::vector<std::size_t> positions(scores.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    std::ranges::sort(positions, [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return higher_is_better ? scores[a] > scores[b] : scores[a] < scores[b];
        }
        return ids[a] < ids[b];
    });
    return positions;
}

inline RankingList make_ranking(RankMethod method, const LabeledMatrix& matrix, const std::vector<double>& scores,
                                bool higher_is_better)
{
    RankingList out;
    out.method = method;
    for (std::size_t p : order_by_score(scores, matrix.channel_ids(), higher_is_better)) {
        out.order.push_back(matrix.channel_ids()[p]);
        out.scores.push_back(scores[p]);
    }
    return out;
}

} // namespace detail

/**
 * Relief feature weighting.
 *
 * For each of m probes x, a near-hit h (same class) and near-miss s (other
 * class) are found, excluding x itself, and each channel weight is updated
 * W[f] = W[f] - diff(f,x,h)^2/m + diff(f,x,s)^2/m with
 * diff(f,a,b) = |a_f - b_f| / range_f (zero when the range is zero).
 * In nearest mode the neighbours minimise the range-normalised Euclidean
 * distance, ties going to the lower row index.
 */
inline RankingList relief_rank(const LabeledMatrix& matrix, const ReliefParams& params = {}, std::size_t threads = 1)
{
    require_supervised(matrix, "relief");
    const std::size_t n = matrix.rows();
    const std::size_t channels = matrix.channels();
    const std::size_t probes = params.iterations.value_or(n);
    if (probes == 0) {
        throw UsageError("relief needs at least one iteration");
    }
    const Matrix& x = matrix.features();
    const std::vector<Label>& labels = matrix.labels();

    std::vector<double> range(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        const auto column = x.col(static_cast<Eigen::Index>(c));
        range[c] = column.maxCoeff() - column.minCoeff();
    }

    std::vector<std::size_t> probe_rows(probes);
    Rng rng(params.seed);
    for (std::size_t p = 0; p < probes; ++p) {
        probe_rows[p] = params.probe_order == ProbeOrder::cycled ? p % n : rng.uniform_index(n);
    }

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> hits(probes, none);
    std::vector<std::size_t> misses(probes, none);

    if (params.neighbor_mode == NeighborMode::nearest) {
        // Range-normalised copy: distances below see diff(f, a, b) directly.
        Matrix scaled(x.rows(), x.cols());
        for (std::size_t c = 0; c < channels; ++c) {
            const auto ci = static_cast<Eigen::Index>(c);
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                scaled(r, ci) = range[c] > 0.0 ? x(r, ci) / range[c] : 0.0;
            }
        }
        const ColumnStore store(scaled);
        constexpr std::size_t block = 32;
        const std::size_t blocks = (probes + block - 1) / block;
        parallel_for(blocks, threads, [&](std::size_t b) {
            std::vector<double> query;
            std::vector<double> dist(n);
            for (std::size_t p = b * block; p < std::min(probes, (b + 1) * block); ++p) {
                const std::size_t row = probe_rows[p];
                copy_row(scaled, row, query);
                squared_distances(store, query, dist);
                double best_hit = std::numeric_limits<double>::infinity();
                double best_miss = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == row) {
                        continue;
                    }
                    if (labels[j] == labels[row]) {
                        if (dist[j] < best_hit || hits[p] == none) {
                            best_hit = dist[j];
                            hits[p] = j;
                        }
                    } else if (dist[j] < best_miss || misses[p] == none) {
                        best_miss = dist[j];
                        misses[p] = j;
                    }
                }
            }
        });
    } else {
        std::vector<std::vector<std::size_t>> by_class;
        const std::vector<Label> classes = matrix.classes();
        const std::vector<std::size_t> codes = matrix.class_codes();
        by_class.resize(classes.size());
        for (std::size_t i = 0; i < n; ++i) {
            by_class[codes[i]].push_back(i);
        }
        for (std::size_t p = 0; p < probes; ++p) {
            const std::size_t row = probe_rows[p];
            const auto& same = by_class[codes[row]];
            if (same.size() > 1) {
                std::size_t pick = rng.uniform_index(same.size() - 1);
                const std::size_t own = static_cast<std::size_t>(std::ranges::find(same, row) - same.begin());
                if (pick >= own) {
                    ++pick;
                }
                hits[p] = same[pick];
            }
            const std::size_t others = n - same.size();
            std::size_t pick = rng.uniform_index(others);
            for (std::size_t k = 0; k < by_class.size(); ++k) {
                if (k == codes[row]) {
                    continue;
                }
                if (pick < by_class[k].size()) {
                    misses[p] = by_class[k][pick];
                    break;
                }
                pick -= by_class[k].size();
            }
        }
    }

    std::vector<double> weights(channels, 0.0);
    const double m = static_cast<double>(probes);
    std::size_t skipped = 0;
    for (std::size_t p = 0; p < probes; ++p) {
        if (hits[p] == none) {
            ++skipped;
            continue;
        }
        const auto row = static_cast<Eigen::Index>(probe_rows[p]);
        const auto hit = static_cast<Eigen::Index>(hits[p]);
        const auto miss = static_cast<Eigen::Index>(misses[p]);
        for (std::size_t c = 0; c < channels; ++c) {
            if (range[c] <= 0.0) {
                continue;
            }
            const auto ci = static_cast<Eigen::Index>(c);
            const double dh = (x(row, ci) - x(hit, ci)) / range[c];
            const double dm = (x(row, ci) - x(miss, ci)) / range[c];
            weights[c] = weights[c] - dh * dh / m + dm * dm / m;
        }
    }
    if (skipped == probes) {
        throw Error("relief: every probe lacked a near-hit (each class has a single row)");
    }

    RankingList out = detail::make_ranking(RankMethod::relief, matrix, weights, true);
    if (skipped > 0) {
        out.warnings.push_back("relief skipped " + std::to_string(skipped) + " of " + std::to_string(probes) +
                               " probes without a near-hit");
    }
    return out;
}

/// Channels whose Relief weight reaches `threshold`, in ranking order.
inline std::vector<ChannelId> channels_above(const RankingList& ranking, double threshold)
{
    std::vector<ChannelId> kept;
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        if (ranking.scores[i] >= threshold) {
            kept.push_back(ranking.order[i]);
        }
    }
    return kept;
}

// ---------------------------------------------------------------------------
// mRMR

struct MrmrParams {
    DiscretizationScheme scheme = DiscretizationScheme::mean_std();
};

/**
 * Greedy minimum-redundancy maximum-relevance ranking (difference form).
 *
 * Every channel is discretised; the first pick maximises I(f; class), each
 * later pick maximises I(f; class) - mean over selected s of I(f; s). Ties
 * go to the lower channel id. scores[i] is the objective value at the time
 * order[i] was picked, so it need not be monotone.
 */
inline RankingList mrmr_rank(const LabeledMatrix& matrix, const MrmrParams& params = {}, std::size_t threads = 1)
{
    require_supervised(matrix, "mrmr");
    const std::size_t channels = matrix.channels();
    const Matrix& x = matrix.features();

    std::vector<DenseCodes> levels(channels);
    parallel_for(channels, threads, [&](std::size_t c) {
        std::vector<double> column(matrix.rows());
        for (std::size_t r = 0; r < matrix.rows(); ++r) {
            column[r] = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
        levels[c] = densify(discretize(column, params.scheme));
    });

    DenseCodes target;
    target.cardinality = matrix.classes().size();
    for (std::size_t code : matrix.class_codes()) {
        target.codes.push_back(static_cast<std::uint32_t>(code));
    }

    std::vector<double> relevance(channels);
    parallel_for(channels, threads, [&](std::size_t c) { relevance[c] = mutual_information(levels[c], target); });

    const auto& ids = matrix.channel_ids();
    std::vector<bool> selected(channels, false);
    std::vector<double> redundancy(channels, 0.0);
    std::vector<double> objective(channels, 0.0);
    RankingList out;
    out.method = RankMethod::mrmr;

    std::size_t last = 0;
    for (std::size_t step = 0; step < channels; ++step) {
        if (step > 0) {
            parallel_for(channels, threads, [&](std::size_t c) {
                if (!selected[c]) {
                    redundancy[c] += mutual_information(levels[c], levels[last]);
                }
            });
        }
        std::optional<std::size_t> best;
        for (std::size_t c = 0; c < channels; ++c) {
            if (selected[c]) {
                continue;
            }
            objective[c] = step == 0 ? relevance[c] : relevance[c] - redundancy[c] / static_cast<double>(step);
            if (!best || objective[c] > objective[*best] ||
                (objective[c] == objective[*best] && ids[c] < ids[*best])) {
                best = c;
            }
        }
        selected[*best] = true;
        last = *best;
        out.order.push_back(ids[*best]);
        out.scores.push_back(objective[*best]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Laplacian Score

struct LaplacianParams {
    std::size_t k_neighbors = 5;
    std::optional<double> kernel_width; ///< unset = mean squared edge distance
    std::size_t subsample_cap = 2000;   ///< 0 disables subsampling
    std::uint64_t seed = 0;
};

/// Sorted row indices kept after seeded uniform subsampling (all rows if under the cap).
inline std::vector<std::size_t> subsample_rows(std::size_t rows, std::size_t cap, std::uint64_t seed)
{
    std::vector<std::size_t> index(rows);
    std::iota(index.begin(), index.end(), std::size_t{0});
    if (cap == 0 || rows <= cap) {
        return index;
    }
    Rng rng(seed);
    rng.shuffle(index.begin(), index.end());
    index.resize(cap);
    std::ranges::sort(index);
    return index;
}

/**
 * Laplacian Score, lower is better; class labels are not used.
 *
 * On the kNN graph with weights W and degrees D, a channel f is centred
 * f~ = f - (f'D1 / 1'D1) 1 and scored (f~' L f~) / (f~' D f~) with L = D - W.
 * The numerator is evaluated as the edge sum of W_ij (f_i - f_j)^2.
 * Constant channels get +inf and rank last.
 */
inline RankingList laplacian_rank(const LabeledMatrix& matrix, const LaplacianParams& params = {},
                                  std::size_t threads = 1)
{
    if (params.k_neighbors == 0) {
        throw UsageError("laplacian score needs k >= 1");
    }
    const auto kept = subsample_rows(matrix.rows(), params.subsample_cap, params.seed);
    if (kept.size() < params.k_neighbors + 1) {
        throw Error("laplacian score needs at least k+1 = " + std::to_string(params.k_neighbors + 1) +
                    " rows, got " + std::to_string(kept.size()));
    }
    Matrix rows(static_cast<Eigen::Index>(kept.size()), matrix.features().cols());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = matrix.features().row(static_cast<Eigen::Index>(kept[i]));
    }
    const KnnGraph graph = knn_graph(rows, params.k_neighbors, params.kernel_width, threads);
    const std::vector<double> degree = graph.degrees();
    double volume = 0.0;
    for (double d : degree) {
        volume += d;
    }

    const std::size_t n = kept.size();
    std::vector<double> scores(matrix.channels());
    parallel_for(matrix.channels(), threads, [&](std::size_t c) {
        const auto col = rows.col(static_cast<Eigen::Index>(c));
        const double first = col(0);
        if ((col.array() == first).all()) {
            scores[c] = std::numeric_limits<double>::infinity();
            return;
        }
        double weighted = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weighted += degree[i] * col(static_cast<Eigen::Index>(i));
        }
        const double centre = weighted / volume;
        double numerator = 0.0;
        double denominator = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fi = col(static_cast<Eigen::Index>(i));
            const double centred = fi - centre;
            denominator += degree[i] * centred * centred;
            for (const GraphEdge& e : graph.neighbors(i)) {
                if (e.neighbor > i) {
                    const double diff = fi - col(static_cast<Eigen::Index>(e.neighbor));
                    numerator += e.weight * diff * diff;
                }
            }
        }
        scores[c] = denominator > 0.0 ? numerator / denominator : std::numeric_limits<double>::infinity();
    });
    return detail::make_ranking(RankMethod::laplacian, matrix, scores, false);
}

// ---------------------------------------------------------------------------

/// A ranker choice plus the parameters of every method.
struct RankerConfig {
    RankMethod method = RankMethod::relief;
    ReliefParams relief;
    MrmrParams mrmr;
    LaplacianParams laplacian;
};

inline RankingList rank(const LabeledMatrix& matrix, const RankerConfig& config, std::size_t threads = 1)
{
    switch (config.method) {
    case RankMethod::relief: return relief_rank(matrix, config.relief, threads);
    case RankMethod::mrmr: return mrmr_rank(matrix, config.mrmr, threads);
    case RankMethod::laplacian: return laplacian_rank(matrix, config.laplacian, threads);
    }
    throw UsageError("unknown ranking method");
}

} // namespace channelrank
