#pragma once

#include "channelrank/dataset.hpp"
#include "channelrank/parallel.hpp"
#include "channelrank/rankers.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace channelrank {

/**
 * Per-trial rankings stacked side by side: entry (position p, column t) is
 * the channel ranked p-th on paired trial t. Every column is a permutation
 * of the same channel ids.
 */
class RankMatrix {
public:
    RankMatrix(std::vector<std::vector<ChannelId>> columns, std::vector<std::size_t> trial_ids)
        : columns_(std::move(columns)), trial_ids_(std::move(trial_ids))
    {
        if (columns_.empty()) {
            throw Error("rank matrix needs at least one column");
        }
        if (trial_ids_.size() != columns_.size()) {
            throw Error("rank matrix: trial id count does not match column count");
        }
        std::vector<ChannelId> reference = columns_.front();
        std::ranges::sort(reference);
        if (reference.empty() || std::ranges::adjacent_find(reference) != reference.end()) {
            throw Error("rank matrix column 0 is not a permutation of distinct channel ids");
        }
        for (std::size_t t = 1; t < columns_.size(); ++t) {
            std::vector<ChannelId> sorted = columns_[t];
            std::ranges::sort(sorted);
            if (sorted != reference) {
                throw Error("rank matrix column " + std::to_string(t) + " is not a permutation of column 0");
            }
        }
    }

    std::size_t positions() const noexcept { return columns_.front().size(); }
    std::size_t trials() const noexcept { return columns_.size(); }
    ChannelId at(std::size_t position, std::size_t trial) const { return columns_.at(trial).at(position); }
    const std::vector<std::vector<ChannelId>>& columns() const noexcept { return columns_; }
    const std::vector<std::size_t>& trial_ids() const noexcept { return trial_ids_; }

    std::vector<ChannelId> row(std::size_t position) const
    {
        std::vector<ChannelId> out;
        out.reserve(columns_.size());
        for (const auto& column : columns_) {
            out.push_back(column.at(position));
        }
        return out;
    }

private:
    std::vector<std::vector<ChannelId>> columns_;
    std::vector<std::size_t> trial_ids_;
};

/// Ranks every horizontally paired trial; column t always belongs to the t-th trial index.
inline RankMatrix collect_rank_matrix(const TrialTensor& tensor, const RankerConfig& config, std::size_t threads = 1,
                                      std::vector<RankingList>* rankings = nullptr)
{
    const std::vector<std::size_t> trial_ids = tensor.paired_trial_indices();
    std::vector<RankingList> lists(trial_ids.size());
    parallel_for(trial_ids.size(), threads, [&](std::size_t t) {
        try {
            lists[t] = rank(form_horizontal(tensor, trial_ids[t]), config);
        } catch (const UsageError&) {
            throw;
        } catch (const Error& e) {
            throw Error("trial " + std::to_string(trial_ids[t]) + ": " + e.what());
        }
    });
    std::vector<std::vector<ChannelId>> columns;
    columns.reserve(lists.size());
    for (const RankingList& list : lists) {
        columns.push_back(list.order);
    }
    if (rankings != nullptr) {
        *rankings = std::move(lists);
    }
    return {std::move(columns), trial_ids};
}

/// Most frequent channel per ranking position; frequency ties go to the lowest id.
inline std::vector<ChannelId> positional_mode(const RankMatrix& ranks)
{
    std::vector<ChannelId> modes;
    modes.reserve(ranks.positions());
    for (std::size_t p = 0; p < ranks.positions(); ++p) {
        std::map<ChannelId, std::size_t> counts;
        for (ChannelId id : ranks.row(p)) {
            ++counts[id];
        }
        auto best = counts.begin();
        for (auto it = counts.begin(); it != counts.end(); ++it) {
            if (it->second > best->second) {
                best = it;
            }
        }
        modes.push_back(best->first);
    }
    return modes;
}

/// Distinct values in order of first occurrence.
inline std::vector<ChannelId> dedupe_preserve_order(const std::vector<ChannelId>& values)
{
    if (values.empty()) {
        throw Error("cannot deduplicate an empty ranking");
    }
    std::vector<ChannelId> out;
    std::set<ChannelId> seen;
    for (ChannelId id : values) {
        if (seen.insert(id).second) {
            out.push_back(id);
        }
    }
    return out;
}

struct AggregatedRanking {
    std::vector<ChannelId> positional; ///< F, one entry per position, may repeat
    std::vector<ChannelId> final;      ///< first occurrences of F
};

inline AggregatedRanking aggregate(const RankMatrix& ranks)
{
    AggregatedRanking out;
    out.positional = positional_mode(ranks);
    out.final = dedupe_preserve_order(out.positional);
    return out;
}

} // namespace channelrank
