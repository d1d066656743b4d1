#pragma once

#include "channelrank/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace channelrank {

/**
 * How a real-valued column is mapped to a few discrete levels before
 * mutual information is estimated.
 *
 * mean_std: three levels split at mean - sd and mean + sd (sample sd),
 * with both boundaries belonging to the middle level.
 * equal_width: `levels` equal bins over [min, max].
 */
struct DiscretizationScheme {
    enum class Kind { mean_std, equal_width };

    Kind kind = Kind::mean_std;
    std::size_t levels = 3;

    static DiscretizationScheme mean_std() { return {Kind::mean_std, 3}; }
    static DiscretizationScheme equal_width(std::size_t levels) { return {Kind::equal_width, levels}; }

    /// 3 bins means the mean/sd scheme, anything else equal width.
    static DiscretizationScheme from_bins(std::size_t bins)
    {
        return bins == 3 ? mean_std() : equal_width(bins);
    }

    void validate() const
    {
        if (levels < 2) {
            throw UsageError("discretization needs at least two levels");
        }
        if (kind == Kind::mean_std && levels != 3) {
            throw UsageError("the mean/sd discretization has exactly three levels");
        }
    }
};

inline std::vector<int> discretize(std::span<const double> column,
                                   const DiscretizationScheme& scheme = DiscretizationScheme::mean_std())
{
    scheme.validate();
    std::vector<int> levels(column.size(), 0);
    if (column.empty()) {
        return levels;
    }
    if (scheme.kind == DiscretizationScheme::Kind::mean_std) {
        if (std::ranges::all_of(column, [&](double x) { return x == column.front(); })) {
            std::ranges::fill(levels, 1);
            return levels;
        }
        const double n = static_cast<double>(column.size());
        double sum = 0.0;
        for (double x : column) {
            sum += x;
        }
        const double mean = sum / n;
        double squares = 0.0;
        for (double x : column) {
            squares += (x - mean) * (x - mean);
        }
        const double sd = column.size() > 1 ? std::sqrt(squares / (n - 1.0)) : 0.0;
        for (std::size_t i = 0; i < column.size(); ++i) {
            const double x = column[i];
            levels[i] = x < mean - sd ? 0 : (x > mean + sd ? 2 : 1);
        }
        return levels;
    }

    const auto [lo_it, hi_it] = std::ranges::minmax_element(column);
    const double lo = *lo_it;
    const double width = *hi_it - lo;
    if (width <= 0.0) {
        return levels;
    }
    const auto top = static_cast<int>(scheme.levels) - 1;
    for (std::size_t i = 0; i < column.size(); ++i) {
        const double position = (column[i] - lo) / width * static_cast<double>(scheme.levels);
        levels[i] = std::min(top, static_cast<int>(std::floor(position)));
    }
    return levels;
}

/// Discrete vector recoded to 0..cardinality-1 in ascending value order.
struct DenseCodes {
    std::vector<std::uint32_t> codes;
    std::size_t cardinality = 0;
};

inline DenseCodes densify(std::span<const int> values)
{
    std::vector<int> distinct(values.begin(), values.end());
    std::ranges::sort(distinct);
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    DenseCodes out;
    out.cardinality = distinct.size();
    out.codes.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.codes[i] = static_cast<std::uint32_t>(std::ranges::lower_bound(distinct, values[i]) - distinct.begin());
    }
    return out;
}

namespace detail {

// Plug-in sums are accumulated over sorted terms so that the result does not
// depend on argument order: I(x, y) and I(y, x) produce the same term multiset.
inline double sorted_sum(std::vector<double>& terms)
{
    std::ranges::sort(terms);
    double total = 0.0;
    for (double t : terms) {
        total += t;
    }
    return total;
}

} // namespace detail

/// Mutual information in bits between two dense-coded vectors of equal length.
inline double mutual_information(const DenseCodes& x, const DenseCodes& y)
{
    if (x.codes.size() != y.codes.size()) {
        throw Error("mutual information needs equal lengths, got " + std::to_string(x.codes.size()) + " and " +
                    std::to_string(y.codes.size()));
    }
    if (x.codes.empty()) {
        throw Error("mutual information needs at least one observation");
    }
    const std::size_t n = x.codes.size();
    std::vector<std::uint64_t> joint(x.cardinality * y.cardinality, 0);
    std::vector<std::uint64_t> count_x(x.cardinality, 0);
    std::vector<std::uint64_t> count_y(y.cardinality, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[x.codes[i] * y.cardinality + y.codes[i]];
        ++count_x[x.codes[i]];
        ++count_y[y.codes[i]];
    }
    const double total = static_cast<double>(n);
    std::vector<double> terms;
    terms.reserve(joint.size());
    for (std::size_t a = 0; a < x.cardinality; ++a) {
        for (std::size_t b = 0; b < y.cardinality; ++b) {
            const std::uint64_t n_ab = joint[a * y.cardinality + b];
            if (n_ab == 0) {
                continue;
            }
            const double cell = static_cast<double>(n_ab);
            const double ratio =
                (cell * total) / (static_cast<double>(count_x[a]) * static_cast<double>(count_y[b]));
            terms.push_back((cell / total) * std::log2(ratio));
        }
    }
    return detail::sorted_sum(terms);
}

inline double mutual_information(std::span<const int> x, std::span<const int> y)
{
    if (x.size() != y.size()) {
        throw Error("mutual information needs equal lengths, got " + std::to_string(x.size()) + " and " +
                    std::to_string(y.size()));
    }
    return mutual_information(densify(x), densify(y));
}

/// Plug-in entropy in bits.
inline double entropy(std::span<const int> x)
{
    if (x.empty()) {
        throw Error("entropy needs at least one observation");
    }
    const DenseCodes dense = densify(x);
    std::vector<std::uint64_t> counts(dense.cardinality, 0);
    for (auto code : dense.codes) {
        ++counts[code];
    }
    const double total = static_cast<double>(x.size());
    std::vector<double> terms;
    terms.reserve(counts.size());
    for (std::uint64_t count : counts) {
        const double c = static_cast<double>(count);
        terms.push_back((c / total) * std::log2(total / c));
    }
    return detail::sorted_sum(terms);
}

} // namespace channelrank
