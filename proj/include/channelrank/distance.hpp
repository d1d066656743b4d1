#pragma once

#include "channelrank/types.hpp"

#include <span>
#include <vector>

namespace channelrank {

/**
 * Column-major copy of a row matrix for query-vs-all distance sweeps.
 *
 * Distances are accumulated one column at a time across all rows, so every
 * row's sum is formed in column order exactly as a naive per-pair loop would
 * form it. Results are therefore bitwise equal to the naive computation and
 * to any incremental prefix computation that adds columns in the same order.
 */
class ColumnStore {
public:
    ColumnStore() = default;

    explicit ColumnStore(const Matrix& rows)
        : rows_(static_cast<std::size_t>(rows.rows())), cols_(static_cast<std::size_t>(rows.cols())),
          data_(rows_ * cols_)
    {
        for (std::size_t c = 0; c < cols_; ++c) {
            for (std::size_t r = 0; r < rows_; ++r) {
                data_[c * rows_ + r] = rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<const double> column(std::size_t c) const noexcept { return {data_.data() + c * rows_, rows_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// out[j] += (value - column[j])^2 for every row j.
inline void accumulate_squared_diff(std::span<const double> column, double value, std::span<double> out)
{
    const std::size_t n = column.size();
    const double* src = column.data();
    double* dst = out.data();
    for (std::size_t j = 0; j < n; ++j) {
        const double d = value - src[j];
        dst[j] += d * d;
    }
}

/// out[j] = squared Euclidean distance from `query` to row j.
inline void squared_distances(const ColumnStore& store, std::span<const double> query, std::span<double> out)
{
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t c = 0; c < store.cols(); ++c) {
        accumulate_squared_diff(store.column(c), query[c], out);
    }
}

/// Copies row `r` of a row-major matrix into `out`.
inline void copy_row(const Matrix& m, std::size_t r, std::vector<double>& out)
{
    out.resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        out[static_cast<std::size_t>(c)] = m(static_cast<Eigen::Index>(r), c);
    }
}

} // namespace channelrank
