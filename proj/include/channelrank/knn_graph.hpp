#pragma once

#include "channelrank/distance.hpp"
#include "channelrank/parallel.hpp"
#include "channelrank/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace channelrank {

struct GraphEdge {
    std::size_t neighbor = 0;
    double squared_distance = 0.0;
    double weight = 0.0;
};

/**
 * Symmetrized k-nearest-neighbour graph with heat-kernel weights.
 *
 * Edge (i, j) exists iff j is among the k nearest rows of i or i among those
 * of j. Neighbour lists are sorted by neighbour index.
 */
class KnnGraph {
public:
    KnnGraph(std::vector<std::vector<GraphEdge>> adjacency, double kernel_width)
        : adjacency_(std::move(adjacency)), kernel_width_(kernel_width)
    {
    }

    std::size_t nodes() const noexcept { return adjacency_.size(); }
    const std::vector<GraphEdge>& neighbors(std::size_t i) const { return adjacency_.at(i); }
    double kernel_width() const noexcept { return kernel_width_; }

    bool has_edge(std::size_t i, std::size_t j) const
    {
        const auto& list = adjacency_.at(i);
        return std::ranges::binary_search(list, j, {}, &GraphEdge::neighbor);
    }

    /// Undirected edge count.
    std::size_t edge_count() const
    {
        std::size_t total = 0;
        for (const auto& list : adjacency_) {
            total += list.size();
        }
        return total / 2;
    }

    /// Row sums of the weight matrix.
    std::vector<double> degrees() const
    {
        std::vector<double> out(adjacency_.size(), 0.0);
        for (std::size_t i = 0; i < adjacency_.size(); ++i) {
            for (const GraphEdge& e : adjacency_[i]) {
                out[i] += e.weight;
            }
        }
        return out;
    }

private:
    std::vector<std::vector<GraphEdge>> adjacency_;
    double kernel_width_;
};

/// Indices of the k nearest other rows of each row; ties go to the lower row index.
inline std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& rows, std::size_t k,
                                                               std::size_t threads = 1)
{
    const auto n = static_cast<std::size_t>(rows.rows());
    if (n < k + 1) {
        throw Error("kNN graph needs at least k+1 = " + std::to_string(k + 1) + " rows, got " + std::to_string(n));
    }
    if (k == 0) {
        throw UsageError("kNN graph needs k >= 1");
    }
    const ColumnStore store(rows);
    std::vector<std::vector<std::size_t>> result(n);
    constexpr std::size_t block = 64;
    const std::size_t blocks = (n + block - 1) / block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        std::vector<double> query;
        std::vector<double> dist(n);
        std::vector<std::size_t> order(n);
        for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
            copy_row(rows, i, query);
            squared_distances(store, query, dist);
            order.resize(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
            const auto closer = [&](std::size_t a, std::size_t c) {
                return dist[a] < dist[c] || (dist[a] == dist[c] && a < c);
            };
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
            result[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        }
    });
    return result;
}

inline double squared_distance(const Matrix& rows, std::size_t i, std::size_t j)
{
    double d = 0.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        const double diff = rows(static_cast<Eigen::Index>(i), c) - rows(static_cast<Eigen::Index>(j), c);
        d += diff * diff;
    }
    return d;
}

/**
 * Builds the graph and applies W_ij = exp(-|x_i - x_j|^2 / t).
 *
 * With no kernel width given, t is the mean squared distance over the
 * undirected edges. If that mean is zero every edge gets weight 1.
 */
inline KnnGraph knn_graph(const Matrix& rows, std::size_t k, std::optional<double> kernel_width = std::nullopt,
                          std::size_t threads = 1)
{
    if (kernel_width && !(*kernel_width > 0.0)) {
        throw UsageError("kernel width must be positive");
    }
    const auto knn = nearest_neighbors(rows, k, threads);
    const std::size_t n = knn.size();

    std::vector<std::vector<std::size_t>> linked(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : knn[i]) {
            linked[i].push_back(j);
            linked[j].push_back(i);
        }
    }
    std::vector<std::vector<GraphEdge>> adjacency(n);
    double distance_sum = 0.0;
    std::size_t undirected = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& list = linked[i];
        std::ranges::sort(list);
        list.erase(std::unique(list.begin(), list.end()), list.end());
        adjacency[i].reserve(list.size());
        for (std::size_t j : list) {
            const double d = squared_distance(rows, i, j);
            adjacency[i].push_back({j, d, 0.0});
            if (i < j) {
                distance_sum += d;
                ++undirected;
            }
        }
    }

    const double width = kernel_width.value_or(distance_sum / static_cast<double>(undirected));
    for (auto& list : adjacency) {
        for (GraphEdge& e : list) {
            e.weight = width > 0.0 ? std::exp(-e.squared_distance / width) : 1.0;
        }
    }
    return {std::move(adjacency), width};
}

} // namespace channelrank
