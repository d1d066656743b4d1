#include "catch_amalgamated.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace channelrank;

namespace {

using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;

EdgeSet edges_of(const KnnGraph& g)
{
    EdgeSet out;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        for (const GraphEdge& e : g.neighbors(i)) {
            out.insert({std::min(i, e.neighbor), std::max(i, e.neighbor)});
        }
    }
    return out;
}

// All-pairs oracle: sort every other row by (distance, index) and keep k.
EdgeSet oracle_edges(const Matrix& x, std::size_t k)
{
    const auto n = static_cast<std::size_t>(x.rows());
    EdgeSet out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                cand.emplace_back((x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm(), j);
            }
        }
        std::ranges::sort(cand);
        for (std::size_t m = 0; m < k; ++m) {
            out.insert({std::min(i, cand[m].second), std::max(i, cand[m].second)});
        }
    }
    return out;
}

} // namespace

TEST_CASE("three collinear points with k = 1")
{
    const Matrix x = test_support::from_rows({{0.0}, {1.0}, {3.0}});
    const KnnGraph g = knn_graph(x, 1);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 0));
    CHECK(g.has_edge(1, 2));
    CHECK(g.has_edge(2, 1));
    CHECK_FALSE(g.has_edge(0, 2));
    CHECK(g.edge_count() == 2);
}

TEST_CASE("k = rows - 1 gives the complete graph")
{
    const Matrix x = test_support::gaussian_matrix(9, 3, 4);
    const KnnGraph g = knn_graph(x, 8);
    CHECK(g.edge_count() == 9 * 8 / 2);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(g.neighbors(i).size() == 8);
    }
}

TEST_CASE("edges match the all-pairs oracle, including tie-breaking")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        // Rounded coordinates on a coarse grid make distance ties common.
        Matrix x = test_support::gaussian_matrix(40, 2, seed);
        x = (x.array() * 2.0).round();
        for (std::size_t k : {1u, 3u, 5u}) {
            CHECK(edges_of(knn_graph(x, k)) == oracle_edges(x, k));
        }
    }
}

TEST_CASE("duplicated point set: relabelling pairs relabels the graph")
{
    const Matrix base = test_support::gaussian_matrix(15, 3, 21);
    Matrix x(30, 3);
    for (Eigen::Index i = 0; i < 15; ++i) {
        x.row(2 * i) = base.row(i);
        x.row(2 * i + 1) = base.row(i);
    }
    std::vector<std::size_t> pair_perm(15);
    std::iota(pair_perm.begin(), pair_perm.end(), std::size_t{0});
    std::mt19937_64 gen(5);
    std::ranges::shuffle(pair_perm, gen);
    // Row r of x moves to row map[r]; the twins keep their relative order.
    std::vector<std::size_t> map(30);
    Matrix y(30, 3);
    for (std::size_t p = 0; p < 15; ++p) {
        for (std::size_t t = 0; t < 2; ++t) {
            map[2 * p + t] = 2 * pair_perm[p] + t;
            y.row(static_cast<Eigen::Index>(map[2 * p + t])) = x.row(static_cast<Eigen::Index>(2 * p + t));
        }
    }
    for (std::size_t k : {1u, 2u, 4u}) {
        EdgeSet mapped;
        for (const auto& [a, b] : edges_of(knn_graph(x, k))) {
            mapped.insert({std::min(map[a], map[b]), std::max(map[a], map[b])});
        }
        CHECK(mapped == edges_of(knn_graph(y, k)));
    }
    // With k = 1 every row links only to its twin.
    CHECK(edges_of(knn_graph(x, 1)).size() == 15);
}

TEST_CASE("heat kernel weights and automatic width")
{
    const Matrix x = test_support::gaussian_matrix(25, 2, 8);
    const KnnGraph g = knn_graph(x, 3);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [i, j] : edges_of(g)) {
        sum += (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm();
        ++count;
    }
    const double t = sum / static_cast<double>(count);
    CHECK(g.kernel_width() == Catch::Approx(t).epsilon(1e-12));
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        for (const GraphEdge& e : g.neighbors(i)) {
            CHECK(e.weight == Catch::Approx(std::exp(-e.squared_distance / t)).epsilon(1e-12));
        }
    }
    const KnnGraph fixed = knn_graph(x, 3, 0.5);
    CHECK(fixed.kernel_width() == 0.5);
    CHECK_THROWS_AS(knn_graph(x, 3, 0.0), UsageError);
}

TEST_CASE("graph preconditions")
{
    const Matrix x = test_support::gaussian_matrix(3, 2, 1);
    CHECK_THROWS_AS(knn_graph(x, 3), Error);
    CHECK_THROWS_AS(knn_graph(x, 0), UsageError);
    const Matrix same = Matrix::Ones(4, 2);
    const KnnGraph g = knn_graph(same, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        for (const GraphEdge& e : g.neighbors(i)) {
            CHECK(e.weight == 1.0);
        }
    }
}
