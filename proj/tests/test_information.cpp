#include "catch_amalgamated.hpp"
#include "support.hpp"

#include <bit>
#include <cmath>
#include <random>

using namespace channelrank;

TEST_CASE("mean/sd discretization")
{
    const std::vector<double> wide{-10.0, 0.0, 10.0};
    CHECK(discretize(wide) == std::vector<int>{1, 1, 1});

    for (double v : {0.1, -3.7, 1e9}) {
        const std::vector<double> constant(1001, v);
        CHECK(discretize(constant) == std::vector<int>(1001, 1));
    }

    // mean 2.5, sample sd 1.870829: boundaries 0.629 and 4.371.
    const std::vector<double> ramp{0, 1, 2, 3, 4, 5};
    CHECK(discretize(ramp) == std::vector<int>{0, 1, 1, 1, 1, 2});
}

TEST_CASE("mean/sd levels on a standard normal sample")
{
    std::mt19937_64 gen(123);
    std::normal_distribution<double> normal;
    std::vector<double> column(1000000);
    for (double& x : column) x = normal(gen);
    const auto levels = discretize(column);
    std::array<double, 3> share{};
    for (int l : levels) share[static_cast<std::size_t>(l)] += 1.0;
    for (double& s : share) s /= static_cast<double>(column.size());
    // Tail mass of N(0,1) beyond one sd.
    const double tail = 0.5 * std::erfc(1.0 / std::sqrt(2.0));
    CHECK(std::abs(share[0] - tail) < 0.01);
    CHECK(std::abs(share[1] - (1.0 - 2.0 * tail)) < 0.01);
    CHECK(std::abs(share[2] - tail) < 0.01);
}

TEST_CASE("equal-width discretization")
{
    const std::vector<double> column{0.0, 0.24, 0.26, 0.5, 0.74, 1.0};
    CHECK(discretize(column, DiscretizationScheme::equal_width(4)) == std::vector<int>{0, 0, 1, 2, 2, 3});
    CHECK(discretize(column, DiscretizationScheme::from_bins(2)) == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK_THROWS_AS(discretize(column, DiscretizationScheme::equal_width(1)), UsageError);
}

TEST_CASE("mutual information identities")
{
    const std::vector<int> binary{0, 1, 0, 1, 1, 0, 1, 0};
    CHECK(mutual_information(binary, binary) == 1.0);
    CHECK(entropy(binary) == 1.0);

    // Every (a, b) cell holds the same count: an exact product distribution.
    std::vector<int> x;
    std::vector<int> y;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 3; ++b) {
            for (int rep = 0; rep < 4; ++rep) {
                x.push_back(a);
                y.push_back(b * 7 - 2);
            }
        }
    }
    CHECK(mutual_information(x, y) == 0.0);

    const std::vector<int> shorter{0, 1};
    CHECK_THROWS_AS(mutual_information(binary, shorter), Error);
}

TEST_CASE("mutual information hand value")
{
    // Joint counts (0,0):2 (0,1):1 (1,0):1 (1,1):2, n = 6, both marginals 1/2.
    const std::vector<int> x{0, 0, 0, 1, 1, 1};
    const std::vector<int> y{0, 0, 1, 0, 1, 1};
    double expected = 0.0;
    const double n = 6.0;
    const double cells[2][2] = {{2, 1}, {1, 2}};
    for (auto& row : cells) {
        for (double c : row) {
            const double p = c / n;
            expected += p * std::log2(p / (0.5 * 0.5));
        }
    }
    CHECK(mutual_information(x, y) == Catch::Approx(expected).epsilon(1e-15));
    CHECK(expected == Catch::Approx(0.0817041659455).epsilon(1e-10));
}

TEST_CASE("mutual information is symmetric and bounded by entropy")
{
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + gen() % 300;
        const int kx = 1 + static_cast<int>(gen() % 5);
        const int ky = 1 + static_cast<int>(gen() % 5);
        std::vector<int> x(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<int>(gen() % static_cast<unsigned>(kx));
            y[i] = (gen() % 3 == 0) ? x[i] : static_cast<int>(gen() % static_cast<unsigned>(ky));
        }
        const double xy = mutual_information(x, y);
        const double yx = mutual_information(y, x);
        REQUIRE(std::bit_cast<std::uint64_t>(xy) == std::bit_cast<std::uint64_t>(yx));
        REQUIRE(mutual_information(x, x) == entropy(x));
        REQUIRE(xy >= -1e-12);
        REQUIRE(xy <= std::min(entropy(x), entropy(y)) + 1e-12);
    }
}
