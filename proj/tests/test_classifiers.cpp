#include "catch_amalgamated.hpp"
#include "support.hpp"
#include "oracles.hpp"

#include <Eigen/LU>

#include <cmath>
#include <map>
#include <random>

using namespace channelrank;
using test_support::gaussian_matrix;
using test_support::labeled;
using test_support::two_blocks;
using test_support::knn_oracle;

namespace {

// Root split by exhaustive search over every column and midpoint.
std::pair<std::size_t, double> root_split_oracle(const Matrix& x, const std::vector<Label>& y, std::size_t min_leaf)
{
    const auto gini_n = [](const std::map<Label, double>& counts) {
        double n = 0, sq = 0;
        for (const auto& [l, c] : counts) { n += c; sq += c * c; }
        return n == 0 ? 0.0 : n - sq / n;
    };
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, double> arg{0, 0.0};
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        std::vector<double> values(x.col(c).begin(), x.col(c).end());
        std::ranges::sort(values);
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double t = 0.5 * (values[v] + values[v + 1]);
            std::map<Label, double> left, right;
            std::size_t nl = 0;
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                if (x(r, c) <= t) { ++left[y[static_cast<std::size_t>(r)]]; ++nl; }
                else ++right[y[static_cast<std::size_t>(r)]];
            }
            if (nl < min_leaf || static_cast<std::size_t>(x.rows()) - nl < min_leaf) continue;
            const double imp = gini_n(left) + gini_n(right);
            if (imp < best) { best = imp; arg = {static_cast<std::size_t>(c), t}; }
        }
    }
    return arg;
}

} // namespace

TEST_CASE("knn matches an all-pairs oracle on 50 random instances")
{
    std::mt19937_64 gen(31);
    for (int instance = 0; instance < 50; ++instance) {
        Matrix train = gaussian_matrix(50, 4, gen());
        Matrix test = gaussian_matrix(20, 4, gen());
        if (instance % 2 == 1) {
            // Coarse grid values make distance ties frequent.
            train = train.array().round();
            test = test.array().round();
        }
        std::vector<Label> y(50);
        for (auto& label : y) label = static_cast<Label>(gen() % 3) * 2 + 1;
        y[0] = 1; y[1] = 3;
        const LabeledMatrix tr = labeled(train, y);
        const LabeledMatrix te = labeled(test, std::vector<Label>(20, 1));
        for (std::size_t k : {1u, 3u, 4u, 7u}) {
            ClassifierSpec spec;
            spec.knn_k = k;
            REQUIRE(predict(fit(spec, tr), te) == knn_oracle(tr, te, k));
        }
    }
}

TEST_CASE("knn simple cases")
{
    const LabeledMatrix train = labeled(test_support::from_rows({{0.0}, {0.1}, {1.0}, {5.0}}), {1, 1, 2, 2});
    ClassifierSpec spec;
    const LabeledMatrix query = labeled(test_support::from_rows({{0.2}}), {1});
    CHECK(predict(fit(spec, train), query) == std::vector<Label>{1});

    spec.knn_k = 1;
    const ClassifierModel model = fit(spec, train);
    CHECK(predict(model, train) == train.labels());

    spec.knn_k = 5;
    CHECK_THROWS_AS(fit(spec, train), Error);
    spec.knn_k = 2;
    CHECK(spec.warnings(2).size() == 1);
    // Vote tie between labels 1 and 2 at k = 2: smallest label.
    const LabeledMatrix mid = labeled(test_support::from_rows({{0.55}}), {1});
    const LabeledMatrix pair = labeled(test_support::from_rows({{0.1}, {1.0}}), {2, 1});
    CHECK(predict(fit(spec, pair), mid) == std::vector<Label>{1});
}

TEST_CASE("lda: symmetric 1-D classes split at zero, ties to the smallest label")
{
    // Class 5 has mean -1, class 3 has mean +1, equal spread and size.
    const LabeledMatrix train = labeled(test_support::from_rows({{-2.0}, {0.0}, {-1.0}, {2.0}, {0.0}, {1.0}}),
                                        {5, 5, 5, 3, 3, 3});
    ClassifierSpec spec;
    spec.kind = ClassifierKind::lda;
    const ClassifierModel model = fit(spec, train);
    const LabeledMatrix probes = labeled(test_support::from_rows({{-0.5}, {-1e-9}, {0.0}, {1e-9}, {0.5}}), {3, 3, 3, 3, 3});
    CHECK(predict(model, probes) == std::vector<Label>{5, 5, 3, 3, 3});
}

TEST_CASE("lda: direction follows inverse covariance times the mean gap")
{
    std::mt19937_64 gen(41);
    std::normal_distribution<double> normal;
    Eigen::Matrix3d sigma;
    sigma << 2.0, 0.6, 0.3, 0.6, 1.0, -0.2, 0.3, -0.2, 0.5;
    const Eigen::Matrix3d chol = sigma.llt().matrixL();
    const Eigen::Vector3d mu_a(0.0, 0.0, 0.0);
    const Eigen::Vector3d mu_b(1.0, -0.5, 0.25);
    const std::size_t n = 10000;
    Matrix x(static_cast<Eigen::Index>(n), 3);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d z(normal(gen), normal(gen), normal(gen));
        const Eigen::Vector3d v = (i < n / 2 ? mu_a : mu_b) + chol * z;
        x.row(static_cast<Eigen::Index>(i)) = v.transpose();
        y[i] = i < n / 2 ? 1 : 2;
    }
    ClassifierSpec spec;
    spec.kind = ClassifierKind::lda;
    const ClassifierModel model = fit(spec, labeled(x, y));
    const auto& lda = std::get<LdaModel>(model.payload());
    const Eigen::Vector3d truth = sigma.inverse() * (mu_b - mu_a);
    const Vector got = lda.direction(0, 1);
    const double cosine = got.dot(truth) / (got.norm() * truth.norm());
    CHECK(cosine > 0.99);
}

TEST_CASE("lda degenerate inputs")
{
    ClassifierSpec spec;
    spec.kind = ClassifierKind::lda;
    CHECK_THROWS_AS(fit(spec, labeled(test_support::from_rows({{1.0}, {2.0}, {3.0}}), {1, 2, 2})), Error);
    // Constant channel within classes: covariance is zero.
    CHECK_THROWS_AS(fit(spec, labeled(test_support::from_rows({{1.0}, {1.0}, {3.0}, {3.0}}), {1, 1, 2, 2})), Error);
    // Two identical channels with no ridge: singular.
    Matrix twin = gaussian_matrix(20, 1, 3);
    Matrix both(20, 2);
    both << twin, twin;
    spec.lda_ridge = 0.0;
    CHECK_THROWS_AS(fit(spec, labeled(both, two_blocks(20))), Error);
    spec.lda_ridge = 1e-6;
    CHECK_NOTHROW(fit(spec, labeled(both, two_blocks(20))));
}

TEST_CASE("tree: separable 1-D data gives one split and full training accuracy")
{
    Matrix x(40, 1);
    for (Eigen::Index r = 0; r < 40; ++r) x(r, 0) = static_cast<double>(r < 20 ? r : r + 10);
    const LabeledMatrix train = labeled(x, two_blocks(40));
    ClassifierSpec spec;
    spec.kind = ClassifierKind::tree;
    const ClassifierModel model = fit(spec, train);
    const auto& tree = std::get<TreeModel>(model.payload());
    CHECK(tree.depth() == 1);
    CHECK(tree.nodes[0].threshold == 24.5);
    CHECK(accuracy(predict(model, train), train.labels()) == 100.0);
}

TEST_CASE("tree: root split matches exhaustive search")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix x = gaussian_matrix(60, 4, 500 + seed);
        std::vector<Label> y(60);
        std::mt19937_64 gen(seed);
        for (std::size_t i = 0; i < 60; ++i) {
            y[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(seed % 4)) + 0.5 * static_cast<double>(gen() % 3) > 0.3 ? 2 : 1;
        }
        ClassifierSpec spec;
        spec.kind = ClassifierKind::tree;
        spec.tree_max_depth = 1;
        const ClassifierModel model = fit(spec, labeled(x, y));
        const auto& tree = std::get<TreeModel>(model.payload());
        const auto [column, threshold] = root_split_oracle(x, y, spec.tree_min_leaf);
        REQUIRE(tree.nodes[0].column.has_value());
        CHECK(*tree.nodes[0].column == column);
        CHECK(tree.nodes[0].threshold == threshold);
    }
}

TEST_CASE("tree: training accuracy never drops with depth")
{
    const Matrix x = gaussian_matrix(300, 5, 61);
    std::vector<Label> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        y[i] = (x(r, 0) * x(r, 1) > 0.0) ? 1 : (x(r, 2) > 0.5 ? 2 : 3);
    }
    const LabeledMatrix train = labeled(x, y);
    double previous = 0.0;
    for (std::size_t depth = 1; depth <= 12; ++depth) {
        ClassifierSpec spec;
        spec.kind = ClassifierKind::tree;
        spec.tree_max_depth = depth;
        spec.tree_min_leaf = 1;
        const ClassifierModel model = fit(spec, train);
        const double acc = accuracy(predict(model, train), train.labels());
        CHECK(acc >= previous);
        CHECK(std::get<TreeModel>(model.payload()).depth() <= depth);
        previous = acc;
    }
}

TEST_CASE("tree: equal split quality goes to the lower channel id")
{
    // Channels 0 and 1 carry the same ordering, so every split ties.
    Matrix x(20, 2);
    for (Eigen::Index r = 0; r < 20; ++r) {
        x(r, 0) = static_cast<double>(r);
        x(r, 1) = static_cast<double>(2 * r);
    }
    ClassifierSpec spec;
    spec.kind = ClassifierKind::tree;
    const LabeledMatrix forward(x, two_blocks(20), {7, 3});
    const ClassifierModel model = fit(spec, forward);
    const auto& tree = std::get<TreeModel>(model.payload());
    CHECK(tree.nodes[0].channel == 3);
}

TEST_CASE("predict and accuracy contracts")
{
    const LabeledMatrix train = labeled(gaussian_matrix(20, 3, 1), two_blocks(20));
    const ClassifierModel model = fit(ClassifierSpec{}, train);
    const std::vector<ChannelId> two{0, 1};
    CHECK_THROWS_AS(predict(model, project_channels(train, two)), Error);
    const std::vector<ChannelId> swapped{1, 0, 2};
    CHECK_THROWS_AS(predict(model, project_channels(train, swapped)), Error);

    const std::vector<Label> a{1, 2, 1, 2};
    const std::vector<Label> b{2, 1, 2, 1};
    const std::vector<Label> c{1, 2, 1, 1};
    CHECK(accuracy(a, a) == 100.0);
    CHECK(accuracy(a, b) == 0.0);
    CHECK(accuracy(a, c) == 75.0);
    CHECK_THROWS_AS(accuracy(a, std::vector<Label>{1}), Error);
    CHECK_THROWS_AS(accuracy(std::vector<Label>{}, std::vector<Label>{}), Error);

    CHECK(parse_classifier_kind("dt") == ClassifierKind::tree);
    CHECK_THROWS_AS(parse_classifier_kind("svm"), UsageError);
    CHECK_THROWS_AS(fit(ClassifierSpec{}, labeled(gaussian_matrix(4, 1, 1), {1, 1, 1, 1})), Error);
}

TEST_CASE("predictions do not depend on the thread count")
{
    const LabeledMatrix train = labeled(gaussian_matrix(300, 6, 71), two_blocks(300));
    const LabeledMatrix test = labeled(gaussian_matrix(500, 6, 72), two_blocks(500));
    for (ClassifierKind kind : {ClassifierKind::knn, ClassifierKind::lda, ClassifierKind::tree}) {
        ClassifierSpec spec;
        spec.kind = kind;
        const ClassifierModel model = fit(spec, train);
        CHECK(predict(model, test, 1) == predict(model, test, 4));
    }
}
