#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "lcpred/common.hpp"
#include "lcpred/forest.hpp"
#include "lcpred/synth.hpp"

using namespace lcpred;

namespace {

FeatureMatrix column(std::vector<double> v) {
    FeatureMatrix x(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) x(i, 0) = v[i];
    return x;
}

double walk(const DecisionTree& t, std::span<const double> x) {
    std::size_t i = 0;
    while (t.nodes[i].feature >= 0) i = static_cast<std::size_t>(x[t.nodes[i].feature] <= t.nodes[i].threshold ? t.nodes[i].left : t.nodes[i].right);
    return t.nodes[i].value;
}

ForestConfig cfg(int trees, std::uint64_t seed = 5) {
    ForestConfig c;
    c.n_trees = trees;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Tree, SeparableOneFeatureSplitsAtMidpoint) {
    const auto x = column({1, 2, 3, 10, 11, 12});
    const std::vector<int> y{0, 0, 0, 1, 1, 1};
    std::vector<std::size_t> rows(6);
    std::iota(rows.begin(), rows.end(), 0);
    const auto t = train_tree(x, y, rows, cfg(1), 1);
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].feature, 0);
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 6.5);
    EXPECT_DOUBLE_EQ(t.nodes[0].impurity, 0.5);
    EXPECT_EQ(t.nodes[t.nodes[0].left].value, 0.0);
    EXPECT_EQ(t.nodes[t.nodes[0].right].value, 1.0);
    EXPECT_EQ(t.depth(), 1);
    const double probe[] = {6.5};
    EXPECT_EQ(t.predict(probe), 0.0);
}

TEST(Tree, MemorizesDistinctRows) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    FeatureMatrix x(200, 4);
    std::vector<int> y(200);
    for (std::size_t r = 0; r < 200; ++r) {
        for (std::size_t c = 0; c < 4; ++c) x(r, c) = g(rng);
        y[r] = static_cast<int>(r % 2);
    }
    auto c = cfg(1);
    c.bootstrap = false;
    c.features_per_split = 4;
    const auto f = train_forest(x, y, c);
    for (std::size_t r = 0; r < 200; ++r) EXPECT_EQ(predict_proba(f, x.row(r)), y[r]);
}

TEST(Tree, DepthAndLeafLimits) {
    auto x = column({1, 2, 3, 4, 5, 6, 7, 8});
    const std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1};
    std::vector<std::size_t> rows(8);
    std::iota(rows.begin(), rows.end(), 0);
    auto c = cfg(1);
    c.max_depth = 2;
    EXPECT_LE(train_tree(x, y, rows, c, 1).depth(), 2);
    c.max_depth = 0;
    c.min_samples_leaf = 3;
    for (const auto& n : train_tree(x, y, rows, c, 1).nodes) EXPECT_GE(n.samples, 3u);
}

TEST(Forest, SingleUnbaggedTreeEqualsTree) {
    const auto data = planted_aggregate(120, 6, 2, 4);
    auto c = cfg(1);
    c.bootstrap = false;
    c.features_per_split = 6;
    const auto f = train_forest(data.x, data.y, c);
    std::vector<std::size_t> rows(120);
    std::iota(rows.begin(), rows.end(), 0);
    const auto t = train_tree(data.x, data.y, rows, c, 999);
    ASSERT_EQ(f.trees.size(), 1u);
    EXPECT_EQ(f.trees[0], t);
}

TEST(Forest, PredictionIsMeanOfTreeWalks) {
    const auto data = planted_aggregate(300, 8, 3, 7);
    const auto f = train_forest(data.x, data.y, cfg(25));
    for (std::size_t r = 0; r < 300; r += 7) {
        double s = 0.0;
        for (const auto& t : f.trees) s += walk(t, data.x.row(r));
        EXPECT_NEAR(predict_proba(f, data.x.row(r)), s / 25.0, 1e-15);
    }
}

TEST(Forest, ImportanceSumsToOneAndFindsSignal) {
    const auto data = planted_aggregate(400, 10, 6, 11);
    const auto f = train_forest(data.x, data.y, cfg(100));
    const auto imp = feature_importance(f);
    ASSERT_EQ(imp.size(), 10u);
    EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-12);
    for (double v : imp) EXPECT_GE(v, 0.0);
    EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 6);
    const auto csv = importance_csv(f);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,feature,importance");
}

TEST(Forest, DeterministicAcrossThreadCounts) {
    const auto data = planted_aggregate(200, 8, 1, 2);
    auto c = cfg(40, 17);
    const auto a = train_forest(data.x, data.y, c);
    c.threads = 4;
    const auto b = train_forest(data.x, data.y, c);
    EXPECT_EQ(a.trees, b.trees);
    const auto other = train_forest(data.x, data.y, cfg(40, 18));
    EXPECT_NE(a.trees, other.trees);
}

TEST(Forest, JsonRoundTrip) {
    const auto data = planted_aggregate(150, 5, 0, 3);
    const auto f = train_forest(data.x, data.y, cfg(10), {"a", "b", "c", "d", "e"});
    const auto g = forest_from_json(nlohmann::json::parse(to_json(f).dump()));
    EXPECT_TRUE(f == g);
    EXPECT_EQ(g.feature_names[4], "e");
    EXPECT_EQ(predict_proba(f, data.x), predict_proba(g, data.x));
}

TEST(Forest, InputErrors) {
    const auto x = column({1, 2, 3});
    EXPECT_THROW(train_forest(x, std::vector<int>{1, 1, 1}, cfg(3)), DataError);
    EXPECT_THROW(train_forest(x, std::vector<int>{1, 0}, cfg(3)), DataError);
    auto bad = column({1, NAN, 3});
    EXPECT_THROW(train_forest(bad, std::vector<int>{1, 0, 1}, cfg(3)), DataError);
    EXPECT_THROW(train_forest(x, std::vector<int>{1, 0, 1}, cfg(0)), ConfigError);
    const auto f = train_forest(x, std::vector<int>{1, 0, 1}, cfg(3));
    const double two[] = {1.0, 2.0};
    EXPECT_THROW(predict_proba(f, two), DataError);
}
