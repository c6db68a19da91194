#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "lcpred/common.hpp"
#include "lcpred/evaluation.hpp"
#include "lcpred/synth.hpp"

using namespace lcpred;

namespace {

// 100 LC/LK pairs, one group each.
struct Pairs {
    std::vector<int> labels;
    std::vector<std::size_t> groups;
};

Pairs balanced_pairs(std::size_t n) {
    Pairs p;
    for (std::size_t g = 0; g < n; ++g) {
        p.labels.insert(p.labels.end(), {1, 0});
        p.groups.insert(p.groups.end(), {g, g});
    }
    return p;
}

std::vector<FeatureSample> styled_samples() {
    CorpusOptions opt;
    opt.seed = 4;
    opt.recordings_per_preset = 4;
    std::vector<Recording> recs;
    for (const auto& r : corpus(opt)) recs.push_back(r.recording());
    auto s = feature_samples(build_lc_decision_dataset(recs));
    const DrivingStyle cycle[] = {DrivingStyle::aggressive, DrivingStyle::cautious, DrivingStyle::general};
    for (std::size_t i = 0; i < s.size(); ++i) s[i].style = cycle[(i / 2) % 3];
    return s;
}

ClassifierSpec quick_forest() {
    ClassifierSpec s;
    s.forest.n_trees = 15;
    return s;
}

}  // namespace

TEST(Split, GroupStratifiedAndDeterministic) {
    const auto p = balanced_pairs(100);
    const auto a = split_train_test(p.labels, p.groups, 0.9, 3);
    EXPECT_EQ(a.train.size(), 180u);
    EXPECT_EQ(a.test.size(), 20u);
    std::set<std::size_t> train_groups, test_groups;
    for (auto i : a.train) train_groups.insert(p.groups[i]);
    for (auto i : a.test) test_groups.insert(p.groups[i]);
    for (auto g : test_groups) EXPECT_EQ(train_groups.count(g), 0u);
    const auto b = split_train_test(p.labels, p.groups, 0.9, 3);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(split_train_test(p.labels, p.groups, 0.9, 4).test, a.test);
    std::size_t pos = 0;
    for (auto i : a.test) pos += p.labels[i];
    EXPECT_EQ(pos, 10u);
}

TEST(Split, MissingClassThrows) {
    const std::vector<int> y{1, 1, 1, 1};
    const std::vector<std::size_t> g{0, 1, 2, 3};
    EXPECT_THROW(split_train_test(y, g, 0.5, 1), DataError);
}

TEST(Scaling, TrainStatisticsAndConstantColumns) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(4.0, 3.0);
    FeatureMatrix x(50, 3);
    for (std::size_t r = 0; r < 50; ++r) {
        x(r, 0) = g(rng);
        x(r, 1) = 7.25;
        x(r, 2) = g(rng) * 100.0;
    }
    const auto z = standardize(ZScaler::fit(x), x);
    for (std::size_t c : {0u, 2u}) {
        double s = 0, ss = 0;
        for (std::size_t r = 0; r < 50; ++r) s += z(r, c);
        for (std::size_t r = 0; r < 50; ++r) ss += (z(r, c) - s / 50) * (z(r, c) - s / 50);
        EXPECT_NEAR(s / 50, 0.0, 1e-12);
        EXPECT_NEAR(std::sqrt(ss / 50), 1.0, 1e-12);
    }
    for (std::size_t r = 0; r < 50; ++r) EXPECT_EQ(z(r, 1), x(r, 1));

    std::vector<Sequence> seqs(4, Sequence(5, std::vector<double>{1.0, 0.0}));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t t = 0; t < 5; ++t) seqs[i][t][1] = static_cast<double>(i * 5 + t);
    const auto sc = SequenceScaler::fit(seqs);
    EXPECT_EQ(sc.transform(seqs[0])[0][0], 1.0);
    EXPECT_NEAR(sc.mean[1], 9.5, 1e-12);
    EXPECT_NEAR(sc.scale[1], std::sqrt((400.0 - 1.0) / 12.0), 1e-12);
}

TEST(Metrics, DirectFormulas) {
    ConfusionMatrix cm{50, 5, 40, 5};
    const auto m = metrics(cm);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.9);
    EXPECT_DOUBLE_EQ(m.precision, 50.0 / 55.0);
    EXPECT_DOUBLE_EQ(m.recall, 50.0 / 55.0);
    EXPECT_DOUBLE_EQ(m.f1, 50.0 / 55.0);
    const auto none = metrics(ConfusionMatrix{0, 0, 10, 3});
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.recall, 0.0);
    EXPECT_EQ(none.f1, 0.0);
}

TEST(Metrics, ConfusionThreshold) {
    const std::vector<double> s{0.9, 0.5, 0.49, 0.1, 0.7};
    const std::vector<int> y{1, 0, 1, 0, 1};
    const auto cm = confusion(s, y);
    EXPECT_EQ(cm, (ConfusionMatrix{2, 1, 1, 1}));
}

TEST(Roc, ExtremesAndTies) {
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y).auc, 1.0);
    EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y).auc, 0.0);
    const auto flat = roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y);
    EXPECT_DOUBLE_EQ(flat.auc, 0.5);
    ASSERT_EQ(flat.curve.size(), 2u);
    EXPECT_EQ(flat.curve.front().fpr, 0.0);
    EXPECT_EQ(flat.curve.back().tpr, 1.0);
    EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DataError);
}

TEST(Roc, MatchesPairwiseStatistic) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> q(0, 9);
    std::vector<double> s(300);
    std::vector<int> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        y[i] = static_cast<int>(i % 3 == 0);
        s[i] = q(rng) / 10.0 + 0.05 * y[i];
    }
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < 300; ++i)
        for (std::size_t j = 0; j < 300; ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    EXPECT_NEAR(roc_auc(s, y).auc, wins / pairs, 1e-12);
}

TEST(Experiment, IdentityFuzzyEqualsBird) {
    const auto samples = styled_samples();
    const auto spec = quick_forest();
    const auto bird = run_experiment(build_dataset_variant(samples, {DatasetVariant::bird, std::nullopt}), spec, 9);
    const auto f00 = run_experiment(
        build_dataset_variant(samples, {DatasetVariant::fuzzy, FuzzyCoefficients(0.0, 0.0)}), spec, 9);
    ASSERT_TRUE(bird.ok) << bird.error;
    ASSERT_TRUE(f00.ok) << f00.error;
    EXPECT_EQ(bird.test.confusion, f00.test.confusion);
    EXPECT_EQ(bird.test.auc, f00.test.auc);
    EXPECT_EQ(bird.model_hash, f00.model_hash);
    EXPECT_EQ(bird.split_seed, f00.split_seed);
    EXPECT_EQ(bird.train_rows + bird.test_rows, samples.size());
}

TEST(Sweep, FullGridLeaderboard) {
    const auto samples = styled_samples();
    const auto grid = coefficient_grid();
    auto runs = sweep(samples, grid, quick_forest(), 2);
    ASSERT_EQ(runs.size(), 83u);
    sort_leaderboard(runs);
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].ok && runs[i - 1].ok)
            EXPECT_GE(runs[i - 1].test.metrics.accuracy, runs[i].test.metrics.accuracy);
    }
    std::set<std::string> names;
    for (const auto& r : runs) names.insert(r.run);
    EXPECT_EQ(names.size(), 83u);
    EXPECT_EQ(names.count("Bird"), 1u);
    EXPECT_EQ(names.count("Bird&DS"), 1u);
    EXPECT_EQ(names.count("F_0.9_0.9"), 1u);
    const auto csv = leaderboard_csv(runs, "config_hash=0 seed=2");
    EXPECT_EQ(csv.rfind("# config_hash=0 seed=2\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 85);
}

TEST(Sweep, IdentityGridEqualsBaseline) {
    const auto samples = styled_samples();
    const std::vector<FuzzyCoefficients> grid{FuzzyCoefficients(0.0, 0.0)};
    SweepOptions opt;
    opt.include_style_baseline = false;
    const auto runs = sweep(samples, grid, quick_forest(), 6, opt);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_EQ(runs[0].test.confusion, runs[1].test.confusion);
    EXPECT_EQ(runs[0].test.auc, runs[1].test.auc);
}

TEST(Sweep, TieOrderPutsBaselinesFirst) {
    std::vector<ExperimentResult> runs(4);
    runs[0].run = "F_0.2_0.1";
    runs[0].dataset = {DatasetVariant::fuzzy, FuzzyCoefficients(0.2, 0.1)};
    runs[1].run = "F_0.1_0.3";
    runs[1].dataset = {DatasetVariant::fuzzy, FuzzyCoefficients(0.1, 0.3)};
    runs[2].run = "Bird";
    runs[3].run = "Bird&DS";
    runs[3].dataset.variant = DatasetVariant::bird_with_style;
    for (auto& r : runs) {
        r.ok = true;
        r.test.metrics.accuracy = 0.8;
    }
    runs[0].ok = false;
    sort_leaderboard(runs);
    EXPECT_EQ(runs[0].run, "Bird");
    EXPECT_EQ(runs[1].run, "Bird&DS");
    EXPECT_EQ(runs[2].run, "F_0.1_0.3");
    EXPECT_EQ(runs[3].run, "F_0.2_0.1");
}

TEST(Names, Classifier) {
    EXPECT_EQ(parse_classifier(to_string(ClassifierKind::cnn_lstm)), ClassifierKind::cnn_lstm);
    EXPECT_EQ(parse_classifier(to_string(ClassifierKind::random_forest)), ClassifierKind::random_forest);
    EXPECT_THROW(parse_classifier("svm"), ConfigError);
}
