#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcpred/clustering.hpp"
#include "lcpred/cnn_lstm.hpp"
#include "lcpred/forest.hpp"
#include "lcpred/fuzzy.hpp"

namespace lcpred {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;  // 0 when nothing is predicted positive
    double recall = 0.0;     // 0 when there are no positives
    double f1 = 0.0;         // 0 when precision + recall = 0
};

Metrics metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // scores >= threshold are called positive
};

struct RocResult {
    std::vector<RocPoint> curve;  // (0,0) ... (1,1)
    double auc = 0.0;
};

// One point per distinct score; trapezoidal area, which equals the rank statistic
// with ties counted half. Throws DataError unless both classes occur.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

struct MetricsReport {
    std::string split;  // "train" or "test"
    Metrics metrics;
    double auc = 0.0;
    ConfusionMatrix confusion;
};

MetricsReport evaluate_scores(std::string split, std::span<const double> scores, std::span<const int> labels);

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Group-level stratified split: all rows of a group land on one side. Groups are
// bucketed by their (positives, negatives) signature; each bucket is shuffled and
// round((1 - ratio) * size) of its groups go to test. Throws DataError when either
// side lacks a class.
SplitResult split_train_test(std::span<const int> labels, std::span<const std::size_t> groups, double ratio,
                             std::uint64_t seed);

// z-score with train statistics. Zero-variance columns pass through.
FeatureMatrix standardize(const ZScaler& scaler, const FeatureMatrix& data);

struct SequenceScaler {
    std::vector<double> mean;
    std::vector<double> scale;

    // Statistics over every frame of every training sequence.
    static SequenceScaler fit(std::span<const Sequence> sequences);
    Sequence transform(const Sequence& seq) const;
};

enum class ClassifierKind { random_forest, cnn_lstm };

std::string_view to_string(ClassifierKind k) noexcept;
ClassifierKind parse_classifier(std::string_view text);

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::random_forest;
    ForestConfig forest;
    NetworkConfig network;
    double split_ratio = 0.9;
    double validation_fraction = 0.1;  // train groups held out for early stopping
};

struct ExperimentResult {
    std::string run;  // "Bird", "Bird&DS", "F_a_b"
    DatasetSpec dataset;
    ClassifierKind classifier = ClassifierKind::random_forest;
    bool ok = false;
    std::string error;
    MetricsReport train;
    MetricsReport test;
    RocResult test_roc;
    std::vector<std::string> feature_names;
    std::vector<double> importance;  // forest only
    TrainHistory history;            // network only
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::uint64_t split_seed = 0;
    std::uint64_t model_seed = 0;
    std::string model_hash;
    std::optional<Forest> forest;
    std::optional<Network> network;
};

// Split, standardize on train, fit, score. The split and model seeds come from
// `seed` alone, so every variant of one dataset sees the same split.
ExperimentResult run_experiment(const ModelDataset& dataset, const ClassifierSpec& spec, std::uint64_t seed);

// Network input for one sample, in model-dataset feature form.
Sequence to_sequence(const FeatureSample& sample);

struct SweepOptions {
    InputForm form = InputForm::aggregate;
    SpeedScope speed_scope = SpeedScope::all;
    bool include_style_baseline = true;  // forest only
    bool keep_models = false;
};

// Baselines plus one run per grid point. Failed runs are flagged and kept.
std::vector<ExperimentResult> sweep(std::span<const FeatureSample> samples, std::span<const FuzzyCoefficients> grid,
                                    const ClassifierSpec& spec, std::uint64_t seed, const SweepOptions& options = {});

// Test accuracy descending; ties: baselines first, then (a, b). Failed runs last.
void sort_leaderboard(std::vector<ExperimentResult>& runs);

// Columns: rank, run, variant, a, b, train_/test_ x accuracy, precision, recall,
// f1, auc, status.
std::string leaderboard_csv(const std::vector<ExperimentResult>& runs, const std::string& provenance = "");
std::string roc_csv(const RocResult& roc, const std::string& provenance = "");

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json metrics_json(const ExperimentResult& r);

}  // namespace lcpred
