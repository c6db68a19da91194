#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcpred/features.hpp"
#include "lcpred/matrix.hpp"

namespace lcpred {

// Perception distortion: distances scale by (1 -/+ a), speeds by (1 +/- b) for
// cautious/aggressive drivers; general drivers see the precise values.
struct FuzzyCoefficients {
    double a = 0.0;  // distance coefficient
    double b = 0.0;  // speed coefficient

    FuzzyCoefficients() = default;
    FuzzyCoefficients(double distance, double speed);  // throws ConfigError outside [0, 1)

    std::string tag() const;  // "F_<a>_<b>"
    friend bool operator==(const FuzzyCoefficients&, const FuzzyCoefficients&) = default;
};

enum class DatasetVariant {
    bird,             // precise features
    bird_with_style,  // precise features + driving style category
    fuzzy,            // style-fuzzified features, no style column
};

std::string_view to_string(DatasetVariant v) noexcept;
DatasetVariant parse_variant(std::string_view text);

// Which speed-typed variables the speed coefficient touches.
enum class SpeedScope {
    all,                 // every relative and absolute speed, SV's own included
    exclude_subject,     // leave v_sv and vlat_sv precise
};

SpeedScope parse_speed_scope(std::string_view text);
std::string_view to_string(SpeedScope s) noexcept;

enum class InputForm { aggregate, sequence };

double fuzzy_factor(FeatureKind kind, DrivingStyle style, const FuzzyCoefficients& c) noexcept;
bool is_fuzzified(Feature f, SpeedScope scope) noexcept;

FrameFeatures fuzzify(const FrameFeatures& f, DrivingStyle style, const FuzzyCoefficients& c,
                      SpeedScope scope = SpeedScope::all);
// Mean and standard deviation of a variable scale by the same (positive) factor.
AggregateFeatures fuzzify(const AggregateFeatures& f, DrivingStyle style, const FuzzyCoefficients& c,
                          SpeedScope scope = SpeedScope::all);
FeatureSample fuzzify_features(const FeatureSample& sample, DrivingStyle style, const FuzzyCoefficients& c,
                               SpeedScope scope = SpeedScope::all);

struct DatasetSpec {
    DatasetVariant variant = DatasetVariant::bird;
    std::optional<FuzzyCoefficients> coefficients;  // required for fuzzy, forbidden otherwise
    InputForm form = InputForm::aggregate;
    SpeedScope speed_scope = SpeedScope::all;

    std::string tag() const;  // "Bird", "Bird&DS" or "F_a_b"
};

// A model-input dataset: rows in the LC decision dataset order, labels untouched.
struct ModelDataset {
    DatasetSpec spec;
    std::vector<FeatureSample> samples;

    bool has_style_column() const noexcept { return spec.variant == DatasetVariant::bird_with_style; }
    // Logical columns: 32 aggregate variables, plus the categorical style for Dataset-2.
    std::size_t column_count() const noexcept;
    std::vector<std::string> column_names() const;

    // Numeric aggregate matrix; the style category expands to three one-hot columns.
    FeatureMatrix design_matrix() const;
    std::vector<std::string> design_names() const;

    std::vector<int> labels() const;
    // Leakage groups: one id per (recording, track).
    std::vector<std::size_t> groups() const;
};

// Samples must carry a style for the style-dependent variants.
ModelDataset build_dataset_variant(std::span<const FeatureSample> samples, const DatasetSpec& spec);

// a, b in {0.1, ..., 0.9}, a-major.
std::vector<FuzzyCoefficients> coefficient_grid();

}  // namespace lcpred
