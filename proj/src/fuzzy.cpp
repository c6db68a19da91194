#include "lcpred/fuzzy.hpp"

#include <map>

#include "lcpred/csv.hpp"

namespace lcpred {

FuzzyCoefficients::FuzzyCoefficients(double distance, double speed) : a(distance), b(speed) {
    if (!(a >= 0.0 && a < 1.0) || !(b >= 0.0 && b < 1.0)) {
        throw ConfigError("fuzzy coefficients must lie in [0, 1): a=" + format_double(a) + " b=" + format_double(b));
    }
}

std::string FuzzyCoefficients::tag() const { return "F_" + format_double(a) + "_" + format_double(b); }

std::string_view to_string(DatasetVariant v) noexcept {
    switch (v) {
        case DatasetVariant::bird: return "bird";
        case DatasetVariant::bird_with_style: return "bird_with_style";
        case DatasetVariant::fuzzy: return "fuzzy";
    }
    return "bird";
}

DatasetVariant parse_variant(std::string_view text) {
    if (text == "bird" || text == "dataset1") return DatasetVariant::bird;
    if (text == "bird_with_style" || text == "dataset2") return DatasetVariant::bird_with_style;
    if (text == "fuzzy" || text == "dataset3") return DatasetVariant::fuzzy;
    throw ConfigError("unknown dataset variant '" + std::string(text) + "'");
}

SpeedScope parse_speed_scope(std::string_view text) {
    if (text == "all") return SpeedScope::all;
    if (text == "exclude_subject") return SpeedScope::exclude_subject;
    throw ConfigError("unknown speed scope '" + std::string(text) + "'");
}

std::string_view to_string(SpeedScope s) noexcept { return s == SpeedScope::all ? "all" : "exclude_subject"; }

double fuzzy_factor(FeatureKind kind, DrivingStyle style, const FuzzyCoefficients& c) noexcept {
    if (style == DrivingStyle::general || kind == FeatureKind::acceleration) return 1.0;
    const bool cautious = style == DrivingStyle::cautious;
    if (kind == FeatureKind::distance) return cautious ? 1.0 - c.a : 1.0 + c.a;
    return cautious ? 1.0 + c.b : 1.0 - c.b;
}

bool is_fuzzified(Feature f, SpeedScope scope) noexcept {
    const auto kind = feature_kind(f);
    if (kind == FeatureKind::acceleration) return false;
    if (kind == FeatureKind::speed && scope == SpeedScope::exclude_subject) {
        return f != Feature::v_sv && f != Feature::vlat_sv;
    }
    return true;
}

FrameFeatures fuzzify(const FrameFeatures& f, DrivingStyle style, const FuzzyCoefficients& c, SpeedScope scope) {
    FrameFeatures out = f;
    if (style == DrivingStyle::general) return out;
    for (std::size_t i = 0; i < kFrameFeatureCount; ++i) {
        const auto feat = static_cast<Feature>(i);
        if (!is_fuzzified(feat, scope)) continue;
        out.values[i] = f.values[i] * fuzzy_factor(feature_kind(feat), style, c);
    }
    return out;
}

AggregateFeatures fuzzify(const AggregateFeatures& f, DrivingStyle style, const FuzzyCoefficients& c,
                          SpeedScope scope) {
    AggregateFeatures out = f;
    if (style == DrivingStyle::general) return out;
    for (std::size_t i = 0; i < kFrameFeatureCount; ++i) {
        const auto feat = static_cast<Feature>(i);
        if (!is_fuzzified(feat, scope)) continue;
        const double k = fuzzy_factor(feature_kind(feat), style, c);
        out.values[mean_index(feat)] = f.values[mean_index(feat)] * k;
        out.values[std_index(feat)] = f.values[std_index(feat)] * k;
    }
    return out;
}

FeatureSample fuzzify_features(const FeatureSample& sample, DrivingStyle style, const FuzzyCoefficients& c,
                               SpeedScope scope) {
    FeatureSample out = sample;
    for (auto& row : out.sequence) row = fuzzify(row, style, c, scope);
    out.aggregate = fuzzify(sample.aggregate, style, c, scope);
    return out;
}

std::string DatasetSpec::tag() const {
    switch (variant) {
        case DatasetVariant::bird: return "Bird";
        case DatasetVariant::bird_with_style: return "Bird&DS";
        case DatasetVariant::fuzzy: return coefficients ? coefficients->tag() : "F_?";
    }
    return "Bird";
}

std::size_t ModelDataset::column_count() const noexcept {
    return kAggregateFeatureCount + (has_style_column() ? 1 : 0);
}

std::vector<std::string> ModelDataset::column_names() const {
    auto names = aggregate_feature_names();
    if (has_style_column()) names.push_back("driving_style");
    return names;
}

std::vector<std::string> ModelDataset::design_names() const {
    auto names = aggregate_feature_names();
    if (has_style_column()) {
        for (auto s : {DrivingStyle::aggressive, DrivingStyle::general, DrivingStyle::cautious}) {
            names.push_back("style_" + std::string(to_string(s)));
        }
    }
    return names;
}

FeatureMatrix ModelDataset::design_matrix() const {
    const std::size_t cols = kAggregateFeatureCount + (has_style_column() ? kStyleCount : 0);
    FeatureMatrix m(samples.size(), cols, 0.0);
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const auto& s = samples[r];
        std::copy(s.aggregate.values.begin(), s.aggregate.values.end(), m.row(r).begin());
        if (has_style_column()) {
            m(r, kAggregateFeatureCount + static_cast<std::size_t>(*s.style)) = 1.0;
        }
    }
    return m;
}

std::vector<int> ModelDataset::labels() const {
    std::vector<int> y;
    y.reserve(samples.size());
    for (const auto& s : samples) y.push_back(s.label == Label::lane_change ? 1 : 0);
    return y;
}

std::vector<std::size_t> ModelDataset::groups() const {
    std::map<std::pair<std::string, int>, std::size_t> ids;
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        auto [it, _] = ids.try_emplace({s.recording_id, s.track_id}, ids.size());
        out.push_back(it->second);
    }
    return out;
}

ModelDataset build_dataset_variant(std::span<const FeatureSample> samples, const DatasetSpec& spec) {
    if (spec.variant == DatasetVariant::fuzzy && !spec.coefficients) {
        throw ConfigError("fuzzy dataset requires coefficients");
    }
    if (spec.variant != DatasetVariant::fuzzy && spec.coefficients) {
        throw ConfigError("precise datasets take no fuzzy coefficients");
    }
    if (spec.variant == DatasetVariant::bird_with_style && spec.form == InputForm::sequence) {
        throw ConfigError("the style-augmented dataset exists only in aggregate form");
    }
    ModelDataset ds;
    ds.spec = spec;
    ds.samples.reserve(samples.size());
    for (const auto& s : samples) {
        if (spec.variant == DatasetVariant::bird) {
            auto copy = s;
            copy.style.reset();
            ds.samples.push_back(std::move(copy));
            continue;
        }
        if (!s.style) {
            throw DataError("sample of pair " + std::to_string(s.pair_id) + " has no driving style assigned");
        }
        if (spec.variant == DatasetVariant::bird_with_style) {
            ds.samples.push_back(s);
        } else {
            auto f = fuzzify_features(s, *s.style, *spec.coefficients, spec.speed_scope);
            f.style.reset();
            ds.samples.push_back(std::move(f));
        }
    }
    return ds;
}

std::vector<FuzzyCoefficients> coefficient_grid() {
    std::vector<FuzzyCoefficients> grid;
    grid.reserve(81);
    for (int a = 1; a <= 9; ++a) {
        for (int b = 1; b <= 9; ++b) grid.emplace_back(a / 10.0, b / 10.0);
    }
    return grid;
}

}  // namespace lcpred
