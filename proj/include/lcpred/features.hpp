#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcpred/extraction.hpp"

namespace lcpred {

// Per-frame variables in fixed order. "Longitudinal" is along travel, "lateral"
// across it (positive towards the driver's left).
enum class Feature : std::size_t {
    gap_clv_sv = 0,  // clearance CLV rear - SV front (m)
    gap_tlv_sv,      // clearance TLV rear - SV front (m)
    gap_sv_tfv,      // clearance SV rear - TFV front (m)
    dv_clv_sv,       // v_CLV - v_SV (m/s)
    dv_tlv_sv,       // v_TLV - v_SV (m/s)
    dv_sv_tfv,       // v_SV - v_TFV (m/s)
    v_sv,            // longitudinal speeds (m/s)
    v_clv,
    v_tlv,
    v_tfv,
    vlat_sv,  // lateral speed of SV (m/s)
    a_sv,     // longitudinal accelerations (m/s^2)
    a_clv,
    a_tlv,
    a_tfv,
    alat_sv,  // lateral acceleration of SV (m/s^2)
};

inline constexpr std::size_t kFrameFeatureCount = 16;
inline constexpr std::size_t kAggregateFeatureCount = 2 * kFrameFeatureCount;

enum class FeatureKind { distance, speed, acceleration };

FeatureKind feature_kind(Feature f) noexcept;
std::string_view feature_name(Feature f) noexcept;
const std::array<std::string_view, kFrameFeatureCount>& frame_feature_names() noexcept;
// "<name>_mean", "<name>_std" interleaved per variable.
const std::vector<std::string>& aggregate_feature_names();

inline constexpr std::size_t index_of(Feature f) noexcept { return static_cast<std::size_t>(f); }
inline constexpr std::size_t mean_index(Feature f) noexcept { return 2 * index_of(f); }
inline constexpr std::size_t std_index(Feature f) noexcept { return 2 * index_of(f) + 1; }

struct FrameFeatures {
    std::array<double, kFrameFeatureCount> values{};

    double& operator[](Feature f) noexcept { return values[index_of(f)]; }
    double operator[](Feature f) const noexcept { return values[index_of(f)]; }
    friend bool operator==(const FrameFeatures&, const FrameFeatures&) = default;
};

struct AggregateFeatures {
    std::array<double, kAggregateFeatureCount> values{};

    double mean(Feature f) const noexcept { return values[mean_index(f)]; }
    double stddev(Feature f) const noexcept { return values[std_index(f)]; }
    friend bool operator==(const AggregateFeatures&, const AggregateFeatures&) = default;
};

using FeatureSequence = std::vector<FrameFeatures>;

struct FeatureSample {
    std::size_t pair_id = 0;
    std::string recording_id;
    int track_id = 0;
    Label label = Label::lane_keep;
    Side direction = Side::left;
    int start_frame = 0;
    FeatureSequence sequence;
    AggregateFeatures aggregate;
    std::optional<DrivingStyle> style;
};

struct SequenceSample {
    FeatureSequence rows;
    Label label = Label::lane_keep;
    std::optional<DrivingStyle> style;
};

struct FeatureCounters {
    std::size_t clamped_gaps = 0;  // overlapping boxes clamped to zero clearance
};

double longitudinal_gap(const TrackPoint& leader, const TrackPoint& follower) noexcept;

FeatureSequence frame_features(const LabeledWindow& window, FeatureCounters* counters = nullptr);
FrameFeatures frame_features(const TrackPoint& sv, const NeighborFrame& n, FeatureCounters* counters = nullptr);

// Population mean and standard deviation per variable.
AggregateFeatures aggregate_features(std::span<const FrameFeatures> seq);

// Resamples a window spanning `window_seconds` at `frame_rate` to `target_len`
// rows by endpoint-preserving linear interpolation; identity when the length
// already matches. Throws DataError when the input covers less than the window.
SequenceSample sequence_sample(const FeatureSequence& seq, double frame_rate, std::size_t target_len = 50,
                               double window_seconds = 2.0);

FeatureSample make_feature_sample(const LcPair& pair, Label which, FeatureCounters* counters = nullptr);

// Two samples per pair (lane change first), preserving dataset order.
std::vector<FeatureSample> feature_samples(const LcDecisionDataset& dataset, FeatureCounters* counters = nullptr);

}  // namespace lcpred
