#include "lcpred/features.hpp"

#include <cmath>

#include "lcpred/csv.hpp"

namespace lcpred {

namespace {

constexpr std::array<std::string_view, kFrameFeatureCount> kNames{
    "gap_clv_sv", "gap_tlv_sv", "gap_sv_tfv", "dv_clv_sv", "dv_tlv_sv", "dv_sv_tfv", "v_sv",  "v_clv",
    "v_tlv",      "v_tfv",      "vlat_sv",    "a_sv",      "a_clv",     "a_tlv",     "a_tfv", "alat_sv"};

double clamped_gap(const TrackPoint& leader, const TrackPoint& follower, FeatureCounters* counters) {
    const double gap = longitudinal_gap(leader, follower);
    if (gap < 0.0) {
        if (counters) ++counters->clamped_gaps;
        return 0.0;
    }
    return gap;
}

}  // namespace

FeatureKind feature_kind(Feature f) noexcept {
    const auto i = index_of(f);
    if (i <= index_of(Feature::gap_sv_tfv)) return FeatureKind::distance;
    if (i <= index_of(Feature::vlat_sv)) return FeatureKind::speed;
    return FeatureKind::acceleration;
}

std::string_view feature_name(Feature f) noexcept { return kNames[index_of(f)]; }

const std::array<std::string_view, kFrameFeatureCount>& frame_feature_names() noexcept { return kNames; }

const std::vector<std::string>& aggregate_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (auto n : kNames) {
            v.push_back(std::string(n) + "_mean");
            v.push_back(std::string(n) + "_std");
        }
        return v;
    }();
    return names;
}

double longitudinal_gap(const TrackPoint& leader, const TrackPoint& follower) noexcept {
    return leader.x - follower.front();
}

FrameFeatures frame_features(const TrackPoint& sv, const NeighborFrame& n, FeatureCounters* counters) {
    FrameFeatures f;
    f[Feature::gap_clv_sv] = clamped_gap(n.clv, sv, counters);
    f[Feature::gap_tlv_sv] = clamped_gap(n.tlv, sv, counters);
    f[Feature::gap_sv_tfv] = clamped_gap(sv, n.tfv, counters);
    f[Feature::dv_clv_sv] = n.clv.vx - sv.vx;
    f[Feature::dv_tlv_sv] = n.tlv.vx - sv.vx;
    f[Feature::dv_sv_tfv] = sv.vx - n.tfv.vx;
    f[Feature::v_sv] = sv.vx;
    f[Feature::v_clv] = n.clv.vx;
    f[Feature::v_tlv] = n.tlv.vx;
    f[Feature::v_tfv] = n.tfv.vx;
    f[Feature::vlat_sv] = sv.vy;
    f[Feature::a_sv] = sv.ax;
    f[Feature::a_clv] = n.clv.ax;
    f[Feature::a_tlv] = n.tlv.ax;
    f[Feature::a_tfv] = n.tfv.ax;
    f[Feature::alat_sv] = sv.ay;
    return f;
}

FeatureSequence frame_features(const LabeledWindow& window, FeatureCounters* counters) {
    if (window.subject.size() != window.neighbors.frames.size()) {
        throw DataError("frame_features: subject and neighbour frame counts differ");
    }
    FeatureSequence seq;
    seq.reserve(window.subject.size());
    for (std::size_t i = 0; i < window.subject.size(); ++i) {
        seq.push_back(frame_features(window.subject[i], window.neighbors.frames[i], counters));
    }
    return seq;
}

AggregateFeatures aggregate_features(std::span<const FrameFeatures> seq) {
    if (seq.empty()) throw DataError("aggregate_features: empty sequence");
    AggregateFeatures agg;
    const double n = static_cast<double>(seq.size());
    for (std::size_t j = 0; j < kFrameFeatureCount; ++j) {
        // Shifted by the first value: exact for constant columns.
        const double x0 = seq.front().values[j];
        double sum = 0.0;
        for (const auto& row : seq) sum += row.values[j] - x0;
        const double offset = sum / n;
        const double mean = x0 + offset;
        double ss = 0.0;
        for (const auto& row : seq) {
            const double d = (row.values[j] - x0) - offset;
            ss += d * d;
        }
        agg.values[2 * j] = mean;
        agg.values[2 * j + 1] = std::sqrt(ss / n);
    }
    return agg;
}

SequenceSample sequence_sample(const FeatureSequence& seq, double frame_rate, std::size_t target_len,
                               double window_seconds) {
    const auto needed = static_cast<std::size_t>(std::lround(window_seconds * frame_rate));
    if (seq.size() < needed || seq.size() < 2) {
        throw DataError("sequence_sample: " + std::to_string(seq.size()) + " frames cover less than " +
                        format_double(window_seconds) + " s");
    }
    SequenceSample out;
    if (seq.size() == target_len) {
        out.rows = seq;
        return out;
    }
    out.rows.resize(target_len);
    const double scale = static_cast<double>(seq.size() - 1) / static_cast<double>(target_len - 1);
    for (std::size_t j = 0; j < target_len; ++j) {
        const double pos = static_cast<double>(j) * scale;
        auto lo = static_cast<std::size_t>(std::floor(pos));
        if (lo >= seq.size() - 1) lo = seq.size() - 2;
        const double w = pos - static_cast<double>(lo);
        for (std::size_t k = 0; k < kFrameFeatureCount; ++k) {
            out.rows[j].values[k] = (1.0 - w) * seq[lo].values[k] + w * seq[lo + 1].values[k];
        }
    }
    out.rows.front() = seq.front();
    out.rows.back() = seq.back();
    return out;
}

FeatureSample make_feature_sample(const LcPair& pair, Label which, FeatureCounters* counters) {
    const auto& w = which == Label::lane_change ? pair.change : pair.keep;
    FeatureSample s;
    s.pair_id = pair.pair_id;
    s.recording_id = pair.recording_id;
    s.track_id = pair.event.track_id;
    s.label = which;
    s.direction = w.window.direction;
    s.start_frame = w.window.start_frame;
    s.sequence = frame_features(w, counters);
    s.aggregate = aggregate_features(s.sequence);
    return s;
}

std::vector<FeatureSample> feature_samples(const LcDecisionDataset& dataset, FeatureCounters* counters) {
    std::vector<FeatureSample> out;
    out.reserve(2 * dataset.pairs.size());
    for (const auto& pair : dataset.pairs) {
        out.push_back(make_feature_sample(pair, Label::lane_change, counters));
        out.push_back(make_feature_sample(pair, Label::lane_keep, counters));
    }
    return out;
}

}  // namespace lcpred
