#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "lcpred/features.hpp"

using namespace lcpred;

namespace {

TrackPoint at(double x, double length, double vx, double ax = 0.0) {
    TrackPoint p;
    p.x = x;
    p.width = length;
    p.height = 2.0;
    p.vx = vx;
    p.ax = ax;
    return p;
}

FeatureSequence random_sequence(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(3.0, 2.0);
    FeatureSequence seq(n);
    for (auto& r : seq)
        for (auto& v : r.values) v = g(rng);
    return seq;
}

}  // namespace

TEST(FrameFeatures, ClearanceUsesRearBumperPositions) {
    NeighborFrame n;
    n.clv = at(20.0, 4.0, 30.0);
    n.tlv = at(12.0, 4.5, 29.0);
    n.tfv = at(-15.0, 4.0, 31.0);
    const auto sv = at(0.0, 5.0, 28.0, 0.3);
    const auto f = frame_features(sv, n);
    // CLV rear (20) minus SV front (5).
    EXPECT_DOUBLE_EQ(f[Feature::gap_clv_sv], 15.0);
    EXPECT_DOUBLE_EQ(f[Feature::gap_tlv_sv], 7.0);
    // SV rear (0) minus TFV front (-11).
    EXPECT_DOUBLE_EQ(f[Feature::gap_sv_tfv], 11.0);
    EXPECT_DOUBLE_EQ(f[Feature::dv_clv_sv], 2.0);
    EXPECT_DOUBLE_EQ(f[Feature::dv_tlv_sv], 1.0);
    EXPECT_DOUBLE_EQ(f[Feature::dv_sv_tfv], -3.0);
    EXPECT_DOUBLE_EQ(f[Feature::v_sv], 28.0);
    EXPECT_DOUBLE_EQ(f[Feature::a_sv], 0.3);
}

TEST(FrameFeatures, OverlapClampsAndCounts) {
    NeighborFrame n;
    n.clv = at(3.0, 4.0, 30.0);
    n.tlv = at(12.0, 4.5, 29.0);
    n.tfv = at(-15.0, 4.0, 31.0);
    FeatureCounters c;
    const auto f = frame_features(at(0.0, 5.0, 28.0), n, &c);
    EXPECT_EQ(f[Feature::gap_clv_sv], 0.0);
    EXPECT_EQ(c.clamped_gaps, 1u);
}

TEST(FrameFeatures, EqualSpeedsAndStationaryScene) {
    NeighborFrame n;
    n.clv = at(20.0, 4.0, 25.0);
    n.tlv = at(12.0, 4.5, 25.0);
    n.tfv = at(-15.0, 4.0, 25.0);
    auto f = frame_features(at(0.0, 5.0, 25.0), n);
    EXPECT_EQ(f[Feature::dv_clv_sv], 0.0);
    EXPECT_EQ(f[Feature::dv_tlv_sv], 0.0);
    EXPECT_EQ(f[Feature::dv_sv_tfv], 0.0);

    for (auto* p : {&n.clv, &n.tlv, &n.tfv}) p->vx = 0.0;
    f = frame_features(at(0.0, 5.0, 0.0), n);
    for (std::size_t j = 3; j < kFrameFeatureCount; ++j) EXPECT_EQ(f.values[j], 0.0) << j;
    EXPECT_DOUBLE_EQ(f[Feature::gap_clv_sv], 15.0);
}

TEST(Aggregate, DirectCases) {
    FeatureSequence c(10);
    for (auto& r : c) r.values.fill(4.2);
    const auto a = aggregate_features(c);
    for (std::size_t j = 0; j < kFrameFeatureCount; ++j) {
        EXPECT_DOUBLE_EQ(a.values[2 * j], 4.2);
        EXPECT_EQ(a.values[2 * j + 1], 0.0);
    }
    FeatureSequence two(2);
    two[0].values.fill(1.0);
    two[1].values.fill(3.0);
    const auto b = aggregate_features(two);
    EXPECT_DOUBLE_EQ(b.mean(Feature::v_sv), 2.0);
    EXPECT_DOUBLE_EQ(b.stddev(Feature::v_sv), 1.0);
    EXPECT_THROW(aggregate_features(FeatureSequence{}), DataError);
}

TEST(Aggregate, MatchesTwoPassOracle) {
    const auto seq = random_sequence(50, 9);
    const auto a = aggregate_features(seq);
    for (std::size_t j = 0; j < kFrameFeatureCount; ++j) {
        long double s = 0;
        for (const auto& r : seq) s += r.values[j];
        const long double mean = s / 50;
        long double ss = 0;
        for (const auto& r : seq) ss += (r.values[j] - mean) * (r.values[j] - mean);
        EXPECT_NEAR(a.values[2 * j], static_cast<double>(mean), 1e-12);
        EXPECT_NEAR(a.values[2 * j + 1], static_cast<double>(std::sqrt(ss / 50)), 1e-12);
    }
}

TEST(Aggregate, NamesInterleaveMeanAndStd) {
    const auto& names = aggregate_feature_names();
    ASSERT_EQ(names.size(), kAggregateFeatureCount);
    EXPECT_EQ(names[0], "gap_clv_sv_mean");
    EXPECT_EQ(names[1], "gap_clv_sv_std");
    EXPECT_EQ(names[mean_index(Feature::vlat_sv)], "vlat_sv_mean");
    EXPECT_EQ(feature_kind(Feature::gap_sv_tfv), FeatureKind::distance);
    EXPECT_EQ(feature_kind(Feature::vlat_sv), FeatureKind::speed);
    EXPECT_EQ(feature_kind(Feature::alat_sv), FeatureKind::acceleration);
}

TEST(Resample, IdentityAndRamp) {
    const auto seq = random_sequence(50, 1);
    EXPECT_EQ(sequence_sample(seq, 25.0).rows, seq);

    FeatureSequence ramp(100);
    for (std::size_t i = 0; i < 100; ++i)
        for (std::size_t k = 0; k < kFrameFeatureCount; ++k) ramp[i].values[k] = 1.5 * i - 0.25 * k;
    const auto out = sequence_sample(ramp, 50.0).rows;
    ASSERT_EQ(out.size(), 50u);
    EXPECT_EQ(out.front(), ramp.front());
    EXPECT_EQ(out.back(), ramp.back());
    for (std::size_t j = 0; j < 50; ++j) {
        const double pos = j * 99.0 / 49.0;
        for (std::size_t k = 0; k < kFrameFeatureCount; ++k) EXPECT_NEAR(out[j].values[k], 1.5 * pos - 0.25 * k, 1e-9);
    }
    EXPECT_THROW(sequence_sample(random_sequence(30, 2), 25.0), DataError);
}

TEST(Samples, PlatoonFeaturesFiniteAndPaired) {
    const auto rec = gen_recording(fixtures::platoon(Side::left, 8.0, 4.0));
    const auto ds = build_lc_decision_dataset({rec.recording()});
    ASSERT_EQ(ds.pairs.size(), 1u);
    FeatureCounters c;
    const auto samples = feature_samples(ds, &c);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(samples[0].label, Label::lane_change);
    EXPECT_EQ(samples[1].label, Label::lane_keep);
    EXPECT_EQ(c.clamped_gaps, 0u);
    for (const auto& s : samples) {
        ASSERT_EQ(s.sequence.size(), 50u);
        for (const auto& r : s.sequence)
            for (double v : r.values) EXPECT_TRUE(std::isfinite(v));
        EXPECT_EQ(s.aggregate, aggregate_features(s.sequence));
    }
    // Lateral motion towards the left shows up as positive lateral speed before t_s.
    EXPECT_GT(samples[0].aggregate.mean(Feature::vlat_sv), samples[1].aggregate.mean(Feature::vlat_sv));
    // Same scripted geometry: CLV started 30 m ahead of the SV rear bumper, SV length 4.5.
    EXPECT_NEAR(samples[1].sequence[0][Feature::gap_clv_sv], 25.5, 1e-6);
}
