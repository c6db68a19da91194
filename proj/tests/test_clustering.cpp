#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "lcpred/clustering.hpp"

using namespace lcpred;

namespace {

ClusterModel manual_model(const std::vector<StyleFeatures>& centroids) {
    ClusterModel m;
    m.k = static_cast<int>(centroids.size());
    m.scaler.mean = {0, 0, 0};
    m.scaler.scale = {1, 1, 1};
    for (const auto& c : centroids) m.centroids.append_row(c.as_array());
    m.label_map = label_clusters(m);
    return m;
}

FeatureMatrix blobs(std::uint64_t seed, std::vector<int>& truth) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.05);
    const double centres[3][2] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    FeatureMatrix x;
    truth.clear();
    for (int i = 0; i < 90; ++i) {
        const int c = i % 3;
        const double row[2] = {centres[c][0] + g(rng), centres[c][1] + g(rng)};
        x.append_row(row);
        truth.push_back(c);
    }
    return x;
}

double partition_sse(const FeatureMatrix& x, const std::vector<int>& a, int k) {
    double sse = 0.0;
    for (int j = 0; j < k; ++j) {
        double mx = 0, my = 0;
        int n = 0;
        for (std::size_t i = 0; i < x.rows(); ++i)
            if (a[i] == j) mx += x(i, 0), my += x(i, 1), ++n;
        if (n == 0) return std::numeric_limits<double>::infinity();
        mx /= n;
        my /= n;
        for (std::size_t i = 0; i < x.rows(); ++i)
            if (a[i] == j) sse += (x(i, 0) - mx) * (x(i, 0) - mx) + (x(i, 1) - my) * (x(i, 1) - my);
    }
    return sse;
}

}  // namespace

TEST(StyleFeatures, ConstantAndZeroLateralMotion) {
    LaneChangeEvent e;
    e.duration = 1.2;
    std::vector<TrackPoint> pts(31);
    for (auto& p : pts) p.vy = -0.3;
    auto s = style_features(e, pts);
    EXPECT_DOUBLE_EQ(s.lat_speed, 0.3);
    EXPECT_DOUBLE_EQ(s.duration, 1.2);
    for (auto& p : pts) p.vy = 0.0;
    s = style_features(e, pts);
    EXPECT_EQ(s.lat_speed, 0.0);
    EXPECT_EQ(s.lat_accel, 0.0);
}

TEST(StyleFeatures, SinusoidalProfileMatchesClosedFormSum) {
    const double start = 6.0;
    const double T = 4.0;
    const auto rec = gen_recording(fixtures::platoon(Side::left, start, T));
    const auto ds = build_lc_decision_dataset({rec.recording()});
    ASSERT_EQ(ds.pairs.size(), 1u);
    const auto& p = ds.pairs[0];
    const auto s = style_features(p.event, p.execution);
    // Frames f in [t_s, t_e] sample vy = A sin(a + k d) with d = pi / (T fps), all
    // inside the ease so the sine is positive: the sum has a closed form.
    const double fps = 25.0;
    const double W = 3.75;
    const double A = 0.5 * W * std::numbers::pi / T;
    const double a = std::numbers::pi * (p.event.t_s / fps - start) / T;
    const double d = std::numbers::pi / (T * fps);
    const double n = p.event.t_e - p.event.t_s + 1;
    const double sum = std::sin(n * d / 2) * std::sin(a + (n - 1) * d / 2) / std::sin(d / 2);
    EXPECT_NEAR(s.lat_speed, A * sum / n, 1e-9);
    // |ay| = A w |cos|; the cosine changes sign at the half-way frame, so sum the two halves.
    const double w = std::numbers::pi / T;
    auto cos_sum = [&](double from, double count) {
        return std::sin(count * d / 2) * std::cos(from + (count - 1) * d / 2) / std::sin(d / 2);
    };
    const int mid = static_cast<int>(std::floor((start + T / 2) * fps));
    const double first = mid - p.event.t_s + 1;
    const double second = n - first;
    const double acc = A * w * (cos_sum(a, first) - cos_sum(a + first * d, second));
    EXPECT_NEAR(s.lat_accel, acc / n, 1e-9);
}

TEST(KMeans, SingleClusterIsTheMean) {
    std::vector<int> truth;
    const auto x = blobs(1, truth);
    KMeansOptions opt;
    opt.k = 1;
    const auto r = kmeans(x, opt);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) mx += x(i, 0), my += x(i, 1);
    mx /= 90;
    my /= 90;
    EXPECT_NEAR(r.centroids(0, 0), mx, 1e-12);
    EXPECT_NEAR(r.centroids(0, 1), my, 1e-12);
    double var = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, 0) - mx) * (x(i, 0) - mx) + (x(i, 1) - my) * (x(i, 1) - my);
    EXPECT_NEAR(r.objective, var, 1e-9);
}

TEST(KMeans, RecoversSeparatedBlobsExactly) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::vector<int> truth;
        const auto x = blobs(seed, truth);
        KMeansOptions opt;
        opt.seed = seed;
        const auto r = kmeans(x, opt);
        // Same partition up to relabelling.
        std::map<int, int> map;
        bool consistent = true;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            auto [it, fresh] = map.emplace(r.assignment[i], truth[i]);
            consistent = consistent && it->second == truth[i];
        }
        EXPECT_TRUE(consistent && map.size() == 3u) << seed;
    }
}

TEST(KMeans, SixPointsMatchExhaustiveTwoPartitions) {
    int hits = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        std::mt19937_64 rng(s);
        std::uniform_real_distribution<double> u(0, 5);
        FeatureMatrix x(6, 2);
        for (std::size_t i = 0; i < 6; ++i) x(i, 0) = u(rng), x(i, 1) = u(rng);
        double best = std::numeric_limits<double>::infinity();
        for (int mask = 1; mask < 63; ++mask) {
            std::vector<int> a(6);
            for (int i = 0; i < 6; ++i) a[i] = (mask >> i) & 1;
            best = std::min(best, partition_sse(x, a, 2));
        }
        KMeansOptions opt;
        opt.k = 2;
        opt.seed = s;
        const auto r = kmeans(x, opt);
        EXPECT_GE(r.objective, best - 1e-12);
        hits += std::abs(r.objective - best) < 1e-9 ? 1 : 0;
    }
    EXPECT_GE(hits, 38);
}

TEST(KMeans, ObjectiveNeverIncreasesAndErrors) {
    std::vector<int> truth;
    const auto x = blobs(4, truth);
    KMeansOptions opt;
    opt.restarts = 8;
    opt.seed = 4;
    const auto r = kmeans(x, opt);
    ASSERT_EQ(r.objective_history.size(), 8u);
    for (const auto& h : r.objective_history)
        for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
    EXPECT_NEAR(r.objective, kmeans_objective(x, r.centroids, r.assignment), 1e-9);

    FeatureMatrix dup(5, 2, 1.0);
    EXPECT_THROW(kmeans(dup, opt), DataError);
    opt.k = 0;
    EXPECT_THROW(kmeans(x, opt), ConfigError);
}

TEST(Labels, OrderingRules) {
    const auto m = manual_model({{1.8, 0.10, 0.105}, {1.1, 0.05, 0.305}, {2.6, 0.04, 0.072}});
    EXPECT_EQ(m.label_map[0], DrivingStyle::cautious);
    EXPECT_EQ(m.label_map[1], DrivingStyle::aggressive);
    EXPECT_EQ(m.label_map[2], DrivingStyle::general);

    const auto eq = manual_model({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    EXPECT_EQ(eq.label_map[0], DrivingStyle::aggressive);
    EXPECT_EQ(eq.label_map[1], DrivingStyle::cautious);
    EXPECT_EQ(eq.label_map[2], DrivingStyle::general);

    EXPECT_EQ(manual_model({{1, 1, 1}}).label_map[0], DrivingStyle::general);
    const auto two = manual_model({{1, 1, 0.1}, {1, 1, 0.2}});
    EXPECT_EQ(two.label_map[0], DrivingStyle::general);
    EXPECT_EQ(two.label_map[1], DrivingStyle::aggressive);
}

TEST(Labels, PermutedInputGivesSameStyles) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0, 0.03);
    std::vector<StyleFeatures> pts;
    const StyleFeatures centres[3] = {{1.1, 0.55, 1.8}, {1.8, 0.21, 1.1}, {2.7, 0.09, 0.73}};
    for (int i = 0; i < 60; ++i) {
        const auto& c = centres[i % 3];
        pts.push_back({c.duration + g(rng), c.lat_accel + g(rng) * 0.1, c.lat_speed + g(rng)});
    }
    KMeansOptions opt;
    opt.seed = 3;
    const auto m1 = kmeans_fit(pts, opt);
    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    opt.seed = 99;
    const auto m2 = kmeans_fit(shuffled, opt);
    for (const auto& p : pts) EXPECT_EQ(assign_style(m1, p), assign_style(m2, p));
    EXPECT_EQ(assign_style(m1, pts[0]), DrivingStyle::aggressive);
    EXPECT_EQ(assign_style(m1, pts[1]), DrivingStyle::cautious);
    EXPECT_EQ(assign_style(m1, pts[2]), DrivingStyle::general);
}

TEST(Assign, NearestCentroidOracleAndTies) {
    FeatureMatrix c;
    const double c0[] = {0.0, 0.0};
    const double c1[] = {2.0, 0.0};
    const double c2[] = {0.0, 3.0};
    c.append_row(c0);
    c.append_row(c1);
    c.append_row(c2);
    const double mid[] = {1.0, 0.0};
    EXPECT_EQ(nearest_centroid(c, mid), 0);
    EXPECT_EQ(nearest_centroid(c, c2), 2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 4);
    for (int t = 0; t < 500; ++t) {
        const double p[] = {u(rng), u(rng)};
        int best = 0;
        double bd = 1e300;
        for (int j = 0; j < 3; ++j) {
            const double d = (p[0] - c(j, 0)) * (p[0] - c(j, 0)) + (p[1] - c(j, 1)) * (p[1] - c(j, 1));
            if (d < bd) bd = d, best = j;
        }
        EXPECT_EQ(nearest_centroid(c, p), best);
    }
}

TEST(Model, JsonRoundTripAndReport) {
    const auto m = manual_model({{1.8, 0.10, 0.105}, {1.1, 0.05, 0.305}, {2.6, 0.04, 0.072}});
    const auto back = cluster_model_from_json(to_json(m));
    EXPECT_EQ(back.centroids, m.centroids);
    EXPECT_EQ(back.label_map, m.label_map);
    EXPECT_EQ(to_json(back).dump(), to_json(m).dump());

    const std::vector<StyleFeatures> pts = {{1, 2, 3}, {3, 2, 1}, {5, 5, 5}};
    const std::vector<DrivingStyle> st = {DrivingStyle::general, DrivingStyle::general, DrivingStyle::aggressive};
    const auto rows = cluster_report(pts, st);
    const auto csv = cluster_report_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "style,count,duration_mean,duration_std,lat_accel_mean,lat_accel_std,lat_speed_mean,lat_speed_std");
    const StyleSummaryRow* general = nullptr;
    for (const auto& r : rows) general = r.style == "general" ? &r : general;
    ASSERT_NE(general, nullptr);
    EXPECT_EQ(general->count, 2u);
    EXPECT_DOUBLE_EQ(general->mean[0], 2.0);
    EXPECT_DOUBLE_EQ(general->stddev[0], 1.0);
    EXPECT_EQ(rows.back().style, "overall");
    EXPECT_EQ(rows.back().count, 3u);
}
