#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcpred/extraction.hpp"
#include "lcpred/matrix.hpp"

namespace lcpred {

// Lane-change execution summary used to cluster drivers.
struct StyleFeatures {
    double duration = 0.0;   // T_LC (s)
    double lat_accel = 0.0;  // mean |lateral acceleration| over [t_s, t_e] (m/s^2)
    double lat_speed = 0.0;  // mean |lateral speed| over [t_s, t_e] (m/s)

    std::array<double, 3> as_array() const noexcept { return {duration, lat_accel, lat_speed}; }
    friend bool operator==(const StyleFeatures&, const StyleFeatures&) = default;
};

StyleFeatures style_features(const LaneChangeEvent& event, const Track& track);
// Same computation from the detached execution points of an extracted pair.
StyleFeatures style_features(const LaneChangeEvent& event, std::span<const TrackPoint> execution);

// Per-column z-score. Zero-variance columns map to themselves (mean 0, scale 1).
struct ZScaler {
    std::vector<double> mean;
    std::vector<double> scale;

    static ZScaler fit(const FeatureMatrix& data);
    FeatureMatrix transform(const FeatureMatrix& data) const;
    std::vector<double> transform(std::span<const double> row) const;
    std::vector<double> inverse(std::span<const double> row) const;
};

struct KMeansOptions {
    int k = 3;
    int restarts = 10;
    double tol = 1e-8;  // relative change of the objective
    int max_iter = 300;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    FeatureMatrix centroids;  // k x d
    std::vector<int> assignment;
    double objective = 0.0;  // sum of squared distances to assigned centroid
    int iterations = 0;
    int best_restart = 0;
    // Objective after each Lloyd iteration, for every restart (restart-major).
    std::vector<std::vector<double>> objective_history;
};

// Lloyd iterations from k-means++ seeding, best of `restarts` by objective.
// Throws DataError when there are fewer distinct points than k.
KMeansResult kmeans(const FeatureMatrix& points, const KMeansOptions& options);

double kmeans_objective(const FeatureMatrix& points, const FeatureMatrix& centroids, std::span<const int> assignment);

// Nearest centroid; ties go to the lower index.
int nearest_centroid(const FeatureMatrix& centroids, std::span<const double> point);

struct ClusterModel {
    int k = 3;
    FeatureMatrix centroids;  // standardized space
    ZScaler scaler;
    std::vector<DrivingStyle> label_map;  // cluster index -> style
    double objective = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;

    // Centroid of cluster i in original units.
    StyleFeatures centroid(int i) const;
};

// k-means over standardized style features; the returned model is labelled.
ClusterModel kmeans_fit(std::span<const StyleFeatures> points, const KMeansOptions& options,
                        KMeansResult* details = nullptr);

// k = 3: highest mean lateral speed -> aggressive; of the other two the higher
// lateral acceleration -> cautious, the lower -> general. Ties: lower index first.
// k = 2 yields aggressive/general, k = 1 general.
std::vector<DrivingStyle> label_clusters(const ClusterModel& model);

int assign_cluster(const ClusterModel& model, const StyleFeatures& point);
DrivingStyle assign_style(const ClusterModel& model, const StyleFeatures& point);

nlohmann::json to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

struct StyleSummaryRow {
    std::string style;  // style name or "overall"
    std::size_t count = 0;
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

// Per-style mean/std of duration, lateral acceleration and lateral speed, plus overall.
std::vector<StyleSummaryRow> cluster_report(std::span<const StyleFeatures> points,
                                            std::span<const DrivingStyle> styles);
std::string cluster_report_csv(const std::vector<StyleSummaryRow>& rows);

}  // namespace lcpred
