#include "lcpred/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "lcpred/csv.hpp"

namespace lcpred {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t distinct_rows(const FeatureMatrix& m) {
    std::set<std::vector<double>> seen;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        seen.emplace(row.begin(), row.end());
    }
    return seen.size();
}

FeatureMatrix plus_plus_seed(const FeatureMatrix& pts, int k, std::mt19937_64& rng) {
    const std::size_t n = pts.rows();
    FeatureMatrix centers(0, 0);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centers.append_row(pts.row(first(rng)));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(pts.row(i), centers.row(0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (static_cast<int>(centers.rows()) < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        // Distinct points >= k guarantees total > 0 here.
        const double target = unit(rng) * total;
        std::size_t pick = n;
        std::size_t last_positive = 0;
        double cumulative = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            last_positive = i;
            cumulative += d2[i];
            if (cumulative > target) {
                pick = i;
                break;
            }
        }
        if (pick == n) pick = last_positive;
        centers.append_row(pts.row(pick));
        const auto c = centers.row(centers.rows() - 1);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(pts.row(i), c));
    }
    return centers;
}

struct LloydRun {
    FeatureMatrix centroids;
    std::vector<int> assignment;
    double objective = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

LloydRun lloyd(const FeatureMatrix& pts, FeatureMatrix centroids, const KMeansOptions& opt) {
    const std::size_t n = pts.rows();
    const std::size_t d = pts.cols();
    const auto k = static_cast<std::size_t>(opt.k);
    LloydRun run;
    run.assignment.assign(n, -1);
    double previous = std::numeric_limits<double>::infinity();

    for (int it = 0; it < opt.max_iter; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const int c = nearest_centroid(centroids, pts.row(i));
            if (c != run.assignment[i]) {
                run.assignment[i] = c;
                changed = true;
            }
        }
        // Empty clusters take the point farthest from its centroid among clusters with spare points.
        std::vector<std::size_t> sizes(k, 0);
        for (int a : run.assignment) ++sizes[static_cast<std::size_t>(a)];
        for (std::size_t j = 0; j < k; ++j) {
            if (sizes[j] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = static_cast<std::size_t>(run.assignment[i]);
                if (sizes[a] < 2) continue;
                const double dist = squared_distance(pts.row(i), centroids.row(a));
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            if (far == n) break;
            --sizes[static_cast<std::size_t>(run.assignment[far])];
            run.assignment[far] = static_cast<int>(j);
            sizes[j] = 1;
            changed = true;
        }

        FeatureMatrix next(k, d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = next.row(static_cast<std::size_t>(run.assignment[i]));
            auto src = pts.row(i);
            for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (sizes[j] == 0) {
                std::copy(centroids.row(j).begin(), centroids.row(j).end(), next.row(j).begin());
                continue;
            }
            for (auto& v : next.row(j)) v /= static_cast<double>(sizes[j]);
        }
        centroids = std::move(next);
        const double e = kmeans_objective(pts, centroids, run.assignment);
        run.history.push_back(e);
        run.iterations = it + 1;
        const bool small_change = std::isfinite(previous) && (previous - e) <= opt.tol * std::max(previous, 1e-300);
        previous = e;
        if (!changed || small_change) break;
    }
    run.objective = previous;
    run.centroids = std::move(centroids);
    return run;
}

}  // namespace

StyleFeatures style_features(const LaneChangeEvent& event, std::span<const TrackPoint> execution) {
    StyleFeatures s;
    s.duration = event.duration;
    if (execution.empty()) return s;
    double acc = 0.0;
    double spd = 0.0;
    for (const auto& p : execution) {
        acc += std::abs(p.ay);
        spd += std::abs(p.vy);
    }
    const auto n = static_cast<double>(execution.size());
    s.lat_accel = acc / n;
    s.lat_speed = spd / n;
    return s;
}

StyleFeatures style_features(const LaneChangeEvent& event, const Track& track) {
    std::vector<TrackPoint> pts;
    for (int f = event.t_s; f <= event.t_e; ++f) {
        if (const auto* p = track.at(f)) pts.push_back(*p);
    }
    return style_features(event, pts);
}

ZScaler ZScaler::fit(const FeatureMatrix& data) {
    ZScaler s;
    const std::size_t d = data.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    if (data.rows() == 0) return s;
    const auto n = static_cast<double>(data.rows());
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r) sum += data(r, c);
        const double m = sum / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            const double dv = data(r, c) - m;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / n);
        bool constant = true;
        for (std::size_t r = 1; r < data.rows() && constant; ++r) constant = data(r, c) == data(0, c);
        if (!constant && sd > 0.0) {
            s.mean[c] = m;
            s.scale[c] = sd;
        }
    }
    return s;
}

std::vector<double> ZScaler::transform(std::span<const double> row) const {
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - mean[c]) / scale[c];
    return out;
}

FeatureMatrix ZScaler::transform(const FeatureMatrix& data) const {
    FeatureMatrix out(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.cols(); ++c) out(r, c) = (data(r, c) - mean[c]) / scale[c];
    }
    return out;
}

std::vector<double> ZScaler::inverse(std::span<const double> row) const {
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = row[c] * scale[c] + mean[c];
    return out;
}

int nearest_centroid(const FeatureMatrix& centroids, std::span<const double> point) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
        const double d = squared_distance(point, centroids.row(j));
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

double kmeans_objective(const FeatureMatrix& points, const FeatureMatrix& centroids,
                        std::span<const int> assignment) {
    double e = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        e += squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(assignment[i])));
    }
    return e;
}

KMeansResult kmeans(const FeatureMatrix& points, const KMeansOptions& options) {
    if (options.k < 1) throw ConfigError("kmeans: k must be positive");
    if (options.restarts < 1) throw ConfigError("kmeans: restarts must be positive");
    if (points.rows() < static_cast<std::size_t>(options.k) ||
        distinct_rows(points) < static_cast<std::size_t>(options.k)) {
        throw DataError("kmeans: fewer distinct points than k = " + std::to_string(options.k));
    }
    KMeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < options.restarts; ++r) {
        std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(r)));
        auto run = lloyd(points, plus_plus_seed(points, options.k, rng), options);
        best.objective_history.push_back(run.history);
        if (run.objective < best.objective) {
            best.objective = run.objective;
            best.centroids = std::move(run.centroids);
            best.assignment = std::move(run.assignment);
            best.iterations = run.iterations;
            best.best_restart = r;
        }
    }
    return best;
}

StyleFeatures ClusterModel::centroid(int i) const {
    auto c = scaler.inverse(centroids.row(static_cast<std::size_t>(i)));
    return {c[0], c[1], c[2]};
}

std::vector<DrivingStyle> label_clusters(const ClusterModel& model) {
    const int k = static_cast<int>(model.centroids.rows());
    if (k < 1 || k > kStyleCount) throw ConfigError("label_clusters: k must be between 1 and 3");
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return model.centroid(a).lat_speed > model.centroid(b).lat_speed; });
    std::vector<DrivingStyle> map(static_cast<std::size_t>(k), DrivingStyle::general);
    if (k == 1) return map;
    map[static_cast<std::size_t>(order[0])] = DrivingStyle::aggressive;
    if (k == 3) {
        int a = std::min(order[1], order[2]);
        int b = std::max(order[1], order[2]);
        if (model.centroid(b).lat_accel > model.centroid(a).lat_accel) std::swap(a, b);
        map[static_cast<std::size_t>(a)] = DrivingStyle::cautious;
        map[static_cast<std::size_t>(b)] = DrivingStyle::general;
    }
    return map;
}

ClusterModel kmeans_fit(std::span<const StyleFeatures> points, const KMeansOptions& options,
                        KMeansResult* details) {
    FeatureMatrix raw(0, 0);
    for (const auto& p : points) {
        const auto a = p.as_array();
        raw.append_row(a);
    }
    if (raw.rows() == 0) throw DataError("kmeans_fit: no points");
    ClusterModel model;
    model.k = options.k;
    model.seed = options.seed;
    model.scaler = ZScaler::fit(raw);
    auto result = kmeans(model.scaler.transform(raw), options);
    model.centroids = result.centroids;
    model.objective = result.objective;
    model.iterations = result.iterations;
    model.label_map = label_clusters(model);
    if (details) *details = std::move(result);
    return model;
}

int assign_cluster(const ClusterModel& model, const StyleFeatures& point) {
    const auto a = point.as_array();
    return nearest_centroid(model.centroids, model.scaler.transform(a));
}

DrivingStyle assign_style(const ClusterModel& model, const StyleFeatures& point) {
    return model.label_map[static_cast<std::size_t>(assign_cluster(model, point))];
}

nlohmann::json to_json(const ClusterModel& model) {
    nlohmann::json j;
    j["format"] = "lcpred.cluster_model";
    j["version"] = 1;
    j["k"] = model.k;
    j["features"] = {"duration", "lat_accel", "lat_speed"};
    j["centroids"] = nlohmann::json::array();
    for (std::size_t r = 0; r < model.centroids.rows(); ++r) {
        auto row = model.centroids.row(r);
        j["centroids"].push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["scaler"] = {{"mean", model.scaler.mean}, {"scale", model.scaler.scale}};
    j["label_map"] = nlohmann::json::array();
    for (auto s : model.label_map) j["label_map"].push_back(std::string(to_string(s)));
    j["objective"] = model.objective;
    j["iterations"] = model.iterations;
    j["seed"] = model.seed;
    return j;
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "lcpred.cluster_model") throw DataError("not a cluster model");
        ClusterModel m;
        m.k = j.at("k").get<int>();
        m.centroids = FeatureMatrix(0, 0);
        for (const auto& row : j.at("centroids")) m.centroids.append_row(row.get<std::vector<double>>());
        m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
        m.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
        for (const auto& s : j.at("label_map")) m.label_map.push_back(parse_style(s.get<std::string>()));
        m.objective = j.at("objective").get<double>();
        m.iterations = j.at("iterations").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        if (static_cast<int>(m.centroids.rows()) != m.k || m.label_map.size() != m.centroids.rows()) {
            throw DataError("cluster model: inconsistent k");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("cluster model: ") + e.what());
    }
}

std::vector<StyleSummaryRow> cluster_report(std::span<const StyleFeatures> points,
                                            std::span<const DrivingStyle> styles) {
    auto summarize = [&](const std::string& name, auto&& keep) {
        StyleSummaryRow row;
        row.style = name;
        std::array<double, 3> sum{};
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!keep(i)) continue;
            const auto a = points[i].as_array();
            for (int c = 0; c < 3; ++c) sum[c] += a[c];
            ++row.count;
        }
        if (row.count == 0) return row;
        for (int c = 0; c < 3; ++c) row.mean[c] = sum[c] / static_cast<double>(row.count);
        std::array<double, 3> ss{};
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!keep(i)) continue;
            const auto a = points[i].as_array();
            for (int c = 0; c < 3; ++c) ss[c] += (a[c] - row.mean[c]) * (a[c] - row.mean[c]);
        }
        for (int c = 0; c < 3; ++c) row.stddev[c] = std::sqrt(ss[c] / static_cast<double>(row.count));
        return row;
    };
    std::vector<StyleSummaryRow> rows;
    for (auto s : {DrivingStyle::aggressive, DrivingStyle::general, DrivingStyle::cautious}) {
        rows.push_back(summarize(std::string(to_string(s)), [&](std::size_t i) { return styles[i] == s; }));
    }
    rows.push_back(summarize("overall", [](std::size_t) { return true; }));
    return rows;
}

std::string cluster_report_csv(const std::vector<StyleSummaryRow>& rows) {
    CsvWriter w;
    w.row({"style", "count", "duration_mean", "duration_std", "lat_accel_mean", "lat_accel_std", "lat_speed_mean",
           "lat_speed_std"});
    for (const auto& r : rows) {
        w.cell(r.style).cell(r.count);
        for (int c = 0; c < 3; ++c) w.cell(r.mean[c]).cell(r.stddev[c]);
        w.end_row();
    }
    return w.str();
}

}  // namespace lcpred
