#include "lcpred/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "lcpred/common.hpp"
#include "lcpred/csv.hpp"

namespace lcpred {

namespace {

using i128 = __int128;

// Weighted child Gini is minimized where S = (L0^2 + L1^2)/nL + (R0^2 + R1^2)/nR
// is maximized. Kept as an exact rational so equal gains compare equal.
struct SplitScore {
    i128 num = 0;
    i128 den = 1;
};

SplitScore split_score(long long l0, long long l1, long long r0, long long r1) {
    const i128 nl = l0 + l1;
    const i128 nr = r0 + r1;
    return {(i128(l0) * l0 + i128(l1) * l1) * nr + (i128(r0) * r0 + i128(r1) * r1) * nl, nl * nr};
}

bool greater(const SplitScore& a, const SplitScore& b) { return a.num * b.den > b.num * a.den; }

double gini(double c0, double c1) {
    const double n = c0 + c1;
    if (n <= 0.0) return 0.0;
    return 1.0 - (c0 * c0 + c1 * c1) / (n * n);
}

struct Candidate {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    SplitScore score;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const int> y, const ForestConfig& cfg, std::uint64_t seed)
        : x_(x), y_(y), cfg_(cfg), rng_(seed), mtry_(cfg.resolved_features(x.cols())) {
        order_.resize(x.cols());
    }

    DecisionTree build(std::vector<std::size_t> rows) {
        rows_ = std::move(rows);
        tree_.nodes.clear();
        grow(0, rows_.size(), 0);
        return std::move(tree_);
    }

private:
    int grow(std::size_t begin, std::size_t end, int depth) {
        long long c1 = 0;
        for (std::size_t i = begin; i < end; ++i) c1 += y_[rows_[i]];
        const long long n = static_cast<long long>(end - begin);
        const long long c0 = n - c1;

        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        {
            auto& node = tree_.nodes.back();
            node.samples = static_cast<std::size_t>(n);
            node.impurity = gini(static_cast<double>(c0), static_cast<double>(c1));
            node.value = n > 0 ? static_cast<double>(c1) / static_cast<double>(n) : 0.0;
        }

        const bool depth_ok = cfg_.max_depth <= 0 || depth < cfg_.max_depth;
        if (c0 == 0 || c1 == 0 || !depth_ok || n < 2LL * cfg_.min_samples_leaf) return id;

        const Candidate best = choose_split(begin, end, c0, c1);
        if (!best.valid) return id;

        const auto mid_it = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                                  rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                                  [&](std::size_t r) { return x_(r, best.feature) <= best.threshold; });
        const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());

        tree_.nodes[id].feature = best.feature;
        tree_.nodes[id].threshold = best.threshold;
        const int left = grow(begin, mid, depth + 1);
        const int right = grow(mid, end, depth + 1);
        tree_.nodes[id].left = left;
        tree_.nodes[id].right = right;
        return id;
    }

    // Samples mtry features; if none of them splits the node, keeps drawing from
    // the remaining features until one does.
    Candidate choose_split(std::size_t begin, std::size_t end, long long c0, long long c1) {
        const std::size_t d = x_.cols();
        std::iota(order_.begin(), order_.end(), 0);
        std::size_t drawn = 0;
        auto draw = [&]() {
            std::uniform_int_distribution<std::size_t> pick(drawn, d - 1);
            std::swap(order_[drawn], order_[pick(rng_)]);
            return order_[drawn++];
        };

        std::vector<int> batch;
        for (int i = 0; i < mtry_; ++i) batch.push_back(static_cast<int>(draw()));
        std::sort(batch.begin(), batch.end());

        const SplitScore parent{i128(c0) * c0 + i128(c1) * c1, c0 + c1};
        Candidate best;
        for (int f : batch) evaluate(f, begin, end, parent, best);
        while (!best.valid && drawn < d) evaluate(static_cast<int>(draw()), begin, end, parent, best);
        return best;
    }

    void evaluate(int feature, std::size_t begin, std::size_t end, const SplitScore& parent, Candidate& best) {
        values_.clear();
        for (std::size_t i = begin; i < end; ++i) values_.emplace_back(x_(rows_[i], feature), y_[rows_[i]]);
        std::sort(values_.begin(), values_.end());

        const long long n = static_cast<long long>(values_.size());
        long long tot1 = 0;
        for (const auto& v : values_) tot1 += v.second;
        const long long min_leaf = cfg_.min_samples_leaf;
        long long l0 = 0;
        long long l1 = 0;
        for (long long i = 0; i + 1 < n; ++i) {
            (values_[i].second ? l1 : l0) += 1;
            const double lo = values_[i].first;
            const double hi = values_[i + 1].first;
            if (!(lo < hi)) continue;
            const long long nl = i + 1;
            if (nl < min_leaf || n - nl < min_leaf) continue;
            const SplitScore score = split_score(l0, l1, (n - tot1) - l0, tot1 - l1);
            if (!greater(score, parent)) continue;
            if (best.valid && !greater(score, best.score)) continue;
            double threshold = lo + 0.5 * (hi - lo);
            if (!(threshold < hi)) threshold = lo;
            best = {true, feature, threshold, score};
        }
    }

    const FeatureMatrix& x_;
    std::span<const int> y_;
    const ForestConfig& cfg_;
    std::mt19937_64 rng_;
    int mtry_;
    std::vector<std::size_t> rows_;
    std::vector<std::size_t> order_;
    std::vector<std::pair<double, int>> values_;
    DecisionTree tree_;
};

nlohmann::json node_json(const DecisionTree& tree, int id) {
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    nlohmann::json j;
    j["samples"] = n.samples;
    j["impurity"] = n.impurity;
    j["value"] = n.value;
    if (!n.is_leaf()) {
        j["feature"] = n.feature;
        j["threshold"] = n.threshold;
        j["left"] = node_json(tree, n.left);
        j["right"] = node_json(tree, n.right);
    }
    return j;
}

int node_from_json(const nlohmann::json& j, DecisionTree& tree, std::size_t n_features) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    DecisionNode node;
    node.samples = j.at("samples").get<std::size_t>();
    node.impurity = j.at("impurity").get<double>();
    node.value = j.at("value").get<double>();
    if (!(node.value >= 0.0 && node.value <= 1.0)) throw DataError("forest: leaf fraction outside [0, 1]");
    if (j.contains("feature")) {
        node.feature = j.at("feature").get<int>();
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
            throw DataError("forest: split feature out of range");
        }
        node.threshold = j.at("threshold").get<double>();
        node.left = node_from_json(j.at("left"), tree, n_features);
        node.right = node_from_json(j.at("right"), tree, n_features);
    }
    tree.nodes[static_cast<std::size_t>(id)] = node;
    return id;
}

}  // namespace

void ForestConfig::validate(std::size_t n_features) const {
    if (n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
    if (max_depth < 0) throw ConfigError("forest: max_depth must be >= 0 (0 = unlimited)");
    if (min_samples_leaf < 1) throw ConfigError("forest: min_samples_leaf must be >= 1");
    if (features_per_split < 0 || static_cast<std::size_t>(features_per_split) > n_features) {
        throw ConfigError("forest: features_per_split must lie in [1, " + std::to_string(n_features) + "]");
    }
    if (threads < 1) throw ConfigError("forest: threads must be >= 1");
}

int ForestConfig::resolved_features(std::size_t n_features) const {
    if (features_per_split > 0) return features_per_split;
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
}

double DecisionTree::predict(std::span<const double> x) const {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(id)].value;
}

int DecisionTree::depth() const {
    std::vector<int> depth(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, depth[i]);
        if (!nodes[i].is_leaf()) {
            depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
        }
    }
    return best;
}

DecisionTree train_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                        const ForestConfig& config, std::uint64_t seed) {
    TreeBuilder builder(x, y, config, seed);
    return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

Forest train_forest(const FeatureMatrix& x, std::span<const int> y, const ForestConfig& config,
                    std::vector<std::string> feature_names) {
    if (x.rows() == 0) throw DataError("forest: empty training set");
    if (y.size() != x.rows()) throw DataError("forest: label count does not match rows");
    config.validate(x.cols());
    std::size_t positives = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (y[r] != 0 && y[r] != 1) throw DataError("forest: labels must be 0 or 1 (row " + std::to_string(r) + ")");
        positives += static_cast<std::size_t>(y[r]);
        for (double v : x.row(r)) {
            if (!std::isfinite(v)) throw DataError("forest: non-finite feature value in row " + std::to_string(r));
        }
    }
    if (positives == 0 || positives == x.rows()) throw DataError("forest: training set has a single class");
    if (!feature_names.empty() && feature_names.size() != x.cols()) {
        throw DataError("forest: feature name count does not match columns");
    }
    if (feature_names.empty()) {
        for (std::size_t c = 0; c < x.cols(); ++c) feature_names.push_back("f" + std::to_string(c));
    }

    Forest forest;
    forest.config = config;
    forest.n_features = x.cols();
    forest.feature_names = std::move(feature_names);
    forest.trees.resize(static_cast<std::size_t>(config.n_trees));

    const std::size_t n = x.rows();
    auto work = [&](std::size_t t) {
        const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(t));
        std::mt19937_64 rng(derive_seed(seed, "bootstrap"));
        std::vector<std::size_t> rows(n);
        if (config.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (auto& r : rows) r = pick(rng);
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        forest.trees[t] = train_tree(x, y, rows, config, derive_seed(seed, "splits"));
    };

    const auto threads = static_cast<std::size_t>(std::min(config.threads, config.n_trees));
    if (threads <= 1) {
        for (std::size_t t = 0; t < forest.trees.size(); ++t) work(t);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < forest.trees.size(); t += threads) work(t);
            });
        }
        for (auto& th : pool) th.join();
    }
    return forest;
}

double predict_proba(const Forest& forest, std::span<const double> x) {
    if (x.size() != forest.n_features) {
        throw DataError("forest: sample has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(forest.n_features));
    }
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.predict(x);
    return sum / static_cast<double>(forest.trees.size());
}

std::vector<double> predict_proba(const Forest& forest, const FeatureMatrix& x) {
    std::vector<double> out;
    out.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(predict_proba(forest, x.row(r)));
    return out;
}

std::vector<double> feature_importance(const Forest& forest) {
    const std::size_t d = forest.n_features;
    std::vector<double> total(d, 0.0);
    std::vector<double> per_tree(d);
    for (const auto& tree : forest.trees) {
        std::fill(per_tree.begin(), per_tree.end(), 0.0);
        const double root = static_cast<double>(tree.nodes.front().samples);
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
            const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
            const double decrease = static_cast<double>(node.samples) * node.impurity -
                                    static_cast<double>(l.samples) * l.impurity -
                                    static_cast<double>(r.samples) * r.impurity;
            per_tree[static_cast<std::size_t>(node.feature)] += decrease / root;
        }
        const double s = std::accumulate(per_tree.begin(), per_tree.end(), 0.0);
        if (s > 0.0) {
            for (std::size_t f = 0; f < d; ++f) total[f] += per_tree[f] / s;
        }
    }
    const double s = std::accumulate(total.begin(), total.end(), 0.0);
    if (!(s > 0.0)) return std::vector<double>(d, 1.0 / static_cast<double>(d));
    for (auto& v : total) v /= s;
    return total;
}

nlohmann::json to_json(const Forest& forest) {
    nlohmann::json j;
    j["format"] = "lcpred.forest";
    j["version"] = 1;
    j["config"] = {{"n_trees", forest.config.n_trees},
                   {"max_depth", forest.config.max_depth},
                   {"min_samples_leaf", forest.config.min_samples_leaf},
                   {"features_per_split", forest.config.features_per_split},
                   {"bootstrap", forest.config.bootstrap},
                   {"seed", forest.config.seed}};
    j["n_features"] = forest.n_features;
    j["feature_names"] = forest.feature_names;
    auto trees = nlohmann::json::array();
    for (const auto& t : forest.trees) trees.push_back(node_json(t, 0));
    j["trees"] = std::move(trees);
    return j;
}

Forest forest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "lcpred.forest") throw DataError("not a forest document");
        if (j.at("version").get<int>() != 1) throw DataError("unsupported forest version");
        Forest f;
        const auto& c = j.at("config");
        f.config.n_trees = c.at("n_trees").get<int>();
        f.config.max_depth = c.at("max_depth").get<int>();
        f.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
        f.config.features_per_split = c.at("features_per_split").get<int>();
        f.config.bootstrap = c.at("bootstrap").get<bool>();
        f.config.seed = c.at("seed").get<std::uint64_t>();
        f.n_features = j.at("n_features").get<std::size_t>();
        f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& t : j.at("trees")) {
            DecisionTree tree;
            node_from_json(t, tree, f.n_features);
            f.trees.push_back(std::move(tree));
        }
        if (f.trees.empty()) throw DataError("forest has no trees");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed forest json: ") + e.what());
    }
}

bool operator==(const Forest& a, const Forest& b) {
    return a.n_features == b.n_features && a.feature_names == b.feature_names && a.trees == b.trees &&
           a.config.n_trees == b.config.n_trees && a.config.max_depth == b.config.max_depth &&
           a.config.min_samples_leaf == b.config.min_samples_leaf &&
           a.config.features_per_split == b.config.features_per_split && a.config.bootstrap == b.config.bootstrap &&
           a.config.seed == b.config.seed;
}

std::string importance_csv(const Forest& forest) {
    const auto imp = feature_importance(forest);
    std::vector<std::size_t> order(imp.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
    CsvWriter w;
    w.row({"rank", "feature", "importance"});
    for (std::size_t i = 0; i < order.size(); ++i) {
        w.cell(i + 1).cell(forest.feature_names[order[i]]).cell(imp[order[i]]).end_row();
    }
    return w.str();
}

}  // namespace lcpred
