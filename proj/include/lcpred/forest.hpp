#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcpred/matrix.hpp"

namespace lcpred {

struct ForestConfig {
    int n_trees = 500;
    int max_depth = 0;           // 0 = unlimited
    int min_samples_leaf = 1;
    int features_per_split = 0;  // 0 = ceil(sqrt(d))
    bool bootstrap = true;  // false: every tree sees all rows once
    std::uint64_t seed = 0;
    int threads = 1;  // trees are independent; results do not depend on this

    void validate(std::size_t n_features) const;
    int resolved_features(std::size_t n_features) const;
};

// Flat node storage; children are indices into the owning tree.
struct DecisionNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;  // go left when x <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf: class-1 fraction of its training rows
    std::size_t samples = 0;  // bootstrap rows reaching the node
    double impurity = 0.0;    // Gini of those rows

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const DecisionNode&, const DecisionNode&) = default;
};

struct DecisionTree {
    std::vector<DecisionNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    int depth() const;
    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct Forest {
    ForestConfig config;
    std::size_t n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<DecisionTree> trees;
};

// Bagged CART on labels in {0, 1}. Throws DataError on a single-class set or a
// non-finite feature value (naming the row).
Forest train_forest(const FeatureMatrix& x, std::span<const int> y, const ForestConfig& config,
                    std::vector<std::string> feature_names = {});

DecisionTree train_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                        const ForestConfig& config, std::uint64_t seed);

// Mean of per-tree leaf fractions.
double predict_proba(const Forest& forest, std::span<const double> x);
std::vector<double> predict_proba(const Forest& forest, const FeatureMatrix& x);
inline int predict_label(double score) noexcept { return score >= 0.5 ? 1 : 0; }

// Sample-weighted Gini decrease per feature, normalized per tree, averaged, and
// normalized to sum 1. Uniform when no tree ever split.
std::vector<double> feature_importance(const Forest& forest);

nlohmann::json to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);

bool operator==(const Forest& a, const Forest& b);

// Columns: rank, feature, importance; sorted by importance descending.
std::string importance_csv(const Forest& forest);

}  // namespace lcpred
