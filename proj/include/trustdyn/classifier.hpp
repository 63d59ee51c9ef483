#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trustdyn/clustering.hpp"
#include "trustdyn/rng.hpp"

// Entropy decision tree over the seven personal-characteristic dimensions
// that separate the trust-dynamics archetypes, plus the train/test split,
// cross-validation, and evaluation machinery around it.

namespace trustdyn {

struct EmptyDataset : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct MissingFeature : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

constexpr int kNumPredictiveDims = 7;

inline const std::array<const char*, kNumPredictiveDims>& predictive_dim_names() {
    static const std::array<const char*, kNumPredictiveDims> names = {
        "masculinity",           "positive_affect",       "extraversion",
        "neuroticism",           "intellect",             "performance_expectancy",
        "pas_high_expectations"};
    return names;
}

using FeatureVector = std::array<double, kNumPredictiveDims>;

struct LabeledDataset {
    std::vector<FeatureVector> features;
    std::vector<int> labels;  // 0 = BDM, 1 = disbeliever, 2 = oscillator

    std::size_t size() const { return features.size(); }
};

// Flat node storage; index 0 is the root. Internal nodes route value <=
// threshold to the left child.
struct TreeNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    std::array<int, 3> class_counts{0, 0, 0};
    int predicted_label = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    int predict(const FeatureVector& x) const {
        if (nodes.empty()) throw std::logic_error("DecisionTree: empty tree");
        int id = 0;
        while (!nodes[id].is_leaf) {
            const TreeNode& nd = nodes[id];
            if (!std::isfinite(x[nd.feature]))
                throw MissingFeature(std::string("predict: missing feature ") +
                                     predictive_dim_names()[nd.feature]);
            id = (x[nd.feature] <= nd.threshold) ? nd.left : nd.right;
        }
        return nodes[id].predicted_label;
    }

    int depth() const {
        // root depth 0
        std::vector<int> d(nodes.size(), 0);
        int maxd = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].is_leaf) { maxd = std::max(maxd, d[i]); continue; }
            d[nodes[i].left] = d[i] + 1;
            d[nodes[i].right] = d[i] + 1;
        }
        return maxd;
    }

    // One node per line so trained trees diff cleanly between runs.
    std::string serialize() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const TreeNode& nd = nodes[i];
            if (nd.is_leaf) {
                os << i << " leaf " << nd.class_counts[0] << ' ' << nd.class_counts[1]
                   << ' ' << nd.class_counts[2] << ' ' << nd.predicted_label << '\n';
            } else {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.9g", nd.threshold);
                os << i << " split " << predictive_dim_names()[nd.feature] << ' ' << buf
                   << ' ' << nd.left << ' ' << nd.right << '\n';
            }
        }
        return os.str();
    }
};

namespace detail {

inline double entropy_bits(const std::array<int, 3>& counts, int total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Best (feature, threshold) by information gain. Candidate thresholds are
// midpoints of consecutive sorted unique values; ties keep the first
// candidate in (feature asc, threshold asc) order.
inline SplitChoice best_split(const LabeledDataset& data, const std::vector<int>& idx,
                              int min_samples_leaf) {
    constexpr double kTieTol = 1e-12;
    const int n = static_cast<int>(idx.size());
    std::array<int, 3> total_counts{0, 0, 0};
    for (int i : idx) ++total_counts[data.labels[i]];
    const double h_parent = entropy_bits(total_counts, n);

    SplitChoice best;
    std::vector<std::pair<double, int>> vals(idx.size());
    for (int f = 0; f < kNumPredictiveDims; ++f) {
        for (std::size_t j = 0; j < idx.size(); ++j)
            vals[j] = {data.features[idx[j]][f], data.labels[idx[j]]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::array<int, 3> left{0, 0, 0};
        int nl = 0;
        for (int j = 0; j + 1 < n; ++j) {
            ++left[vals[j].second];
            ++nl;
            if (vals[j].first == vals[j + 1].first) continue;  // not a boundary
            const int nr = n - nl;
            if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
            std::array<int, 3> right{total_counts[0] - left[0], total_counts[1] - left[1],
                                     total_counts[2] - left[2]};
            const double gain = h_parent -
                                (static_cast<double>(nl) / n) * entropy_bits(left, nl) -
                                (static_cast<double>(nr) / n) * entropy_bits(right, nr);
            if (!best.found || gain > best.gain + kTieTol) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (vals[j].first + vals[j + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

inline int build_node(DecisionTree& tree, const LabeledDataset& data,
                      std::vector<int> idx, int depth, int max_depth,
                      int min_samples_leaf) {
    TreeNode node;
    std::array<int, 3> counts{0, 0, 0};
    for (int i : idx) ++counts[data.labels[i]];
    node.class_counts = counts;
    int majority = 0;
    for (int c = 1; c < 3; ++c)
        if (counts[c] > counts[majority]) majority = c;
    node.predicted_label = majority;

    const bool pure = (counts[0] == static_cast<int>(idx.size())) ||
                      (counts[1] == static_cast<int>(idx.size())) ||
                      (counts[2] == static_cast<int>(idx.size()));
    SplitChoice split;
    if (!pure && depth < max_depth &&
        static_cast<int>(idx.size()) >= 2 * min_samples_leaf) {
        split = best_split(data, idx, min_samples_leaf);
    }
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (!split.found || split.gain <= 0.0) return id;

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
        if (data.features[i][split.feature] <= split.threshold)
            left_idx.push_back(i);
        else
            right_idx.push_back(i);
    }
    tree.nodes[id].is_leaf = false;
    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    tree.nodes[id].left =
        build_node(tree, data, std::move(left_idx), depth + 1, max_depth, min_samples_leaf);
    tree.nodes[id].right =
        build_node(tree, data, std::move(right_idx), depth + 1, max_depth, min_samples_leaf);
    return id;
}

}  // namespace detail

inline DecisionTree train_tree(const LabeledDataset& data, int max_depth,
                               int min_samples_leaf) {
    if (data.size() == 0) throw EmptyDataset("train_tree: empty dataset");
    if (data.features.size() != data.labels.size())
        throw std::invalid_argument("train_tree: features/labels length mismatch");
    std::vector<int> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    DecisionTree tree;
    detail::build_node(tree, data, std::move(idx), 0, max_depth, min_samples_leaf);
    return tree;
}

struct EvalReport {
    std::array<std::array<int, 3>, 3> confusion{};  // [true][predicted]
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    std::array<double, 3> per_class_recall{0.0, 0.0, 0.0};
};

inline EvalReport evaluate(const DecisionTree& tree, const LabeledDataset& test) {
    if (test.size() == 0) throw EmptyDataset("evaluate: empty test set");
    EvalReport rep;
    for (std::size_t i = 0; i < test.size(); ++i)
        ++rep.confusion[test.labels[i]][tree.predict(test.features[i])];

    int correct = 0, total = 0;
    for (int c = 0; c < 3; ++c) {
        correct += rep.confusion[c][c];
        for (int d = 0; d < 3; ++d) total += rep.confusion[c][d];
    }
    rep.accuracy = static_cast<double>(correct) / total;

    double wf1 = 0.0;
    for (int c = 0; c < 3; ++c) {
        int support = 0, predicted = 0;
        for (int d = 0; d < 3; ++d) {
            support += rep.confusion[c][d];
            predicted += rep.confusion[d][c];
        }
        const double recall = support > 0 ? static_cast<double>(rep.confusion[c][c]) / support : 0.0;
        const double precision =
            predicted > 0 ? static_cast<double>(rep.confusion[c][c]) / predicted : 0.0;
        const double f1 =
            (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
        rep.per_class_recall[c] = recall;
        wf1 += (static_cast<double>(support) / total) * f1;
    }
    rep.weighted_f1 = wf1;
    return rep;
}

struct HyperParams {
    int max_depth = 6;
    int min_samples_leaf = 1;
};

struct TrainTestSplit {
    std::vector<int> train_idx;
    std::vector<int> test_idx;
};

// Plain seeded random 80:20 split; stratified variant keeps the class
// imbalance identical on both sides.
inline TrainTestSplit split_80_20(const std::vector<int>& labels, std::uint64_t seed,
                                  bool stratified = false) {
    const std::size_t n = labels.size();
    TrainTestSplit out;
    Rng rng(seed);
    if (!stratified) {
        std::vector<int> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
        rng.shuffle(idx);
        const std::size_t n_test = n / 5;
        out.test_idx.assign(idx.begin(), idx.begin() + static_cast<long>(n_test));
        out.train_idx.assign(idx.begin() + static_cast<long>(n_test), idx.end());
    } else {
        for (int c = 0; c < 3; ++c) {
            std::vector<int> idx;
            for (std::size_t i = 0; i < n; ++i)
                if (labels[i] == c) idx.push_back(static_cast<int>(i));
            rng.shuffle(idx);
            const std::size_t n_test = idx.size() / 5;
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < n_test ? out.test_idx : out.train_idx).push_back(idx[i]);
        }
    }
    std::sort(out.train_idx.begin(), out.train_idx.end());
    std::sort(out.test_idx.begin(), out.test_idx.end());
    return out;
}

struct CvResult {
    HyperParams best;
    double best_mean_f1 = 0.0;
    std::vector<std::pair<HyperParams, double>> grid_scores;
};

// Seeded 5-fold CV over the hyperparameter grid, selecting the highest mean
// weighted F1. Ties resolve to the smaller depth, then the larger leaf
// minimum; iterating depth ascending and leaf size descending makes the
// first strict improvement the winner.
inline CvResult cross_validate(const LabeledDataset& train,
                               const std::vector<int>& depth_grid,
                               const std::vector<int>& min_leaf_grid,
                               std::uint64_t seed) {
    if (train.size() < 5)
        throw std::invalid_argument("cross_validate: need at least 5 samples");
    constexpr int kFolds = 5;
    std::vector<int> idx(train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    Rng rng(seed);
    rng.shuffle(idx);

    std::vector<int> depths = depth_grid;
    std::sort(depths.begin(), depths.end());
    std::vector<int> leaves = min_leaf_grid;
    std::sort(leaves.begin(), leaves.end(), std::greater<int>());

    CvResult result;
    bool have = false;
    for (int depth : depths) {
        for (int min_leaf : leaves) {
            double sum_f1 = 0.0;
            for (int fold = 0; fold < kFolds; ++fold) {
                LabeledDataset tr, va;
                for (std::size_t pos = 0; pos < idx.size(); ++pos) {
                    LabeledDataset& dst =
                        (static_cast<int>(pos) % kFolds == fold) ? va : tr;
                    dst.features.push_back(train.features[idx[pos]]);
                    dst.labels.push_back(train.labels[idx[pos]]);
                }
                if (va.size() == 0 || tr.size() == 0) continue;
                const DecisionTree tree = train_tree(tr, depth, min_leaf);
                sum_f1 += evaluate(tree, va).weighted_f1;
            }
            const double mean_f1 = sum_f1 / kFolds;
            result.grid_scores.push_back({HyperParams{depth, min_leaf}, mean_f1});
            if (!have || mean_f1 > result.best_mean_f1) {
                result.best = HyperParams{depth, min_leaf};
                result.best_mean_f1 = mean_f1;
                have = true;
            }
        }
    }
    return result;
}

inline DecisionTree deserialize_tree(const std::string& text) {
    DecisionTree tree;
    std::istringstream is(text);
    std::string line;
    const auto& names = predictive_dim_names();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t id;
        std::string kind;
        ls >> id >> kind;
        TreeNode node;
        if (kind == "leaf") {
            ls >> node.class_counts[0] >> node.class_counts[1] >> node.class_counts[2] >>
                node.predicted_label;
        } else if (kind == "split") {
            std::string fname;
            ls >> fname >> node.threshold >> node.left >> node.right;
            node.is_leaf = false;
            node.feature = -1;
            for (int f = 0; f < kNumPredictiveDims; ++f)
                if (fname == names[f]) node.feature = f;
            if (node.feature < 0)
                throw std::invalid_argument("deserialize_tree: unknown feature " + fname);
        } else {
            throw std::invalid_argument("deserialize_tree: bad node kind " + kind);
        }
        if (ls.fail()) throw std::invalid_argument("deserialize_tree: malformed line");
        if (tree.nodes.size() != id)
            throw std::invalid_argument("deserialize_tree: non-sequential node id");
        tree.nodes.push_back(node);
    }
    return tree;
}

}  // namespace trustdyn
