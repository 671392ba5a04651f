// Copyright 2026 The sadp authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sadp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "sadp/errors.hpp"
#include "sadp/io.hpp"
#include "sadp/rng.hpp"

namespace sadp {
namespace {

// Impurity in count units: n * gini = n - sum(c^2) / n.
double gini_count_units(const std::vector<double>& counts, double n) {
  if (n <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return n - sq / n;
}

struct TreeBuilder {
  const std::vector<std::vector<double>>& X;
  const std::vector<int>& y;
  const ForestHyper& hyper;
  int n_classes;
  int features_per_split;
  Rng& rng;
  std::vector<double>& importance;
  DecisionTree tree;

  std::vector<double> class_counts(const std::vector<int>& idx) const {
    std::vector<double> counts(n_classes, 0.0);
    for (int i : idx) counts[y[i]] += 1.0;
    return counts;
  }

  int build(std::vector<int>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::vector<double> counts = class_counts(idx);
    const double n = static_cast<double>(idx.size());
    const int nonzero = static_cast<int>(
        std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }));

    const bool depth_capped = hyper.max_depth >= 0 && depth >= hyper.max_depth;
    if (nonzero <= 1 || depth_capped ||
        static_cast<int>(idx.size()) < 2 * hyper.min_leaf) {
      tree.nodes[node_id].counts = std::move(counts);
      return node_id;
    }

    // Random feature subset, partial Fisher-Yates.
    const int d = static_cast<int>(X[0].size());
    std::vector<int> features(d);
    std::iota(features.begin(), features.end(), 0);
    const int k = std::min(features_per_split, d);
    for (int j = 0; j < k; ++j) {
      const std::size_t pick = j + rng.index(static_cast<std::size_t>(d - j));
      std::swap(features[j], features[pick]);
    }

    const double parent_cu = gini_count_units(counts, n);
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_decrease = 1e-9;

    std::vector<std::pair<double, int>> vals(idx.size());
    for (int fi = 0; fi < k; ++fi) {
      const int f = features[fi];
      for (std::size_t j = 0; j < idx.size(); ++j) {
        vals[j] = {X[idx[j]][f], y[idx[j]]};
      }
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;

      std::vector<double> left(n_classes, 0.0);
      double nl = 0.0;
      for (std::size_t j = 0; j + 1 < vals.size(); ++j) {
        left[vals[j].second] += 1.0;
        nl += 1.0;
        if (vals[j].first == vals[j + 1].first) continue;
        const double nr = n - nl;
        if (nl < hyper.min_leaf || nr < hyper.min_leaf) continue;
        double right_cu_sq = 0.0, left_cu_sq = 0.0;
        for (int c = 0; c < n_classes; ++c) {
          left_cu_sq += left[c] * left[c];
          const double rc = counts[c] - left[c];
          right_cu_sq += rc * rc;
        }
        const double child_cu = (nl - left_cu_sq / nl) + (nr - right_cu_sq / nr);
        const double decrease = parent_cu - child_cu;
        if (decrease > best_decrease) {
          best_decrease = decrease;
          best_feature = f;
          best_threshold = 0.5 * (vals[j].first + vals[j + 1].first);
        }
      }
    }

    if (best_feature < 0) {
      tree.nodes[node_id].counts = std::move(counts);
      return node_id;
    }

    importance[best_feature] += best_decrease;

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (int i : idx) {
      (X[i][best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int left_id = build(left_idx, depth + 1);
    tree.nodes[node_id].left = left_id;
    const int right_id = build(right_idx, depth + 1);
    tree.nodes[node_id].right = right_id;
    return node_id;
  }
};

}  // namespace

const std::vector<double>& DecisionTree::leaf_counts(std::span<const double> x) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                           : nodes[node].right;
  }
  return nodes[node].counts;
}

std::vector<double> ForestModel::predict_proba(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_features) {
    throw ConfigError("forest predict: feature dimension mismatch (got " +
                      std::to_string(x.size()) + ", trained on " +
                      std::to_string(n_features) + ")");
  }
  std::vector<double> probs(n_classes, 0.0);
  for (const DecisionTree& tree : trees) {
    const std::vector<double>& counts = tree.leaf_counts(x);
    double total = 0.0;
    for (double c : counts) total += c;
    for (int j = 0; j < n_classes; ++j) probs[j] += counts[j] / total;
  }
  for (double& p : probs) p /= static_cast<double>(trees.size());
  return probs;
}

int ForestModel::predict(std::span<const double> x) const {
  const std::vector<double> probs = predict_proba(x);
  int best = 0;
  for (int j = 1; j < n_classes; ++j) {
    if (probs[j] > probs[best]) best = j;
  }
  return best;
}

ForestModel train_forest(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y, const ForestHyper& hyper,
                         std::uint64_t seed) {
  if (X.empty()) throw ConfigError("train_forest: empty training set");
  if (X.size() != y.size()) throw ConfigError("train_forest: |X| != |y|");
  if (X.size() < 2) throw ConfigError("train_forest: need >= 2 samples");
  const int d = static_cast<int>(X[0].size());
  for (const auto& row : X) {
    if (static_cast<int>(row.size()) != d) {
      throw ConfigError("train_forest: ragged feature matrix");
    }
  }
  int n_classes = 0;
  for (int label : y) {
    if (label < 0) throw ConfigError("train_forest: negative label");
    n_classes = std::max(n_classes, label + 1);
  }
  {
    std::vector<int> seen(n_classes, 0);
    for (int label : y) seen[label] = 1;
    if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
      throw ConfigError("train_forest: need >= 2 classes in y");
    }
  }

  ForestModel model;
  model.hyper = hyper;
  model.n_features = d;
  model.n_classes = n_classes;
  model.seed = seed;
  model.feature_importance.assign(d, 0.0);
  model.trees.resize(hyper.n_trees);

  const int fps = hyper.features_per_split > 0
                      ? hyper.features_per_split
                      : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

  for (int t = 0; t < hyper.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> idx(X.size());
    if (hyper.bootstrap) {
      for (auto& i : idx) i = static_cast<int>(rng.index(X.size()));
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    TreeBuilder builder{X, y, hyper, n_classes, fps, rng, model.feature_importance, {}};
    builder.build(idx, 0);
    model.trees[t] = std::move(builder.tree);
  }
  return model;
}

void save_forest(const ForestModel& m, const std::string& path) {
  nlohmann::json j;
  j["kind"] = "forest";
  j["version"] = 1;
  j["n_features"] = m.n_features;
  j["n_classes"] = m.n_classes;
  j["seed"] = m.seed;
  j["hyper"] = {{"n_trees", m.hyper.n_trees},
                {"max_depth", m.hyper.max_depth},
                {"min_leaf", m.hyper.min_leaf},
                {"features_per_split", m.hyper.features_per_split},
                {"bootstrap", m.hyper.bootstrap}};
  j["importance"] = m.feature_importance;
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& tree : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : tree.nodes) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts});
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  write_file(path, j.dump());
}

ForestModel load_forest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse model file " + path + ": " + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != "forest") {
    throw DataError("not a forest model file: " + path);
  }
  if (j.value("version", 0) != 1) {
    throw DataError("unsupported forest model version in " + path);
  }
  ForestModel m;
  m.n_features = j.at("n_features").get<int>();
  m.n_classes = j.at("n_classes").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& h = j.at("hyper");
  m.hyper.n_trees = h.at("n_trees").get<int>();
  m.hyper.max_depth = h.at("max_depth").get<int>();
  m.hyper.min_leaf = h.at("min_leaf").get<int>();
  m.hyper.features_per_split = h.at("features_per_split").get<int>();
  m.hyper.bootstrap = h.at("bootstrap").get<bool>();
  m.feature_importance = j.at("importance").get<std::vector<double>>();
  for (const auto& tj : j.at("trees")) {
    DecisionTree tree;
    for (const auto& nj : tj) {
      TreeNode n;
      n.feature = nj.at(0).get<int>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<int>();
      n.right = nj.at(3).get<int>();
      n.counts = nj.at(4).get<std::vector<double>>();
      tree.nodes.push_back(std::move(n));
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace sadp
