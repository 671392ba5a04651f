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

#ifndef SADP_FOREST_HPP
#define SADP_FOREST_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sadp {

struct ForestHyper {
  int n_trees = 100;
  int max_depth = -1;          // -1 = unlimited
  int min_leaf = 1;
  int features_per_split = 0;  // 0 = ceil(sqrt(d))
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> counts;  // class counts at leaves

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;

  const std::vector<double>& leaf_counts(std::span<const double> x) const;
};

// Bagged Gini-impurity trees with a random feature subset per split.
// Continuous thresholds are midpoints between sorted distinct values; trees
// draw their own seeds from the master seed, so training is deterministic
// and tree order never depends on scheduling.
class ForestModel {
 public:
  std::vector<DecisionTree> trees;
  ForestHyper hyper;
  int n_features = 0;
  int n_classes = 0;
  std::uint64_t seed = 0;
  // Total Gini impurity decrease per feature, summed over all splits in all
  // trees (training-sample count units).
  std::vector<double> feature_importance;

  // Mean over trees of the leaf class frequencies.
  std::vector<double> predict_proba(std::span<const double> x) const;
  // Argmax class; ties break toward the lowest class index.
  int predict(std::span<const double> x) const;
};

ForestModel train_forest(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y, const ForestHyper& hyper,
                         std::uint64_t seed);

// Versioned self-describing JSON container; a load-save-load round trip is
// prediction-identical.
void save_forest(const ForestModel& m, const std::string& path);
ForestModel load_forest(const std::string& path);

}  // namespace sadp

#endif  // SADP_FOREST_HPP
