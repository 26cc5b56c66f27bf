#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "xtalk/rng.hpp"

namespace xtalk {

struct TreeNode {
  int feature = -1;       // -1 marks a leaf
  double threshold = 0.0; // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;     // leaf payload: class vote or regression mean
};

struct Tree {
  std::vector<TreeNode> nodes;

  template <typename Derived>
  double predict(const Eigen::MatrixBase<Derived>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

// Split candidates per feature. Cut values are actual training values, so the
// induced partition is invariant under strictly monotone feature rescaling.
struct FeatureBins {
  std::vector<std::vector<double>> cuts;  // per feature, ascending
  Eigen::Matrix<uint16_t, Eigen::Dynamic, Eigen::Dynamic> codes;  // (row, feature)

  int columns() const { return int(cuts.size()); }
};

FeatureBins build_bins(const Eigen::MatrixXd& x, int max_bins);

struct TreeConfig {
  bool classification = false;  // gini on {0,1} labels vs variance reduction
  int max_depth = 0;            // 0 = unlimited
  int max_leaves = 0;           // 0 = unlimited
  int min_samples_leaf = 1;
  int features_per_split = 0;   // 0 = all features
};

// Best-first growth; deterministic under the rng seed and row order.
// weights act as integer multiplicities (bootstrap counts).
Tree grow_tree(const FeatureBins& bins, const Eigen::VectorXd& y, std::vector<int> rows,
               const std::vector<uint32_t>* weights, const TreeConfig& cfg, Rng& rng);

} // namespace xtalk
