#include "xtalk/tree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace xtalk {

FeatureBins build_bins(const Eigen::MatrixXd& x, int max_bins) {
  if (max_bins < 2) throw std::invalid_argument("max_bins must be >= 2");
  const Eigen::Index n = x.rows();
  const int d = int(x.cols());
  FeatureBins bins;
  bins.cuts.resize(d);
  bins.codes.resize(n, d);

  std::vector<double> col(static_cast<std::size_t>(n));
  for (int j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) col[std::size_t(i)] = x(i, j);
    std::sort(col.begin(), col.end());
    std::vector<double>& cuts = bins.cuts[j];
    for (int b = 1; b < max_bins; ++b) {
      double v = col[std::size_t(std::min<Eigen::Index>(n - 1, Eigen::Index(double(b) * double(n) / max_bins)))];
      if (cuts.empty() || v > cuts.back()) cuts.push_back(v);
    }
    // drop the top cut if it equals the max: nothing can land to its right
    if (!cuts.empty() && cuts.back() >= col.back()) cuts.pop_back();
    for (Eigen::Index i = 0; i < n; ++i) {
      auto it = std::lower_bound(cuts.begin(), cuts.end(), x(i, j));
      bins.codes(i, j) = uint16_t(it - cuts.begin());
    }
  }
  return bins;
}

namespace {

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  int cut = -1;  // split predicate: code <= cut
  bool valid() const { return feature >= 0; }
};

struct NodeStats {
  double weight = 0.0;
  double sum = 0.0;  // label sum (positives for classification)
};

struct Grower {
  const FeatureBins& bins;
  const Eigen::VectorXd& y;
  const std::vector<uint32_t>* weights;
  const TreeConfig& cfg;
  Rng& rng;
  std::vector<int>& rows;

  double weight_of(int r) const { return weights ? double((*weights)[std::size_t(r)]) : 1.0; }

  NodeStats stats_of(int lo, int hi) const {
    NodeStats s;
    for (int i = lo; i < hi; ++i) {
      double w = weight_of(rows[std::size_t(i)]);
      s.weight += w;
      s.sum += w * y[rows[std::size_t(i)]];
    }
    return s;
  }

  // impurity-weighted score; higher total gain = parent score - children scores
  double score(const NodeStats& s) const {
    if (s.weight <= 0) return 0.0;
    if (cfg.classification) {
      double p = s.sum / s.weight;
      return s.weight * p * (1.0 - p);  // weighted gini/2
    }
    return -s.sum * s.sum / s.weight;  // SSE up to a constant
  }

  SplitChoice best_split(int lo, int hi, const NodeStats& parent) {
    const int d = bins.columns();
    int mtry = cfg.features_per_split > 0 ? std::min(cfg.features_per_split, d) : d;

    // deterministic partial Fisher-Yates over feature indices
    std::vector<int> feats(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) feats[std::size_t(j)] = j;
    for (int j = 0; j < mtry; ++j) {
      int k = j + int(rng.uniform_idx(uint64_t(d - j)));
      std::swap(feats[std::size_t(j)], feats[std::size_t(k)]);
    }
    std::sort(feats.begin(), feats.begin() + mtry);  // rng order must not bias ties

    SplitChoice best;
    std::vector<double> bin_w, bin_s;
    for (int fi = 0; fi < mtry; ++fi) {
      int j = feats[std::size_t(fi)];
      int nb = int(bins.cuts[std::size_t(j)].size()) + 1;
      if (nb < 2) continue;
      bin_w.assign(std::size_t(nb), 0.0);
      bin_s.assign(std::size_t(nb), 0.0);
      for (int i = lo; i < hi; ++i) {
        int r = rows[std::size_t(i)];
        int b = bins.codes(r, j);
        double w = weight_of(r);
        bin_w[std::size_t(b)] += w;
        bin_s[std::size_t(b)] += w * y[r];
      }
      NodeStats left;
      for (int b = 0; b + 1 < nb; ++b) {
        left.weight += bin_w[std::size_t(b)];
        left.sum += bin_s[std::size_t(b)];
        if (left.weight < cfg.min_samples_leaf) continue;
        NodeStats right{parent.weight - left.weight, parent.sum - left.sum};
        if (right.weight < cfg.min_samples_leaf) break;
        double gain = score(parent) - score(left) - score(right);
        // ascending (feature, cut) scan: ties keep the first maximum
        if (gain > best.gain && gain > 1e-12) best = {gain, j, b};
      }
    }
    return best;
  }

  double leaf_value(const NodeStats& s) const {
    if (s.weight <= 0) return 0.0;
    if (cfg.classification) return 2.0 * s.sum >= s.weight ? 1.0 : 0.0;  // ties vote positive
    return s.sum / s.weight;
  }
};

struct Pending {
  int node = -1;
  int lo = 0, hi = 0;
  int depth = 0;
  NodeStats stats;
  SplitChoice split;
};

} // namespace

Tree grow_tree(const FeatureBins& bins, const Eigen::VectorXd& y, std::vector<int> rows,
               const std::vector<uint32_t>* weights, const TreeConfig& cfg, Rng& rng) {
  Tree tree;
  if (rows.empty()) {
    tree.nodes.push_back(TreeNode{});
    return tree;
  }
  Grower g{bins, y, weights, cfg, rng, rows};

  auto make_pending = [&](int node, int lo, int hi, int depth) {
    Pending p;
    p.node = node;
    p.lo = lo;
    p.hi = hi;
    p.depth = depth;
    p.stats = g.stats_of(lo, hi);
    bool depth_ok = cfg.max_depth <= 0 || depth < cfg.max_depth;
    if (depth_ok && hi - lo >= 2 * cfg.min_samples_leaf) p.split = g.best_split(lo, hi, p.stats);
    return p;
  };

  // best gain first; node id breaks ties so growth order is reproducible
  auto cmp = [](const Pending& a, const Pending& b) {
    if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
    return a.node > b.node;
  };
  std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> frontier(cmp);

  tree.nodes.push_back(TreeNode{});
  Pending root = make_pending(0, 0, int(rows.size()), 0);
  tree.nodes[0].value = g.leaf_value(root.stats);
  frontier.push(std::move(root));

  int leaves = 1;
  while (!frontier.empty()) {
    if (cfg.max_leaves > 0 && leaves >= cfg.max_leaves) break;
    Pending p = frontier.top();
    frontier.pop();
    if (!p.split.valid()) continue;

    int j = p.split.feature;
    int cut = p.split.cut;
    auto mid_it = std::partition(rows.begin() + p.lo, rows.begin() + p.hi,
                                 [&](int r) { return bins.codes(r, j) <= cut; });
    int mid = int(mid_it - rows.begin());
    if (mid == p.lo || mid == p.hi) continue;  // degenerate; keep as leaf

    int left_id = int(tree.nodes.size());
    {
      TreeNode& node = tree.nodes[std::size_t(p.node)];
      node.feature = j;
      node.threshold = bins.cuts[std::size_t(j)][std::size_t(cut)];
      node.left = left_id;
      node.right = left_id + 1;
    }
    tree.nodes.push_back(TreeNode{});
    tree.nodes.push_back(TreeNode{});
    ++leaves;

    Pending l = make_pending(left_id, p.lo, mid, p.depth + 1);
    Pending r = make_pending(left_id + 1, mid, p.hi, p.depth + 1);
    tree.nodes[std::size_t(l.node)].value = g.leaf_value(l.stats);
    tree.nodes[std::size_t(r.node)].value = g.leaf_value(r.stats);
    frontier.push(std::move(l));
    frontier.push(std::move(r));
  }
  return tree;
}

} // namespace xtalk
