#pragma once
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "xtalk/features.hpp"
#include "xtalk/tree.hpp"

namespace xtalk {

struct ClassifierConfig {
  int tree_count = 100;
  int max_depth = 12;
  double feature_fraction = 0.0;  // <= 0: sqrt(d)
  int min_samples_leaf = 1;
  double vote_threshold = 0.5;    // ties resolve to TSI
  int max_bins = 255;
};

struct RegressorConfig {
  int tree_count = 300;
  double learning_rate = 0.1;
  int max_leaves = 31;
  int min_samples_leaf = 25;
  int max_bins = 255;
};

// Bagged decision trees voting on TSI/FSI.
struct ClassifierModel {
  ClassifierConfig cfg;
  uint64_t seed = 0;
  std::vector<Tree> trees;

  template <typename Derived>
  double vote_fraction(const Eigen::MatrixBase<Derived>& x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return trees.empty() ? 0.0 : sum / double(trees.size());
  }
  template <typename Derived>
  bool is_tsi(const Eigen::MatrixBase<Derived>& x) const {
    return vote_fraction(x) >= cfg.vote_threshold;
  }
};

// Gradient-boosted regression trees over squared loss.
struct RegressorModel {
  RegressorConfig cfg;
  uint64_t seed = 0;
  double base = 0.0;  // train mean
  std::vector<int> feature_subset;  // empty = all features
  std::vector<Tree> trees;

  template <typename Derived>
  double predict(const Eigen::MatrixBase<Derived>& x) const {
    Eigen::RowVectorXd sub;
    const Eigen::RowVectorXd* view = nullptr;
    Eigen::RowVectorXd full = x;
    if (feature_subset.empty()) {
      view = &full;
    } else {
      sub.resize(Eigen::Index(feature_subset.size()));
      for (std::size_t i = 0; i < feature_subset.size(); ++i) sub[Eigen::Index(i)] = x[feature_subset[i]];
      view = &sub;
    }
    double out = base;
    for (const auto& t : trees) out += cfg.learning_rate * t.predict(*view);
    return out;
  }
};

struct EvalMetrics {
  double r2 = 0.0;              // total stage-level tau on the test split
  double r2_delta_tsi = 0.0;    // tau_SI on TSI samples
  double r2_nosi = 0.0;         // tau_noSI on all samples
  double accuracy_ratio = 0.0;  // mean(prediction / golden) over golden > 1 ps
  double accuracy = 0.0;        // classification accuracy on coupled samples
  double precision = 0.0;
  double recall = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long sample_count = 0;
};

struct ModelMeta {
  uint64_t seed = 0;
  uint64_t dataset_hash = 0;
  std::string tool_version;
};

struct TwoStepModel {
  ClassifierModel classifier;
  RegressorModel delta_regressor;
  RegressorModel nosi_regressor;
  NormStats stats;
  ModelMeta meta;

  bool classify_tsi(const Sample& raw) const;
  double predict_delta(const Sample& raw) const;      // 0 unless classified TSI
  double predict_tau_nosi(const Sample& raw) const;
  double predict_total(const Sample& raw) const;      // tau_noSI + gated tau_SI
};

struct TrainOptions {
  uint64_t seed = 42;
  int jobs = 0;        // 0 = hardware concurrency
  bool grid = false;   // small built-in hyperparameter grid
};

// rows: dataset indices used for fitting (already canonically ordered inside)
ClassifierModel train_classifier(const Dataset& ds, const ClassifierConfig& cfg, uint64_t seed,
                                 int jobs = 0, EvalMetrics* held_out = nullptr);
RegressorModel train_regressor(const Dataset& ds, const RegressorConfig& cfg, uint64_t seed,
                               EvalMetrics* held_out = nullptr);
RegressorModel train_nosi(const Dataset& ds, const RegressorConfig& cfg, uint64_t seed,
                          EvalMetrics* held_out = nullptr);
RegressorModel train_onestep_baseline(const Dataset& ds, const RegressorConfig& cfg, uint64_t seed,
                                      EvalMetrics* held_out = nullptr);

// classifier + tau_SI regressor + tau_noSI regressor on the train split
TwoStepModel train_two_step(const Dataset& ds, const ClassifierConfig& ccfg,
                            const RegressorConfig& rcfg, const TrainOptions& opt);

const std::vector<int>& nosi_feature_subset();

EvalMetrics evaluate(const TwoStepModel& model, const Dataset& ds);

// One-step comparison on the same test split: R2 of total tau, overall and on
// the TSI-only subset.
struct OneStepComparison {
  double two_step_r2 = 0.0;
  double one_step_r2 = 0.0;
  double two_step_r2_tsi = 0.0;
  double one_step_r2_tsi = 0.0;
};
OneStepComparison compare_one_step(const TwoStepModel& model, const RegressorModel& one_step,
                                   const Dataset& ds);

struct StagePrediction {
  double d_driver = 0.0;
  std::vector<double> tau_nosi;  // per segment, chain order
  struct PairRow {
    int victim_segment_id = 0;
    int aggressor_segment_id = 0;
    double vote = 0.0;
    bool tsi = false;
    double delta = 0.0;  // 0 unless tsi
  };
  std::vector<PairRow> pairs;
  double delta_total = 0.0;
  double d_net = 0.0;    // sum tau_nosi + sum gated deltas
  double d_stage = 0.0;  // d_driver + d_net
};

// seg_samples: one per net segment, chain order. pair_samples: directed pairs
// with this net as victim; FSI-classified pairs contribute exactly zero.
StagePrediction predict_stage(const Design& design, int net_id,
                              const std::vector<Sample>& seg_samples,
                              const std::vector<Sample>& pair_samples, const TwoStepModel& model);

void save_model(const TwoStepModel& model, const std::string& path);
TwoStepModel load_model(const std::string& path);

double r2_score(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

} // namespace xtalk
