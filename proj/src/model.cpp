#include "xtalk/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "xtalk/parallel.hpp"
#include "xtalk/timing_window.hpp"

namespace xtalk {

using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "xtalk 0.1.0";
constexpr int kFormatVersion = 1;

// canonical ordering by traceability ids keeps bootstrap draws independent of
// the caller's sample order
std::vector<std::size_t> canonical_order(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> out = idx;
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    const Sample& sa = ds.samples[a];
    const Sample& sb = ds.samples[b];
    if (sa.design != sb.design) return sa.design < sb.design;
    if (sa.net_id != sb.net_id) return sa.net_id < sb.net_id;
    if (sa.segment_id != sb.segment_id) return sa.segment_id < sb.segment_id;
    return sa.aggressor_segment_id < sb.aggressor_segment_id;
  });
  return out;
}

Eigen::MatrixXd matrix_of(const Dataset& ds, const std::vector<std::size_t>& rows,
                          const std::vector<int>& subset) {
  int d = subset.empty() ? FeatureVector::kCount : int(subset.size());
  Eigen::MatrixXd m(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto a = ds.samples[rows[i]].features.to_array();
    for (int j = 0; j < d; ++j) m(Eigen::Index(i), j) = a[std::size_t(subset.empty() ? j : subset[std::size_t(j)])];
  }
  return m;
}

void require_normalized_split(const Dataset& ds, const char* what) {
  if (!ds.has_split()) throw std::invalid_argument(std::string(what) + " requires a split dataset");
  if (!ds.normalized) throw std::invalid_argument(std::string(what) + " requires a normalized dataset");
}

RegressorModel fit_gbt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const RegressorConfig& cfg, uint64_t seed, const std::vector<int>& subset) {
  RegressorModel model;
  model.cfg = cfg;
  model.seed = seed;
  model.feature_subset = subset;
  model.base = y.size() ? y.mean() : 0.0;

  double variance = y.size() ? (y.array() - model.base).square().sum() / double(y.size()) : 0.0;
  if (variance == 0.0) {
    std::cerr << "warning: constant regression target; model reduces to the train mean\n";
    return model;
  }

  FeatureBins bins = build_bins(x, cfg.max_bins);
  Eigen::VectorXd residual = y.array() - model.base;
  std::vector<int> rows(std::size_t(x.rows()));
  TreeConfig tcfg;
  tcfg.classification = false;
  tcfg.max_leaves = cfg.max_leaves;
  tcfg.min_samples_leaf = cfg.min_samples_leaf;

  for (int m = 0; m < cfg.tree_count; ++m) {
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = int(i);
    Rng rng(derive_seed(seed, "gbt_stage", uint64_t(m)));
    Tree tree = grow_tree(bins, residual, rows, nullptr, tcfg, rng);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      residual[i] -= cfg.learning_rate * tree.predict(x.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Eigen::VectorXd gbt_predict_rows(const RegressorModel& m, const Dataset& ds,
                                 const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd x = matrix_of(ds, rows, m.feature_subset);
  Eigen::VectorXd out(x.rows());
  RegressorModel flat = m;  // subset already applied to x
  flat.feature_subset.clear();
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = flat.predict(x.row(i));
  return out;
}

} // namespace

double r2_score(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  if (truth.size() == 0 || truth.size() != pred.size())
    throw std::invalid_argument("r2_score needs equal non-empty vectors");
  double mean = truth.mean();
  double ss_tot = (truth.array() - mean).square().sum();
  double ss_res = (truth.array() - pred.array()).square().sum();
  if (ss_tot == 0.0) {
    std::cerr << "warning: zero-variance target; reporting R2 = 1 when residuals vanish\n";
    return ss_res == 0.0 ? 1.0 : 0.0;
  }
  return 1.0 - ss_res / ss_tot;
}

ClassifierModel train_classifier(const Dataset& ds, const ClassifierConfig& cfg, uint64_t seed,
                                 int jobs, EvalMetrics* held_out) {
  require_normalized_split(ds, "train_classifier");
  std::vector<std::size_t> rows;
  for (std::size_t i : ds.train_indices())
    if (ds.samples[i].label_class != LabelClass::NONE) rows.push_back(i);
  rows = canonical_order(ds, rows);

  long pos = 0;
  for (std::size_t i : rows) pos += ds.samples[i].label_class == LabelClass::TSI;
  if (pos == 0 || pos == long(rows.size()))
    throw std::invalid_argument("train split has a single class; cannot train the filter");

  Eigen::MatrixXd x = matrix_of(ds, rows, {});
  Eigen::VectorXd y(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i)
    y[Eigen::Index(i)] = ds.samples[rows[i]].label_class == LabelClass::TSI ? 1.0 : 0.0;

  ClassifierModel model;
  model.cfg = cfg;
  model.seed = seed;
  model.trees.resize(std::size_t(cfg.tree_count));

  FeatureBins bins = build_bins(x, cfg.max_bins);
  int mtry = cfg.feature_fraction > 0
                 ? std::max(1, int(std::lround(cfg.feature_fraction * FeatureVector::kCount)))
                 : std::max(1, int(std::floor(std::sqrt(double(FeatureVector::kCount)))));

  TreeConfig tcfg;
  tcfg.classification = true;
  tcfg.max_depth = cfg.max_depth;
  tcfg.min_samples_leaf = cfg.min_samples_leaf;
  tcfg.features_per_split = mtry;

  const int n = int(rows.size());
  parallel_for(jobs > 0 ? jobs : default_jobs(), std::size_t(cfg.tree_count), [&](std::size_t t) {
    Rng rng(derive_seed(seed, "bag_tree", uint64_t(t)));
    std::vector<uint32_t> weights(std::size_t(n), 0);
    for (int i = 0; i < n; ++i) ++weights[rng.uniform_idx(uint64_t(n))];
    std::vector<int> in_bag;
    for (int i = 0; i < n; ++i)
      if (weights[std::size_t(i)]) in_bag.push_back(i);
    model.trees[t] = grow_tree(bins, y, std::move(in_bag), &weights, tcfg, rng);
  });

  if (held_out) {
    EvalMetrics m;
    for (std::size_t i : ds.test_indices()) {
      const Sample& s = ds.samples[i];
      if (s.label_class == LabelClass::NONE) continue;
      Eigen::RowVectorXd xr(FeatureVector::kCount);
      auto a = s.features.to_array();
      for (int j = 0; j < FeatureVector::kCount; ++j) xr[j] = a[std::size_t(j)];
      bool pred = model.is_tsi(xr);
      bool truth = s.label_class == LabelClass::TSI;
      m.tp += pred && truth;
      m.fp += pred && !truth;
      m.tn += !pred && !truth;
      m.fn += !pred && truth;
    }
    m.sample_count = m.tp + m.fp + m.tn + m.fn;
    m.accuracy = m.sample_count ? double(m.tp + m.tn) / double(m.sample_count) : 0.0;
    m.precision = (m.tp + m.fp) ? double(m.tp) / double(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) ? double(m.tp) / double(m.tp + m.fn) : 0.0;
    *held_out = m;
  }
  return model;
}

RegressorModel train_regressor(const Dataset& ds, const RegressorConfig& cfg, uint64_t seed,
                               EvalMetrics* held_out) {
  require_normalized_split(ds, "train_regressor");
  std::vector<std::size_t> rows;
  for (std::size_t i : ds.train_indices())
    if (ds.samples[i].label_class == LabelClass::TSI) rows.push_back(i);
  if (rows.size() < 100)
    throw std::invalid_argument("need at least 100 TSI samples to fit the delta regressor, have " +
                                std::to_string(rows.size()));
  rows = canonical_order(ds, rows);

  Eigen::MatrixXd x = matrix_of(ds, rows, {});
  Eigen::VectorXd y(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) y[Eigen::Index(i)] = ds.samples[rows[i]].label_delta;

  RegressorModel model = fit_gbt(x, y, cfg, seed, {});
  if (held_out) {
    std::vector<std::size_t> test;
    for (std::size_t i : ds.test_indices())
      if (ds.samples[i].label_class == LabelClass::TSI) test.push_back(i);
    EvalMetrics m;
    if (!test.empty()) {
      Eigen::VectorXd truth(Eigen::Index(test.size()));
      for (std::size_t i = 0; i < test.size(); ++i) truth[Eigen::Index(i)] = ds.samples[test[i]].label_delta;
      m.r2 = m.r2_delta_tsi = r2_score(truth, gbt_predict_rows(model, ds, test));
      m.sample_count = long(test.size());
    }
    *held_out = m;
  }
  return model;
}

const std::vector<int>& nosi_feature_subset() {
  static const std::vector<int> subset = [] {
    std::vector<int> s;
    for (const char* name : {"d_driver", "s_in", "s_out", "wire_len", "m_w", "m_t", "m_h", "m_eps0"})
      s.push_back(feature_index(name));
    std::sort(s.begin(), s.end());
    return s;
  }();
  return subset;
}

RegressorModel train_nosi(const Dataset& ds, const RegressorConfig& cfg, uint64_t seed,
                          EvalMetrics* held_out) {
  require_normalized_split(ds, "train_nosi");
  std::vector<std::size_t> rows = canonical_order(ds, ds.train_indices());
  if (rows.empty()) throw std::invalid_argument("empty train split");

  Eigen::MatrixXd x = matrix_of(ds, rows, nosi_feature_subset());
  Eigen::VectorXd y(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) y[Eigen::Index(i)] = ds.samples[rows[i]].label_tau_nosi;

  RegressorModel model = fit_gbt(x, y, cfg, seed, nosi_feature_subset());
  if (held_out) {
    std::vector<std::size_t> test = ds.test_indices();
    EvalMetrics m;
    if (!test.empty()) {
      Eigen::VectorXd truth(Eigen::Index(test.size()));
      for (std::size_t i = 0; i < test.size(); ++i)
        truth[Eigen::Index(i)] = ds.samples[test[i]].label_tau_nosi;
      m.r2 = m.r2_nosi = r2_score(truth, gbt_predict_rows(model, ds, test));
      m.sample_count = long(test.size());
    }
    *held_out = m;
  }
  return model;
}

RegressorModel train_onestep_baseline(const Dataset& ds, const RegressorConfig& cfg, uint64_t seed,
                                      EvalMetrics* held_out) {
  require_normalized_split(ds, "train_onestep_baseline");
  std::vector<std::size_t> rows = canonical_order(ds, ds.train_indices());
  if (rows.empty()) throw std::invalid_argument("empty train split");

  Eigen::MatrixXd x = matrix_of(ds, rows, {});
  Eigen::VectorXd y(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Sample& s = ds.samples[rows[i]];
    y[Eigen::Index(i)] = s.label_tau_nosi + s.label_delta;
  }
  RegressorModel model = fit_gbt(x, y, cfg, seed, {});
  if (held_out) {
    std::vector<std::size_t> test = ds.test_indices();
    EvalMetrics m;
    if (!test.empty()) {
      Eigen::VectorXd truth(Eigen::Index(test.size()));
      for (std::size_t i = 0; i < test.size(); ++i) {
        const Sample& s = ds.samples[test[i]];
        truth[Eigen::Index(i)] = s.label_tau_nosi + s.label_delta;
      }
      m.r2 = r2_score(truth, gbt_predict_rows(model, ds, test));
      m.sample_count = long(test.size());
    }
    *held_out = m;
  }
  return model;
}

namespace {

Eigen::RowVectorXd normalized_row(const TwoStepModel& model, const Sample& raw) {
  Eigen::RowVectorXd x(FeatureVector::kCount);
  auto a = raw.features.to_array();
  for (int j = 0; j < FeatureVector::kCount; ++j) x[j] = a[std::size_t(j)];
  return apply_norm(model.stats, x);
}

} // namespace

bool TwoStepModel::classify_tsi(const Sample& raw) const {
  return classifier.is_tsi(normalized_row(*this, raw));
}

double TwoStepModel::predict_delta(const Sample& raw) const {
  Eigen::RowVectorXd x = normalized_row(*this, raw);
  if (!classifier.is_tsi(x)) return 0.0;
  return delta_regressor.predict(x);
}

double TwoStepModel::predict_tau_nosi(const Sample& raw) const {
  return nosi_regressor.predict(normalized_row(*this, raw));
}

double TwoStepModel::predict_total(const Sample& raw) const {
  Eigen::RowVectorXd x = normalized_row(*this, raw);
  double total = nosi_regressor.predict(x);
  if (classifier.is_tsi(x)) total += delta_regressor.predict(x);
  return total;
}

namespace {

struct GridOutcome {
  double score = -1e300;
  ClassifierConfig ccfg;
  RegressorConfig rcfg;
};

GridOutcome grid_pick(const Dataset& ds, const ClassifierConfig& c0, const RegressorConfig& r0,
                      const TrainOptions& opt) {
  // inner 80/20 split of the outer train rows only, scored by classifier
  // accuracy + delta-regressor R2
  Dataset inner;
  inner.stats = ds.stats;
  inner.normalized = ds.normalized;
  for (std::size_t i : ds.train_indices()) inner.samples.push_back(ds.samples[i]);
  Dataset inner_split = split(inner, 0.8, derive_seed(opt.seed, "grid"));

  GridOutcome best;
  for (int depth : {8, 12, 16}) {
    for (int trees : {60, 100, 160}) {
      ClassifierConfig c = c0;
      c.max_depth = depth;
      c.tree_count = trees;
      EvalMetrics cm;
      train_classifier(inner_split, c, derive_seed(opt.seed, "grid_c"), opt.jobs, &cm);
      for (double lr : {0.05, 0.1, 0.2}) {
        for (int leaves : {15, 31, 63}) {
          RegressorConfig r = r0;
          r.learning_rate = lr;
          r.max_leaves = leaves;
          EvalMetrics rm;
          train_regressor(inner_split, r, derive_seed(opt.seed, "grid_r"), &rm);
          double score = cm.accuracy + rm.r2;
          if (score > best.score) {
            best.score = score;
            best.ccfg = c;
            best.rcfg = r;
          }
        }
      }
    }
  }
  return best;
}

} // namespace

TwoStepModel train_two_step(const Dataset& ds_in, const ClassifierConfig& ccfg_in,
                            const RegressorConfig& rcfg_in, const TrainOptions& opt) {
  Dataset ds = ds_in.normalized ? ds_in : normalize(ds_in);
  ClassifierConfig ccfg = ccfg_in;
  RegressorConfig rcfg = rcfg_in;
  if (opt.grid) {
    GridOutcome g = grid_pick(ds, ccfg_in, rcfg_in, opt);
    ccfg = g.ccfg;
    rcfg = g.rcfg;
  }

  TwoStepModel model;
  model.classifier = train_classifier(ds, ccfg, derive_seed(opt.seed, "classifier"), opt.jobs);
  model.delta_regressor = train_regressor(ds, rcfg, derive_seed(opt.seed, "delta"));
  model.nosi_regressor = train_nosi(ds, rcfg, derive_seed(opt.seed, "nosi"));
  model.stats = ds.stats;
  model.meta.seed = opt.seed;
  model.meta.dataset_hash = dataset_hash(ds_in);
  model.meta.tool_version = kToolVersion;
  return model;
}

EvalMetrics evaluate(const TwoStepModel& model, const Dataset& ds_in) {
  Dataset ds = ds_in.normalized ? denormalize(ds_in) : ds_in;
  std::vector<std::size_t> test = ds.has_split() ? ds.test_indices() : std::vector<std::size_t>();
  if (!ds.has_split()) {
    test.resize(ds.samples.size());
    for (std::size_t i = 0; i < test.size(); ++i) test[i] = i;
  }
  if (test.empty()) throw std::invalid_argument("evaluate needs a non-empty test split");

  EvalMetrics m;
  m.sample_count = long(test.size());
  Eigen::VectorXd truth_total(Eigen::Index(test.size())), pred_total(Eigen::Index(test.size()));
  Eigen::VectorXd truth_nosi(Eigen::Index(test.size())), pred_nosi(Eigen::Index(test.size()));
  std::vector<double> truth_delta, pred_delta;
  double ratio_sum = 0.0;
  long ratio_count = 0;

  for (std::size_t k = 0; k < test.size(); ++k) {
    const Sample& s = ds.samples[test[k]];
    double nosi = model.predict_tau_nosi(s);
    double total = model.predict_total(s);
    truth_nosi[Eigen::Index(k)] = s.label_tau_nosi;
    pred_nosi[Eigen::Index(k)] = nosi;
    double golden_total = s.label_tau_nosi + s.label_delta;
    truth_total[Eigen::Index(k)] = golden_total;
    pred_total[Eigen::Index(k)] = total;
    if (golden_total > 1.0) {
      ratio_sum += total / golden_total;
      ++ratio_count;
    }
    if (s.label_class != LabelClass::NONE) {
      bool pred = model.classify_tsi(s);
      bool truth = s.label_class == LabelClass::TSI;
      m.tp += pred && truth;
      m.fp += pred && !truth;
      m.tn += !pred && !truth;
      m.fn += !pred && truth;
      if (truth) {
        truth_delta.push_back(s.label_delta);
        Eigen::RowVectorXd x = apply_norm(model.stats, [&] {
          Eigen::RowVectorXd r(FeatureVector::kCount);
          auto a = s.features.to_array();
          for (int j = 0; j < FeatureVector::kCount; ++j) r[j] = a[std::size_t(j)];
          return r;
        }());
        pred_delta.push_back(model.delta_regressor.predict(x));
      }
    }
  }

  m.r2 = r2_score(truth_total, pred_total);
  m.r2_nosi = r2_score(truth_nosi, pred_nosi);
  if (!truth_delta.empty()) {
    Eigen::VectorXd t = Eigen::Map<Eigen::VectorXd>(truth_delta.data(), Eigen::Index(truth_delta.size()));
    Eigen::VectorXd p = Eigen::Map<Eigen::VectorXd>(pred_delta.data(), Eigen::Index(pred_delta.size()));
    m.r2_delta_tsi = r2_score(t, p);
  }
  m.accuracy_ratio = ratio_count ? ratio_sum / double(ratio_count) : 0.0;
  long coupled = m.tp + m.fp + m.tn + m.fn;
  m.accuracy = coupled ? double(m.tp + m.tn) / double(coupled) : 0.0;
  m.precision = (m.tp + m.fp) ? double(m.tp) / double(m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) ? double(m.tp) / double(m.tp + m.fn) : 0.0;
  return m;
}

OneStepComparison compare_one_step(const TwoStepModel& model, const RegressorModel& one_step,
                                   const Dataset& ds_in) {
  Dataset ds = ds_in.normalized ? denormalize(ds_in) : ds_in;
  std::vector<std::size_t> test = ds.test_indices();
  if (test.empty()) throw std::invalid_argument("compare_one_step needs a test split");

  std::vector<double> t_all, p2_all, p1_all, t_tsi, p2_tsi, p1_tsi;
  for (std::size_t i : test) {
    const Sample& s = ds.samples[i];
    double golden = s.label_tau_nosi + s.label_delta;
    Eigen::RowVectorXd x = apply_norm(model.stats, [&] {
      Eigen::RowVectorXd r(FeatureVector::kCount);
      auto a = s.features.to_array();
      for (int j = 0; j < FeatureVector::kCount; ++j) r[j] = a[std::size_t(j)];
      return r;
    }());
    double two = model.nosi_regressor.predict(x) +
                 (model.classifier.is_tsi(x) ? model.delta_regressor.predict(x) : 0.0);
    double one = one_step.predict(x);
    t_all.push_back(golden);
    p2_all.push_back(two);
    p1_all.push_back(one);
    if (s.label_class == LabelClass::TSI) {
      t_tsi.push_back(golden);
      p2_tsi.push_back(two);
      p1_tsi.push_back(one);
    }
  }
  auto vec = [](std::vector<double>& v) {
    return Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
  };
  OneStepComparison cmp;
  cmp.two_step_r2 = r2_score(vec(t_all), vec(p2_all));
  cmp.one_step_r2 = r2_score(vec(t_all), vec(p1_all));
  if (!t_tsi.empty()) {
    cmp.two_step_r2_tsi = r2_score(vec(t_tsi), vec(p2_tsi));
    cmp.one_step_r2_tsi = r2_score(vec(t_tsi), vec(p1_tsi));
  }
  return cmp;
}

StagePrediction predict_stage(const Design& design, int net_id,
                              const std::vector<Sample>& seg_samples,
                              const std::vector<Sample>& pair_samples, const TwoStepModel& model) {
  StagePrediction out;
  const Net& net = design.net(net_id);
  if (!seg_samples.empty()) {
    out.d_driver = seg_samples.front().features.d_driver;
  } else {
    out.d_driver = driver_point(design, net).d_driver;
  }

  for (const auto& s : seg_samples) {
    if (s.net_id != net_id)
      throw std::invalid_argument("segment sample does not belong to net " + std::to_string(net_id));
    out.tau_nosi.push_back(model.predict_tau_nosi(s));
  }

  for (const auto& p : pair_samples) {
    if (p.net_id != net_id)
      throw std::invalid_argument("pair sample does not belong to net " + std::to_string(net_id));
    StagePrediction::PairRow row;
    row.victim_segment_id = p.segment_id;
    row.aggressor_segment_id = p.aggressor_segment_id;
    Eigen::RowVectorXd x = apply_norm(model.stats, [&] {
      Eigen::RowVectorXd r(FeatureVector::kCount);
      auto a = p.features.to_array();
      for (int j = 0; j < FeatureVector::kCount; ++j) r[j] = a[std::size_t(j)];
      return r;
    }());
    row.vote = model.classifier.vote_fraction(x);
    row.tsi = row.vote >= model.classifier.cfg.vote_threshold;
    row.delta = row.tsi ? model.delta_regressor.predict(x) : 0.0;
    out.delta_total += row.delta;
    out.pairs.push_back(row);
  }

  for (double t : out.tau_nosi) out.d_net += t;
  out.d_net += out.delta_total;
  out.d_stage = out.d_driver + out.d_net;
  return out;
}

namespace {

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(json{{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"v", n.value}});
  return nodes;
}

Tree tree_from_json(const json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at("f").get<int>();
    node.threshold = n.at("t").get<double>();
    node.left = n.at("l").get<int>();
    node.right = n.at("r").get<int>();
    node.value = n.at("v").get<double>();
    t.nodes.push_back(node);
  }
  if (t.nodes.empty()) throw ParseError("empty tree in model file");
  return t;
}

json regressor_to_json(const RegressorModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  return json{{"tree_count", m.cfg.tree_count},
              {"learning_rate", m.cfg.learning_rate},
              {"max_leaves", m.cfg.max_leaves},
              {"min_samples_leaf", m.cfg.min_samples_leaf},
              {"max_bins", m.cfg.max_bins},
              {"seed", m.seed},
              {"base", m.base},
              {"feature_subset", m.feature_subset},
              {"trees", std::move(trees)}};
}

RegressorModel regressor_from_json(const json& j) {
  RegressorModel m;
  m.cfg.tree_count = j.at("tree_count").get<int>();
  m.cfg.learning_rate = j.at("learning_rate").get<double>();
  m.cfg.max_leaves = j.at("max_leaves").get<int>();
  m.cfg.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  m.cfg.max_bins = j.at("max_bins").get<int>();
  m.seed = j.at("seed").get<uint64_t>();
  m.base = j.at("base").get<double>();
  m.feature_subset = j.at("feature_subset").get<std::vector<int>>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

} // namespace

void save_model(const TwoStepModel& model, const std::string& path) {
  json classifier_trees = json::array();
  for (const auto& t : model.classifier.trees) classifier_trees.push_back(tree_to_json(t));

  json body{
      {"metadata",
       {{"seed", model.meta.seed},
        {"dataset_hash", model.meta.dataset_hash},
        {"tool_version", model.meta.tool_version}}},
      {"normalization",
       {{"mean", std::vector<double>(model.stats.mean.data(), model.stats.mean.data() + model.stats.mean.size())},
        {"scale", std::vector<double>(model.stats.scale.data(), model.stats.scale.data() + model.stats.scale.size())}}},
      {"classifier",
       {{"tree_count", model.classifier.cfg.tree_count},
        {"max_depth", model.classifier.cfg.max_depth},
        {"feature_fraction", model.classifier.cfg.feature_fraction},
        {"min_samples_leaf", model.classifier.cfg.min_samples_leaf},
        {"vote_threshold", model.classifier.cfg.vote_threshold},
        {"max_bins", model.classifier.cfg.max_bins},
        {"seed", model.classifier.seed},
        {"trees", std::move(classifier_trees)}}},
      {"delta_regressor", regressor_to_json(model.delta_regressor)},
      {"nosi_regressor", regressor_to_json(model.nosi_regressor)}};

  json root;
  root["format_version"] = kFormatVersion;
  std::string payload = body.dump();
  char checksum[32];
  std::snprintf(checksum, sizeof checksum, "%016llx", (unsigned long long)fnv1a(payload));
  root["checksum"] = checksum;
  root["model"] = std::move(body);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << root.dump(1) << "\n";
}

TwoStepModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError("model file is corrupt or truncated: " + std::string(e.what()));
  }
  if (root.at("format_version").get<int>() != kFormatVersion)
    throw ParseError("unsupported model format version " +
                     std::to_string(root.at("format_version").get<int>()));

  std::string payload = root.at("model").dump();
  char checksum[32];
  std::snprintf(checksum, sizeof checksum, "%016llx", (unsigned long long)fnv1a(payload));
  if (root.at("checksum").get<std::string>() != checksum)
    throw ParseError("model checksum mismatch; file is corrupt");

  const json& body = root.at("model");
  TwoStepModel m;
  m.meta.seed = body.at("metadata").at("seed").get<uint64_t>();
  m.meta.dataset_hash = body.at("metadata").at("dataset_hash").get<uint64_t>();
  m.meta.tool_version = body.at("metadata").at("tool_version").get<std::string>();

  auto mean = body.at("normalization").at("mean").get<std::vector<double>>();
  auto scale = body.at("normalization").at("scale").get<std::vector<double>>();
  m.stats.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), Eigen::Index(mean.size()));
  m.stats.scale = Eigen::Map<Eigen::VectorXd>(scale.data(), Eigen::Index(scale.size()));

  const json& c = body.at("classifier");
  m.classifier.cfg.tree_count = c.at("tree_count").get<int>();
  m.classifier.cfg.max_depth = c.at("max_depth").get<int>();
  m.classifier.cfg.feature_fraction = c.at("feature_fraction").get<double>();
  m.classifier.cfg.min_samples_leaf = c.at("min_samples_leaf").get<int>();
  m.classifier.cfg.vote_threshold = c.at("vote_threshold").get<double>();
  m.classifier.cfg.max_bins = c.at("max_bins").get<int>();
  m.classifier.seed = c.at("seed").get<uint64_t>();
  for (const auto& t : c.at("trees")) m.classifier.trees.push_back(tree_from_json(t));

  m.delta_regressor = regressor_from_json(body.at("delta_regressor"));
  m.nosi_regressor = regressor_from_json(body.at("nosi_regressor"));
  return m;
}

} // namespace xtalk
