#include "xtalk/features.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "xtalk/rng.hpp"
#include "xtalk/timing_window.hpp"

namespace xtalk {

FeatureVector FeatureVector::from_array(const std::array<double, kCount>& a) {
  FeatureVector f;
  f.dskew = a[0];
  f.rf = a[1];
  f.s_in = a[2];
  f.s_out = a[3];
  f.d_driver = a[4];
  f.m_w = a[5];
  f.m_t = a[6];
  f.m_h = a[7];
  f.m_eps0 = a[8];
  f.wire_len = a[9];
  f.l_si = a[10];
  f.w_si = a[11];
  return f;
}

const std::array<std::string, FeatureVector::kCount>& feature_names() {
  static const std::array<std::string, FeatureVector::kCount> names = {
      "dskew", "rf",     "s_in",  "s_out",    "d_driver", "m_w",
      "m_t",   "m_h",    "m_eps0", "wire_len", "l_si",     "w_si"};
  return names;
}

int feature_index(const std::string& name) {
  const auto& names = feature_names();
  for (int i = 0; i < FeatureVector::kCount; ++i)
    if (names[i] == name) return i;
  throw std::invalid_argument("unknown feature: " + name);
}

const char* to_string(LabelClass c) {
  switch (c) {
    case LabelClass::TSI: return "TSI";
    case LabelClass::FSI: return "FSI";
    default: return "NONE";
  }
}

std::vector<std::size_t> Dataset::train_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (has_split() && train_mask[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> Dataset::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (has_split() && !train_mask[i]) out.push_back(i);
  return out;
}

namespace {

struct PairView {
  const CouplingPair* pair;
  int victim_seg;
  int aggressor_seg;
  double c_c;
};

// per-segment list of coupling pairs, viewed from that segment
std::map<int, std::vector<PairView>> pairs_by_segment(const Design& design,
                                                      const std::vector<CouplingPair>& pairs) {
  std::map<int, std::vector<PairView>> out;
  for (const auto& p : pairs) {
    double c_c = coupling_capacitance(p, design.layer(design.segment(p.victim_segment_id).layer_id));
    out[p.victim_segment_id].push_back({&p, p.victim_segment_id, p.aggressor_segment_id, c_c});
    out[p.aggressor_segment_id].push_back({&p, p.aggressor_segment_id, p.victim_segment_id, c_c});
  }
  return out;
}

std::map<int, double> coupling_loads(const Design& design, const std::vector<CouplingPair>& pairs) {
  std::map<int, double> out;
  for (const auto& n : design.nets) out[n.id] = 0.0;
  for (const auto& p : pairs) {
    double c_c = coupling_capacitance(p, design.layer(design.segment(p.victim_segment_id).layer_id));
    out[design.segment(p.victim_segment_id).net_id] += c_c;
    out[design.segment(p.aggressor_segment_id).net_id] += c_c;
  }
  return out;
}

Sample base_sample(const Design& design, const Segment& seg, const DriverPoint& pt,
                   const Driver& drv) {
  Sample s;
  s.design = design.name;
  s.net_id = seg.net_id;
  s.segment_id = seg.id;
  const Layer& layer = design.layer(seg.layer_id);
  s.features.rf = drv.direction == Edge::rise ? 1.0 : -1.0;
  s.features.s_in = drv.s_in;
  s.features.s_out = pt.s_out;
  s.features.d_driver = pt.d_driver;
  s.features.m_w = layer.m_w;
  s.features.m_t = layer.m_t;
  s.features.m_h = layer.m_h;
  s.features.m_eps0 = layer.m_eps0;
  s.features.wire_len = seg.length();
  return s;
}

} // namespace

std::vector<Sample> extract_features(const Design& design, const std::vector<CouplingPair>& pairs,
                                     double w_max) {
  auto by_segment = pairs_by_segment(design, pairs);
  auto loads = coupling_loads(design, pairs);
  std::map<int, DriverPoint> points;
  for (const auto& n : design.nets) points[n.id] = driver_point(design, n, loads.at(n.id));

  std::vector<Sample> out;
  for (const auto& seg : design.segments) {
    const Driver& drv = design.driver_of(seg.net_id);
    Sample s = base_sample(design, seg, points.at(seg.net_id), drv);

    auto it = by_segment.find(seg.id);
    if (it == by_segment.end()) {
      s.features.l_si = 0.0;
      s.features.w_si = 10.0 * w_max;
      s.features.dskew = FeatureVector::kDskewMax;
    } else {
      // strongest aggressor: max C_c, ties to the lower aggressor segment id
      const PairView* best = &it->second.front();
      for (const auto& pv : it->second) {
        if (pv.c_c > best->c_c || (pv.c_c == best->c_c && pv.aggressor_seg < best->aggressor_seg))
          best = &pv;
      }
      int aggr_net = design.segment(best->aggressor_seg).net_id;
      s.features.l_si = best->pair->l_si;
      s.features.w_si = best->pair->w_si;
      s.features.dskew = delta_skew(points.at(seg.net_id).at_out, points.at(aggr_net).at_out);
      s.aggressor_segment_id = best->aggressor_seg;
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(),
            [](const Sample& a, const Sample& b) { return a.segment_id < b.segment_id; });
  return out;
}

std::vector<Sample> extract_pair_samples(const Design& design,
                                         const std::vector<CouplingPair>& pairs, double w_max) {
  (void)w_max;
  auto loads = coupling_loads(design, pairs);
  std::map<int, DriverPoint> points;
  for (const auto& n : design.nets) points[n.id] = driver_point(design, n, loads.at(n.id));

  std::vector<Sample> out;
  for (const auto& p : pairs) {
    for (auto [vseg, aseg] : {std::pair{p.victim_segment_id, p.aggressor_segment_id},
                              std::pair{p.aggressor_segment_id, p.victim_segment_id}}) {
      const Segment& seg = design.segment(vseg);
      const Driver& drv = design.driver_of(seg.net_id);
      Sample s = base_sample(design, seg, points.at(seg.net_id), drv);
      int aggr_net = design.segment(aseg).net_id;
      s.features.l_si = p.l_si;
      s.features.w_si = p.w_si;
      s.features.dskew = delta_skew(points.at(seg.net_id).at_out, points.at(aggr_net).at_out);
      s.aggressor_segment_id = aseg;
      out.push_back(std::move(s));
    }
  }
  std::sort(out.begin(), out.end(), [](const Sample& a, const Sample& b) {
    if (a.segment_id != b.segment_id) return a.segment_id < b.segment_id;
    return a.aggressor_segment_id < b.aggressor_segment_id;
  });
  return out;
}

void attach_labels(std::vector<Sample>& samples, const OracleResults& oracle, double threshold) {
  std::map<int, const SegmentOracle*> seg_oracle;
  for (const auto& so : oracle.segments) seg_oracle[so.segment_id] = &so;
  std::map<std::pair<int, int>, const PairOracle*> pair_oracle;
  for (const auto& po : oracle.pairs)
    pair_oracle[{po.victim_segment_id, po.aggressor_segment_id}] = &po;

  for (auto& s : samples) {
    auto so = seg_oracle.find(s.segment_id);
    if (so == seg_oracle.end())
      throw std::invalid_argument("oracle results missing segment " + std::to_string(s.segment_id));
    s.label_tau_nosi = so->second->tau_nosi;
    if (s.aggressor_segment_id < 0) {
      s.label_class = LabelClass::NONE;
      s.label_delta = 0.0;
      continue;
    }
    auto po = pair_oracle.find({s.segment_id, s.aggressor_segment_id});
    if (po == pair_oracle.end())
      throw std::invalid_argument("oracle results missing pair " + std::to_string(s.segment_id) +
                                  "/" + std::to_string(s.aggressor_segment_id));
    double delta = po->second->delta;
    if (std::abs(delta) > threshold) {
      s.label_class = LabelClass::TSI;
      s.label_delta = delta;
    } else {
      s.label_class = LabelClass::FSI;
      s.label_delta = 0.0;
    }
  }
}

Eigen::MatrixXd feature_matrix(const std::vector<Sample>& samples) {
  Eigen::MatrixXd m(samples.size(), FeatureVector::kCount);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto a = samples[i].features.to_array();
    for (int j = 0; j < FeatureVector::kCount; ++j) m(Eigen::Index(i), j) = a[j];
  }
  return m;
}

Dataset normalize(const Dataset& ds) {
  if (ds.normalized) return ds;
  if (!ds.has_split()) throw std::invalid_argument("normalize requires a split");
  std::vector<std::size_t> train = ds.train_indices();
  if (train.empty()) throw std::invalid_argument("normalize requires a non-empty train split");

  Dataset out = ds;
  out.stats.mean = Eigen::VectorXd::Zero(FeatureVector::kCount);
  out.stats.scale = Eigen::VectorXd::Ones(FeatureVector::kCount);

  Eigen::MatrixXd m(train.size(), FeatureVector::kCount);
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto a = ds.samples[train[i]].features.to_array();
    for (int j = 0; j < FeatureVector::kCount; ++j) m(Eigen::Index(i), j) = a[j];
  }
  out.stats.mean = m.colwise().mean();
  for (int j = 0; j < FeatureVector::kCount; ++j) {
    double var = (m.col(j).array() - out.stats.mean[j]).square().sum() / double(m.rows());
    double sd = std::sqrt(var);
    // rounding noise on a constant column is not variance
    if (sd > 1e-12 * std::max(1.0, std::abs(out.stats.mean[j])))
      out.stats.scale[j] = sd;
    else
      std::cerr << "warning: feature '" << feature_names()[j]
                << "' has zero variance on the train split; passing it through centered\n";
  }

  for (auto& s : out.samples) {
    auto a = s.features.to_array();
    for (int j = 0; j < FeatureVector::kCount; ++j)
      a[j] = (a[j] - out.stats.mean[j]) / out.stats.scale[j];
    s.features = FeatureVector::from_array(a);
  }
  out.normalized = true;
  return out;
}

Dataset denormalize(const Dataset& ds) {
  if (!ds.normalized) return ds;
  if (!ds.stats.valid()) throw std::invalid_argument("dataset has no normalization stats");
  Dataset out = ds;
  for (auto& s : out.samples) {
    auto a = s.features.to_array();
    for (int j = 0; j < FeatureVector::kCount; ++j)
      a[j] = a[j] * ds.stats.scale[j] + ds.stats.mean[j];
    s.features = FeatureVector::from_array(a);
  }
  out.normalized = false;
  return out;
}

Eigen::RowVectorXd apply_norm(const NormStats& stats, const Eigen::RowVectorXd& raw) {
  if (!stats.valid()) return raw;
  return (raw - stats.mean.transpose()).array() / stats.scale.transpose().array();
}

Dataset split(const Dataset& ds, double fraction, uint64_t seed, SplitMode mode) {
  if (!(fraction > 0 && fraction < 1)) throw std::invalid_argument("fraction must be in (0, 1)");
  Dataset out = ds;
  out.split_seed = seed;
  out.train_mask.assign(ds.samples.size(), 0);
  Rng rng(derive_seed(seed, "split"));

  if (mode == SplitMode::design) {
    std::vector<std::string> names;
    for (const auto& s : ds.samples)
      if (std::find(names.begin(), names.end(), s.design) == names.end()) names.push_back(s.design);
    // Fisher-Yates with the portable rng
    for (std::size_t i = names.size(); i > 1; --i)
      std::swap(names[i - 1], names[uint64_t(rng.uniform_idx(i))]);
    std::size_t want = std::size_t(std::llround(fraction * double(ds.samples.size())));
    std::size_t got = 0;
    std::map<std::string, bool> train_design;
    for (const auto& name : names) train_design[name] = false;
    for (const auto& name : names) {
      if (got >= want) break;
      train_design[name] = true;
      for (const auto& s : ds.samples)
        if (s.design == name) ++got;
    }
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
      out.train_mask[i] = train_design[ds.samples[i].design] ? 1 : 0;
    return out;
  }

  // sample mode: stratify on label_class
  std::map<LabelClass, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    strata[ds.samples[i].label_class].push_back(i);

  bool can_stratify = true;
  for (const auto& [cls, idx] : strata)
    if (idx.size() == 1) can_stratify = false;
  if (!can_stratify) {
    std::cerr << "warning: a label class has a single sample; falling back to a plain shuffle\n";
    std::vector<std::size_t> all(ds.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    strata.clear();
    strata[LabelClass::NONE] = std::move(all);
  }

  for (auto& [cls, idx] : strata) {
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[uint64_t(rng.uniform_idx(i))]);
    std::size_t n_train = std::size_t(std::llround(fraction * double(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i)
      out.train_mask[idx[i]] = i < n_train ? 1 : 0;
  }
  return out;
}

std::string dataset_to_csv(const Dataset& ds) {
  std::string out;
  const auto& names = feature_names();
  for (int j = 0; j < FeatureVector::kCount; ++j) {
    out += names[j];
    out += ',';
  }
  out += "label_class,label_delta,label_tau_nosi\n";
  char buf[64];
  for (const auto& s : ds.samples) {
    auto a = s.features.to_array();
    for (int j = 0; j < FeatureVector::kCount; ++j) {
      std::snprintf(buf, sizeof buf, "%.9g,", a[j]);
      out += buf;
    }
    out += to_string(s.label_class);
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g\n", s.label_delta, s.label_tau_nosi);
    out += buf;
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset file");
  std::string expected;
  for (const auto& n : feature_names()) {
    expected += n;
    expected += ',';
  }
  expected += "label_class,label_delta,label_tau_nosi";
  if (line != expected) throw ParseError("dataset header mismatch; expected '" + expected + "'");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      cells.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    if (cells.size() != FeatureVector::kCount + 3)
      throw ParseError("dataset line " + std::to_string(line_no) + ": expected " +
                       std::to_string(FeatureVector::kCount + 3) + " columns, got " +
                       std::to_string(cells.size()));
    Sample s;
    std::array<double, FeatureVector::kCount> a{};
    for (int j = 0; j < FeatureVector::kCount; ++j) a[j] = std::stod(cells[j]);
    s.features = FeatureVector::from_array(a);
    const std::string& cls = cells[FeatureVector::kCount];
    if (cls == "TSI")
      s.label_class = LabelClass::TSI;
    else if (cls == "FSI")
      s.label_class = LabelClass::FSI;
    else if (cls == "NONE")
      s.label_class = LabelClass::NONE;
    else
      throw ParseError("dataset line " + std::to_string(line_no) + ": bad label_class '" + cls + "'");
    s.label_delta = std::stod(cells[FeatureVector::kCount + 1]);
    s.label_tau_nosi = std::stod(cells[FeatureVector::kCount + 2]);
    ds.samples.push_back(s);
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out << dataset_to_csv(ds);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_csv(ss.str());
}

uint64_t dataset_hash(const Dataset& ds) { return fnv1a(dataset_to_csv(ds)); }

} // namespace xtalk
