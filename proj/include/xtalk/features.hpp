#pragma once
#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "xtalk/layout.hpp"
#include "xtalk/oracle.hpp"

namespace xtalk {

// One row of the model input. Field order matches feature_names().
struct FeatureVector {
  double dskew = 0.0;    // ps; DSKEW_MAX sentinel when uncoupled
  double rf = 1.0;       // +1 rise, -1 fall (victim input edge)
  double s_in = 0.0;     // ps
  double s_out = 0.0;    // ps, table-predicted
  double d_driver = 0.0; // ps, table-predicted
  double m_w = 0.0;      // um
  double m_t = 0.0;      // um
  double m_h = 0.0;      // um
  double m_eps0 = 0.0;
  double wire_len = 0.0; // um
  double l_si = 0.0;     // um; 0 when uncoupled
  double w_si = 0.0;     // um; W_MAX sentinel when uncoupled

  static constexpr int kCount = 12;
  static constexpr double kDskewMax = 1e4;  // ps sentinel

  std::array<double, kCount> to_array() const {
    return {dskew, rf, s_in, s_out, d_driver, m_w, m_t, m_h, m_eps0, wire_len, l_si, w_si};
  }
  static FeatureVector from_array(const std::array<double, kCount>& a);
};

const std::array<std::string, FeatureVector::kCount>& feature_names();
int feature_index(const std::string& name);

enum class LabelClass { TSI, FSI, NONE };
const char* to_string(LabelClass c);

struct Sample {
  FeatureVector features;
  LabelClass label_class = LabelClass::NONE;
  double label_delta = 0.0;      // ps; zero unless TSI
  double label_tau_nosi = 0.0;   // ps
  // traceability (not serialized to the dataset file)
  std::string design;
  int net_id = -1;
  int segment_id = -1;
  int aggressor_segment_id = -1;
};

struct NormStats {
  Eigen::VectorXd mean;   // per feature
  Eigen::VectorXd scale;  // per feature; 1 for zero-variance columns
  bool valid() const { return mean.size() == FeatureVector::kCount; }
};

enum class SplitMode { sample, design };

struct Dataset {
  std::vector<Sample> samples;
  std::vector<uint8_t> train_mask;  // index-aligned; empty until split()
  uint64_t split_seed = 0;
  NormStats stats;          // train-split statistics; set by normalize()
  bool normalized = false;

  std::size_t size() const { return samples.size(); }
  bool has_split() const { return train_mask.size() == samples.size(); }
  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> test_indices() const;
};

// One sample per (segment, strongest-aggressor pair) plus one per uncoupled
// segment. w_max feeds the uncoupled sentinels (W_MAX = 10 * w_max).
std::vector<Sample> extract_features(const Design& design, const std::vector<CouplingPair>& pairs,
                                     double w_max);

// One sample per directed pair orientation; the per-pair view used for
// pair-level evaluation and report-time additive deltas.
std::vector<Sample> extract_pair_samples(const Design& design,
                                         const std::vector<CouplingPair>& pairs, double w_max);

// Fills label_class / label_delta / label_tau_nosi from oracle measurements.
// Deltas at or below the threshold are zeroed along with the FSI tag.
void attach_labels(std::vector<Sample>& samples, const OracleResults& oracle, double threshold);

Eigen::MatrixXd feature_matrix(const std::vector<Sample>& samples);

// z-score against train-split statistics; inverse restores raw features
Dataset normalize(const Dataset& ds);
Dataset denormalize(const Dataset& ds);
Eigen::RowVectorXd apply_norm(const NormStats& stats, const Eigen::RowVectorXd& raw);

// Deterministic stratified 70/30-style split. Design mode groups whole designs.
Dataset split(const Dataset& ds, double fraction, uint64_t seed,
              SplitMode mode = SplitMode::sample);

std::string dataset_to_csv(const Dataset& ds);
Dataset dataset_from_csv(const std::string& text);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

uint64_t dataset_hash(const Dataset& ds);

} // namespace xtalk
