#pragma once
#include <optional>
#include <string>
#include <vector>

#include "xtalk/model.hpp"
#include "xtalk/oracle.hpp"

namespace xtalk {

struct SegmentDelayRow {
  int segment_id = 0;
  double tau_nosi = 0.0;
  double tau_si = 0.0;  // 0 unless some pair on this segment is TSI
};

struct StageDelay {
  int net_id = 0;
  double d_driver = 0.0;
  double d_net = 0.0;
  double delta_total = 0.0;
  double d_stage = 0.0;  // d_driver + d_net
  double ddr = 0.0;      // delta_total / d_stage
  std::vector<SegmentDelayRow> segments;
};

struct PathDelay {
  std::vector<int> net_ids;  // stage order
  double d_path = 0.0;
};

// deltas: (segment index within the net, tau_SI). Exact left-to-right sum.
double net_delay(const std::vector<double>& taus_nosi,
                 const std::vector<std::pair<int, double>>& deltas);

PathDelay path_delay(const std::vector<StageDelay>& stages);

double compute_ddr(double delta_total, double d_stage);

struct PairReportRow {
  int victim_segment_id = 0;
  int aggressor_segment_id = 0;
  int victim_net_id = 0;
  double l_si = 0.0, w_si = 0.0, dskew = 0.0;
  double vote = 0.0;
  bool tsi = false;
  double delta = 0.0;
};

struct CrosstalkReport {
  std::string design;
  std::string note;
  std::vector<StageDelay> stages;       // per net, id order
  std::vector<PairReportRow> pairs;     // directed, deterministic order
  long tsi_count = 0;
  long fsi_count = 0;
  int worst_ddr_net = -1;
  double worst_ddr = 0.0;
  bool has_negative_delta = false;
  std::vector<PathDelay> paths;

  // golden comparison, present when oracle results are supplied
  bool has_golden = false;
  double accuracy_ratio = 0.0;       // mean(predicted stage / golden stage)
  double additivity_err_mean = 0.0;  // |sum of per-pair deltas - joint delta|
  double additivity_err_max = 0.0;
  std::vector<double> golden_stage;  // index-aligned with stages
};

// Per-net predictions via the two-step model. pairs_override restricts the
// crosstalk analysis; capacitive loading always reflects the full design.
CrosstalkReport build_report(const Design& design, const TwoStepModel& model,
                             const std::vector<CouplingPair>* pairs_override = nullptr,
                             const OracleResults* oracle = nullptr,
                             const std::vector<std::vector<int>>* paths = nullptr);

std::string report_to_json(const CrosstalkReport& r);
std::string report_table(const CrosstalkReport& r);  // fixed-width, for stdout

} // namespace xtalk
