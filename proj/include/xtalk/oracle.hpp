#pragma once
#include <map>
#include <string>
#include <vector>

#include "xtalk/layout.hpp"
#include "xtalk/rc_network.hpp"
#include "xtalk/timing_window.hpp"
#include "xtalk/transient.hpp"

namespace xtalk {

enum class RelDirection { opposite, same };

struct SimOptions {
  int segments_per_wire = 8;
  double vdd = 1.0;
  double dt_divisor = 50.0;   // dt = min(transition, net RC estimate) / divisor
  double dt_override = 0.0;   // ps; > 0 forces the step
  double tail_tau_mult = 5.0; // t_end = last stimulus end + mult * max RC estimate
  // per-net coupling load used for table lookups; nets absent here fall back
  // to the coupling caps present in the simulated circuit
  std::map<int, double> coupling_load;
};

struct DelayResult {
  double d_nosi = 0.0;  // ps, aggressors held at rail
  double d_si = 0.0;    // ps, aggressors switching
  double delta = 0.0;   // d_si - d_nosi
  std::vector<double> aggressor_delays;  // ps, switching run, aggressor order
  std::vector<double> seg_tau_nosi;      // per victim segment, chain order
  std::vector<double> seg_tau_si;        // per victim segment; sums to delta
  int victim_glitch_count = 0;           // extra 50% crossings in the switching run
};

// Two transient runs of the victim + aggressor circuit: aggressors held at
// rail vs switching at the given skews (skew = victim at_out - aggressor
// at_out). Aggressor edges are relative to the victim's.
DelayResult delta_delay(const Design& design, int victim_net_id,
                        const std::vector<int>& aggressor_net_ids,
                        const std::vector<CouplingPair>& pairs,
                        const std::vector<double>& skews,
                        const std::vector<RelDirection>& directions, const SimOptions& opt = {});

struct SweepRow {
  double dskew = 0.0;
  double d_net_v = 0.0;
  double d_net_a = 0.0;
  double delta = 0.0;
};

// Canonical two-parallel-net configuration: victim wire with a shorter
// aggressor wire centered alongside it on the same layer.
struct TwoNetConfig {
  Layer layer;
  double victim_len = 280.0;    // um
  double aggressor_len = 160.0; // um; also the overlap length L_SI
  double spacing = 0.25;        // um, edge-to-edge W_SI
  double r_drive = 0.2;         // kOhm, both drivers
  double s_in = 16.0;           // ps, both inputs
  double c_sink = 6.0;          // fF, both sinks
  double victim_at_in = 100.0;  // ps
  Edge victim_edge = Edge::rise;
  RelDirection aggressor_dir = RelDirection::opposite;
  double vdd = 1.0;

  static TwoNetConfig defaults();
};

Design make_two_net_design(const TwoNetConfig& cfg);

// One switching run per skew point against a shared quiet baseline.
std::vector<SweepRow> sweep_skew(const TwoNetConfig& cfg, double skew_min, double skew_max,
                                 double step, const SimOptions& opt = {});

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// ---- design-level labeling -------------------------------------------------

struct PairOracle {
  int victim_segment_id = 0;   // directed: this orientation's victim
  int aggressor_segment_id = 0;
  int victim_net_id = 0;
  int aggressor_net_id = 0;
  double l_si = 0.0, w_si = 0.0;
  double dskew = 0.0;
  double d_nosi = 0.0, d_si = 0.0, delta = 0.0;
};

struct SegmentOracle {
  int net_id = 0;
  int segment_id = 0;
  double tau_nosi = 0.0;  // ps, all neighbors quiet
  double tau_si = 0.0;    // ps, strongest-aggressor two-net run
  int strongest_aggressor_segment = -1;
};

struct NetOracle {
  int net_id = 0;
  double at_out = 0.0, d_driver = 0.0, s_out = 0.0;
  double d_nosi = 0.0;    // ps, all neighbors quiet
  double d_si_all = 0.0;  // ps, all neighbors switching worst-case
  double delta_all = 0.0;
};

struct OracleOptions {
  SimOptions sim;
  double threshold = 1.0;  // ps, |delta| above which a pair counts as TSI
  int jobs = 0;            // 0 = hardware concurrency
  // also run every net with all aggressors switching (the golden joint run);
  // labeling alone does not need it
  bool with_golden = true;
};

struct OracleResults {
  std::string note;  // measurement convention
  double threshold = 1.0;
  int segments_per_wire = 8;
  std::vector<NetOracle> nets;
  std::vector<SegmentOracle> segments;
  std::vector<PairOracle> pairs;  // two directed entries per geometric pair

  const NetOracle& net(int id) const;
};

// Full labeling pass: per-net quiet/worst-case runs plus per-pair two-net runs.
OracleResults run_design_oracle(const Design& design, const std::vector<CouplingPair>& pairs,
                                const OracleOptions& opt = {});

std::string oracle_to_json(const OracleResults& r);
OracleResults oracle_from_json(const std::string& text);

} // namespace xtalk
