#pragma once
#include <limits>
#include <string>
#include <vector>

#include "xtalk/layout.hpp"

namespace xtalk {

// Piecewise-linear rail-to-rail ramp. t0 is the moment the source leaves its
// initial rail; transition is the 10-90 time, so the full ramp spans
// transition / 0.8. A source that never fires (t0 = +inf) holds its initial rail.
struct RampStimulus {
  double t0 = 0.0;          // ps
  double transition = 1.0;  // ps, 10-90
  Edge direction = Edge::rise;
  double v_low = 0.0;       // V
  double v_high = 1.0;      // V

  static constexpr double kHold = std::numeric_limits<double>::infinity();

  double duration() const { return transition / 0.8; }
  double initial() const { return direction == Edge::rise ? v_low : v_high; }
  double final() const { return direction == Edge::rise ? v_high : v_low; }
  bool is_hold() const { return !(t0 < kHold); }

  double value(double t) const {
    if (is_hold() || t <= t0) return initial();
    double d = duration();
    if (t >= t0 + d) return final();
    double f = (t - t0) / d;
    return initial() + f * (final() - initial());
  }

  RampStimulus held() const {
    RampStimulus h = *this;
    h.t0 = kHold;
    return h;
  }
};

// Linear RC circuit: grounded caps per node, node-to-node resistors, floating
// coupling caps, and ramp sources behind a Thevenin resistance.
struct RCNetwork {
  struct Resistor {
    int a = 0, b = 0;
    double ohms = 0.0;
  };
  struct CouplingCap {
    int a = 0, b = 0;
    double fF = 0.0;
  };
  struct Source {
    int node = 0;
    double r_thevenin_ohms = 0.0;
    RampStimulus stim;
  };

  int node_count = 0;
  std::vector<double> c_ground;  // fF, per node
  std::vector<Resistor> resistors;
  std::vector<CouplingCap> couplers;
  std::vector<Source> sources;
  std::vector<std::string> node_names;

  int add_node(std::string name);
};

// Where a net landed in the assembled circuit.
struct NetTap {
  int net_id = 0;
  int source_index = 0;
  int driver_node = 0;
  int sink_node = 0;
  // boundary nodes per segment, chain order: taps.segment_nodes[k] = {start, end}
  std::vector<std::pair<int, int>> segment_nodes;
  double rc_estimate = 0.0;  // ps, (r_drive + R_wire) * C_total; sets the step size
};

struct BuiltCircuit {
  RCNetwork network;
  std::vector<NetTap> taps;  // victim first, aggressors in argument order

  const NetTap& tap(int net_id) const;
};

// Discretizes each wire into segments_per_wire pi sections per segment,
// attaches each pair's coupling cap between the two ladder nodes nearest the
// overlap midpoint, and places one ramp source behind r_drive per net.
// at_out gives the ramp start anchor per net (index-aligned with net_ids).
BuiltCircuit build_network(const Design& design, const std::vector<int>& net_ids,
                           const std::vector<CouplingPair>& pairs, int segments_per_wire,
                           const std::vector<double>& at_out, double vdd = 1.0);

} // namespace xtalk
