#pragma once
#include <string>
#include <vector>

#include "xtalk/layout.hpp"

namespace xtalk {

struct TimingWindow {
  double early = 0.0;  // ps
  double late = 0.0;   // ps
};

enum class SIClass { TSI, FSI };

inline const char* to_string(SIClass c) { return c == SIClass::TSI ? "TSI" : "FSI"; }

// Driver output timing from the cell table: at_out = at_in + D_driver, plus
// the table-predicted output slew. extra_cap adds attached coupling load on
// top of the net's ground load for the lookup.
struct DriverPoint {
  double at_out = 0.0;    // ps
  double d_driver = 0.0;  // ps
  double s_out = 0.0;     // ps
  bool clamped = false;   // lookup fell outside the table and was clamped
};

DriverPoint driver_point(const Design& design, const Net& net, double extra_cap = 0.0);

// Arrival window at the driver output: [at_out, at_out + s_out].
TimingWindow window_of(const Net& net, const Design& design, double extra_cap = 0.0);

// victim arrival minus aggressor arrival
inline double delta_skew(double victim_at, double aggressor_at) { return victim_at - aggressor_at; }

// TSI iff the guard-expanded victim window intersects the aggressor window.
SIClass classify_pair(const TimingWindow& victim, const TimingWindow& aggressor, double guard);

struct PairLabel {
  CouplingPair pair;
  int victim_net_id = 0;
  int aggressor_net_id = 0;
  double dskew = 0.0;        // ps, victim at_out - aggressor at_out
  SIClass classification = SIClass::FSI;
  double oracle_delta = 0.0;  // ps
};

struct OracleResults;  // oracle.hpp

// One label per directed pair orientation in the oracle results;
// TSI iff |oracle delta| > threshold. Deterministic order.
std::vector<PairLabel> label_dataset(const Design& design, const std::vector<CouplingPair>& pairs,
                                     const OracleResults& oracle, double threshold);

std::string labels_to_json(const std::vector<PairLabel>& labels);
std::vector<PairLabel> labels_from_json(const std::string& text);

} // namespace xtalk
