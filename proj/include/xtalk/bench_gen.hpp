#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "xtalk/layout.hpp"

namespace xtalk {

// Cell table synthesized from first-order closed forms:
//   delay(s, c)    = ln2 * r_drive * c + 0.12 * s
//   out_slew(s, c) = slew_scale * hypot(s, load_coeff * r_drive * c + load_quad * c^2)
// Grid spans the slew/load ranges the generator produces. The slew constants
// are calibrated so window overlap tracks the measured interaction span; the
// quadratic term stands in for resistive wire settling, which scales with
// total wire RC rather than drive strength.
DelayTable synth_delay_table(double r_drive_kohm, double slew_scale = 1.0,
                             double load_coeff = 1.0, double load_quad = 0.0015);

struct GenConfig {
  uint64_t seed = 1;
  int layer_count = 5;
  int net_count = 200;
  double wire_len_min = 200.0;  // um
  double wire_len_max = 400.0;  // um
  double bundle_fraction = 0.55; // fraction of nets laid in parallel bundles
  int bundle_size_min = 3;
  int bundle_size_max = 5;
  double spacing_min = 0.085;   // um, edge-to-edge within a bundle; the first
                                // bundle spacing is pinned here so the derived
                                // w_max never reaches second neighbors
  double spacing_max = 0.105;   // um
  double overlap_min = 0.75;    // fraction of wire length shared by bundle mates
  double overlap_max = 1.0;
  double at_min = 0.0;          // ps, driver input arrival
  double at_max = 1600.0;       // ps
  double aligned_fraction = 0.14;  // bundle mates whose arrival tracks a neighbor
  double aligned_offset = 10.0;    // ps, half-range of the tracked offset
  std::vector<double> driver_strengths = {0.12, 0.18, 0.27, 0.4};  // kOhm
  double s_in_min = 12.0;       // ps
  double s_in_max = 30.0;       // ps
  double c_sink_min = 3.0;      // fF
  double c_sink_max = 18.0;     // fF
  int max_segments_per_net = 1; // > 1 lays stair-stepped trunk routes
  double slew_table_scale = 1.0;    // out_slew table calibration
  double slew_table_load_coeff = 1.0;
  double slew_table_load_quad = 0.0015;
  double coupled_fraction = 0.55; // target fraction of segments with a pair
  std::string name = "bench";
};

struct GenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic under cfg.seed; achieved coupled fraction within +-10% of the
// target or a GenError explains which knobs conflict.
Design generate(const GenConfig& cfg);

struct SuiteEntry {
  std::string design_name;
  uint64_t seed = 0;
  int net_count = 0;
  int segment_count = 0;
  int pair_count = 0;
  double coupled_fraction = 0.0;
  bool train = true;
};

struct SuiteManifest {
  uint64_t master_seed = 0;
  std::vector<SuiteEntry> entries;
};

// count designs from per-design seeds derived from `seed`; the first
// round(train_fraction * count) entries are marked train.
std::vector<Design> generate_suite(const GenConfig& base, int count, uint64_t seed,
                                   double train_fraction, SuiteManifest& manifest);

std::string manifest_to_json(const SuiteManifest& m);

} // namespace xtalk
