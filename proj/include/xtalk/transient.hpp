#pragma once
#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "xtalk/rc_network.hpp"

namespace xtalk {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Node voltages on a uniform grid. Columns [0, node_count) are circuit nodes;
// columns [node_count, node_count + source_count) are the ideal source ramps,
// so delays can be measured against the undistorted input edge.
struct Waveforms {
  double dt = 0.0;
  int node_count = 0;
  int source_count = 0;
  Eigen::MatrixXd v;  // (steps + 1) x (node_count + source_count)

  Eigen::Index steps() const { return v.rows() - 1; }
  double time_at(Eigen::Index i) const { return double(i) * dt; }
  int col_of_node(int n) const { return n; }
  int col_of_source(int s) const { return node_count + s; }
};

// Skip windows where every source is constant and the network has settled:
// the state is pinned to the exact DC solution instead of being marched.
// tail_ps extends each switching event before a gap may start; a gap must
// exceed min_gap_ps (settle guard) to be skipped.
struct GapSkip {
  double tail_ps = 0.0;
  double min_gap_ps = 0.0;
};

// Backward-difference transient integrator for a fixed topology and step.
// The system matrix C/dt + G is factored once; runs share the factorization.
class TransientSolver {
public:
  TransientSolver(const RCNetwork& net, double dt);

  // Simulates [0, t_end] with the given per-source stimuli (index-aligned with
  // net.sources). v0 overrides the DC operating point when non-null.
  Waveforms run(const std::vector<RampStimulus>& stimuli, double t_end,
                const Eigen::VectorXd* v0 = nullptr, const GapSkip* skip = nullptr) const;

  const Eigen::MatrixXd& cap_matrix() const { return C_; }
  double dt() const { return dt_; }

  // 0.5 * v' C v, the stored electrostatic energy; decays when sources hold
  double energy(const Eigen::VectorXd& v_nodes) const;

private:
  double dt_;
  int n_;
  Eigen::MatrixXd C_;  // fF
  Eigen::MatrixXd G_;  // mS (1/kOhm)
  Eigen::LLT<Eigen::MatrixXd> a_llt_;  // C/dt + G
  Eigen::LLT<Eigen::MatrixXd> g_llt_;  // G alone, for the operating point
  std::vector<int> source_nodes_;
  std::vector<double> source_g_;  // mS
};

// Convenience wrapper running the network's own stimuli.
Waveforms simulate_transient(const RCNetwork& net, double dt, double t_end);

struct Crossing {
  double t50 = 0.0;           // last crossing of the level, ps
  int crossing_count = 0;
  std::vector<double> glitch_times;  // earlier crossings, if any
};

// Last crossing of `level` in the column's final transition. Earlier crossings
// (coupling glitches) are reported, not measured.
Crossing find_crossing(const Waveforms& w, int col, double level);

// t50(out) - t50(in) at level vdd/2.
double measure_delay(const Waveforms& w, int col_in, int col_out, double vdd);

} // namespace xtalk
