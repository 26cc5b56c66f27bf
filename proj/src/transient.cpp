#include "xtalk/transient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xtalk {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

TransientSolver::TransientSolver(const RCNetwork& net, double dt) : dt_(dt), n_(net.node_count) {
  if (!(dt > 0)) throw SimError("dt must be > 0");
  if (n_ <= 0) throw SimError("empty network");

  C_ = Eigen::MatrixXd::Zero(n_, n_);
  G_ = Eigen::MatrixXd::Zero(n_, n_);

  for (int i = 0; i < n_; ++i) {
    if (net.c_ground[i] < 0) throw SimError("negative ground capacitance at node " + net.node_names[i]);
    C_(i, i) += net.c_ground[i];
  }
  for (const auto& cc : net.couplers) {
    if (cc.fF < 0) throw SimError("negative coupling capacitance");
    C_(cc.a, cc.a) += cc.fF;
    C_(cc.b, cc.b) += cc.fF;
    C_(cc.a, cc.b) -= cc.fF;
    C_(cc.b, cc.a) -= cc.fF;
  }

  UnionFind uf(n_ + 1);  // extra slot stands for ground
  const int ground = n_;
  for (const auto& r : net.resistors) {
    if (!(r.ohms > 0)) throw SimError("resistor with non-positive resistance");
    double g = 1000.0 / r.ohms;  // mS
    G_(r.a, r.a) += g;
    G_(r.b, r.b) += g;
    G_(r.a, r.b) -= g;
    G_(r.b, r.a) -= g;
    uf.unite(r.a, r.b);
  }
  for (const auto& s : net.sources) {
    if (!(s.r_thevenin_ohms > 0)) throw SimError("source Thevenin resistance must be > 0");
    double g = 1000.0 / s.r_thevenin_ohms;
    G_(s.node, s.node) += g;
    source_nodes_.push_back(s.node);
    source_g_.push_back(g);
    uf.unite(s.node, ground);
  }
  for (int i = 0; i < n_; ++i) {
    if (uf.find(i) != uf.find(ground))
      throw SimError("disconnected node " + std::to_string(i) + " (" + net.node_names[i] +
                     "): no resistive path to any source");
  }

  g_llt_.compute(G_);
  if (g_llt_.info() != Eigen::Success) throw SimError("singular conductance matrix");
  a_llt_.compute(C_ / dt_ + G_);
  if (a_llt_.info() != Eigen::Success) throw SimError("singular system matrix C/dt + G");
}

double TransientSolver::energy(const Eigen::VectorXd& v_nodes) const {
  return 0.5 * v_nodes.dot(C_ * v_nodes);
}

namespace {

// half-open index ranges [begin, end) that must be marched; everything between
// consecutive ranges holds the DC solution
std::vector<std::pair<Eigen::Index, Eigen::Index>> march_ranges(
    const std::vector<RampStimulus>& stimuli, double dt, Eigen::Index steps, const GapSkip* skip) {
  if (!skip || !(skip->tail_ps > 0))
    return {{Eigen::Index(0), steps + 1}};
  std::vector<std::pair<double, double>> events;
  for (const auto& s : stimuli) {
    if (s.is_hold()) continue;
    events.emplace_back(s.t0, s.t0 + s.duration() + skip->tail_ps);
  }
  if (events.empty()) return {{Eigen::Index(0), steps + 1}};
  std::sort(events.begin(), events.end());
  std::vector<std::pair<double, double>> merged;
  for (auto [a, b] : events) {
    // gaps shorter than the settle guard are marched through
    if (!merged.empty() && a - merged.back().second < skip->min_gap_ps)
      merged.back().second = std::max(merged.back().second, b);
    else
      merged.emplace_back(a, b);
  }
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (auto [a, b] : merged) {
    Eigen::Index lo = std::max<Eigen::Index>(0, Eigen::Index(std::floor(a / dt)) - 1);
    Eigen::Index hi = std::min<Eigen::Index>(steps + 1, Eigen::Index(std::ceil(b / dt)) + 2);
    if (!out.empty() && lo <= out.back().second)
      out.back().second = std::max(out.back().second, hi);
    else
      out.emplace_back(lo, hi);
  }
  return out;
}

} // namespace

Waveforms TransientSolver::run(const std::vector<RampStimulus>& stimuli, double t_end,
                               const Eigen::VectorXd* v0, const GapSkip* skip) const {
  if (stimuli.size() != source_nodes_.size())
    throw SimError("stimulus count does not match source count");
  if (!(t_end > 0)) throw SimError("t_end must be > 0");

  const int s_count = int(stimuli.size());
  const Eigen::Index steps = Eigen::Index(std::ceil(t_end / dt_));

  double v_min = 0.0, v_max = 1.0;
  if (s_count > 0) {
    v_min = stimuli[0].v_low;
    v_max = stimuli[0].v_high;
    for (const auto& s : stimuli) {
      v_min = std::min({v_min, s.v_low, s.v_high});
      v_max = std::max({v_max, s.v_low, s.v_high});
    }
  }
  double swing = std::max(v_max - v_min, 1e-12);
  double lo_bound = v_min - 0.2 * swing;
  double hi_bound = v_max + 0.2 * swing;

  Waveforms w;
  w.dt = dt_;
  w.node_count = n_;
  w.source_count = s_count;
  w.v.resize(steps + 1, n_ + s_count);

  Eigen::VectorXd current(n_);
  auto fill_current = [&](double t) {
    current.setZero();
    for (int k = 0; k < s_count; ++k)
      current[source_nodes_[k]] += source_g_[k] * stimuli[k].value(t);
  };

  Eigen::VectorXd v(n_);
  if (v0) {
    if (v0->size() != n_) throw SimError("initial state size mismatch");
    v = *v0;
  } else {
    fill_current(0.0);
    v = g_llt_.solve(current);
  }

  const Eigen::MatrixXd c_over_dt = C_ / dt_;
  auto ranges = march_ranges(stimuli, dt_, steps, skip);

  Eigen::Index next = 0;  // first row not yet written
  for (auto [lo, hi] : ranges) {
    if (lo > next) {
      // sources constant and settled across [next, lo): pin to the DC point
      fill_current(double(next) * dt_);
      v = g_llt_.solve(current);
      for (Eigen::Index i = next; i < lo; ++i) {
        w.v.row(i).head(n_) = v.transpose();
        for (int k = 0; k < s_count; ++k) w.v(i, n_ + k) = stimuli[k].value(double(i) * dt_);
      }
    }
    for (Eigen::Index i = lo; i < hi; ++i) {
      if (i > 0 && i > lo) {
        fill_current(double(i) * dt_);
        v = a_llt_.solve(c_over_dt * v + current);
      } else if (i > 0 && i == lo) {
        // fresh cluster: previous activity has settled, so start from DC
        fill_current(double(i) * dt_);
        v = g_llt_.solve(current);
      }
      if (!v.allFinite())
        throw SimError("non-finite voltage at t = " + std::to_string(double(i) * dt_) + " ps");
      double lo_v = v.minCoeff(), hi_v = v.maxCoeff();
      if (lo_v < lo_bound || hi_v > hi_bound)
        throw SimError("voltage diverged beyond rails at t = " + std::to_string(double(i) * dt_) +
                       " ps (" + std::to_string(lo_v) + " .. " + std::to_string(hi_v) + " V)");
      w.v.row(i).head(n_) = v.transpose();
      for (int k = 0; k < s_count; ++k) w.v(i, n_ + k) = stimuli[k].value(double(i) * dt_);
    }
    next = std::max(next, hi);
  }
  if (next <= steps) {
    fill_current(double(next) * dt_);
    v = g_llt_.solve(current);
    for (Eigen::Index i = next; i <= steps; ++i) {
      w.v.row(i).head(n_) = v.transpose();
      for (int k = 0; k < s_count; ++k) w.v(i, n_ + k) = stimuli[k].value(double(i) * dt_);
    }
  }
  return w;
}

Waveforms simulate_transient(const RCNetwork& net, double dt, double t_end) {
  TransientSolver solver(net, dt);
  std::vector<RampStimulus> stimuli;
  stimuli.reserve(net.sources.size());
  for (const auto& s : net.sources) stimuli.push_back(s.stim);
  return solver.run(stimuli, t_end);
}

Crossing find_crossing(const Waveforms& w, int col, double level) {
  const auto& column = w.v.col(col);
  const Eigen::Index rows = column.size();
  if (rows < 2) throw SimError("waveform too short to measure");

  Crossing out;
  std::vector<double> times;
  int prev_side = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    double d = column[i] - level;
    int side = d > 0 ? 1 : (d < 0 ? -1 : prev_side);
    if (prev_side != 0 && side != 0 && side != prev_side) {
      double v0 = column[i - 1], v1 = column[i];
      double f = (level - v0) / (v1 - v0);
      times.push_back((double(i - 1) + f) * w.dt);
    }
    if (side != 0) prev_side = side;
  }
  if (times.empty())
    throw SimError("no crossing of level " + std::to_string(level) + " on column " +
                   std::to_string(col));
  out.crossing_count = int(times.size());
  out.t50 = times.back();
  times.pop_back();
  out.glitch_times = std::move(times);
  return out;
}

double measure_delay(const Waveforms& w, int col_in, int col_out, double vdd) {
  if (col_in == col_out) return 0.0;
  double level = 0.5 * vdd;
  Crossing in = find_crossing(w, col_in, level);
  Crossing out = find_crossing(w, col_out, level);
  return out.t50 - in.t50;
}

} // namespace xtalk
