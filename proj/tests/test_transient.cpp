#include <doctest.h>

#include <cmath>

#include "xtalk/transient.hpp"

using namespace xtalk;

namespace {

// source behind r_ohms into a grounded cap: the canonical first-order circuit
RCNetwork lumped_rc(double r_ohms, double c_fF, double transition, Edge dir = Edge::rise) {
  RCNetwork net;
  int n = net.add_node("out");
  net.c_ground[n] = c_fF;
  RampStimulus stim;
  stim.t0 = 10.0;
  stim.transition = transition;
  stim.direction = dir;
  net.sources.push_back({n, r_ohms, stim});
  return net;
}

} // namespace

TEST_CASE("step response matches the analytic exponential") {
  RCNetwork net = lumped_rc(1000.0, 100.0, 0.008);  // effectively a step at t0
  net.sources[0].stim.t0 = 0.0;
  Waveforms w = simulate_transient(net, 1.0, 600.0);  // dt = RC/100
  double worst = 0.0;
  for (Eigen::Index i = 1; i <= w.steps(); ++i) {
    double ref = 1.0 - std::exp(-w.time_at(i) / 100.0);
    worst = std::max(worst, std::abs(w.v(i, 0) - ref));
  }
  CHECK(worst < 0.005);  // within 0.5% of Vdd
}

TEST_CASE("50% delay of the lumped RC equals ln2 RC") {
  RCNetwork net = lumped_rc(1000.0, 100.0, 2.0);
  double dt = std::min(2.0, 100.0) / 50.0;
  Waveforms w = simulate_transient(net, dt, 10.0 + 2.5 + 6.0 * 100.0);
  double delay = measure_delay(w, w.col_of_source(0), w.col_of_node(0), 1.0);
  CHECK(delay == doctest::Approx(std::log(2.0) * 100.0).epsilon(0.01));
}

TEST_CASE("halving dt moves 50% crossings by less than 0.2%") {
  RCNetwork net = lumped_rc(1000.0, 100.0, 2.0);
  double dt = std::min(2.0, 100.0) / 50.0;
  Waveforms a = simulate_transient(net, dt, 600.0);
  Waveforms b = simulate_transient(net, dt / 2.0, 600.0);
  double ta = find_crossing(a, 0, 0.5).t50;
  double tb = find_crossing(b, 0, 0.5).t50;
  CHECK(std::abs(ta - tb) / ta < 0.002);
}

TEST_CASE("zero stimulus holds every node at its rail") {
  RCNetwork net = lumped_rc(1000.0, 100.0, 5.0, Edge::fall);
  net.sources[0].stim = net.sources[0].stim.held();  // stays at the high rail
  Waveforms w = simulate_transient(net, 1.0, 200.0);
  CHECK(w.v.col(0).minCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w.v.col(0).maxCoeff() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rail scaling scales voltages linearly and keeps delays") {
  RCNetwork net = lumped_rc(1000.0, 100.0, 8.0);
  Waveforms w1 = simulate_transient(net, 0.5, 600.0);
  net.sources[0].stim.v_high = 2.5;
  Waveforms w2 = simulate_transient(net, 0.5, 600.0);
  for (Eigen::Index i = 0; i <= w1.steps(); i += 50)
    CHECK(w2.v(i, 0) == doctest::Approx(2.5 * w1.v(i, 0)).epsilon(1e-9));
  double d1 = measure_delay(w1, w1.col_of_source(0), 0, 1.0);
  double d2 = measure_delay(w2, w2.col_of_source(0), 0, 2.5);
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-9));
}

TEST_CASE("source-free relaxation dissipates stored energy monotonically") {
  RCNetwork net;
  int a = net.add_node("a");
  int b = net.add_node("b");
  net.c_ground[a] = 40.0;
  net.c_ground[b] = 80.0;
  net.resistors.push_back({a, b, 500.0});
  net.couplers.push_back({a, b, 25.0});
  RampStimulus hold;
  hold.t0 = RampStimulus::kHold;
  net.sources.push_back({a, 800.0, hold});

  TransientSolver solver(net, 0.25);
  Eigen::VectorXd v0(2);
  v0 << 0.9, 0.2;
  std::vector<RampStimulus> stim = {hold};
  Waveforms w = solver.run(stim, 1500.0, &v0);
  double prev = solver.energy(v0);
  for (Eigen::Index i = 1; i <= w.steps(); ++i) {
    double e = solver.energy(w.v.row(i).head(2).transpose());
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("fall transition mirrors the rise delay in a linear network") {
  RCNetwork rise = lumped_rc(1000.0, 100.0, 8.0, Edge::rise);
  RCNetwork fall = lumped_rc(1000.0, 100.0, 8.0, Edge::fall);
  Waveforms wr = simulate_transient(rise, 0.2, 600.0);
  Waveforms wf = simulate_transient(fall, 0.2, 600.0);
  double dr = measure_delay(wr, wr.col_of_source(0), 0, 1.0);
  double df = measure_delay(wf, wf.col_of_source(0), 0, 1.0);
  CHECK(dr == doctest::Approx(df).epsilon(1e-9));
}

TEST_CASE("measuring a column against itself gives zero") {
  RCNetwork net = lumped_rc(1000.0, 100.0, 8.0);
  Waveforms w = simulate_transient(net, 0.5, 600.0);
  CHECK(measure_delay(w, 0, 0, 1.0) == 0.0);
}

TEST_CASE("missing crossings and disconnected nodes are reported") {
  RCNetwork net = lumped_rc(1000.0, 100.0, 8.0);
  net.sources[0].stim = net.sources[0].stim.held();
  Waveforms w = simulate_transient(net, 1.0, 100.0);
  CHECK_THROWS_AS((void)find_crossing(w, 0, 0.5), SimError);

  RCNetwork floating = lumped_rc(1000.0, 100.0, 8.0);
  floating.add_node("orphan");
  floating.c_ground[1] = 5.0;
  CHECK_THROWS_WITH_AS(TransientSolver(floating, 0.5), doctest::Contains("disconnected node"),
                       SimError);
}

TEST_CASE("gap skipping reproduces the contiguous solution") {
  // two sources far apart in time; the gap holds the DC point exactly
  RCNetwork net;
  int a = net.add_node("a");
  int b = net.add_node("b");
  net.c_ground[a] = 30.0;
  net.c_ground[b] = 50.0;
  net.resistors.push_back({a, b, 400.0});
  RampStimulus s1;
  s1.t0 = 5.0;
  s1.transition = 8.0;
  RampStimulus s2 = s1;
  s2.t0 = 1500.0;
  s2.direction = Edge::fall;
  net.sources.push_back({a, 300.0, s1});
  net.sources.push_back({b, 600.0, s2});

  TransientSolver solver(net, 0.25);
  std::vector<RampStimulus> stim = {s1, s2};
  Waveforms full = solver.run(stim, 1800.0);
  double tau = (0.3 + 0.4) * 80.0;  // generous network time constant bound
  GapSkip gs{5.0 * tau, 7.0 * tau};
  Waveforms skipped = solver.run(stim, 1800.0, nullptr, &gs);

  // crossings land inside marched clusters and must agree tightly; rows inside
  // the skipped gap hold the DC point, which the full run approaches from a
  // 5-tau tail, so they may differ by up to about exp(-5)
  for (int col : {0, 1}) {
    double tf = find_crossing(full, col, 0.5).t50;
    double ts = find_crossing(skipped, col, 0.5).t50;
    CHECK(tf == doctest::Approx(ts).epsilon(1e-9));
  }
  double worst = (full.v - skipped.v).array().abs().maxCoeff();
  CHECK(worst < 0.01);
}
