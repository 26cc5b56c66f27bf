#include "xtalk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "xtalk/bench_gen.hpp"
#include "xtalk/parallel.hpp"

namespace xtalk {

using nlohmann::json;

namespace {

constexpr const char* kMeasurementNote =
    "net delays measured from the driver output node to the sink at 50% Vdd; "
    "driver cell delay comes from the lookup table";

Edge flipped(Edge e) { return e == Edge::rise ? Edge::fall : Edge::rise; }

double coupling_load_of(const Design& design, int net_id, const std::vector<CouplingPair>& pairs) {
  double c = 0.0;
  for (const auto& p : pairs) {
    const Segment& sv = design.segment(p.victim_segment_id);
    const Segment& sa = design.segment(p.aggressor_segment_id);
    if (sv.net_id != net_id && sa.net_id != net_id) continue;
    c += coupling_capacitance(p, design.layer(sv.layer_id));
  }
  return c;
}

struct RunSetup {
  BuiltCircuit circuit;
  std::vector<RampStimulus> si;     // aggressors switching
  std::vector<RampStimulus> quiet;  // aggressors held
  double dt = 0.0;
  double t_end = 0.0;
  double t_shift = 0.0;  // ps subtracted from every stimulus start
  double vdd = 1.0;
  GapSkip gap_skip;      // events only; quiescent spans hold the DC solution
};

RunSetup prepare_run(const Design& design, int victim_net_id,
                     const std::vector<int>& aggressor_net_ids,
                     const std::vector<CouplingPair>& pairs, const std::vector<double>& skews,
                     const std::vector<RelDirection>& directions, const SimOptions& opt) {
  if (skews.size() != aggressor_net_ids.size() || directions.size() != aggressor_net_ids.size())
    throw std::invalid_argument("skews and directions must be index-aligned with aggressors");

  std::vector<int> net_ids;
  net_ids.push_back(victim_net_id);
  net_ids.insert(net_ids.end(), aggressor_net_ids.begin(), aggressor_net_ids.end());

  auto table_load = [&](int net_id) {
    auto it = opt.coupling_load.find(net_id);
    if (it != opt.coupling_load.end()) return it->second;
    return coupling_load_of(design, net_id, pairs);
  };

  DriverPoint victim_pt = driver_point(design, design.net(victim_net_id), table_load(victim_net_id));
  Edge victim_edge = design.driver_of(victim_net_id).direction;

  std::vector<double> at_out(net_ids.size());
  at_out[0] = victim_pt.at_out;
  for (std::size_t k = 0; k < aggressor_net_ids.size(); ++k)
    at_out[k + 1] = victim_pt.at_out - skews[k];

  RunSetup rs;
  rs.vdd = opt.vdd;
  rs.circuit = build_network(design, net_ids, pairs, opt.segments_per_wire, at_out, opt.vdd);

  rs.si.reserve(rs.circuit.network.sources.size());
  for (const auto& s : rs.circuit.network.sources) rs.si.push_back(s.stim);
  // aggressor edges are relative to the victim's
  for (std::size_t k = 0; k < aggressor_net_ids.size(); ++k) {
    const NetTap& tap = rs.circuit.tap(aggressor_net_ids[k]);
    rs.si[tap.source_index].direction =
        directions[k] == RelDirection::opposite ? flipped(victim_edge) : victim_edge;
  }
  rs.quiet = rs.si;
  for (std::size_t k = 0; k < aggressor_net_ids.size(); ++k) {
    const NetTap& tap = rs.circuit.tap(aggressor_net_ids[k]);
    rs.quiet[tap.source_index] = rs.quiet[tap.source_index].held();
  }

  double min_transition = rs.si.front().transition;
  double max_rc = 0.0;
  for (const auto& tap : rs.circuit.taps) max_rc = std::max(max_rc, tap.rc_estimate);
  for (const auto& s : rs.si) min_transition = std::min(min_transition, s.transition);
  double min_rc = rs.circuit.taps.front().rc_estimate;
  for (const auto& tap : rs.circuit.taps) min_rc = std::min(min_rc, tap.rc_estimate);

  rs.dt = opt.dt_override > 0 ? opt.dt_override
                              : std::min(min_transition, min_rc) / opt.dt_divisor;

  double t_lo = rs.si.front().t0, t_hi = 0.0;
  for (const auto& s : rs.si) {
    t_lo = std::min(t_lo, s.t0);
    t_hi = std::max(t_hi, s.t0 + s.duration());
  }
  rs.t_shift = t_lo - 2.0 * rs.dt;
  for (auto& s : rs.si)
    if (!s.is_hold()) s.t0 -= rs.t_shift;
  for (auto& s : rs.quiet)
    if (!s.is_hold()) s.t0 -= rs.t_shift;
  rs.t_end = (t_hi - rs.t_shift) + opt.tail_tau_mult * max_rc;
  rs.gap_skip.tail_ps = opt.tail_tau_mult * max_rc;
  rs.gap_skip.min_gap_ps = 7.0 * max_rc;
  return rs;
}

struct MeasuredRun {
  double net_delay = 0.0;
  std::vector<double> seg_tau;
  int glitch_count = 0;
};

MeasuredRun measure_net(const Waveforms& w, const NetTap& tap, double vdd) {
  MeasuredRun m;
  double level = 0.5 * vdd;
  Crossing head = find_crossing(w, tap.driver_node, level);
  Crossing tail = find_crossing(w, tap.sink_node, level);
  m.net_delay = tail.t50 - head.t50;
  m.glitch_count = tail.crossing_count - 1;
  double prev = head.t50;
  for (const auto& [start, end] : tap.segment_nodes) {
    (void)start;
    double t = find_crossing(w, end, level).t50;
    m.seg_tau.push_back(t - prev);
    prev = t;
  }
  return m;
}

DelayResult measure_delta(const Design& design, int victim_net_id,
                          const std::vector<int>& aggressor_net_ids, const RunSetup& rs,
                          const Waveforms& wq, const Waveforms& ws);

} // namespace

DelayResult delta_delay(const Design& design, int victim_net_id,
                        const std::vector<int>& aggressor_net_ids,
                        const std::vector<CouplingPair>& pairs, const std::vector<double>& skews,
                        const std::vector<RelDirection>& directions, const SimOptions& opt) {
  RunSetup rs = prepare_run(design, victim_net_id, aggressor_net_ids, pairs, skews, directions, opt);
  try {
    TransientSolver solver(rs.circuit.network, rs.dt);
    Waveforms wq = solver.run(rs.quiet, rs.t_end, nullptr, &rs.gap_skip);
    Waveforms ws = solver.run(rs.si, rs.t_end, nullptr, &rs.gap_skip);
    return measure_delta(design, victim_net_id, aggressor_net_ids, rs, wq, ws);
  } catch (const SimError& e) {
    std::string ctx = "victim net " + std::to_string(victim_net_id) + ", aggressors [";
    for (std::size_t k = 0; k < aggressor_net_ids.size(); ++k) {
      if (k) ctx += ", ";
      ctx += std::to_string(aggressor_net_ids[k]) + " skew " + std::to_string(skews[k]);
    }
    ctx += "]";
    throw SimError(std::string(e.what()) + " (" + ctx + ")");
  }
}

namespace {

DelayResult measure_delta(const Design& design, int victim_net_id,
                          const std::vector<int>& aggressor_net_ids, const RunSetup& rs,
                          const Waveforms& wq, const Waveforms& ws) {

  const NetTap& victim = rs.circuit.tap(victim_net_id);
  MeasuredRun quiet = measure_net(wq, victim, rs.vdd);
  MeasuredRun si = measure_net(ws, victim, rs.vdd);

  DelayResult r;
  r.d_nosi = quiet.net_delay;
  r.d_si = si.net_delay;
  r.delta = r.d_si - r.d_nosi;
  r.seg_tau_nosi = quiet.seg_tau;
  r.seg_tau_si.resize(si.seg_tau.size());
  for (std::size_t i = 0; i < si.seg_tau.size(); ++i)
    r.seg_tau_si[i] = si.seg_tau[i] - quiet.seg_tau[i];
  r.victim_glitch_count = si.glitch_count;
  for (int aid : aggressor_net_ids)
    r.aggressor_delays.push_back(measure_net(ws, rs.circuit.tap(aid), rs.vdd).net_delay);
  return r;
}

} // namespace

TwoNetConfig TwoNetConfig::defaults() {
  TwoNetConfig cfg;
  cfg.layer.id = 1;
  cfg.layer.direction = Direction::horizontal;
  cfg.layer.m_w = 0.1;
  cfg.layer.m_t = 0.15;
  cfg.layer.m_h = 0.2;
  cfg.layer.m_eps0 = 3.9;
  cfg.layer.r_sheet = 0.1;     // 1 Ohm/um at the default width
  cfg.layer.c_area = 0.2;      // fF/um
  cfg.layer.c_coup_unit = 0.05;
  return cfg;
}

Design make_two_net_design(const TwoNetConfig& cfg) {
  Design d;
  d.name = "two_net";
  d.origin = "two_net_config";
  d.layers = {cfg.layer};

  double y_agg = cfg.layer.m_w + cfg.spacing;  // edge-to-edge spacing on centers
  double x0 = (cfg.victim_len - cfg.aggressor_len) / 2.0;

  Segment sv{1, 1, cfg.layer.id, {0.0, 0.0}, {cfg.victim_len, 0.0}, std::nullopt};
  Segment sa{2, 2, cfg.layer.id, {x0, y_agg}, {x0 + cfg.aggressor_len, y_agg}, std::nullopt};
  d.segments = {sv, sa};
  d.nets = {Net{1, "netV", {1}, cfg.c_sink}, Net{2, "netA", {2}, cfg.c_sink}};

  Driver dv;
  dv.net_id = 1;
  dv.r_drive = cfg.r_drive;
  dv.s_in = cfg.s_in;
  dv.direction = cfg.victim_edge;
  dv.at_in = cfg.victim_at_in;
  dv.delay_table = synth_delay_table(cfg.r_drive);
  Driver da = dv;
  da.net_id = 2;
  da.at_in = cfg.victim_at_in;  // actual start set per skew point
  da.direction = cfg.aggressor_dir == RelDirection::opposite ? flipped(cfg.victim_edge)
                                                             : cfg.victim_edge;
  d.drivers = {dv, da};

  std::vector<std::string> violations = validate(d);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return d;
}

std::vector<SweepRow> sweep_skew(const TwoNetConfig& cfg, double skew_min, double skew_max,
                                 double step, const SimOptions& opt_in) {
  if (!(step > 0)) throw std::invalid_argument("sweep step must be > 0");
  Design d = make_two_net_design(cfg);
  std::vector<CouplingPair> pairs = extract_coupling_pairs(d, cfg.spacing * 1.5);

  SimOptions opt = opt_in;
  opt.vdd = cfg.vdd;

  std::vector<SweepRow> rows;
  for (double skew = skew_min; skew <= skew_max + 1e-9; skew += step) {
    DelayResult r = delta_delay(d, 1, {2}, pairs, {skew}, {cfg.aggressor_dir}, opt);
    SweepRow row;
    row.dskew = skew;
    row.d_net_v = r.d_si;
    row.d_net_a = r.aggressor_delays.front();
    row.delta = r.delta;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "dskew_ps,d_netV_ps,d_netA_ps,delta_ps\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f\n", r.dskew, r.d_net_v, r.d_net_a, r.delta);
    out += buf;
  }
  return out;
}

const NetOracle& OracleResults::net(int id) const {
  for (const auto& n : nets)
    if (n.net_id == id) return n;
  throw std::out_of_range("no oracle entry for net " + std::to_string(id));
}

OracleResults run_design_oracle(const Design& design, const std::vector<CouplingPair>& pairs,
                                const OracleOptions& opt) {
  OracleResults res;
  res.note = kMeasurementNote;
  res.threshold = opt.threshold;
  res.segments_per_wire = opt.sim.segments_per_wire;

  // table-lookup loads include every attached coupling cap
  SimOptions sim = opt.sim;
  for (const auto& n : design.nets)
    sim.coupling_load[n.id] = coupling_load_of(design, n.id, pairs);

  // neighbor map and mutual pair lists
  std::map<int, std::set<int>> neighbors;            // net -> neighbor nets
  std::map<std::pair<int, int>, std::vector<CouplingPair>> mutual;  // (lo net, hi net)
  for (const auto& p : pairs) {
    int na = design.segment(p.victim_segment_id).net_id;
    int nb = design.segment(p.aggressor_segment_id).net_id;
    neighbors[na].insert(nb);
    neighbors[nb].insert(na);
    mutual[{std::min(na, nb), std::max(na, nb)}].push_back(p);
  }

  const int jobs = opt.jobs > 0 ? opt.jobs : default_jobs();

  // phase 1: per-net quiet runs (and worst-case golden runs when requested)
  struct NetItem {
    NetOracle net;
    std::map<int, double> seg_tau_nosi;  // segment id -> tau
    bool single_neighbor = false;        // quiet run equals the two-net quiet run
  };
  std::vector<NetItem> net_items(design.nets.size());
  parallel_for(jobs, design.nets.size(), [&](std::size_t i) {
    const Net& net = design.nets[i];
    NetItem& item = net_items[i];
    item.net.net_id = net.id;
    DriverPoint pt = driver_point(design, net, sim.coupling_load.at(net.id));
    item.net.at_out = pt.at_out;
    item.net.d_driver = pt.d_driver;
    item.net.s_out = pt.s_out;

    std::vector<int> aggrs;
    auto nb = neighbors.find(net.id);
    if (nb != neighbors.end()) aggrs.assign(nb->second.begin(), nb->second.end());
    item.single_neighbor = aggrs.size() == 1;

    std::vector<CouplingPair> ctx;
    std::set<int> in_circuit(aggrs.begin(), aggrs.end());
    in_circuit.insert(net.id);
    for (const auto& p : pairs) {
      int na = design.segment(p.victim_segment_id).net_id;
      int nb2 = design.segment(p.aggressor_segment_id).net_id;
      if (in_circuit.count(na) && in_circuit.count(nb2)) ctx.push_back(p);
    }

    std::vector<double> skews;
    std::vector<RelDirection> dirs;
    for (int aid : aggrs) {
      skews.push_back(pt.at_out - driver_point(design, design.net(aid), sim.coupling_load.at(aid)).at_out);
      dirs.push_back(RelDirection::opposite);
    }

    RunSetup rs = prepare_run(design, net.id, aggrs, ctx, skews, dirs, sim);
    TransientSolver solver(rs.circuit.network, rs.dt);
    Waveforms wq = solver.run(rs.quiet, rs.t_end, nullptr, &rs.gap_skip);
    const NetTap& tap = rs.circuit.tap(net.id);
    MeasuredRun quiet = measure_net(wq, tap, rs.vdd);
    item.net.d_nosi = quiet.net_delay;
    for (std::size_t k = 0; k < net.segments.size(); ++k)
      item.seg_tau_nosi[net.segments[k]] = quiet.seg_tau[k];

    if (opt.with_golden) {
      Waveforms ws = solver.run(rs.si, rs.t_end, nullptr, &rs.gap_skip);
      MeasuredRun si = measure_net(ws, tap, rs.vdd);
      item.net.d_si_all = si.net_delay;
      item.net.delta_all = si.net_delay - quiet.net_delay;
    }
  });
  std::map<int, const NetItem*> item_of;
  for (const auto& item : net_items) item_of[item.net.net_id] = &item;

  // phase 2: per net-pair two-net runs, both orientations sharing one circuit
  std::vector<std::pair<std::pair<int, int>, std::vector<CouplingPair>>> groups(mutual.begin(),
                                                                                mutual.end());
  struct PairItem {
    std::vector<PairOracle> oracles;
    std::map<int, double> seg_tau_si;  // victim segment id -> tau_si (this net-pair)
  };
  std::vector<PairItem> pair_items(groups.size());
  parallel_for(jobs, groups.size(), [&](std::size_t gi) {
    const auto& [net_ids, mpairs] = groups[gi];
    PairItem& item = pair_items[gi];
    const int n1 = net_ids.first, n2 = net_ids.second;
    const NetItem& i1 = *item_of.at(n1);
    const NetItem& i2 = *item_of.at(n2);
    Edge d1 = design.driver_of(n1).direction;
    Edge d2 = design.driver_of(n2).direction;

    BuiltCircuit bc = build_network(design, {n1, n2}, mpairs, sim.segments_per_wire,
                                    {i1.net.at_out, i2.net.at_out}, sim.vdd);
    const NetTap& tap1 = bc.tap(n1);
    const NetTap& tap2 = bc.tap(n2);

    double min_transition = std::min(design.driver_of(n1).s_in, design.driver_of(n2).s_in);
    double min_rc = std::min(tap1.rc_estimate, tap2.rc_estimate);
    double max_rc = std::max(tap1.rc_estimate, tap2.rc_estimate);
    double dt = sim.dt_override > 0 ? sim.dt_override
                                    : std::min(min_transition, min_rc) / sim.dt_divisor;

    std::vector<RampStimulus> base;
    for (const auto& s : bc.network.sources) base.push_back(s.stim);
    double t_lo = std::min(base[0].t0, base[1].t0);
    double t_shift = t_lo - 2.0 * dt;
    for (auto& s : base) s.t0 -= t_shift;
    double t_hi = std::max(base[0].t0 + base[0].duration(), base[1].t0 + base[1].duration());
    double t_end = t_hi + sim.tail_tau_mult * max_rc;
    GapSkip gs{sim.tail_tau_mult * max_rc, 7.0 * max_rc};

    TransientSolver solver(bc.network, dt);
    auto with = [&](Edge e1, bool hold1, Edge e2, bool hold2) {
      std::vector<RampStimulus> st = base;
      st[std::size_t(tap1.source_index)].direction = e1;
      st[std::size_t(tap2.source_index)].direction = e2;
      if (hold1) st[std::size_t(tap1.source_index)] = st[std::size_t(tap1.source_index)].held();
      if (hold2) st[std::size_t(tap2.source_index)] = st[std::size_t(tap2.source_index)].held();
      return st;
    };

    // quiet baselines; a single-neighbor net's phase-1 quiet run is this
    // exact circuit, so its measurements carry over
    MeasuredRun quiet1, quiet2;
    if (i1.single_neighbor) {
      quiet1.net_delay = i1.net.d_nosi;
      for (int sid : design.net(n1).segments) quiet1.seg_tau.push_back(i1.seg_tau_nosi.at(sid));
    } else {
      quiet1 = measure_net(solver.run(with(d1, false, d2, true), t_end, nullptr, &gs), tap1, sim.vdd);
    }
    if (i2.single_neighbor) {
      quiet2.net_delay = i2.net.d_nosi;
      for (int sid : design.net(n2).segments) quiet2.seg_tau.push_back(i2.seg_tau_nosi.at(sid));
    } else {
      quiet2 = measure_net(solver.run(with(d1, true, d2, false), t_end, nullptr, &gs), tap2, sim.vdd);
    }

    // switching runs: victim keeps its own edge, aggressor flips; when the two
    // drivers already oppose each other one waveform serves both orientations
    Edge f1 = flipped(d1), f2 = flipped(d2);
    Waveforms ws1 = solver.run(with(d1, false, f1, false), t_end, nullptr, &gs);
    MeasuredRun si1 = measure_net(ws1, tap1, sim.vdd);
    MeasuredRun si2;
    if (d2 == f1) {
      si2 = measure_net(ws1, tap2, sim.vdd);
    } else {
      Waveforms ws2 = solver.run(with(f2, false, d2, false), t_end, nullptr, &gs);
      si2 = measure_net(ws2, tap2, sim.vdd);
    }

    auto emit = [&](int victim_net, int aggr_net, const NetTap& vtap, const MeasuredRun& quiet,
                    const MeasuredRun& si, double dskew) {
      const Net& vnet = design.net(victim_net);
      std::map<int, double> tau_si_by_seg;
      for (std::size_t k = 0; k < vnet.segments.size(); ++k)
        tau_si_by_seg[vnet.segments[k]] = si.seg_tau[k] - quiet.seg_tau[k];
      (void)vtap;
      for (const auto& p : mpairs) {
        int vseg = design.segment(p.victim_segment_id).net_id == victim_net
                       ? p.victim_segment_id
                       : p.aggressor_segment_id;
        int aseg = vseg == p.victim_segment_id ? p.aggressor_segment_id : p.victim_segment_id;
        if (design.segment(vseg).net_id != victim_net) continue;
        PairOracle po;
        po.victim_segment_id = vseg;
        po.aggressor_segment_id = aseg;
        po.victim_net_id = victim_net;
        po.aggressor_net_id = aggr_net;
        po.l_si = p.l_si;
        po.w_si = p.w_si;
        po.dskew = dskew;
        po.d_nosi = quiet.net_delay;
        po.d_si = si.net_delay;
        po.delta = tau_si_by_seg.at(vseg);
        item.oracles.push_back(po);
        item.seg_tau_si[vseg] = tau_si_by_seg.at(vseg);
      }
    };
    emit(n1, n2, tap1, quiet1, si1, delta_skew(i1.net.at_out, i2.net.at_out));
    emit(n2, n1, tap2, quiet2, si2, delta_skew(i2.net.at_out, i1.net.at_out));
  });

  // assemble, deterministic order
  for (const auto& item : net_items) res.nets.push_back(item.net);
  std::sort(res.nets.begin(), res.nets.end(),
            [](const NetOracle& a, const NetOracle& b) { return a.net_id < b.net_id; });

  // strongest aggressor per segment: max C_c, ties to the lower segment id
  std::map<int, std::pair<double, int>> strongest;  // victim seg -> (C_c, aggr seg)
  for (const auto& p : pairs) {
    double c_c = coupling_capacitance(p, design.layer(design.segment(p.victim_segment_id).layer_id));
    for (auto [vseg, aseg] : {std::pair{p.victim_segment_id, p.aggressor_segment_id},
                              std::pair{p.aggressor_segment_id, p.victim_segment_id}}) {
      auto it = strongest.find(vseg);
      if (it == strongest.end() || c_c > it->second.first ||
          (c_c == it->second.first && aseg < it->second.second))
        strongest[vseg] = {c_c, aseg};
    }
  }
  std::map<int, double> tau_si_strongest;  // victim seg -> tau from its strongest net-pair run
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (const auto& [seg, tau] : pair_items[gi].seg_tau_si) {
      auto st = strongest.find(seg);
      if (st == strongest.end()) continue;
      int aggr_net = design.segment(st->second.second).net_id;
      int victim_net = design.segment(seg).net_id;
      auto key = std::pair{std::min(victim_net, aggr_net), std::max(victim_net, aggr_net)};
      if (key == groups[gi].first) tau_si_strongest[seg] = tau;
    }
  }

  for (const auto& net : design.nets) {
    const NetItem& item = net_items[&net - design.nets.data()];
    for (int sid : net.segments) {
      SegmentOracle so;
      so.net_id = net.id;
      so.segment_id = sid;
      so.tau_nosi = item.seg_tau_nosi.at(sid);
      auto st = strongest.find(sid);
      if (st != strongest.end()) {
        so.strongest_aggressor_segment = st->second.second;
        auto ts = tau_si_strongest.find(sid);
        so.tau_si = ts != tau_si_strongest.end() ? ts->second : 0.0;
      }
      res.segments.push_back(so);
    }
  }
  std::sort(res.segments.begin(), res.segments.end(),
            [](const SegmentOracle& a, const SegmentOracle& b) { return a.segment_id < b.segment_id; });

  for (const auto& item : pair_items)
    res.pairs.insert(res.pairs.end(), item.oracles.begin(), item.oracles.end());
  std::sort(res.pairs.begin(), res.pairs.end(), [](const PairOracle& a, const PairOracle& b) {
    if (a.victim_segment_id != b.victim_segment_id) return a.victim_segment_id < b.victim_segment_id;
    return a.aggressor_segment_id < b.aggressor_segment_id;
  });

  return res;
}

std::string oracle_to_json(const OracleResults& r) {
  json root;
  root["version"] = 1;
  root["note"] = r.note;
  root["threshold"] = r.threshold;
  root["segments_per_wire"] = r.segments_per_wire;
  json nets = json::array();
  for (const auto& n : r.nets)
    nets.push_back(json{{"net_id", n.net_id},
                        {"at_out", n.at_out},
                        {"d_driver", n.d_driver},
                        {"s_out", n.s_out},
                        {"d_nosi", n.d_nosi},
                        {"d_si_all", n.d_si_all},
                        {"delta_all", n.delta_all}});
  json segs = json::array();
  for (const auto& s : r.segments)
    segs.push_back(json{{"net_id", s.net_id},
                        {"segment_id", s.segment_id},
                        {"tau_nosi", s.tau_nosi},
                        {"tau_si", s.tau_si},
                        {"strongest_aggressor_segment", s.strongest_aggressor_segment}});
  json prs = json::array();
  for (const auto& p : r.pairs)
    prs.push_back(json{{"victim_segment_id", p.victim_segment_id},
                       {"aggressor_segment_id", p.aggressor_segment_id},
                       {"victim_net_id", p.victim_net_id},
                       {"aggressor_net_id", p.aggressor_net_id},
                       {"l_si", p.l_si},
                       {"w_si", p.w_si},
                       {"dskew", p.dskew},
                       {"d_nosi", p.d_nosi},
                       {"d_si", p.d_si},
                       {"delta", p.delta}});
  root["nets"] = std::move(nets);
  root["segments"] = std::move(segs);
  root["pairs"] = std::move(prs);
  return root.dump(2) + "\n";
}

OracleResults oracle_from_json(const std::string& text) {
  json root = json::parse(text);
  if (root.at("version").get<int>() != 1) throw ParseError("unsupported oracle file version");
  OracleResults r;
  r.note = root.value("note", "");
  r.threshold = root.at("threshold").get<double>();
  r.segments_per_wire = root.at("segments_per_wire").get<int>();
  for (const auto& j : root.at("nets")) {
    NetOracle n;
    n.net_id = j.at("net_id").get<int>();
    n.at_out = j.at("at_out").get<double>();
    n.d_driver = j.at("d_driver").get<double>();
    n.s_out = j.at("s_out").get<double>();
    n.d_nosi = j.at("d_nosi").get<double>();
    n.d_si_all = j.at("d_si_all").get<double>();
    n.delta_all = j.at("delta_all").get<double>();
    r.nets.push_back(n);
  }
  for (const auto& j : root.at("segments")) {
    SegmentOracle s;
    s.net_id = j.at("net_id").get<int>();
    s.segment_id = j.at("segment_id").get<int>();
    s.tau_nosi = j.at("tau_nosi").get<double>();
    s.tau_si = j.at("tau_si").get<double>();
    s.strongest_aggressor_segment = j.at("strongest_aggressor_segment").get<int>();
    r.segments.push_back(s);
  }
  for (const auto& j : root.at("pairs")) {
    PairOracle p;
    p.victim_segment_id = j.at("victim_segment_id").get<int>();
    p.aggressor_segment_id = j.at("aggressor_segment_id").get<int>();
    p.victim_net_id = j.at("victim_net_id").get<int>();
    p.aggressor_net_id = j.at("aggressor_net_id").get<int>();
    p.l_si = j.at("l_si").get<double>();
    p.w_si = j.at("w_si").get<double>();
    p.dskew = j.at("dskew").get<double>();
    p.d_nosi = j.at("d_nosi").get<double>();
    p.d_si = j.at("d_si").get<double>();
    p.delta = j.at("delta").get<double>();
    r.pairs.push_back(p);
  }
  return r;
}

} // namespace xtalk
