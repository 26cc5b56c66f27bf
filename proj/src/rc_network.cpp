#include "xtalk/rc_network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace xtalk {

int RCNetwork::add_node(std::string name) {
  node_names.push_back(std::move(name));
  c_ground.push_back(0.0);
  return node_count++;
}

const NetTap& BuiltCircuit::tap(int net_id) const {
  for (const auto& t : taps)
    if (t.net_id == net_id) return t;
  throw std::out_of_range("no tap for net " + std::to_string(net_id));
}

namespace {

// position of the overlap midpoint along a segment, as a fraction of its length
double midpoint_fraction(const Segment& s, double mid) {
  double a = s.is_horizontal() ? s.start.x : s.start.y;
  double b = s.is_horizontal() ? s.end.x : s.end.y;
  return (mid - a) / (b - a);
}

} // namespace

BuiltCircuit build_network(const Design& design, const std::vector<int>& net_ids,
                           const std::vector<CouplingPair>& pairs, int segments_per_wire,
                           const std::vector<double>& at_out, double vdd) {
  if (segments_per_wire < 1) throw std::invalid_argument("segments_per_wire must be >= 1");
  if (at_out.size() != net_ids.size())
    throw std::invalid_argument("at_out must be index-aligned with net_ids");

  BuiltCircuit bc;
  RCNetwork& rc = bc.network;

  // segment id -> (segment, ladder node of fraction k/spw)
  std::map<int, std::vector<int>> ladder_nodes;

  for (std::size_t ni = 0; ni < net_ids.size(); ++ni) {
    const Net& net = design.net(net_ids[ni]);
    const Driver& drv = design.driver_of(net.id);

    NetTap tap;
    tap.net_id = net.id;

    int head = rc.add_node("n" + std::to_string(net.id) + ".drv");
    tap.driver_node = head;

    double r_wire_total = 0.0;
    int prev = head;
    for (int sid : net.segments) {
      const Segment& seg = design.segment(sid);
      const Layer& layer = design.layer(seg.layer_id);
      double len = seg.length();
      double width = design.segment_width(seg);
      double r_total = layer.r_sheet * len / width;  // Ohm
      double c_total = layer.c_area * len;           // fF
      r_wire_total += r_total;

      std::vector<int> nodes;
      nodes.push_back(prev);
      for (int k = 1; k <= segments_per_wire; ++k) {
        int n = rc.add_node("n" + std::to_string(net.id) + ".s" + std::to_string(sid) + "." +
                            std::to_string(k));
        rc.resistors.push_back({nodes.back(), n, r_total / segments_per_wire});
        nodes.push_back(n);
      }
      // pi split: each section puts half its capacitance on each end node
      double c_half = c_total / (2.0 * segments_per_wire);
      for (int k = 0; k <= segments_per_wire; ++k) {
        double c = c_half * ((k == 0 || k == segments_per_wire) ? 1.0 : 2.0);
        rc.c_ground[nodes[k]] += c;
      }
      tap.segment_nodes.emplace_back(nodes.front(), nodes.back());
      ladder_nodes[sid] = std::move(nodes);
      prev = tap.segment_nodes.back().second;
    }
    tap.sink_node = prev;
    rc.c_ground[tap.sink_node] += net.c_sink;

    RampStimulus stim;
    stim.t0 = at_out[ni];
    stim.transition = drv.s_in;
    stim.direction = drv.direction;
    stim.v_low = 0.0;
    stim.v_high = vdd;
    tap.source_index = int(rc.sources.size());
    rc.sources.push_back({head, drv.r_drive * 1000.0, stim});

    double c_total_net = design.ground_load(net);
    tap.rc_estimate = (drv.r_drive + r_wire_total / 1000.0) * c_total_net;
    bc.taps.push_back(std::move(tap));
  }

  for (const auto& p : pairs) {
    auto v_it = ladder_nodes.find(p.victim_segment_id);
    auto a_it = ladder_nodes.find(p.aggressor_segment_id);
    if (v_it == ladder_nodes.end() || a_it == ladder_nodes.end())
      throw std::invalid_argument("coupling pair references segment " +
                                  std::to_string(v_it == ladder_nodes.end()
                                                     ? p.victim_segment_id
                                                     : p.aggressor_segment_id) +
                                  " outside the given nets");
    const Segment& sv = design.segment(p.victim_segment_id);
    const Segment& sa = design.segment(p.aggressor_segment_id);
    const Layer& layer = design.layer(sv.layer_id);

    auto lo_hi = [](const Segment& s) {
      double a = s.is_horizontal() ? s.start.x : s.start.y;
      double b = s.is_horizontal() ? s.end.x : s.end.y;
      return std::pair<double, double>(std::min(a, b), std::max(a, b));
    };
    auto [vlo, vhi] = lo_hi(sv);
    auto [alo, ahi] = lo_hi(sa);
    double mid = (std::max(vlo, alo) + std::min(vhi, ahi)) / 2.0;

    auto nearest = [&](const Segment& s, const std::vector<int>& nodes) {
      double f = std::clamp(midpoint_fraction(s, mid), 0.0, 1.0);
      int k = int(std::lround(f * segments_per_wire));
      return nodes[std::size_t(k)];
    };
    double c_c = coupling_capacitance(p, layer);
    rc.couplers.push_back({nearest(sv, v_it->second), nearest(sa, a_it->second), c_c});
  }

  // fold attached coupling caps into each net's RC estimate
  {
    std::map<int, double> extra;  // net id -> summed C_c
    for (const auto& p : pairs) {
      const Segment& sv = design.segment(p.victim_segment_id);
      const Segment& sa = design.segment(p.aggressor_segment_id);
      double c_c = coupling_capacitance(p, design.layer(sv.layer_id));
      extra[sv.net_id] += c_c;
      extra[sa.net_id] += c_c;
    }
    for (auto& tap : bc.taps) {
      auto it = extra.find(tap.net_id);
      if (it == extra.end()) continue;
      const Driver& drv = design.driver_of(tap.net_id);
      double r_wire = 0.0;
      for (int sid : design.net(tap.net_id).segments) {
        const Segment& s = design.segment(sid);
        r_wire += design.layer(s.layer_id).r_sheet * s.length() / design.segment_width(s);
      }
      tap.rc_estimate += (drv.r_drive + r_wire / 1000.0) * it->second;
    }
  }

  return bc;
}

} // namespace xtalk
