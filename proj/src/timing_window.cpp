#include "xtalk/timing_window.hpp"

#include <iostream>

#include <json.hpp>

#include "xtalk/oracle.hpp"

namespace xtalk {

using nlohmann::json;

DriverPoint driver_point(const Design& design, const Net& net, double extra_cap) {
  const Driver& drv = design.driver_of(net.id);
  double load = design.ground_load(net) + extra_cap;
  DelayTable::Lookup lk = drv.delay_table.lookup(drv.s_in, load);
  DriverPoint p;
  p.d_driver = lk.delay;
  p.s_out = lk.out_slew;
  p.at_out = drv.at_in + lk.delay;
  p.clamped = lk.clamped;
  return p;
}

TimingWindow window_of(const Net& net, const Design& design, double extra_cap) {
  DriverPoint p = driver_point(design, net, extra_cap);
  return {p.at_out, p.at_out + p.s_out};
}

SIClass classify_pair(const TimingWindow& victim, const TimingWindow& aggressor, double guard) {
  if (guard < 0) throw std::invalid_argument("guard must be >= 0");
  bool overlap = victim.early - guard <= aggressor.late && aggressor.early <= victim.late + guard;
  return overlap ? SIClass::TSI : SIClass::FSI;
}

std::vector<PairLabel> label_dataset(const Design& design, const std::vector<CouplingPair>& pairs,
                                     const OracleResults& oracle, double threshold) {
  (void)design;
  if (threshold == 0.0)
    std::cerr << "warning: label threshold 0 marks every pair with any nonzero delta as TSI\n";
  if (oracle.pairs.size() != 2 * pairs.size())
    throw std::invalid_argument("oracle results do not cover the pair list (" +
                                std::to_string(oracle.pairs.size()) + " directed entries for " +
                                std::to_string(pairs.size()) + " pairs)");
  std::vector<PairLabel> out;
  out.reserve(oracle.pairs.size());
  for (const auto& po : oracle.pairs) {
    PairLabel l;
    l.pair.victim_segment_id = po.victim_segment_id;
    l.pair.aggressor_segment_id = po.aggressor_segment_id;
    l.pair.l_si = po.l_si;
    l.pair.w_si = po.w_si;
    l.victim_net_id = po.victim_net_id;
    l.aggressor_net_id = po.aggressor_net_id;
    l.dskew = po.dskew;
    l.oracle_delta = po.delta;
    l.classification = std::abs(po.delta) > threshold ? SIClass::TSI : SIClass::FSI;
    out.push_back(l);
  }
  return out;
}

std::string labels_to_json(const std::vector<PairLabel>& labels) {
  json arr = json::array();
  for (const auto& l : labels) {
    arr.push_back(json{{"victim_segment_id", l.pair.victim_segment_id},
                       {"aggressor_segment_id", l.pair.aggressor_segment_id},
                       {"victim_net_id", l.victim_net_id},
                       {"aggressor_net_id", l.aggressor_net_id},
                       {"l_si", l.pair.l_si},
                       {"w_si", l.pair.w_si},
                       {"dskew", l.dskew},
                       {"classification", to_string(l.classification)},
                       {"oracle_delta", l.oracle_delta}});
  }
  return arr.dump(2) + "\n";
}

std::vector<PairLabel> labels_from_json(const std::string& text) {
  json arr = json::parse(text);
  std::vector<PairLabel> out;
  for (const auto& j : arr) {
    PairLabel l;
    l.pair.victim_segment_id = j.at("victim_segment_id").get<int>();
    l.pair.aggressor_segment_id = j.at("aggressor_segment_id").get<int>();
    l.pair.l_si = j.at("l_si").get<double>();
    l.pair.w_si = j.at("w_si").get<double>();
    l.victim_net_id = j.at("victim_net_id").get<int>();
    l.aggressor_net_id = j.at("aggressor_net_id").get<int>();
    l.dskew = j.at("dskew").get<double>();
    l.oracle_delta = j.at("oracle_delta").get<double>();
    std::string c = j.at("classification").get<std::string>();
    if (c != "TSI" && c != "FSI") throw ParseError("classification must be TSI or FSI");
    l.classification = c == "TSI" ? SIClass::TSI : SIClass::FSI;
    out.push_back(l);
  }
  return out;
}

} // namespace xtalk
