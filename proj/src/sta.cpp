#include "xtalk/sta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "xtalk/timing_window.hpp"

namespace xtalk {

using nlohmann::json;

double net_delay(const std::vector<double>& taus_nosi,
                 const std::vector<std::pair<int, double>>& deltas) {
  double sum = 0.0;
  for (double t : taus_nosi) sum += t;
  for (const auto& [idx, delta] : deltas) {
    if (idx < 0 || std::size_t(idx) >= taus_nosi.size())
      throw std::invalid_argument("delta index " + std::to_string(idx) +
                                  " outside the net's segment list");
    sum += delta;
  }
  return sum;
}

PathDelay path_delay(const std::vector<StageDelay>& stages) {
  if (stages.empty()) throw std::invalid_argument("path needs at least one stage");
  PathDelay p;
  for (const auto& s : stages) {
    p.net_ids.push_back(s.net_id);
    p.d_path += s.d_stage;
  }
  return p;
}

double compute_ddr(double delta_total, double d_stage) {
  if (!(d_stage > 0)) throw std::invalid_argument("stage delay must be > 0 for DDR");
  return delta_total / d_stage;
}

CrosstalkReport build_report(const Design& design, const TwoStepModel& model,
                             const std::vector<CouplingPair>* pairs_override,
                             const OracleResults* oracle,
                             const std::vector<std::vector<int>>* paths) {
  CrosstalkReport rep;
  rep.design = design.name;
  rep.note = "loading reflects the full design; the pair list gates only the crosstalk analysis";

  double w_max = default_w_max(design);
  std::vector<CouplingPair> full_pairs = extract_coupling_pairs(design, w_max);
  const std::vector<CouplingPair>& analysis = pairs_override ? *pairs_override : full_pairs;

  // features always extracted against the full pair list (stable loads)
  std::vector<Sample> seg_samples = extract_features(design, full_pairs, w_max);
  std::vector<Sample> pair_samples = extract_pair_samples(design, full_pairs, w_max);

  std::set<std::pair<int, int>> allowed;
  for (const auto& p : analysis) {
    allowed.insert({p.victim_segment_id, p.aggressor_segment_id});
    allowed.insert({p.aggressor_segment_id, p.victim_segment_id});
  }
  std::vector<Sample> gated;
  for (const auto& s : pair_samples)
    if (allowed.count({s.segment_id, s.aggressor_segment_id})) gated.push_back(s);

  std::map<int, std::vector<Sample>> segs_by_net, pairs_by_net;
  for (const auto& s : seg_samples) segs_by_net[s.net_id].push_back(s);
  for (const auto& s : gated) pairs_by_net[s.net_id].push_back(s);

  double ratio_sum = 0.0;
  long ratio_count = 0;
  double add_sum = 0.0, add_max = 0.0;
  long add_count = 0;

  for (const auto& net : design.nets) {
    auto segs = segs_by_net.find(net.id);
    static const std::vector<Sample> kNone;
    const std::vector<Sample>& ps =
        pairs_by_net.count(net.id) ? pairs_by_net.at(net.id) : kNone;
    StagePrediction sp = predict_stage(design, net.id, segs == segs_by_net.end() ? kNone : segs->second,
                                       ps, model);

    StageDelay stage;
    stage.net_id = net.id;
    stage.d_driver = sp.d_driver;
    stage.d_net = sp.d_net;
    stage.delta_total = sp.delta_total;
    stage.d_stage = sp.d_stage;
    stage.ddr = stage.d_stage > 0 ? stage.delta_total / stage.d_stage : 0.0;
    std::map<int, double> tsi_by_seg;
    for (const auto& row : sp.pairs)
      if (row.tsi) tsi_by_seg[row.victim_segment_id] += row.delta;
    for (std::size_t k = 0; k < net.segments.size(); ++k) {
      SegmentDelayRow r;
      r.segment_id = net.segments[k];
      r.tau_nosi = k < sp.tau_nosi.size() ? sp.tau_nosi[k] : 0.0;
      auto it = tsi_by_seg.find(r.segment_id);
      r.tau_si = it != tsi_by_seg.end() ? it->second : 0.0;
      stage.segments.push_back(r);
    }

    for (const auto& row : sp.pairs) {
      PairReportRow pr;
      pr.victim_segment_id = row.victim_segment_id;
      pr.aggressor_segment_id = row.aggressor_segment_id;
      pr.victim_net_id = net.id;
      for (const auto& s : ps)
        if (s.segment_id == row.victim_segment_id && s.aggressor_segment_id == row.aggressor_segment_id) {
          pr.l_si = s.features.l_si;
          pr.w_si = s.features.w_si;
          pr.dskew = s.features.dskew;
          break;
        }
      pr.vote = row.vote;
      pr.tsi = row.tsi;
      pr.delta = row.delta;
      rep.pairs.push_back(pr);
      if (row.tsi)
        ++rep.tsi_count;
      else
        ++rep.fsi_count;
    }

    if (stage.delta_total < 0) rep.has_negative_delta = true;
    if (std::abs(stage.ddr) > std::abs(rep.worst_ddr)) {
      rep.worst_ddr = stage.ddr;
      rep.worst_ddr_net = net.id;
    }

    if (oracle) {
      const NetOracle& g = oracle->net(net.id);
      double golden_stage = g.d_driver + g.d_si_all;
      rep.golden_stage.push_back(golden_stage);
      if (golden_stage > 1.0) {
        ratio_sum += stage.d_stage / golden_stage;
        ++ratio_count;
      }
      // additivity of per-pair deltas vs the joint multi-aggressor run
      double pair_sum = 0.0;
      for (const auto& po : oracle->pairs)
        if (po.victim_net_id == net.id) pair_sum += po.delta;
      double err = std::abs(pair_sum - g.delta_all);
      add_sum += err;
      add_max = std::max(add_max, err);
      ++add_count;
    }
    rep.stages.push_back(std::move(stage));
  }

  if (oracle) {
    rep.has_golden = true;
    rep.accuracy_ratio = ratio_count ? ratio_sum / double(ratio_count) : 0.0;
    rep.additivity_err_mean = add_count ? add_sum / double(add_count) : 0.0;
    rep.additivity_err_max = add_max;
  }

  if (paths) {
    for (const auto& net_ids : *paths) {
      std::vector<StageDelay> chain;
      for (int id : net_ids) {
        auto it = std::find_if(rep.stages.begin(), rep.stages.end(),
                               [id](const StageDelay& s) { return s.net_id == id; });
        if (it == rep.stages.end())
          throw std::invalid_argument("path references unknown net " + std::to_string(id));
        chain.push_back(*it);
      }
      rep.paths.push_back(path_delay(chain));
    }
  }
  return rep;
}

std::string report_to_json(const CrosstalkReport& r) {
  json root;
  root["design"] = r.design;
  root["note"] = r.note;
  json stages = json::array();
  for (std::size_t i = 0; i < r.stages.size(); ++i) {
    const auto& s = r.stages[i];
    json segs = json::array();
    for (const auto& seg : s.segments)
      segs.push_back(json{{"segment_id", seg.segment_id},
                          {"tau_nosi", seg.tau_nosi},
                          {"tau_si", seg.tau_si}});
    json js{{"net_id", s.net_id},        {"d_driver", s.d_driver}, {"d_net", s.d_net},
            {"delta_total", s.delta_total}, {"d_stage", s.d_stage},   {"ddr", s.ddr},
            {"segments", std::move(segs)}};
    if (r.has_golden) js["golden_stage"] = r.golden_stage[i];
    stages.push_back(std::move(js));
  }
  root["stages"] = std::move(stages);
  json prs = json::array();
  for (const auto& p : r.pairs)
    prs.push_back(json{{"victim_segment_id", p.victim_segment_id},
                       {"aggressor_segment_id", p.aggressor_segment_id},
                       {"victim_net_id", p.victim_net_id},
                       {"l_si", p.l_si},
                       {"w_si", p.w_si},
                       {"dskew", p.dskew},
                       {"vote", p.vote},
                       {"classification", p.tsi ? "TSI" : "FSI"},
                       {"delta", p.delta}});
  root["pairs"] = std::move(prs);
  root["totals"] = json{{"tsi_count", r.tsi_count},
                        {"fsi_count", r.fsi_count},
                        {"worst_ddr_net", r.worst_ddr_net},
                        {"worst_ddr", r.worst_ddr},
                        {"has_negative_delta", r.has_negative_delta}};
  if (r.has_golden)
    root["golden"] = json{{"accuracy_ratio", r.accuracy_ratio},
                          {"additivity_err_mean", r.additivity_err_mean},
                          {"additivity_err_max", r.additivity_err_max}};
  if (!r.paths.empty()) {
    json paths = json::array();
    for (const auto& p : r.paths) paths.push_back(json{{"net_ids", p.net_ids}, {"d_path", p.d_path}});
    root["paths"] = std::move(paths);
  }
  return root.dump(2) + "\n";
}

std::string report_table(const CrosstalkReport& r) {
  std::string out;
  char buf[256];
  out += "design: " + r.design + "\n";
  out += r.note + "\n";
  std::snprintf(buf, sizeof buf, "%-8s %10s %10s %12s %10s %8s%s\n", "net", "d_driver", "d_net",
                "delta_total", "d_stage", "ddr", r.has_golden ? "     golden" : "");
  out += buf;
  for (std::size_t i = 0; i < r.stages.size(); ++i) {
    const auto& s = r.stages[i];
    std::snprintf(buf, sizeof buf, "%-8d %10.3f %10.3f %12.3f %10.3f %7.2f%%", s.net_id, s.d_driver,
                  s.d_net, s.delta_total, s.d_stage, 100.0 * s.ddr);
    out += buf;
    if (r.has_golden) {
      std::snprintf(buf, sizeof buf, " %10.3f", r.golden_stage[i]);
      out += buf;
    }
    out += "\n";
  }
  std::snprintf(buf, sizeof buf, "pairs: %ld TSI / %ld FSI; worst DDR %.2f%% on net %d\n",
                r.tsi_count, r.fsi_count, 100.0 * r.worst_ddr, r.worst_ddr_net);
  out += buf;
  if (r.has_negative_delta) out += "note: negative delta (speedup) present on some nets\n";
  if (r.has_golden) {
    std::snprintf(buf, sizeof buf,
                  "golden: accuracy ratio %.4f; additivity error mean %.4f ps, max %.4f ps\n",
                  r.accuracy_ratio, r.additivity_err_mean, r.additivity_err_max);
    out += buf;
  }
  for (const auto& p : r.paths) {
    out += "path:";
    for (int id : p.net_ids) out += " " + std::to_string(id);
    std::snprintf(buf, sizeof buf, " -> %.3f ps\n", p.d_path);
    out += buf;
  }
  return out;
}

} // namespace xtalk
