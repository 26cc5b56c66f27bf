#include "xtalk/bench_gen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "xtalk/rng.hpp"

namespace xtalk {

using nlohmann::json;

DelayTable synth_delay_table(double r_drive_kohm, double slew_scale, double load_coeff,
                             double load_quad) {
  DelayTable t;
  t.slew_axis = {4.0, 8.0, 14.0, 22.0, 32.0, 46.0, 64.0};
  t.load_axis = {0.5, 3.0, 8.0, 16.0, 30.0, 55.0, 100.0, 180.0, 320.0};
  const double ln2 = std::log(2.0);
  for (double s : t.slew_axis) {
    std::vector<double> drow, srow;
    for (double c : t.load_axis) {
      drow.push_back(ln2 * r_drive_kohm * c + 0.12 * s);
      srow.push_back(slew_scale * std::hypot(s, load_coeff * r_drive_kohm * c + load_quad * c * c));
    }
    t.delay.push_back(std::move(drow));
    t.out_slew.push_back(std::move(srow));
  }
  return t;
}

namespace {

Layer make_layer(int id) {
  Layer l;
  l.id = id;
  l.direction = (id % 2 == 1) ? Direction::horizontal : Direction::vertical;
  l.m_w = 0.10 + 0.02 * (id - 1);
  l.m_t = 0.14 + 0.02 * (id - 1);
  l.m_h = 0.18 + 0.03 * (id - 1);
  l.m_eps0 = 3.9;
  l.r_sheet = 0.18 - 0.015 * ((id - 1) % 3);
  l.c_area = 0.20 + 0.025 * ((id - 1) % 3);
  l.c_coup_unit = 0.010 + 0.002 * ((id - 1) % 3);
  return l;
}

struct Builder {
  const GenConfig& cfg;
  Design d;
  Rng rng;
  int next_segment = 1;
  int next_net = 1;
  double cursor = 0.0;  // groups occupy disjoint diagonal blocks on all layers
  std::map<double, DelayTable> tables; // r_drive -> shared table

  Builder(const GenConfig& c) : cfg(c), rng(c.seed) {}

  const DelayTable& table_for(double r_drive) {
    auto it = tables.find(r_drive);
    if (it == tables.end())
      it = tables.emplace(r_drive, synth_delay_table(r_drive, cfg.slew_table_scale,
                                                     cfg.slew_table_load_coeff,
                                                     cfg.slew_table_load_quad)).first;
    return it->second;
  }

  double sample_arrival() {
    double at_max = cfg.at_max;
    if (at_max <= cfg.at_min) {
      // auto range: twice the slowest edge plus the largest RC estimate
      double max_rc = 0.0;
      for (double r : cfg.driver_strengths)
        max_rc = std::max(max_rc, r * (cfg.wire_len_max * 0.25 + cfg.c_sink_max));
      at_max = cfg.at_min + 2.0 * cfg.s_in_max + max_rc;
    }
    return rng.uniform(cfg.at_min, at_max);
  }

  // bundle mates clone the template's drive strength and input slew so their
  // windows track the same settle scale; cleared between groups
  double forced_r_drive = 0.0;
  double forced_s_in = 0.0;

  Driver make_driver(int net_id, double at_in) {
    Driver drv;
    drv.net_id = net_id;
    drv.r_drive = forced_r_drive > 0
                      ? forced_r_drive
                      : cfg.driver_strengths[rng.uniform_idx(cfg.driver_strengths.size())];
    drv.s_in = forced_s_in > 0 ? forced_s_in : rng.uniform(cfg.s_in_min, cfg.s_in_max);
    drv.direction = rng.bernoulli(0.5) ? Edge::rise : Edge::fall;
    drv.at_in = at_in;
    drv.delay_table = table_for(drv.r_drive);
    return drv;
  }

  // one net as a chain of axis-aligned segments starting at origin; returns id
  int add_route(int first_layer, Point origin, const std::vector<double>& seg_lengths,
                double at_in) {
    Net net;
    net.id = next_net++;
    net.name = "n" + std::to_string(net.id);
    net.c_sink = rng.uniform(cfg.c_sink_min, cfg.c_sink_max);

    Point at = origin;
    for (std::size_t k = 0; k < seg_lengths.size(); ++k) {
      int layer_id = ((first_layer - 1 + int(k)) % cfg.layer_count) + 1;
      bool horizontal = d.layers[layer_id - 1].direction == Direction::horizontal;
      Segment s;
      s.id = next_segment++;
      s.net_id = net.id;
      s.layer_id = layer_id;
      s.start = at;
      if (horizontal)
        at.x += seg_lengths[k];
      else
        at.y += seg_lengths[k];
      s.end = at;
      d.segments.push_back(s);
      net.segments.push_back(s.id);
    }
    d.drivers.push_back(make_driver(net.id, at_in));
    d.nets.push_back(std::move(net));
    return next_net - 1;
  }
};

} // namespace

Design generate(const GenConfig& cfg) {
  if (cfg.layer_count < 1) throw GenError("layer_count must be >= 1");
  if (cfg.net_count < 1) throw GenError("net_count must be >= 1");
  if (cfg.coupled_fraction < 0 || cfg.coupled_fraction > 1)
    throw GenError("coupled_fraction must be in [0, 1]");
  if (!(cfg.wire_len_min > 0) || cfg.wire_len_max < cfg.wire_len_min)
    throw GenError("wire length range is degenerate");
  if (!(cfg.spacing_min > 0) || cfg.spacing_max < cfg.spacing_min)
    throw GenError("spacing range is degenerate");
  if (cfg.max_segments_per_net > 1 && cfg.layer_count < 2)
    throw GenError("multi-segment routes need at least 2 layers");

  Builder b(cfg);
  b.d.name = cfg.name;
  b.d.seed = cfg.seed;
  b.d.origin = "bench_gen";
  for (int i = 1; i <= cfg.layer_count; ++i) b.d.layers.push_back(make_layer(i));

  int bundle_nets = int(std::lround(cfg.net_count * cfg.bundle_fraction));
  int placed = 0;
  bool first_bundle_spacing = true;
  const double track_gap = 12.0;  // um between groups; beyond any coupling window

  int group_layer = 1;
  while (placed < cfg.net_count) {
    bool in_bundle = placed < bundle_nets;
    int k = 1;
    if (in_bundle) {
      k = cfg.bundle_size_min +
          int(b.rng.uniform_idx(uint64_t(cfg.bundle_size_max - cfg.bundle_size_min + 1)));
      k = std::min(k, bundle_nets - placed);
      if (k < 2) k = 2;  // a lone bundle net cannot couple; widen the last bundle
      k = std::min(k, cfg.net_count - placed);
      if (k < 2) in_bundle = false, k = 1;
    }

    int seg_count = 1;
    if (cfg.max_segments_per_net > 1)
      seg_count = 1 + int(b.rng.uniform_idx(uint64_t(cfg.max_segments_per_net)));
    std::vector<double> lengths;
    for (int s = 0; s < seg_count; ++s)
      lengths.push_back(b.rng.uniform(cfg.wire_len_min, cfg.wire_len_max));

    int first_layer = group_layer;
    group_layer = (group_layer % cfg.layer_count) + 1;
    bool horizontal = b.d.layers[first_layer - 1].direction == Direction::horizontal;

    // each group owns a diagonal block: routes can wander on any layer and
    // axis without approaching another group's metal
    double base_par = b.rng.uniform(0.0, 40.0);
    Point origin = horizontal ? Point{b.cursor + base_par, b.cursor}
                              : Point{b.cursor, b.cursor + base_par};
    double route_span = base_par;
    for (double len : lengths) route_span += len;

    b.forced_r_drive = 0.0;
    b.forced_s_in = 0.0;
    if (!in_bundle) {
      b.add_route(first_layer, origin, lengths, b.sample_arrival());
      placed += 1;
      b.cursor += route_span + track_gap;
      continue;
    }

    // center-staggered copies of a template route: every wire shares the
    // template's axis center with its own length, so each coupling pair's
    // overlap midpoint sits at 50% of both wires (and on a ladder node)
    b.forced_r_drive = cfg.driver_strengths[b.rng.uniform_idx(cfg.driver_strengths.size())];
    b.forced_s_in = b.rng.uniform(cfg.s_in_min, cfg.s_in_max);
    double extent = 0.0;
    Point at = origin;
    double prev_at_out_est = 0.0;
    double prev_len = lengths.front();
    const bool single_segment = lengths.size() == 1;
    for (int j = 0; j < k; ++j) {
      double at_in = b.sample_arrival();
      bool aligned = false;
      double cc_est = 0.0;
      std::vector<double> my_lengths = lengths;
      if (j > 0 && single_segment)
        my_lengths.front() = lengths.front() * b.rng.uniform(cfg.overlap_min, cfg.overlap_max);
      if (j > 0) {
        double spacing = first_bundle_spacing ? cfg.spacing_min
                                              : b.rng.uniform(cfg.spacing_min, cfg.spacing_max);
        first_bundle_spacing = false;
        const Layer& layer = b.d.layers[std::size_t(first_layer - 1)];
        double l_si = std::min(prev_len, my_lengths.front());
        // keep each coupling cap well under the wire's ground capacitance so
        // aligned aggressor bumps stay inside the rail envelope
        double cc_cap = 0.30 * layer.c_area * my_lengths.front();
        if (layer.c_coup_unit * l_si / spacing > cc_cap)
          spacing = layer.c_coup_unit * l_si / cc_cap;
        cc_est = layer.c_coup_unit * l_si / spacing;
        if (single_segment) {
          double pitch = spacing + layer.m_w;
          at = horizontal ? Point{at.x, at.y + pitch} : Point{at.x + pitch, at.y};
          extent += pitch;
        } else {
          // stair-stepped clones move on both axes so every matched segment
          // keeps a positive edge-to-edge spacing on its own layer
          double w_h = 0.0, w_v = 0.0;
          for (std::size_t k = 0; k < my_lengths.size(); ++k) {
            int lid = ((first_layer - 1 + int(k)) % cfg.layer_count) + 1;
            const Layer& lk = b.d.layers[std::size_t(lid - 1)];
            if (lk.direction == Direction::horizontal)
              w_h = std::max(w_h, lk.m_w);
            else
              w_v = std::max(w_v, lk.m_w);
          }
          at = Point{at.x + spacing + w_v, at.y + spacing + w_h};
          extent += spacing + std::max(w_h, w_v);
        }
        // a slice of bundle mates switches nearly together; window overlap is
        // decisive for them instead of accidental
        aligned = b.rng.bernoulli(cfg.aligned_fraction);
      }
      Point start = at;
      if (single_segment) {
        double center = horizontal ? origin.x + lengths.front() / 2.0
                                   : origin.y + lengths.front() / 2.0;
        if (horizontal)
          start.x = center - my_lengths.front() / 2.0;
        else
          start.y = center - my_lengths.front() / 2.0;
      }
      int net_id = b.add_route(first_layer, start, my_lengths, at_in);
      Driver& drv = b.d.drivers.back();
      const Net& net = b.d.nets.back();
      double load_est = b.d.ground_load(net) + cc_est;
      double d_drv = drv.delay_table.lookup(drv.s_in, load_est).delay;
      if (aligned) {
        // track the previous mate at the driver output, not the input
        double target_out = prev_at_out_est + b.rng.uniform(-cfg.aligned_offset, cfg.aligned_offset);
        drv.at_in = std::max(cfg.at_min, target_out - d_drv);
      }
      prev_at_out_est = drv.at_in + d_drv;
      prev_len = my_lengths.front();
      (void)net_id;
    }
    placed += k;
    b.cursor += route_span + extent + track_gap;
  }

  std::vector<std::string> violations = validate(b.d);
  if (!violations.empty()) throw ValidationError(std::move(violations));

  if (cfg.coupled_fraction > 0) {
    double w_max = default_w_max(b.d);
    std::vector<CouplingPair> pairs = extract_coupling_pairs(b.d, w_max);
    std::set<int> coupled;
    for (const auto& p : pairs) {
      coupled.insert(p.victim_segment_id);
      coupled.insert(p.aggressor_segment_id);
    }
    double measured = double(coupled.size()) / double(b.d.segments.size());
    if (std::abs(measured - cfg.coupled_fraction) > 0.1 * cfg.coupled_fraction)
      throw GenError("achieved coupled fraction " + std::to_string(measured) +
                     " misses target " + std::to_string(cfg.coupled_fraction) +
                     "; check bundle_fraction, spacing range vs the derived w_max (" +
                     std::to_string(w_max) + " um), and overlap range");
  }
  return b.d;
}

std::vector<Design> generate_suite(const GenConfig& base, int count, uint64_t seed,
                                   double train_fraction, SuiteManifest& manifest) {
  if (count < 1) throw GenError("suite count must be >= 1");
  manifest.master_seed = seed;
  manifest.entries.clear();
  std::vector<Design> designs;
  int train_count = int(std::lround(train_fraction * count));
  for (int i = 0; i < count; ++i) {
    GenConfig cfg = base;
    cfg.seed = derive_seed(seed, "design", uint64_t(i));
    cfg.name = base.name + "_" + std::to_string(i);
    Design d = generate(cfg);

    SuiteEntry e;
    e.design_name = d.name;
    e.seed = cfg.seed;
    e.net_count = int(d.nets.size());
    e.segment_count = int(d.segments.size());
    std::vector<CouplingPair> pairs = extract_coupling_pairs(d, default_w_max(d));
    e.pair_count = int(pairs.size());
    std::set<int> coupled;
    for (const auto& p : pairs) {
      coupled.insert(p.victim_segment_id);
      coupled.insert(p.aggressor_segment_id);
    }
    e.coupled_fraction = d.segments.empty() ? 0.0 : double(coupled.size()) / double(d.segments.size());
    e.train = i < train_count;
    manifest.entries.push_back(e);
    designs.push_back(std::move(d));
  }
  return designs;
}

std::string manifest_to_json(const SuiteManifest& m) {
  json root;
  root["master_seed"] = m.master_seed;
  json entries = json::array();
  for (const auto& e : m.entries)
    entries.push_back(json{{"design_name", e.design_name},
                           {"seed", e.seed},
                           {"net_count", e.net_count},
                           {"segment_count", e.segment_count},
                           {"pair_count", e.pair_count},
                           {"coupled_fraction", e.coupled_fraction},
                           {"train", e.train}});
  root["entries"] = std::move(entries);
  return root.dump(2) + "\n";
}

} // namespace xtalk
