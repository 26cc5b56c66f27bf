#include "xtalk/layout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace xtalk {

// nlohmann::json keeps object keys sorted, so serialized designs are byte-stable.
using nlohmann::json;

DelayTable::Lookup DelayTable::lookup(double s_in, double c_load) const {
  Lookup out;
  auto clamp_axis = [&out](const std::vector<double>& axis, double v) {
    if (v < axis.front()) {
      out.clamped = true;
      return axis.front();
    }
    if (v > axis.back()) {
      out.clamped = true;
      return axis.back();
    }
    return v;
  };
  double s = clamp_axis(slew_axis, s_in);
  double c = clamp_axis(load_axis, c_load);

  auto cell = [](const std::vector<double>& axis, double v) {
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t hi = std::min<std::size_t>(axis.size() - 1, it - axis.begin());
    std::size_t lo = hi ? hi - 1 : 0;
    double t = (axis[hi] == axis[lo]) ? 0.0 : (v - axis[lo]) / (axis[hi] - axis[lo]);
    return std::pair<std::size_t, double>(lo, t);
  };
  auto [i, u] = cell(slew_axis, s);
  auto [j, v] = cell(load_axis, c);
  std::size_t i1 = std::min(i + 1, slew_axis.size() - 1);
  std::size_t j1 = std::min(j + 1, load_axis.size() - 1);

  auto bilinear = [&](const std::vector<std::vector<double>>& g) {
    double a = g[i][j] * (1 - u) + g[i1][j] * u;
    double b = g[i][j1] * (1 - u) + g[i1][j1] * u;
    return a * (1 - v) + b * v;
  };
  out.delay = bilinear(delay);
  out.out_slew = bilinear(out_slew);
  return out;
}

ValidationError::ValidationError(std::vector<std::string> v)
    : std::runtime_error(v.empty() ? "invalid design"
                                   : "invalid design: " + v.front() +
                                         (v.size() > 1 ? " (+" + std::to_string(v.size() - 1) + " more)" : "")),
      violations(std::move(v)) {}

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, int id) {
  for (const auto& it : items)
    if (it.id == id) return &it;
  return nullptr;
}

} // namespace

const Layer& Design::layer(int id) const {
  if (const Layer* l = find_by_id(layers, id)) return *l;
  throw std::out_of_range("no layer with id " + std::to_string(id));
}

const Net& Design::net(int id) const {
  if (const Net* n = find_by_id(nets, id)) return *n;
  throw std::out_of_range("no net with id " + std::to_string(id));
}

const Segment& Design::segment(int id) const {
  if (const Segment* s = find_by_id(segments, id)) return *s;
  throw std::out_of_range("no segment with id " + std::to_string(id));
}

const Driver& Design::driver_of(int net_id) const {
  for (const auto& d : drivers)
    if (d.net_id == net_id) return d;
  throw std::out_of_range("no driver for net " + std::to_string(net_id));
}

double Design::segment_width(const Segment& s) const {
  return s.width ? *s.width : layer(s.layer_id).m_w;
}

double Design::ground_load(const Net& n) const {
  double c = n.c_sink;
  for (int sid : n.segments) {
    const Segment& s = segment(sid);
    c += layer(s.layer_id).c_area * s.length();
  }
  return c;
}

std::vector<std::string> validate(const Design& d) {
  std::vector<std::string> out;
  auto fail = [&out](std::string msg) { out.push_back(std::move(msg)); };

  // layers: ids unique and contiguous from 1, parameters positive
  {
    std::vector<int> ids;
    for (const auto& l : d.layers) ids.push_back(l.id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != int(i) + 1) {
        fail("layer ids must be unique and contiguous from 1");
        break;
      }
    }
    for (const auto& l : d.layers) {
      std::string p = "layer " + std::to_string(l.id) + ": ";
      if (l.m_w <= 0) fail(p + "M_W must be > 0");
      if (l.m_t <= 0) fail(p + "M_T must be > 0");
      if (l.m_h <= 0) fail(p + "M_H must be > 0");
      if (l.m_eps0 < 1) fail(p + "M_eps0 must be >= 1");
      if (l.r_sheet <= 0) fail(p + "r_sheet must be > 0");
      if (l.c_area <= 0) fail(p + "c_area must be > 0");
      if (l.c_coup_unit <= 0) fail(p + "c_coup_unit must be > 0");
    }
  }

  // segments: axis-aligned, positive length, resolvable references
  for (const auto& s : d.segments) {
    std::string p = "segment " + std::to_string(s.id) + ": ";
    bool dx = s.start.x != s.end.x, dy = s.start.y != s.end.y;
    if (dx == dy) fail(p + "must be strictly horizontal or vertical with length > 0");
    if (!find_by_id(d.layers, s.layer_id))
      fail(p + "references missing layer " + std::to_string(s.layer_id));
    if (!find_by_id(d.nets, s.net_id))
      fail(p + "references missing net " + std::to_string(s.net_id));
    if (s.width && *s.width <= 0) fail(p + "width override must be > 0");
  }

  // nets: connected chain, sink cap, exactly one driver
  for (const auto& n : d.nets) {
    std::string p = "net " + std::to_string(n.id) + ": ";
    if (n.segments.empty()) fail(p + "has no segments");
    if (n.c_sink < 0) fail(p + "c_sink must be >= 0");
    const Segment* prev = nullptr;
    for (int sid : n.segments) {
      const Segment* s = find_by_id(d.segments, sid);
      if (!s) {
        fail(p + "references missing segment " + std::to_string(sid));
        continue;
      }
      if (s->net_id != n.id)
        fail(p + "segment " + std::to_string(sid) + " belongs to net " + std::to_string(s->net_id));
      if (prev && (prev->end.x != s->start.x || prev->end.y != s->start.y))
        fail(p + "segment " + std::to_string(sid) + " does not start at the previous segment's end");
      prev = s;
    }
    int driver_count = 0;
    for (const auto& dr : d.drivers)
      if (dr.net_id == n.id) ++driver_count;
    if (driver_count != 1)
      fail(p + "expected exactly one driver, found " + std::to_string(driver_count));
  }

  // drivers: table axes increasing, entries positive
  for (const auto& dr : d.drivers) {
    std::string p = "driver of net " + std::to_string(dr.net_id) + ": ";
    if (!find_by_id(d.nets, dr.net_id)) fail(p + "references missing net");
    if (dr.r_drive <= 0) fail(p + "r_drive must be > 0");
    if (dr.s_in <= 0) fail(p + "s_in must be > 0");
    const DelayTable& t = dr.delay_table;
    auto increasing = [](const std::vector<double>& a) {
      for (std::size_t i = 1; i < a.size(); ++i)
        if (a[i] <= a[i - 1]) return false;
      return !a.empty();
    };
    if (!increasing(t.slew_axis)) fail(p + "delay_table slew axis must be strictly increasing");
    if (!increasing(t.load_axis)) fail(p + "delay_table load axis must be strictly increasing");
    auto grid_ok = [&](const std::vector<std::vector<double>>& g) {
      if (g.size() != t.slew_axis.size()) return false;
      for (const auto& row : g) {
        if (row.size() != t.load_axis.size()) return false;
        for (double v : row)
          if (!(v > 0)) return false;
      }
      return true;
    };
    if (!grid_ok(t.delay)) fail(p + "delay grid must match axes with positive entries");
    if (!grid_ok(t.out_slew)) fail(p + "out_slew grid must match axes with positive entries");
  }

  return out;
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ParseError("unknown key '" + it.key() + "' in " + where);
  }
}

json table_to_json(const DelayTable& t) {
  return json{{"slew_axis", t.slew_axis},
              {"load_axis", t.load_axis},
              {"delay", t.delay},
              {"out_slew", t.out_slew}};
}

DelayTable table_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"slew_axis", "load_axis", "delay", "out_slew"}, where);
  DelayTable t;
  t.slew_axis = j.at("slew_axis").get<std::vector<double>>();
  t.load_axis = j.at("load_axis").get<std::vector<double>>();
  t.delay = j.at("delay").get<std::vector<std::vector<double>>>();
  t.out_slew = j.at("out_slew").get<std::vector<std::vector<double>>>();
  return t;
}

} // namespace

std::string design_to_json(const Design& d) {
  json root;
  json layers = json::array();
  for (const auto& l : d.layers) {
    layers.push_back(json{{"id", l.id},
                           {"direction", l.direction == Direction::horizontal ? "horizontal" : "vertical"},
                           {"M_W", l.m_w},
                           {"M_T", l.m_t},
                           {"M_H", l.m_h},
                           {"M_eps0", l.m_eps0},
                           {"r_sheet", l.r_sheet},
                           {"c_area", l.c_area},
                           {"c_coup_unit", l.c_coup_unit}});
  }
  json segments = json::array();
  for (const auto& s : d.segments) {
    json js{{"id", s.id},
             {"net_id", s.net_id},
             {"layer_id", s.layer_id},
             {"start", {s.start.x, s.start.y}},
             {"end", {s.end.x, s.end.y}}};
    if (s.width) js["width"] = *s.width;
    segments.push_back(std::move(js));
  }
  json nets = json::array();
  for (const auto& n : d.nets) {
    nets.push_back(json{{"id", n.id}, {"name", n.name}, {"segments", n.segments}, {"c_sink", n.c_sink}});
  }
  json drivers = json::array();
  for (const auto& dr : d.drivers) {
    json tbl = table_to_json(dr.delay_table);
    drivers.push_back(json{{"net_id", dr.net_id},
                            {"r_drive", dr.r_drive},
                            {"s_in", dr.s_in},
                            {"direction", dr.direction == Edge::rise ? "rise" : "fall"},
                            {"at_in", dr.at_in},
                            {"delay_table", std::move(tbl)}});
  }
  root["layers"] = std::move(layers);
  root["segments"] = std::move(segments);
  root["nets"] = std::move(nets);
  root["drivers"] = std::move(drivers);
  root["meta"] = json{{"name", d.name}, {"seed", d.seed}, {"origin", d.origin}};
  return root.dump(2) + "\n";
}

Design design_from_json(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line for a useful message
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError("JSON parse error near line " + std::to_string(line) + ": " + e.what());
  }

  Design d;
  d.origin = origin;
  try {
    reject_unknown_keys(root, {"layers", "segments", "nets", "drivers", "meta"}, "design");
    for (const auto& j : root.at("layers")) {
      reject_unknown_keys(j, {"id", "direction", "M_W", "M_T", "M_H", "M_eps0", "r_sheet", "c_area", "c_coup_unit"},
                          "layers[]");
      Layer l;
      l.id = j.at("id").get<int>();
      std::string dir = j.at("direction").get<std::string>();
      if (dir != "horizontal" && dir != "vertical")
        throw ParseError("layers[].direction must be 'horizontal' or 'vertical', got '" + dir + "'");
      l.direction = dir == "horizontal" ? Direction::horizontal : Direction::vertical;
      l.m_w = j.at("M_W").get<double>();
      l.m_t = j.at("M_T").get<double>();
      l.m_h = j.at("M_H").get<double>();
      l.m_eps0 = j.at("M_eps0").get<double>();
      l.r_sheet = j.at("r_sheet").get<double>();
      l.c_area = j.at("c_area").get<double>();
      l.c_coup_unit = j.at("c_coup_unit").get<double>();
      d.layers.push_back(l);
    }
    for (const auto& j : root.at("segments")) {
      reject_unknown_keys(j, {"id", "net_id", "layer_id", "start", "end", "width"}, "segments[]");
      Segment s;
      s.id = j.at("id").get<int>();
      s.net_id = j.at("net_id").get<int>();
      s.layer_id = j.at("layer_id").get<int>();
      auto pt = [](const json& a, const char* what) {
        if (!a.is_array() || a.size() != 2)
          throw ParseError(std::string("segments[].") + what + " must be [x, y]");
        return Point{a[0].get<double>(), a[1].get<double>()};
      };
      s.start = pt(j.at("start"), "start");
      s.end = pt(j.at("end"), "end");
      if (j.contains("width")) s.width = j.at("width").get<double>();
      d.segments.push_back(s);
    }
    for (const auto& j : root.at("nets")) {
      reject_unknown_keys(j, {"id", "name", "segments", "c_sink"}, "nets[]");
      Net n;
      n.id = j.at("id").get<int>();
      n.name = j.at("name").get<std::string>();
      n.segments = j.at("segments").get<std::vector<int>>();
      n.c_sink = j.at("c_sink").get<double>();
      d.nets.push_back(std::move(n));
    }
    for (const auto& j : root.at("drivers")) {
      reject_unknown_keys(j, {"net_id", "r_drive", "s_in", "direction", "at_in", "delay_table"}, "drivers[]");
      Driver dr;
      dr.net_id = j.at("net_id").get<int>();
      dr.r_drive = j.at("r_drive").get<double>();
      dr.s_in = j.at("s_in").get<double>();
      std::string dir = j.at("direction").get<std::string>();
      if (dir != "rise" && dir != "fall")
        throw ParseError("drivers[].direction must be 'rise' or 'fall', got '" + dir + "'");
      dr.direction = dir == "rise" ? Edge::rise : Edge::fall;
      dr.at_in = j.at("at_in").get<double>();
      dr.delay_table = table_from_json(j.at("delay_table"), "drivers[].delay_table");
      d.drivers.push_back(std::move(dr));
    }
    const json& meta = root.at("meta");
    reject_unknown_keys(meta, {"name", "seed", "origin"}, "meta");
    d.name = meta.value("name", "");
    d.seed = meta.value("seed", uint64_t(0));
    if (meta.contains("origin")) d.origin = meta.at("origin").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("design schema error: ") + e.what());
  }

  std::vector<std::string> violations = validate(d);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return d;
}

Design load_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open design file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return design_from_json(ss.str(), path);
}

void save_design(const Design& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write design file: " + path);
  out << design_to_json(d);
}

namespace {

struct Run {
  int id;
  int net_id;
  double pos;    // center coordinate on the perpendicular axis
  double width;
  double lo, hi; // span on the parallel axis
};

void collect_runs(const Design& d, int layer_id, bool horizontal, std::vector<Run>& out) {
  out.clear();
  for (const auto& s : d.segments) {
    if (s.layer_id != layer_id || s.is_horizontal() != horizontal) continue;
    Run r;
    r.id = s.id;
    r.net_id = s.net_id;
    r.width = d.segment_width(s);
    if (horizontal) {
      r.pos = s.start.y;
      r.lo = std::min(s.start.x, s.end.x);
      r.hi = std::max(s.start.x, s.end.x);
    } else {
      r.pos = s.start.x;
      r.lo = std::min(s.start.y, s.end.y);
      r.hi = std::max(s.start.y, s.end.y);
    }
    out.push_back(r);
  }
}

void try_pair(const Run& a, const Run& b, double w_max, std::vector<CouplingPair>& out) {
  if (a.net_id == b.net_id) return;
  double overlap = std::min(a.hi, b.hi) - std::max(a.lo, b.lo);
  if (overlap <= 0) return;
  double spacing = std::abs(a.pos - b.pos) - (a.width + b.width) / 2.0;
  if (spacing <= 0 || spacing > w_max) return;
  CouplingPair p;
  p.victim_segment_id = std::min(a.id, b.id);
  p.aggressor_segment_id = std::max(a.id, b.id);
  p.l_si = overlap;
  p.w_si = spacing;
  out.push_back(p);
}

void sort_pairs(std::vector<CouplingPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const CouplingPair& a, const CouplingPair& b) {
    if (a.victim_segment_id != b.victim_segment_id) return a.victim_segment_id < b.victim_segment_id;
    return a.aggressor_segment_id < b.aggressor_segment_id;
  });
}

} // namespace

std::vector<CouplingPair> extract_coupling_pairs(const Design& d, double w_max) {
  if (!(w_max > 0)) throw std::invalid_argument("w_max must be > 0");
  std::vector<CouplingPair> pairs;
  std::vector<Run> runs;
  for (const auto& layer : d.layers) {
    double max_width = layer.m_w;
    for (const auto& s : d.segments)
      if (s.layer_id == layer.id && s.width) max_width = std::max(max_width, *s.width);
    for (bool horizontal : {true, false}) {
      collect_runs(d, layer.id, horizontal, runs);
      std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.pos < b.pos; });
      // sweep over the perpendicular coordinate: only runs within the spacing
      // band can pair, so a sliding window suffices
      std::size_t lo = 0;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        double reach = w_max + (runs[i].width + max_width) / 2.0;
        while (lo < i && runs[i].pos - runs[lo].pos > reach) ++lo;
        for (std::size_t j = lo; j < i; ++j) try_pair(runs[j], runs[i], w_max, pairs);
      }
    }
  }
  sort_pairs(pairs);
  return pairs;
}

std::vector<CouplingPair> extract_coupling_pairs_bruteforce(const Design& d, double w_max) {
  if (!(w_max > 0)) throw std::invalid_argument("w_max must be > 0");
  std::vector<CouplingPair> pairs;
  for (std::size_t i = 0; i < d.segments.size(); ++i) {
    for (std::size_t j = i + 1; j < d.segments.size(); ++j) {
      const Segment& a = d.segments[i];
      const Segment& b = d.segments[j];
      if (a.layer_id != b.layer_id || a.is_horizontal() != b.is_horizontal()) continue;
      bool horizontal = a.is_horizontal();
      auto run_of = [&](const Segment& s) {
        Run r;
        r.id = s.id;
        r.net_id = s.net_id;
        r.width = d.segment_width(s);
        r.pos = horizontal ? s.start.y : s.start.x;
        r.lo = horizontal ? std::min(s.start.x, s.end.x) : std::min(s.start.y, s.end.y);
        r.hi = horizontal ? std::max(s.start.x, s.end.x) : std::max(s.start.y, s.end.y);
        return r;
      };
      try_pair(run_of(a), run_of(b), w_max, pairs);
    }
  }
  sort_pairs(pairs);
  return pairs;
}

double coupling_capacitance(const CouplingPair& pair, const Layer& layer) {
  return layer.c_coup_unit * pair.l_si / pair.w_si;
}

double default_w_max(const Design& d) {
  double probe = 0.0;
  for (const auto& l : d.layers) probe = std::max(probe, 50.0 * l.m_w);
  if (probe <= 0) probe = 5.0;
  double min_spacing = std::numeric_limits<double>::infinity();
  for (const auto& p : extract_coupling_pairs_bruteforce(d, probe))
    min_spacing = std::min(min_spacing, p.w_si);
  if (!std::isfinite(min_spacing)) return 1.5;
  return 3.0 * min_spacing;
}

} // namespace xtalk
