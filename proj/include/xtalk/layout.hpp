#pragma once
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace xtalk {

// Units used throughout: lengths in um, times in ps, capacitance in fF,
// driver resistance in kOhm, sheet resistance in Ohm/square.
// Note kOhm * fF = ps, so RC products come out in ps directly.

enum class Direction { horizontal, vertical };
enum class Edge { rise, fall };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Rectangular 2D lookup: input slew x load capacitance -> (cell delay, output slew).
// Axes strictly increasing; queries outside the grid clamp and set a flag.
struct DelayTable {
  std::vector<double> slew_axis;   // ps
  std::vector<double> load_axis;   // fF
  std::vector<std::vector<double>> delay;  // [slew][load], ps
  std::vector<std::vector<double>> out_slew;  // [slew][load], ps

  struct Lookup {
    double delay = 0.0;
    double out_slew = 0.0;
    bool clamped = false;
  };
  Lookup lookup(double s_in, double c_load) const;
};

struct Layer {
  int id = 0;
  Direction direction = Direction::horizontal;
  double m_w = 0.0;      // default wire width, um
  double m_t = 0.0;      // wire thickness, um
  double m_h = 0.0;      // inter-layer dielectric thickness, um
  double m_eps0 = 1.0;   // relative oxide permittivity
  double r_sheet = 0.0;  // Ohm/square
  double c_area = 0.0;   // fF/um
  double c_coup_unit = 0.0;  // fF*um/um; C_c = c_coup_unit * L_SI / W_SI
};

struct Segment {
  int id = 0;
  int net_id = 0;
  int layer_id = 0;
  Point start;
  Point end;
  std::optional<double> width;  // um, overrides layer default

  bool is_horizontal() const { return start.y == end.y; }
  double length() const {
    return is_horizontal() ? std::abs(end.x - start.x) : std::abs(end.y - start.y);
  }
};

struct Driver {
  int net_id = 0;
  double r_drive = 0.0;  // kOhm
  double s_in = 0.0;     // ps, 10-90 input transition
  Edge direction = Edge::rise;
  double at_in = 0.0;    // ps, arrival at driver input
  DelayTable delay_table;
};

struct Net {
  int id = 0;
  std::string name;
  std::vector<int> segments;  // ids, source-to-sink order
  double c_sink = 0.0;        // fF
};

struct Design {
  std::string name;
  std::vector<Layer> layers;
  std::vector<Net> nets;
  std::vector<Driver> drivers;
  std::vector<Segment> segments;
  uint64_t seed = 0;     // generator seed, 0 when loaded from an external file
  std::string origin;    // file path or "bench_gen"

  const Layer& layer(int id) const;
  const Net& net(int id) const;
  const Segment& segment(int id) const;
  const Driver& driver_of(int net_id) const;
  double segment_width(const Segment& s) const;

  // Total capacitive load seen by a net's driver: wire area cap + sink cap.
  // Coupling caps attached by extracted pairs are added by the caller when known.
  double ground_load(const Net& n) const;
};

struct CouplingPair {
  int victim_segment_id = 0;     // lower segment id of the unordered pair
  int aggressor_segment_id = 0;
  double l_si = 0.0;  // um, parallel overlap length
  double w_si = 0.0;  // um, edge-to-edge spacing
};

struct ValidationError : std::runtime_error {
  std::vector<std::string> violations;
  explicit ValidationError(std::vector<std::string> v);
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Returns every violated constraint (empty if the design is valid).
std::vector<std::string> validate(const Design& d);

Design load_design(const std::string& path);
void save_design(const Design& d, const std::string& path);
std::string design_to_json(const Design& d);
Design design_from_json(const std::string& text, const std::string& origin);

// Same-layer, same-direction pairs with edge-to-edge spacing in (0, w_max]
// and positive parallel overlap. Sorted by (victim id, aggressor id).
std::vector<CouplingPair> extract_coupling_pairs(const Design& d, double w_max);

// Brute-force O(n^2) reference for the sweep-line extractor. Test oracle.
std::vector<CouplingPair> extract_coupling_pairs_bruteforce(const Design& d, double w_max);

double coupling_capacitance(const CouplingPair& pair, const Layer& layer);

// 3x the minimum observed edge-to-edge spacing; fallback when nothing couples.
double default_w_max(const Design& d);

} // namespace xtalk
