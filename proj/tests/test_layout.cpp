#include <doctest.h>

#include <filesystem>

#include "test_util.hpp"
#include "xtalk/bench_gen.hpp"
#include "xtalk/layout.hpp"
#include "xtalk/rng.hpp"

using namespace xtalk;

TEST_CASE("load_design accepts the smallest valid input") {
  Design d = testutil::one_net_design();
  Design round = design_from_json(design_to_json(d), "mem");
  CHECK(round.nets.size() == 1);
  CHECK(round.segments.size() == 1);
  CHECK(round.segment(1).length() == doctest::Approx(100.0));
}

TEST_CASE("validation lists every failing constraint") {
  Design d = testutil::one_net_design();
  d.segments[0].layer_id = 9;  // missing layer
  d.segments.push_back(Segment{2, 1, 1, {0, 0}, {0, 0}, std::nullopt});  // zero length
  d.nets[0].segments.push_back(2);
  std::vector<std::string> v = validate(d);
  CHECK(v.size() >= 2);
  bool names_layer = false;
  for (const auto& msg : v)
    if (msg.find("segment 1") != std::string::npos && msg.find("layer 9") != std::string::npos)
      names_layer = true;
  CHECK(names_layer);
  CHECK_THROWS_AS((void)design_from_json(design_to_json(d), "mem"), ValidationError);
}

TEST_CASE("unknown keys are rejected with the offending key named") {
  Design d = testutil::one_net_design();
  std::string text = design_to_json(d);
  text.insert(text.find("\"layers\""), "\"bogus\": 1, ");
  CHECK_THROWS_WITH_AS((void)design_from_json(text, "mem"),
                       doctest::Contains("unknown key 'bogus'"), ParseError);
}

TEST_CASE("parse errors carry line context") {
  try {
    (void)design_from_json("{\n  \"layers\": [\n  broken\n", "mem");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("generated design round-trips byte-identically") {
  GenConfig cfg;
  cfg.seed = 7;
  cfg.net_count = 60;
  cfg.name = "rt";
  Design d = generate(cfg);
  std::string path = (std::filesystem::temp_directory_path() / "xtalk_rt.design.json").string();
  save_design(d, path);
  Design loaded = load_design(path);
  CHECK(design_to_json(d) == design_to_json(loaded));
  std::filesystem::remove(path);
}

TEST_CASE("pair extraction computes overlap and spacing") {
  // two horizontal runs, edge-to-edge 0.10 um, spans [0,20] and [5,30]
  Design d = testutil::one_net_design(20.0);
  d.segments.push_back(Segment{2, 2, 1, {5.0, 0.2}, {30.0, 0.2}, std::nullopt});
  d.nets.push_back(Net{2, "n2", {2}, 5.0});
  Driver drv = d.drivers[0];
  drv.net_id = 2;
  d.drivers.push_back(drv);
  // centers 0 and 0.2, widths 0.1 -> edge-to-edge 0.1
  auto pairs = extract_coupling_pairs(d, 0.5);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].l_si == doctest::Approx(15.0));
  CHECK(pairs[0].w_si == doctest::Approx(0.10));

  SUBCASE("threshold excludes wide spacings") {
    d.segments[1].start.y = d.segments[1].end.y = 0.7;  // edge-to-edge 0.6
    CHECK(extract_coupling_pairs(d, 0.5).empty());
  }
  SUBCASE("orthogonal segments never pair") {
    d.segments[1] = Segment{2, 2, 1, {10.0, -5.0}, {10.0, 5.0}, std::nullopt};
    CHECK(extract_coupling_pairs(d, 0.5).empty());
  }
}

TEST_CASE("coupling capacitance closed form") {
  CouplingPair p{1, 2, 15.0, 0.10};
  Layer l;
  l.c_coup_unit = 0.05;
  CHECK(coupling_capacitance(p, l) == doctest::Approx(7.5));
  CouplingPair doubled = p;
  doubled.l_si *= 2;
  CHECK(coupling_capacitance(doubled, l) == doctest::Approx(15.0));
  CouplingPair wider = p;
  wider.w_si *= 2;
  CHECK(coupling_capacitance(wider, l) == doctest::Approx(3.75));
}

TEST_CASE("sweep-line extraction equals brute force on random designs") {
  for (uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.net_count = 80;
    cfg.name = "bf";
    Design d = generate(cfg);
    double w_max = default_w_max(d);
    auto a = extract_coupling_pairs(d, w_max);
    auto b = extract_coupling_pairs_bruteforce(d, w_max);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].victim_segment_id == b[i].victim_segment_id);
      CHECK(a[i].aggressor_segment_id == b[i].aggressor_segment_id);
      CHECK(a[i].l_si == doctest::Approx(b[i].l_si));
      CHECK(a[i].w_si == doctest::Approx(b[i].w_si));
    }
  }
}

TEST_CASE("translation leaves pair geometry unchanged") {
  GenConfig cfg;
  cfg.seed = 21;
  cfg.net_count = 60;
  cfg.name = "shift";
  Design d = generate(cfg);
  double w_max = default_w_max(d);
  auto before = extract_coupling_pairs(d, w_max);
  for (auto& s : d.segments) {
    s.start.x += 1234.5;
    s.start.y -= 77.25;
    s.end.x += 1234.5;
    s.end.y -= 77.25;
  }
  auto after = extract_coupling_pairs(d, w_max);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].l_si == doctest::Approx(after[i].l_si).epsilon(1e-12));
    CHECK(before[i].w_si == doctest::Approx(after[i].w_si).epsilon(1e-12));
  }
}

TEST_CASE("pair set is invariant under swapping two nets' roles") {
  Design d = testutil::parallel_pair_design(200.0, 160.0, 0.1);
  auto pairs = extract_coupling_pairs(d, 0.5);
  REQUIRE(pairs.size() == 1);

  // relabel: swap net ids and segment ids
  Design swapped = d;
  std::swap(swapped.nets[0], swapped.nets[1]);
  swapped.nets[0].id = 1;
  swapped.nets[1].id = 2;
  std::swap(swapped.segments[0], swapped.segments[1]);
  swapped.segments[0].id = 1;
  swapped.segments[0].net_id = 1;
  swapped.segments[1].id = 2;
  swapped.segments[1].net_id = 2;
  swapped.nets[0].segments = {1};
  swapped.nets[1].segments = {2};
  auto pairs2 = extract_coupling_pairs(swapped, 0.5);
  REQUIRE(pairs2.size() == 1);
  CHECK(pairs2[0].l_si == doctest::Approx(pairs[0].l_si));
  CHECK(pairs2[0].w_si == doctest::Approx(pairs[0].w_si));
}

TEST_CASE("delay table lookup clamps out-of-range queries") {
  DelayTable t = synth_delay_table(0.2);
  auto inside = t.lookup(20.0, 50.0);
  CHECK_FALSE(inside.clamped);
  auto outside = t.lookup(1000.0, 50.0);
  CHECK(outside.clamped);
  // bilinear reproduces the generating delay form exactly on grid points
  auto exact = t.lookup(t.slew_axis[2], t.load_axis[3]);
  CHECK(exact.delay == doctest::Approx(std::log(2.0) * 0.2 * t.load_axis[3] + 0.12 * t.slew_axis[2]));
}
