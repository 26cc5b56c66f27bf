#include <doctest.h>

#include <set>

#include "test_util.hpp"
#include "xtalk/features.hpp"
#include "xtalk/rng.hpp"
#include "xtalk/oracle.hpp"

using namespace xtalk;

namespace {

Dataset toy_dataset(std::size_t n, uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.design = "toy";
    s.net_id = int(i);
    s.segment_id = int(i);
    s.features.dskew = rng.uniform(-100, 100);
    s.features.rf = rng.bernoulli(0.5) ? 1.0 : -1.0;
    s.features.s_in = rng.uniform(10, 30);
    s.features.s_out = rng.uniform(20, 60);
    s.features.d_driver = rng.uniform(5, 40);
    s.features.m_w = 0.1;
    s.features.m_t = 0.15;
    s.features.m_h = 0.2;
    s.features.m_eps0 = 3.9;
    s.features.wire_len = rng.uniform(100, 400);
    s.features.l_si = rng.uniform(10, 300);
    s.features.w_si = rng.uniform(0.08, 0.3);
    s.label_class = rng.bernoulli(0.25) ? LabelClass::TSI : LabelClass::FSI;
    s.label_delta = s.label_class == LabelClass::TSI ? rng.uniform(1, 20) : 0.0;
    s.label_tau_nosi = rng.uniform(3, 30);
    ds.samples.push_back(s);
  }
  return ds;
}

} // namespace

TEST_CASE("every model input symbol appears exactly once") {
  const auto& names = feature_names();
  std::set<std::string> unique(names.begin(), names.end());
  CHECK(unique.size() == FeatureVector::kCount);
  for (const char* expected : {"dskew", "rf", "s_in", "s_out", "d_driver", "m_w", "m_t", "m_h",
                               "m_eps0", "wire_len", "l_si", "w_si"})
    CHECK(unique.count(expected) == 1);
}

TEST_CASE("coupled samples carry the pair geometry, uncoupled ones the sentinels") {
  Design d = testutil::parallel_pair_design(280.0, 200.0, 0.1);
  // a third, isolated net
  d.segments.push_back(Segment{3, 3, 1, {0.0, 50.0}, {150.0, 50.0}, std::nullopt});
  d.nets.push_back(Net{3, "n3", {3}, 5.0});
  Driver drv = d.drivers[0];
  drv.net_id = 3;
  d.drivers.push_back(drv);

  double w_max = 0.3;
  auto pairs = extract_coupling_pairs(d, w_max);
  REQUIRE(pairs.size() == 1);
  auto samples = extract_features(d, pairs, w_max);
  REQUIRE(samples.size() == 3);

  CHECK(samples[0].features.l_si == doctest::Approx(pairs[0].l_si));
  CHECK(samples[0].features.w_si == doctest::Approx(pairs[0].w_si));
  CHECK(samples[0].aggressor_segment_id == 2);

  const Sample& lone = samples[2];
  CHECK(lone.features.l_si == 0.0);
  CHECK(lone.features.w_si == doctest::Approx(10.0 * w_max));
  CHECK(lone.features.dskew == doctest::Approx(FeatureVector::kDskewMax));
  CHECK(lone.aggressor_segment_id == -1);
}

TEST_CASE("extraction is deterministic and translation invariant") {
  GenConfig cfg;
  cfg.seed = 31;
  cfg.net_count = 60;
  cfg.name = "feat";
  Design d = generate(cfg);
  double w_max = default_w_max(d);
  auto pairs = extract_coupling_pairs(d, w_max);

  Dataset a, b;
  a.samples = extract_features(d, pairs, w_max);
  b.samples = extract_features(d, pairs, w_max);
  CHECK(dataset_to_csv(a) == dataset_to_csv(b));

  Design moved = d;
  for (auto& s : moved.segments) {
    s.start.x += 500.0;
    s.end.x += 500.0;
    s.start.y += 250.0;
    s.end.y += 250.0;
  }
  Dataset c;
  c.samples = extract_features(moved, extract_coupling_pairs(moved, w_max), w_max);
  CHECK(dataset_to_csv(a) == dataset_to_csv(c));
}

TEST_CASE("normalization uses train statistics only and inverts exactly") {
  Dataset ds = toy_dataset(400, 5);
  Dataset sp = split(ds, 0.7, 9);
  Dataset norm = normalize(sp);
  CHECK(norm.normalized);

  // leakage check: replacing the test rows leaves the stats untouched
  Dataset altered = sp;
  for (std::size_t i : altered.test_indices())
    altered.samples[i].features.wire_len *= 3.0;
  Dataset norm2 = normalize(altered);
  CHECK(norm.stats.mean.isApprox(norm2.stats.mean));
  CHECK(norm.stats.scale.isApprox(norm2.stats.scale));

  Dataset back = denormalize(norm);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    auto raw = sp.samples[i].features.to_array();
    auto rt = back.samples[i].features.to_array();
    for (int j = 0; j < FeatureVector::kCount; ++j)
      CHECK(rt[std::size_t(j)] == doctest::Approx(raw[std::size_t(j)]).epsilon(1e-9));
  }
}

TEST_CASE("constant feature columns pass through centered with unit scale") {
  Dataset ds = toy_dataset(100, 6);
  int j = feature_index("m_eps0");  // constant in the toy set
  Dataset norm = normalize(split(ds, 0.7, 1));
  CHECK(norm.stats.scale[j] == 1.0);
  for (const auto& s : norm.samples) CHECK(s.features.m_eps0 == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("split is deterministic, sized, and stratified") {
  Dataset ds = toy_dataset(1000, 77);
  Dataset a = split(ds, 0.7, 42);
  Dataset b = split(ds, 0.7, 42);
  CHECK(a.train_mask == b.train_mask);
  CHECK(a.train_indices().size() == 700);

  double tsi_all = 0, tsi_train = 0;
  for (const auto& s : ds.samples) tsi_all += s.label_class == LabelClass::TSI;
  for (std::size_t i : a.train_indices()) tsi_train += ds.samples[i].label_class == LabelClass::TSI;
  double p_all = tsi_all / double(ds.samples.size());
  double p_train = tsi_train / 700.0;
  CHECK(std::abs(p_all - p_train) < 0.01);

  SUBCASE("small strata still land on integer-rounded proportions") {
    Dataset tiny = toy_dataset(10, 3);
    for (auto& s : tiny.samples) s.label_class = LabelClass::FSI;
    tiny.samples[0].label_class = tiny.samples[1].label_class = LabelClass::TSI;
    Dataset st = split(tiny, 0.7, 5);
    CHECK(st.train_indices().size() + st.test_indices().size() == 10);
  }
  SUBCASE("a different seed reshuffles") {
    Dataset c = split(ds, 0.7, 43);
    CHECK(c.train_mask != a.train_mask);
  }
}

TEST_CASE("design-level split keeps whole designs together") {
  Dataset ds = toy_dataset(300, 8);
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    ds.samples[i].design = "d" + std::to_string(i % 5);
  Dataset sp = split(ds, 0.6, 11, SplitMode::design);
  std::map<std::string, std::set<bool>> sides;
  for (std::size_t i = 0; i < sp.samples.size(); ++i)
    sides[sp.samples[i].design].insert(bool(sp.train_mask[i]));
  for (const auto& [name, s] : sides) CHECK(s.size() == 1);
}

TEST_CASE("dataset files round-trip through the pinned header") {
  Dataset ds = toy_dataset(50, 12);
  std::string csv = dataset_to_csv(ds);
  CHECK(csv.rfind("dskew,rf,s_in,s_out,d_driver,m_w,m_t,m_h,m_eps0,wire_len,l_si,w_si,"
                  "label_class,label_delta,label_tau_nosi\n",
                  0) == 0);
  Dataset back = dataset_from_csv(csv);
  REQUIRE(back.samples.size() == ds.samples.size());
  CHECK(dataset_to_csv(back) == csv);
  CHECK_THROWS_AS((void)dataset_from_csv("bogus,header\n1,2\n"), ParseError);
}
