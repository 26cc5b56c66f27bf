#include <doctest.h>

#include <cmath>

#include "xtalk/model.hpp"
#include "xtalk/rng.hpp"
#include "xtalk/tree.hpp"

using namespace xtalk;

namespace {

Dataset planted_dataset(std::size_t n, uint64_t seed, double tsi_fraction = 1.0) {
  Rng rng(seed);
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.design = "planted";
    s.net_id = int(i);
    s.segment_id = int(i);
    s.features.dskew = rng.uniform(-80, 80);
    s.features.rf = rng.bernoulli(0.5) ? 1.0 : -1.0;
    s.features.s_in = rng.uniform(10, 30);
    s.features.s_out = rng.uniform(20, 60);
    s.features.d_driver = rng.uniform(5, 40);
    s.features.m_w = rng.uniform(0.1, 0.14);
    s.features.m_t = 0.15;
    s.features.m_h = 0.2;
    s.features.m_eps0 = 3.9;
    s.features.wire_len = rng.uniform(100, 400);
    s.features.l_si = rng.uniform(10, 300);
    s.features.w_si = rng.uniform(0.08, 0.3);
    s.label_class = rng.bernoulli(tsi_fraction) ? LabelClass::TSI : LabelClass::FSI;
    s.label_delta = s.label_class == LabelClass::TSI ? 3.0 * s.features.l_si : 0.0;
    s.label_tau_nosi = 0.05 * s.features.wire_len + 0.4 * s.features.d_driver;
    ds.samples.push_back(s);
  }
  return ds;
}

} // namespace

TEST_CASE("the boosted regressor recovers a planted linear rule") {
  Dataset ds = planted_dataset(800, 3);
  Dataset norm = normalize(split(ds, 0.7, 42));
  EvalMetrics m;
  RegressorModel reg = train_regressor(norm, {}, 7, &m);
  CHECK(m.r2_delta_tsi >= 0.99);
  CHECK(reg.trees.size() == 300);
}

TEST_CASE("a constant target degenerates to the train mean with a warning") {
  Dataset ds = planted_dataset(300, 4);
  for (auto& s : ds.samples) s.label_delta = 7.5;
  Dataset norm = normalize(split(ds, 0.7, 42));
  RegressorModel reg = train_regressor(norm, {}, 7, nullptr);
  CHECK(reg.trees.empty());
  CHECK(reg.base == doctest::Approx(7.5));
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(FeatureVector::kCount);
  CHECK(reg.predict(x) == doctest::Approx(7.5));
  // the degenerate convention: zero residuals report R2 = 1
  Eigen::VectorXd truth = Eigen::VectorXd::Constant(10, 7.5);
  CHECK(r2_score(truth, truth) == 1.0);
}

TEST_CASE("a linearly separable toy is classified perfectly") {
  Dataset ds = planted_dataset(600, 5, 0.0);
  for (auto& s : ds.samples)
    s.label_class = s.features.dskew < 50.0 ? LabelClass::TSI : LabelClass::FSI;
  Dataset norm = normalize(split(ds, 0.7, 42));
  EvalMetrics m;
  (void)train_classifier(norm, {}, 11, 1, &m);
  CHECK(m.accuracy == doctest::Approx(1.0));
}

TEST_CASE("single-class training data is rejected") {
  Dataset ds = planted_dataset(200, 6, 1.0);
  Dataset norm = normalize(split(ds, 0.7, 42));
  CHECK_THROWS_AS((void)train_classifier(norm, {}, 1, 1, nullptr), std::invalid_argument);
}

TEST_CASE("training is invariant to sample order under a fixed seed") {
  Dataset ds = planted_dataset(500, 8, 0.4);
  Dataset norm = normalize(split(ds, 0.7, 42));

  // rotate the sample order (and masks with it); traceability ids restore
  // the canonical order inside training
  Dataset rotated = norm;
  std::rotate(rotated.samples.begin(), rotated.samples.begin() + 123, rotated.samples.end());
  std::rotate(rotated.train_mask.begin(), rotated.train_mask.begin() + 123,
              rotated.train_mask.end());

  ClassifierModel a = train_classifier(norm, {}, 21, 2, nullptr);
  ClassifierModel b = train_classifier(rotated, {}, 21, 2, nullptr);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
    for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
      CHECK(a.trees[t].nodes[k].feature == b.trees[t].nodes[k].feature);
      CHECK(a.trees[t].nodes[k].threshold == b.trees[t].nodes[k].threshold);
      CHECK(a.trees[t].nodes[k].value == b.trees[t].nodes[k].value);
    }
  }
}

TEST_CASE("predictions survive strictly monotone feature rescaling") {
  // thresholds are actual training values, so order-preserving maps relocate
  // them without changing any decision path
  Dataset ds = planted_dataset(400, 9, 0.5);
  auto grow = [](const Dataset& base, int feature, double (*map)(double)) {
    Dataset mapped = base;
    for (auto& s : mapped.samples) {
      auto a = s.features.to_array();
      a[std::size_t(feature)] = map(a[std::size_t(feature)]);
      s.features = FeatureVector::from_array(a);
    }
    return mapped;
  };

  for (const char* name : {"s_in", "wire_len", "w_si"}) {
    int j = feature_index(name);
    Dataset sp = split(ds, 0.7, 42);
    Dataset mapped = grow(sp, j, [](double x) { return x * x * x; });  // monotone on positives

    Dataset norm1 = normalize(sp);
    Dataset norm2 = normalize(mapped);
    RegressorModel r1 = train_regressor(norm1, {}, 13, nullptr);
    RegressorModel r2 = train_regressor(norm2, {}, 13, nullptr);

    for (std::size_t i : sp.test_indices()) {
      Eigen::RowVectorXd x1(FeatureVector::kCount), x2(FeatureVector::kCount);
      auto a1 = norm1.samples[i].features.to_array();
      auto a2 = norm2.samples[i].features.to_array();
      for (int k = 0; k < FeatureVector::kCount; ++k) {
        x1[k] = a1[std::size_t(k)];
        x2[k] = a2[std::size_t(k)];
      }
      CHECK(r1.predict(x1) == doctest::Approx(r2.predict(x2)).epsilon(1e-12));
    }
  }
}

TEST_CASE("bins select training values as cut points") {
  Eigen::MatrixXd x(6, 1);
  x << 1.0, 2.0, 2.0, 3.0, 10.0, 11.0;
  FeatureBins bins = build_bins(x, 4);
  for (double cut : bins.cuts[0]) {
    bool found = false;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (x(i, 0) == cut) found = true;
    CHECK(found);
  }
  // codes are monotone in the raw value
  for (Eigen::Index i = 1; i < x.rows(); ++i)
    CHECK(bins.codes(i, 0) >= bins.codes(i - 1, 0));
}
