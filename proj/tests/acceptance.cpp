// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "xtalk/bench_gen.hpp"
#include "xtalk/features.hpp"
#include "xtalk/model.hpp"
#include "xtalk/oracle.hpp"
#include "xtalk/sta.hpp"
#include "xtalk/timing_window.hpp"
#include "xtalk/transient.hpp"

using namespace xtalk;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---- criterion 1: lumped RC analytic delay --------------------------------
void criterion_1() {
  auto t0 = Clock::now();
  RCNetwork net;
  int n = net.add_node("out");
  net.c_ground[n] = 100.0;  // fF
  RampStimulus stim;
  stim.t0 = 10.0;
  stim.transition = 2.0;  // sharp edge standing in for a step
  net.sources.push_back({n, 1000.0, stim});

  double rc = 1.0 * 100.0;  // kOhm * fF = ps
  double dt = std::min(stim.transition, rc) / 50.0;
  Waveforms w = simulate_transient(net, dt, stim.t0 + stim.duration() + 6.0 * rc);
  double delay = measure_delay(w, w.col_of_source(0), w.col_of_node(0), 1.0);
  double expect = std::log(2.0) * rc;
  double err = std::abs(delay / expect - 1.0);
  double secs = seconds_since(t0);
  report(1, err < 0.01 && secs < 1.0,
         fmt("lumped RC delay %.4f ps vs ln2*RC %.4f ps (err %.3f%%), %.2fs", delay, expect,
             100 * err, secs));
}

// ---- criterion 2: discretization convergence -------------------------------
void criterion_2() {
  auto t0 = Clock::now();
  TwoNetConfig cfg = TwoNetConfig::defaults();
  Design d = make_two_net_design(cfg);
  auto pairs = extract_coupling_pairs(d, cfg.spacing * 1.5);

  SimOptions o8, o16;
  o16.segments_per_wire = 16;
  DelayResult r8 = delta_delay(d, 1, {2}, pairs, {0.0}, {RelDirection::opposite}, o8);
  DelayResult r16 = delta_delay(d, 1, {2}, pairs, {0.0}, {RelDirection::opposite}, o16);

  BuiltCircuit bc = build_network(d, {1, 2}, pairs, 8, {0.0, 0.0});
  double dt = std::min(cfg.s_in, std::min(bc.taps[0].rc_estimate, bc.taps[1].rc_estimate)) / 50.0;
  SimOptions oh;
  oh.dt_override = dt / 2.0;
  DelayResult rh = delta_delay(d, 1, {2}, pairs, {0.0}, {RelDirection::opposite}, oh);

  double spw_err = std::max(std::abs(r16.d_nosi / r8.d_nosi - 1.0),
                            std::abs(r16.d_si / r8.d_si - 1.0));
  double dt_err = std::max({std::abs(rh.d_nosi / r8.d_nosi - 1.0),
                            std::abs(rh.d_si / r8.d_si - 1.0),
                            std::abs(rh.aggressor_delays[0] / r8.aggressor_delays[0] - 1.0)});
  double secs = seconds_since(t0);
  report(2, spw_err < 0.01 && dt_err < 0.002 && secs < 10.0,
         fmt("segments 8->16 shifts delays %.3f%% (<1%%), dt halving %.3f%% (<0.2%%), %.2fs",
             100 * spw_err, 100 * dt_err, secs));
}

// ---- criterion 3: skew sweep shape -----------------------------------------
void criterion_3() {
  auto t0 = Clock::now();
  TwoNetConfig cfg = TwoNetConfig::defaults();  // victim arrival 100 ps
  auto rows = sweep_skew(cfg, -100.0, 100.0, 5.0);

  double peak = 0.0, peak_skew = 1e9;
  for (const auto& r : rows)
    if (std::abs(r.delta) > peak) {
      peak = std::abs(r.delta);
      peak_skew = r.dskew;
    }
  bool a_pass = peak > 0 && std::abs(peak_skew) <= cfg.s_in;
  for (const auto& r : rows)
    if (std::abs(r.dskew) <= 5.0 && r.delta <= 0) a_pass = false;  // slowdown near zero skew

  TwoNetConfig same = cfg;
  same.aggressor_dir = RelDirection::same;
  Design ds = make_two_net_design(same);
  auto spairs = extract_coupling_pairs(ds, same.spacing * 1.5);
  DelayResult same0 = delta_delay(ds, 1, {2}, spairs, {0.0}, {RelDirection::same});
  bool b_pass = same0.delta < 0.0;

  double tail = std::min(std::abs(rows.front().delta), std::abs(rows.back().delta));
  bool c_pass = std::abs(rows.front().delta) <= 0.10 * peak &&
                std::abs(rows.back().delta) <= 0.10 * peak;

  double biggest = 0.0;
  for (std::size_t i = 3; i < rows.size(); ++i)
    biggest = std::max(biggest, std::abs(std::abs(rows[i].delta) - std::abs(rows[i - 3].delta)));
  bool d_pass = biggest >= 0.5 * (peak - tail);

  double secs = seconds_since(t0);
  report(3, a_pass && b_pass && c_pass && d_pass && secs < 60.0,
         fmt("peak %+0.2f ps at dskew %+.0f (a:%s), same-dir delta %+0.2f (b:%s), edges %.1f%%/"
             "%.1f%% of peak (c:%s), 15 ps step %.0f%% of range (d:%s), %.1fs",
             peak, peak_skew, a_pass ? "ok" : "BAD", same0.delta, b_pass ? "ok" : "BAD",
             100 * std::abs(rows.front().delta) / peak, 100 * std::abs(rows.back().delta) / peak,
             c_pass ? "ok" : "BAD", 100 * biggest / (peak - tail), d_pass ? "ok" : "BAD", secs));
}

// ---- shared labeled suite for criteria 4-6 ---------------------------------
struct BigSuite {
  std::vector<Design> designs;
  SuiteManifest manifest;
  Dataset dataset;       // strongest-aggressor samples, design split applied
  Dataset normalized;
  TwoStepModel model;
  RegressorModel one_step;
  long directed_pairs = 0;
  long window_agree = 0;
  // held-out pair-level evaluation rows
  std::vector<Sample> test_pair_samples;  // labeled directed pairs from test designs
  double label_seconds = 0.0;
  double train_seconds = 0.0;
};

BigSuite build_big_suite() {
  BigSuite bs;
  auto t0 = Clock::now();

  GenConfig cfg;
  cfg.net_count = 570;
  cfg.at_min = 0.0;
  cfg.at_max = 16000.0;
  cfg.name = "acc";
  const int n_designs = 100;
  bs.designs = generate_suite(cfg, n_designs, 20240, 0.7, bs.manifest);

  OracleOptions oopt;
  oopt.with_golden = false;

  for (std::size_t di = 0; di < bs.designs.size(); ++di) {
    const Design& d = bs.designs[di];
    double w_max = default_w_max(d);
    auto pairs = extract_coupling_pairs(d, w_max);
    OracleResults orc = run_design_oracle(d, pairs, oopt);
    bs.directed_pairs += long(orc.pairs.size());

    // window rule vs oracle labels, guard 0, threshold 1 ps
    std::map<int, double> loads;
    for (const auto& n : d.nets) loads[n.id] = 0.0;
    for (const auto& p : pairs) {
      double cc = coupling_capacitance(p, d.layer(d.segment(p.victim_segment_id).layer_id));
      loads[d.segment(p.victim_segment_id).net_id] += cc;
      loads[d.segment(p.aggressor_segment_id).net_id] += cc;
    }
    for (const auto& po : orc.pairs) {
      TimingWindow wv = window_of(d.net(po.victim_net_id), d, loads[po.victim_net_id]);
      TimingWindow wa = window_of(d.net(po.aggressor_net_id), d, loads[po.aggressor_net_id]);
      bool win_tsi = classify_pair(wv, wa, 0.0) == SIClass::TSI;
      bool orc_tsi = std::abs(po.delta) > oopt.threshold;
      bs.window_agree += win_tsi == orc_tsi;
    }

    std::vector<Sample> samples = extract_features(d, pairs, w_max);
    attach_labels(samples, orc, oopt.threshold);
    for (auto& s : samples) bs.dataset.samples.push_back(std::move(s));

    if (!bs.manifest.entries[di].train) {
      std::vector<Sample> pair_samples = extract_pair_samples(d, pairs, w_max);
      attach_labels(pair_samples, orc, oopt.threshold);
      // a directed pair sample's label comes from its own oracle entry
      std::map<std::pair<int, int>, double> delta_of;
      for (const auto& po : orc.pairs)
        delta_of[{po.victim_segment_id, po.aggressor_segment_id}] = po.delta;
      for (auto& s : pair_samples) {
        double delta = delta_of.at({s.segment_id, s.aggressor_segment_id});
        s.label_class = std::abs(delta) > oopt.threshold ? LabelClass::TSI : LabelClass::FSI;
        s.label_delta = s.label_class == LabelClass::TSI ? delta : 0.0;
        bs.test_pair_samples.push_back(std::move(s));
      }
    }
  }
  bs.label_seconds = seconds_since(t0);

  // design-level 70/30 split mirroring the manifest
  std::set<std::string> train_names;
  for (const auto& e : bs.manifest.entries)
    if (e.train) train_names.insert(e.design_name);
  bs.dataset.train_mask.resize(bs.dataset.samples.size());
  for (std::size_t i = 0; i < bs.dataset.samples.size(); ++i)
    bs.dataset.train_mask[i] = train_names.count(bs.dataset.samples[i].design) ? 1 : 0;

  auto t1 = Clock::now();
  bs.normalized = normalize(bs.dataset);
  TrainOptions topt;
  topt.seed = 42;
  bs.model = train_two_step(bs.normalized, {}, {}, topt);
  bs.one_step = train_onestep_baseline(bs.normalized, {}, derive_seed(topt.seed, "onestep"));
  bs.train_seconds = seconds_since(t1);
  return bs;
}

// ---- criterion 4: filtering accuracy ---------------------------------------
void criterion_4(const BigSuite& bs) {
  long correct = 0;
  for (const auto& s : bs.test_pair_samples)
    if (bs.model.classify_tsi(s) == (s.label_class == LabelClass::TSI)) ++correct;
  double acc = bs.test_pair_samples.empty()
                   ? 0.0
                   : double(correct) / double(bs.test_pair_samples.size());
  double agree = double(bs.window_agree) / double(bs.directed_pairs);
  double secs = bs.label_seconds + bs.train_seconds;
  bool pass = bs.directed_pairs >= 50000 && acc >= 0.99 && agree >= 0.99 && secs < 300.0;
  report(4, pass,
         fmt("%ld labeled pairs; classifier accuracy %.4f on %zu held-out pairs, window-rule "
             "agreement %.4f, label+train %.0fs",
             bs.directed_pairs, acc, bs.test_pair_samples.size(), agree, secs));
}

// ---- criterion 5: regression quality ---------------------------------------
void criterion_5(const BigSuite& bs) {
  EvalMetrics m = evaluate(bs.model, bs.normalized);
  bool pass = m.r2_delta_tsi >= 0.95 && m.r2_nosi >= 0.97;
  report(5, pass,
         fmt("held-out R2: delta %.4f (>=0.95) on TSI samples, tau_nosi %.4f (>=0.97)",
             m.r2_delta_tsi, m.r2_nosi));
}

// ---- criterion 6: two-step vs one-step -------------------------------------
void criterion_6(const BigSuite& bs) {
  OneStepComparison cmp = compare_one_step(bs.model, bs.one_step, bs.normalized);
  double gap = cmp.two_step_r2_tsi - cmp.one_step_r2_tsi;
  bool pass = cmp.two_step_r2 >= cmp.one_step_r2 && gap >= 0.01;
  report(6, pass,
         fmt("total R2 two-step %.4f vs one-step %.4f; TSI-only %.4f vs %.4f (gap %.4f >= 0.01)",
             cmp.two_step_r2, cmp.one_step_r2, cmp.two_step_r2_tsi, cmp.one_step_r2_tsi, gap));
}

// ---- criterion 7: end-to-end stage-delay accuracy --------------------------
void criterion_7(const BigSuite& bs) {
  GenConfig cfg;
  cfg.net_count = 240;
  cfg.at_min = 0.0;
  cfg.at_max = 16000.0;
  cfg.max_segments_per_net = 3;
  cfg.name = "acc7";
  SuiteManifest manifest;
  std::vector<Design> designs = generate_suite(cfg, 6, 977, 0.0, manifest);  // all held out

  OracleOptions oopt;  // golden joint runs on
  double ratio_sum = 0.0;
  long ratio_count = 0;
  for (const auto& d : designs) {
    auto pairs = extract_coupling_pairs(d, default_w_max(d));
    OracleResults orc = run_design_oracle(d, pairs, oopt);
    CrosstalkReport rep = build_report(d, bs.model, nullptr, &orc);
    for (std::size_t i = 0; i < rep.stages.size(); ++i) {
      if (rep.golden_stage[i] > 1.0) {
        ratio_sum += rep.stages[i].d_stage / rep.golden_stage[i];
        ++ratio_count;
      }
    }
  }
  double ratio = ratio_count ? ratio_sum / double(ratio_count) : 0.0;
  bool pass = ratio >= 0.97 && ratio <= 1.03;
  report(7, pass,
         fmt("mean predicted/golden stage delay %.4f over %ld held-out nets (in [0.97, 1.03])",
             ratio, ratio_count));
}

// ---- criterion 8: structural invariants ------------------------------------
void criterion_8(const BigSuite& bs) {
  auto t0 = Clock::now();
  std::vector<std::string> bad;

  // delta-skew antisymmetry
  for (double a : {-40.0, 0.0, 133.0})
    for (double b : {-7.0, 62.0})
      if (delta_skew(a, b) != -delta_skew(b, a)) bad.push_back("dskew antisymmetry");

  // stage/path sums are exact arithmetic
  if (net_delay({10, 12, 8, 11}, {{2, 4.0}}) != 45.0) bad.push_back("net_delay exactness");
  std::vector<StageDelay> stages(3);
  for (int i = 0; i < 3; ++i) {
    stages[std::size_t(i)].net_id = i;
    stages[std::size_t(i)].d_stage = 100.0 + i;
  }
  if (path_delay(stages).d_path != 303.0) bad.push_back("path_delay exactness");

  // report-level structure on a held-out design
  GenConfig cfg;
  cfg.net_count = 150;
  cfg.at_max = 16000.0;
  cfg.seed = 515;
  cfg.name = "acc8";
  Design d = generate(cfg);
  double w_max = default_w_max(d);
  auto pairs = extract_coupling_pairs(d, w_max);
  CrosstalkReport rep = build_report(d, bs.model, &pairs);

  // Eq-style identities hold exactly in the assembled report
  for (const auto& s : rep.stages) {
    double sum = 0.0;
    for (const auto& seg : s.segments) sum += seg.tau_nosi + seg.tau_si;
    if (std::abs(sum - s.d_net) > 1e-9) bad.push_back("stage decomposition");
    if (std::abs(s.d_stage - (s.d_driver + s.d_net)) > 1e-12) bad.push_back("stage = driver + net");
  }

  // removing an FSI-classified pair changes no predicted delay
  const PairReportRow* fsi_row = nullptr;
  for (const auto& row : rep.pairs)
    if (!row.tsi) fsi_row = &row;
  if (fsi_row) {
    std::vector<CouplingPair> filtered;
    for (const auto& p : pairs) {
      bool is_removed =
          (p.victim_segment_id == fsi_row->victim_segment_id &&
           p.aggressor_segment_id == fsi_row->aggressor_segment_id) ||
          (p.victim_segment_id == fsi_row->aggressor_segment_id &&
           p.aggressor_segment_id == fsi_row->victim_segment_id);
      if (!is_removed) filtered.push_back(p);
    }
    CrosstalkReport rep2 = build_report(d, bs.model, &filtered);
    for (std::size_t i = 0; i < rep.stages.size(); ++i)
      if (rep.stages[i].d_stage != rep2.stages[i].d_stage) bad.push_back("FSI removal soundness");
  } else {
    bad.push_back("no FSI pair to remove");
  }

  // feature extraction is translation invariant
  Design moved = d;
  for (auto& s : moved.segments) {
    s.start.x += 321.0;
    s.end.x += 321.0;
    s.start.y += 123.0;
    s.end.y += 123.0;
  }
  Dataset fa, fb;
  fa.samples = extract_features(d, pairs, w_max);
  fb.samples = extract_features(moved, extract_coupling_pairs(moved, w_max), w_max);
  if (dataset_to_csv(fa) != dataset_to_csv(fb)) bad.push_back("translation invariance");

  // seed determinism and lossless persistence on a compact model
  Dataset small;
  for (std::size_t i = 0; i < bs.dataset.samples.size() && small.samples.size() < 4000; ++i)
    small.samples.push_back(bs.dataset.samples[i]);
  Dataset norm = normalize(split(small, 0.7, 7));
  ClassifierConfig ccfg;
  ccfg.tree_count = 30;
  RegressorConfig rcfg;
  rcfg.tree_count = 60;
  TrainOptions topt;
  topt.seed = 31415;
  TwoStepModel m1 = train_two_step(norm, ccfg, rcfg, topt);
  TwoStepModel m2 = train_two_step(norm, ccfg, rcfg, topt);
  namespace fs = std::filesystem;
  auto p1 = fs::temp_directory_path() / "acc_m1.json";
  auto p2 = fs::temp_directory_path() / "acc_m2.json";
  save_model(m1, p1.string());
  save_model(m2, p2.string());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  if (slurp(p1) != slurp(p2)) bad.push_back("seed determinism");
  TwoStepModel back = load_model(p1.string());
  for (std::size_t i = 0; i < 500 && i < small.samples.size(); ++i) {
    const Sample& s = small.samples[i];
    if (back.predict_total(s) != m1.predict_total(s)) bad.push_back("save/load prediction drift");
  }
  fs::remove(p1);
  fs::remove(p2);

  double secs = seconds_since(t0);
  std::string detail = bad.empty() ? fmt("all structural invariants hold, %.1fs", secs)
                                   : "violated: " + bad.front() + fmt(" (+%zu more)", bad.size() - 1);
  report(8, bad.empty() && secs < 60.0, detail);
}

// ---- criterion 9: extraction oracle equivalence ----------------------------
void criterion_9() {
  auto t0 = Clock::now();
  long checked = 0;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    GenConfig cfg;
    cfg.seed = derive_seed(909, "exteq", uint64_t(i));
    cfg.max_segments_per_net = (i % 3 == 0) ? 2 : 1;
    // keep every design at or below 200 segments even with two-segment routes
    cfg.net_count = 40 + int(cfg.seed % 60);
    cfg.name = "eq";
    Design d = generate(cfg);
    if (d.segments.size() > 200) continue;
    double w_max = default_w_max(d);
    auto a = extract_coupling_pairs(d, w_max);
    auto b = extract_coupling_pairs_bruteforce(d, w_max);
    ++checked;
    if (a.size() != b.size()) {
      ok = false;
      break;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].victim_segment_id != b[k].victim_segment_id ||
          a[k].aggressor_segment_id != b[k].aggressor_segment_id ||
          std::abs(a[k].l_si - b[k].l_si) > 1e-9 || std::abs(a[k].w_si - b[k].w_si) > 1e-9) {
        ok = false;
        break;
      }
    }
  }
  double secs = seconds_since(t0);
  report(9, ok && checked >= 100 && secs < 30.0,
         fmt("sweep-line matches brute force on %ld designs, %.1fs", checked, secs));
}

} // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  BigSuite bs = build_big_suite();
  std::printf("  [suite: %zu designs, %zu samples, labeling %.0fs, training %.0fs]\n",
              bs.designs.size(), bs.dataset.samples.size(), bs.label_seconds, bs.train_seconds);
  criterion_4(bs);
  criterion_5(bs);
  criterion_6(bs);
  criterion_7(bs);
  criterion_8(bs);
  criterion_9();
  std::printf("%s (%d failure%s)\n", g_failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures ? 1 : 0;
}
