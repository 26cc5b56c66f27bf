#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xtalk/bench_gen.hpp"
#include "xtalk/features.hpp"
#include "xtalk/model.hpp"
#include "xtalk/oracle.hpp"
#include "xtalk/parallel.hpp"
#include "xtalk/sta.hpp"
#include "xtalk/timing_window.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xtalk;

namespace {

constexpr const char* kVersion = "xtalk 0.1.0";

// exit codes: 0 ok, 2 usage, 3 validation/parse, 4 numerical
struct CliError : std::runtime_error {
  int code;
  CliError(int c, std::string msg) : std::runtime_error(std::move(msg)), code(c) {}
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(3, "cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw CliError(3, "cannot write file: " + path);
  out << text;
}

// every command drops a manifest next to its primary output
struct ManifestWriter {
  std::string command;
  json config = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  uint64_t seed = 0;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void write(const std::string& primary_output) {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["seed"] = seed;
    m["tool_version"] = kVersion;
    m["duration_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    m["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    write_file(primary_output + ".manifest.json", m.dump(2) + "\n");
  }
};

GenConfig gen_config_from_json(const json& j) {
  GenConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("seed", cfg.seed);
  get("layer_count", cfg.layer_count);
  get("net_count", cfg.net_count);
  get("wire_len_min", cfg.wire_len_min);
  get("wire_len_max", cfg.wire_len_max);
  get("bundle_fraction", cfg.bundle_fraction);
  get("bundle_size_min", cfg.bundle_size_min);
  get("bundle_size_max", cfg.bundle_size_max);
  get("spacing_min", cfg.spacing_min);
  get("spacing_max", cfg.spacing_max);
  get("overlap_min", cfg.overlap_min);
  get("overlap_max", cfg.overlap_max);
  get("at_min", cfg.at_min);
  get("at_max", cfg.at_max);
  get("aligned_fraction", cfg.aligned_fraction);
  get("aligned_offset", cfg.aligned_offset);
  get("driver_strengths", cfg.driver_strengths);
  get("s_in_min", cfg.s_in_min);
  get("s_in_max", cfg.s_in_max);
  get("c_sink_min", cfg.c_sink_min);
  get("c_sink_max", cfg.c_sink_max);
  get("max_segments_per_net", cfg.max_segments_per_net);
  get("coupled_fraction", cfg.coupled_fraction);
  get("name", cfg.name);
  get("slew_table_scale", cfg.slew_table_scale);
  get("slew_table_load_coeff", cfg.slew_table_load_coeff);
  get("slew_table_load_quad", cfg.slew_table_load_quad);
  return cfg;
}

TwoNetConfig sweep_config_from_json(const json& j) {
  TwoNetConfig cfg = TwoNetConfig::defaults();
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("victim_len", cfg.victim_len);
  get("aggressor_len", cfg.aggressor_len);
  get("spacing", cfg.spacing);
  get("r_drive", cfg.r_drive);
  get("s_in", cfg.s_in);
  get("c_sink", cfg.c_sink);
  get("victim_at_in", cfg.victim_at_in);
  get("vdd", cfg.vdd);
  if (j.contains("victim_edge")) {
    std::string e = j.at("victim_edge").get<std::string>();
    if (e != "rise" && e != "fall") throw CliError(3, "victim_edge must be rise or fall");
    cfg.victim_edge = e == "rise" ? Edge::rise : Edge::fall;
  }
  if (j.contains("aggressor_dir")) {
    std::string d = j.at("aggressor_dir").get<std::string>();
    if (d != "opposite" && d != "same") throw CliError(3, "aggressor_dir must be opposite or same");
    cfg.aggressor_dir = d == "opposite" ? RelDirection::opposite : RelDirection::same;
  }
  return cfg;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
  ManifestWriter mw;
  mw.command = "gen";
  mw.inputs.push_back(config_path);
  json j = json::parse(read_file(config_path));
  mw.config = j;
  GenConfig base = gen_config_from_json(j);
  int count = j.value("count", 1);
  double train_fraction = j.value("train_fraction", 0.7);
  uint64_t suite_seed = j.value("suite_seed", base.seed);
  mw.seed = suite_seed;

  SuiteManifest suite;
  std::vector<Design> designs = generate_suite(base, count, suite_seed, train_fraction, suite);
  fs::create_directories(out_dir);
  for (const auto& d : designs) {
    std::string path = out_dir + "/" + d.name + ".design.json";
    save_design(d, path);
    mw.outputs.push_back(path);
  }
  std::string suite_path = out_dir + "/suite.json";
  write_file(suite_path, manifest_to_json(suite));
  mw.outputs.push_back(suite_path);
  mw.write(suite_path);
  std::cout << "wrote " << designs.size() << " design(s) to " << out_dir << "\n";
  return 0;
}

int cmd_oracle(const std::string& design_path, const std::string& out_path, double dt,
               int segments_per_wire, double threshold, int jobs, bool golden,
               const std::string& labels_path) {
  ManifestWriter mw;
  mw.command = "oracle";
  mw.inputs.push_back(design_path);
  mw.config = {{"dt", dt},
               {"segments_per_wire", segments_per_wire},
               {"threshold", threshold},
               {"jobs", jobs},
               {"golden", golden}};
  Design d = load_design(design_path);
  std::vector<CouplingPair> pairs = extract_coupling_pairs(d, default_w_max(d));
  OracleOptions opt;
  opt.sim.dt_override = dt;
  opt.sim.segments_per_wire = segments_per_wire;
  opt.threshold = threshold;
  opt.jobs = jobs;
  opt.with_golden = golden;
  OracleResults res = run_design_oracle(d, pairs, opt);
  write_file(out_path, oracle_to_json(res));
  mw.outputs.push_back(out_path);
  if (!labels_path.empty()) {
    std::vector<PairLabel> labels = label_dataset(d, pairs, res, threshold);
    write_file(labels_path, labels_to_json(labels));
    mw.outputs.push_back(labels_path);
  }
  mw.write(out_path);
  long tsi = 0;
  for (const auto& p : res.pairs) tsi += std::abs(p.delta) > threshold;
  std::cout << "oracle: " << res.pairs.size() << " directed pairs (" << tsi << " TSI), "
            << res.nets.size() << " nets -> " << out_path << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path) {
  ManifestWriter mw;
  mw.command = "sweep";
  mw.inputs.push_back(config_path);
  json j = json::parse(read_file(config_path));
  mw.config = j;
  TwoNetConfig cfg = sweep_config_from_json(j);
  double skew_min = j.value("skew_min", -100.0);
  double skew_max = j.value("skew_max", 100.0);
  double step = j.value("step", 5.0);
  auto rows = sweep_skew(cfg, skew_min, skew_max, step);
  write_file(out_path, sweep_to_csv(rows));
  mw.outputs.push_back(out_path);
  mw.write(out_path);
  std::cout << "sweep: " << rows.size() << " rows -> " << out_path << "\n";
  return 0;
}

int cmd_features(const std::string& design_path, const std::string& oracle_path,
                 const std::string& out_path) {
  ManifestWriter mw;
  mw.command = "features";
  mw.inputs = {design_path, oracle_path};
  Design d = load_design(design_path);
  OracleResults orc = oracle_from_json(read_file(oracle_path));
  double w_max = default_w_max(d);
  std::vector<CouplingPair> pairs = extract_coupling_pairs(d, w_max);
  std::vector<Sample> samples = extract_features(d, pairs, w_max);
  attach_labels(samples, orc, orc.threshold);
  Dataset ds;
  ds.samples = std::move(samples);
  save_dataset(ds, out_path);
  mw.outputs.push_back(out_path);
  mw.write(out_path);
  std::cout << "features: " << ds.samples.size() << " samples -> " << out_path << "\n";
  return 0;
}

int cmd_train(const std::vector<std::string>& dataset_paths, const std::string& model_path,
              uint64_t seed, double fraction, bool grid, bool one_step, int jobs,
              const std::string& split_mode) {
  ManifestWriter mw;
  mw.command = "train";
  mw.inputs = dataset_paths;
  mw.seed = seed;
  mw.config = {{"seed", seed},
               {"split_fraction", fraction},
               {"grid", grid},
               {"one_step", one_step},
               {"split_mode", split_mode}};
  Dataset ds;
  for (std::size_t i = 0; i < dataset_paths.size(); ++i) {
    Dataset part = load_dataset(dataset_paths[i]);
    // keep merged samples traceable for canonical ordering
    for (auto& s : part.samples) {
      if (s.design.empty()) s.design = "file" + std::to_string(i);
      ds.samples.push_back(std::move(s));
    }
  }
  if (ds.samples.empty()) throw CliError(3, "no samples in the given datasets");

  SplitMode mode = SplitMode::sample;
  if (split_mode == "design")
    mode = SplitMode::design;
  else if (split_mode != "sample")
    throw CliError(2, "split mode must be 'sample' or 'design'");

  Dataset sp = split(ds, fraction, derive_seed(seed, "cli_split"), mode);
  Dataset norm = normalize(sp);
  TrainOptions opt;
  opt.seed = seed;
  opt.jobs = jobs;
  opt.grid = grid;
  TwoStepModel model = train_two_step(norm, {}, {}, opt);
  save_model(model, model_path);
  mw.outputs.push_back(model_path);

  EvalMetrics m = evaluate(model, norm);
  std::cout << "train: " << ds.samples.size() << " samples -> " << model_path << "\n";
  std::cout << "held-out: classifier acc " << m.accuracy << ", R2 total " << m.r2 << ", R2 delta "
            << m.r2_delta_tsi << ", R2 nosi " << m.r2_nosi << "\n";
  if (one_step) {
    EvalMetrics om;
    RegressorModel one = train_onestep_baseline(norm, {}, derive_seed(seed, "onestep"), &om);
    OneStepComparison cmp = compare_one_step(model, one, norm);
    std::cout << "one-step baseline: R2 " << cmp.one_step_r2 << " vs two-step " << cmp.two_step_r2
              << "; TSI-only " << cmp.one_step_r2_tsi << " vs " << cmp.two_step_r2_tsi << "\n";
  }
  mw.write(model_path);
  return 0;
}

int cmd_predict(const std::string& design_path, const std::string& model_path,
                const std::string& out_path, const std::string& oracle_path,
                const std::vector<std::string>& path_specs) {
  ManifestWriter mw;
  mw.command = "predict";
  mw.inputs = {design_path, model_path};
  Design d = load_design(design_path);
  TwoStepModel model = load_model(model_path);
  OracleResults orc;
  bool has_oracle = !oracle_path.empty();
  if (has_oracle) {
    orc = oracle_from_json(read_file(oracle_path));
    mw.inputs.push_back(oracle_path);
  }
  std::vector<std::vector<int>> paths;
  for (const auto& spec : path_specs) {
    std::vector<int> ids;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) ids.push_back(std::stoi(tok));
    paths.push_back(std::move(ids));
  }
  CrosstalkReport rep =
      build_report(d, model, nullptr, has_oracle ? &orc : nullptr, paths.empty() ? nullptr : &paths);
  write_file(out_path, report_to_json(rep));
  mw.outputs.push_back(out_path);
  mw.write(out_path);
  std::cout << report_table(rep);
  return 0;
}

int cmd_eval(const std::string& report_path, const std::string& labels_path) {
  json rep = json::parse(read_file(report_path));
  std::vector<PairLabel> labels = labels_from_json(read_file(labels_path));

  std::map<std::pair<int, int>, bool> predicted;  // directed pair -> TSI?
  for (const auto& p : rep.at("pairs"))
    predicted[{p.at("victim_segment_id").get<int>(), p.at("aggressor_segment_id").get<int>()}] =
        p.at("classification").get<std::string>() == "TSI";

  long tp = 0, fp = 0, tn = 0, fn = 0;
  std::vector<double> truth, pred;
  for (const auto& l : labels) {
    auto it = predicted.find({l.pair.victim_segment_id, l.pair.aggressor_segment_id});
    if (it == predicted.end()) continue;
    bool t = l.classification == SIClass::TSI;
    bool p = it->second;
    tp += p && t;
    fp += p && !t;
    tn += !p && !t;
    fn += !p && t;
  }
  double acc = tp + fp + tn + fn ? double(tp + tn) / double(tp + fp + tn + fn) : 0.0;
  std::printf("classification vs labels: accuracy %.4f\n", acc);
  std::printf("confusion: tp %ld fp %ld tn %ld fn %ld\n", tp, fp, tn, fn);

  if (rep.contains("golden")) {
    std::printf("accuracy_ratio %.4f\n", rep.at("golden").at("accuracy_ratio").get<double>());
    std::printf("additivity error: mean %.4f ps, max %.4f ps\n",
                rep.at("golden").at("additivity_err_mean").get<double>(),
                rep.at("golden").at("additivity_err_max").get<double>());
  }
  // R2 of predicted stage delays against golden when present
  if (rep.contains("golden")) {
    std::vector<double> t, p;
    for (const auto& s : rep.at("stages")) {
      if (!s.contains("golden_stage")) continue;
      t.push_back(s.at("golden_stage").get<double>());
      p.push_back(s.at("d_stage").get<double>());
    }
    if (t.size() > 1) {
      Eigen::Map<Eigen::VectorXd> tv(t.data(), Eigen::Index(t.size()));
      Eigen::Map<Eigen::VectorXd> pv(p.data(), Eigen::Index(p.size()));
      std::printf("stage-delay R2 vs golden: %.4f\n", r2_score(tv, pv));
    }
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"crosstalk-aware timing estimation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic benchmark suite");
  std::string gen_config, gen_out = ".";
  gen->add_option("config", gen_config, "generator config (JSON)")->required();
  gen->add_option("-o,--out", gen_out, "output directory");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "label a design by coupled-RC transient simulation");
  std::string orc_design, orc_out = "oracle.json", orc_labels;
  double orc_dt = 0.0, orc_threshold = 1.0;
  int orc_spw = 8, orc_jobs = 0;
  bool orc_golden = false;
  oracle->add_option("design", orc_design, "design file")->required();
  oracle->add_option("-o,--out", orc_out, "oracle results path");
  oracle->add_option("--labels", orc_labels, "also write the pair-label file here");
  oracle->add_option("--dt", orc_dt, "override time step (ps); 0 = auto");
  oracle->add_option("--segments-per-wire", orc_spw, "pi sections per segment");
  oracle->add_option("--threshold", orc_threshold, "TSI threshold on |delta| (ps)");
  oracle->add_option("--jobs", orc_jobs, "worker threads; 0 = hardware");
  oracle->add_flag("--golden", orc_golden, "also run every net with all aggressors switching");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "skew sweep of the two-net configuration");
  std::string sweep_config, sweep_out = "sweep.csv";
  sweep->add_option("config", sweep_config, "sweep config (JSON)")->required();
  sweep->add_option("-o,--out", sweep_out, "output table path");

  // features
  auto* features = app.add_subcommand("features", "extract the model dataset from a labeled design");
  std::string feat_design, feat_oracle, feat_out = "dataset.csv";
  features->add_option("design", feat_design, "design file")->required();
  features->add_option("oracle", feat_oracle, "oracle results file")->required();
  features->add_option("-o,--out", feat_out, "dataset path");

  // train
  auto* train = app.add_subcommand("train", "fit the two-step model");
  std::vector<std::string> train_datasets;
  std::string train_model = "model.json", train_split_mode = "sample";
  uint64_t train_seed = 42;
  double train_fraction = 0.7;
  bool train_grid = false, train_onestep = false;
  int train_jobs = 0;
  train->add_option("datasets", train_datasets, "dataset CSV paths")->required();
  train->add_option("-o,--out", train_model, "model output path");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--split-fraction", train_fraction, "train fraction");
  train->add_option("--split-mode", train_split_mode, "sample | design");
  train->add_flag("--grid", train_grid, "small hyperparameter grid search");
  train->add_flag("--one-step", train_onestep, "also fit and report the one-step baseline");
  train->add_option("--jobs", train_jobs, "worker threads; 0 = hardware");

  // predict
  auto* predict = app.add_subcommand("predict", "per-net crosstalk-aware delay report");
  std::string pred_design, pred_model, pred_out = "report.json", pred_oracle;
  std::vector<std::string> pred_paths;
  predict->add_option("design", pred_design, "design file")->required();
  predict->add_option("model", pred_model, "model file")->required();
  predict->add_option("-o,--out", pred_out, "report path");
  predict->add_option("--oracle", pred_oracle, "oracle results for golden comparison");
  predict->add_option("--path", pred_paths, "stage path as comma-separated net ids (repeatable)");

  // eval
  auto* eval = app.add_subcommand("eval", "score a report against oracle labels");
  std::string eval_report, eval_labels;
  eval->add_option("report", eval_report, "report file")->required();
  eval->add_option("labels", eval_labels, "label file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help/--version
    std::cerr << "xtalk-error code=2 kind=usage msg=\"" << e.what() << "\"\n";
    std::cerr << app.help() << "\n";
    return 2;
  }

  try {
    if (*gen) return cmd_gen(gen_config, gen_out);
    if (*oracle)
      return cmd_oracle(orc_design, orc_out, orc_dt, orc_spw, orc_threshold, orc_jobs, orc_golden,
                        orc_labels);
    if (*sweep) return cmd_sweep(sweep_config, sweep_out);
    if (*features) return cmd_features(feat_design, feat_oracle, feat_out);
    if (*train)
      return cmd_train(train_datasets, train_model, train_seed, train_fraction, train_grid,
                       train_onestep, train_jobs, train_split_mode);
    if (*predict) return cmd_predict(pred_design, pred_model, pred_out, pred_oracle, pred_paths);
    if (*eval) return cmd_eval(eval_report, eval_labels);
  } catch (const CliError& e) {
    std::cerr << "xtalk-error code=" << e.code << " kind="
              << (e.code == 2 ? "usage" : e.code == 3 ? "validation" : "numerical") << " msg=\""
              << e.what() << "\"\n";
    return e.code;
  } catch (const ValidationError& e) {
    std::cerr << "xtalk-error code=3 kind=validation msg=\"" << e.what() << "\"\n";
    for (const auto& v : e.violations) std::cerr << "  " << v << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "xtalk-error code=3 kind=parse msg=\"" << e.what() << "\"\n";
    return 3;
  } catch (const SimError& e) {
    std::cerr << "xtalk-error code=4 kind=numerical msg=\"" << e.what() << "\"\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "xtalk-error code=4 kind=numerical msg=\"" << e.what() << "\"\n";
    return 4;
  }
  return 2;
}
