// buzzdet command-line tool: synth, dives, featurize, train, predict,
// evaluate, jerks and pipeline subcommands over the buzzdet library.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "buzzdet/dives.hpp"
#include "buzzdet/error.hpp"
#include "buzzdet/eval.hpp"
#include "buzzdet/feature_io.hpp"
#include "buzzdet/features.hpp"
#include "buzzdet/io.hpp"
#include "buzzdet/jerk.hpp"
#include "buzzdet/models/checkpoint.hpp"
#include "buzzdet/pipeline.hpp"
#include "buzzdet/record.hpp"
#include "buzzdet/report_io.hpp"
#include "buzzdet/synth.hpp"

#ifndef BUZZDET_VERSION
#define BUZZDET_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace buzzdet;

namespace {

const std::vector<std::string> kSubcommands = {"synth",   "dives",    "featurize", "train",
                                               "predict", "evaluate", "jerks",     "pipeline"};

struct CommonOpts {
  std::string config;
  std::string manifest;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool overwrite = false;
};

struct InputOpts {
  std::vector<std::string> records;
  std::vector<std::string> raw;
  double skip_hours = 0.0;
  DiveOptions dive;
};

struct SynthOpts {
  SynthConfig cfg;
  std::size_t whales = 1;
  std::string prefix = "whale";
  bool csv = false;
};

struct TrainOpts {
  std::string model;
  std::string split = "chrono-60-20-20";
  std::size_t fold = 0;
  pipeline::TrainSettings s;
  std::string phase_rule = "center";
  bool unweighted = false;
};

struct EvalOpts {
  std::string part = "test";
  std::string split = "chrono-60-20-20";
  std::size_t fold = 0;
  double min_event_s = 0.0;
  std::vector<double> overlaps{0.25, 0.5, 0.75, 1.0};
  std::vector<double> distances{0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  bool iou = false;
};

struct JerkOpts {
  bool norm = false;
  SweepOptions sweep;
};

struct Options {
  CommonOpts common;
  InputOpts in;
  SynthOpts synth;
  TrainOpts train;
  EvalOpts eval;
  JerkOpts jerk;
  std::string out, out_dir, checkpoint, trace, events;
  std::vector<std::string> features, preds;
  WindowSpec window;
};

// ---------------------------------------------------------------- options

void add_common(CLI::App* a, Options& o, bool seeded) {
  a->add_option("--config", o.common.config, "Config file of `key = value` lines; flags override it");
  a->add_option("--manifest", o.common.manifest, "Run manifest path (default derived from the outputs)");
  auto* s = a->add_option("--seed", o.common.seed, "Global random seed");
  if (seeded) s->required();
  a->add_option("--threads", o.common.threads, "Worker threads for forest training")->check(CLI::PositiveNumber);
  a->add_flag("--overwrite", o.common.overwrite, "Replace existing output files");
}

void add_inputs(CLI::App* a, Options& o) {
  a->add_option("--record", o.in.records, "Record container (.bzr); repeatable");
  a->add_option("--raw", o.in.raw, "Raw channel CSVs as accel.csv,depth.csv,buzz.csv; repeatable");
  a->add_option("--skip-hours", o.in.skip_hours, "Hours dropped from the start of raw inputs")->check(CLI::NonNegativeNumber);
  a->add_option("--median-window", o.in.dive.median_window, "Odd median-filter window for dive detection (0 = off)");
  a->add_option("--onset-m", o.in.dive.onset_depth_m, "Dive onset depth in meters");
  a->add_option("--min-max-depth-m", o.in.dive.min_max_depth_m, "Minimum dive maximum depth in meters");
  a->add_option("--bottom-fraction", o.in.dive.bottom_fraction, "Bottom phase depth fraction of the dive maximum");
}

void add_synth(CLI::App* a, Options& o) {
  auto& c = o.synth.cfg;
  a->add_option("--whales", o.synth.whales, "Number of synthetic whales")->check(CLI::PositiveNumber);
  a->add_option("--whale-prefix", o.synth.prefix, "Whale id prefix");
  a->add_option("--duration-s", c.duration_s, "Record duration in seconds");
  a->add_option("--dive-rate", c.dive_rate_per_hour, "Dives per hour");
  a->add_option("--depth-min-m", c.dive_depth_range_m.first, "Shallowest dive maximum depth");
  a->add_option("--depth-max-m", c.dive_depth_range_m.second, "Deepest dive maximum depth");
  a->add_option("--bottom-min-s", c.bottom_duration_range_s.first, "Shortest bottom phase");
  a->add_option("--bottom-max-s", c.bottom_duration_range_s.second, "Longest bottom phase");
  a->add_option("--vertical-speed", c.vertical_speed_mps, "Descent and ascent speed in m/s");
  a->add_option("--surface-min-s", c.surface_min_s, "Minimum surface interval");
  a->add_option("--bottom-undulation-m", c.bottom_undulation_m, "Bottom depth undulation amplitude");
  a->add_option("--foraging-fraction", c.foraging_dive_fraction, "Fraction of dives that carry buzzes");
  a->add_option("--buzz-rate", c.buzz_rate_per_bottom_minute, "Buzzes per bottom minute in foraging dives");
  a->add_option("--buzz-len-min-s", c.buzz_len_range_s.first, "Shortest buzz");
  a->add_option("--buzz-len-max-s", c.buzz_len_range_s.second, "Longest buzz");
  a->add_option("--accel-std", c.baseline_accel_std_mG, "Baseline accelerometer noise STD in mG");
  a->add_option("--buzz-multiplier", c.buzz_std_multiplier, "Accelerometer STD multiplier inside buzzes");
  a->add_option("--depth-noise", c.depth_noise_std_m, "Depth noise STD in meters");
  a->add_flag("--csv", o.synth.csv, "Also write raw accel/depth/buzz CSVs");
}

void add_window(CLI::App* a, Options& o) {
  a->add_option("--window", o.window.size, "Feature window length in samples");
  a->add_option("--stride", o.window.stride, "Feature window stride in samples");
  a->add_option("--phase-rule", o.train.phase_rule, "Window phase rule")->check(CLI::IsMember({"center", "majority"}));
}

void add_train(CLI::App* a, Options& o, bool model_required) {
  auto& t = o.train;
  auto* m = a->add_option("--model", t.model, "Model kind")->check(CLI::IsMember({"logreg", "forest", "unet"}));
  if (model_required) m->required();
  a->add_option("--split", t.split, "Split mode")
      ->check(CLI::IsMember({"chrono-60-20-20", "chrono-80-20", "leave-one-whale-out"}));
  a->add_option("--fold", t.fold, "Fold index for leave-one-whale-out");
  a->add_option("--trees", t.s.forest.n_trees, "Forest size")->check(CLI::PositiveNumber);
  a->add_option("--max-features", t.s.forest.max_features, "Candidate features per split (0 = sqrt)");
  a->add_flag("--unweighted", t.unweighted, "Disable balanced-subsample class weights");
  a->add_option("--grad-tol", t.s.logreg.grad_tol, "Logistic regression gradient tolerance");
  a->add_option("--max-iter", t.s.logreg.max_iter, "Logistic regression iteration cap");
  auto& u = t.s.unet;
  a->add_option("--filters", u.filters, "U-Net first-level filters")->check(CLI::PositiveNumber);
  a->add_option("--levels", u.depth, "U-Net encoder levels");
  a->add_option("--kernel", u.kernel, "U-Net convolution kernel size");
  a->add_option("--pool", u.pool, "U-Net pool factor per level");
  a->add_option("--segment-length", u.segment_length, "U-Net training segment length in samples");
  a->add_option("--batch-size", u.batch_size, "U-Net minibatch size")->check(CLI::PositiveNumber);
  a->add_option("--lr", u.learning_rate, "U-Net Adam learning rate");
  a->add_option("--epochs", u.max_epochs, "U-Net maximum epochs");
  a->add_option("--patience", u.patience, "U-Net early-stopping patience");
  add_window(a, o);
}

void add_eval(CLI::App* a, Options& o) {
  auto& e = o.eval;
  a->add_option("--part", e.part, "Split part to evaluate")->check(CLI::IsMember({"all", "train", "val", "test"}));
  a->add_option("--min-event-s", e.min_event_s, "Drop events shorter than this");
  a->add_option("--overlap", e.overlaps, "Overlap thresholds")->delimiter(',');
  a->add_option("--distance", e.distances, "Distance thresholds in seconds")->delimiter(',');
  a->add_flag("--iou", e.iou, "Use intersection over union for overlap criteria");
}

void add_jerk(CLI::App* a, Options& o) {
  a->add_flag("--norm", o.jerk.norm, "Euclidean norm across axes instead of per-axis jerks");
  a->add_option("--threshold-max", o.jerk.sweep.threshold_max, "Largest RMS-jerk threshold in mG/s");
  a->add_option("--threshold-step", o.jerk.sweep.threshold_step, "Threshold step in mG/s");
  a->add_option("--delays", o.jerk.sweep.delays_s, "Delays in seconds, multiples of 0.2")->delimiter(',');
}

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>("Narwhal buzz detection from accelerometer and depth records", "buzzdet");
  app->option_defaults()->always_capture_default();
  app->require_subcommand(1);
  app->set_version_flag("--version", BUZZDET_VERSION);

  auto* synth = app->add_subcommand("synth", "Generate synthetic whale records");
  add_common(synth, o, true);
  synth->add_option("--out-dir", o.out_dir, "Output directory")->required();
  add_synth(synth, o);

  auto* dives = app->add_subcommand("dives", "Detect dives in a record");
  add_common(dives, o, false);
  add_inputs(dives, o);
  dives->add_option("--out", o.out, "Dive CSV")->required();

  auto* feat = app->add_subcommand("featurize", "Window features of a record");
  add_common(feat, o, false);
  add_inputs(feat, o);
  add_window(feat, o);
  feat->add_option("--out", o.out, "Feature CSV")->required();

  auto* train = app->add_subcommand("train", "Train a model on records or feature tables");
  add_common(train, o, true);
  add_inputs(train, o);
  add_train(train, o, true);
  train->add_option("--features", o.features, "Feature CSV (tabular models, all rows used); repeatable");
  train->add_option("--out", o.checkpoint, "Checkpoint path")->required();
  train->add_option("--trace", o.trace, "Per-epoch CSV for U-Net training (default <out>.trace.csv)");

  auto* pred = app->add_subcommand("predict", "Per-sample predictions for one record");
  add_common(pred, o, false);
  add_inputs(pred, o);
  pred->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  pred->add_option("--out", o.out, "Prediction CSV (idx,prob,label)")->required();
  pred->add_option("--events", o.events, "Optional CSV of predicted events (start_s,end_s)");
  add_window(pred, o);

  auto* ev = app->add_subcommand("evaluate", "Event and dive level evaluation of predictions");
  add_common(ev, o, false);
  add_inputs(ev, o);
  ev->add_option("--pred", o.preds, "Prediction CSV, paired with inputs in order; repeatable")->required();
  ev->add_option("--split", o.eval.split, "Split mode defining --part")
      ->check(CLI::IsMember({"chrono-60-20-20", "chrono-80-20", "leave-one-whale-out"}));
  ev->add_option("--fold", o.eval.fold, "Fold index for leave-one-whale-out");
  ev->add_option("--out-dir", o.out_dir, "Output directory")->required();
  add_eval(ev, o);

  auto* jerks = app->add_subcommand("jerks", "RMS-jerk threshold sweep against buzz labels");
  add_common(jerks, o, false);
  add_inputs(jerks, o);
  add_jerk(jerks, o);
  jerks->add_option("--out", o.out, "Sweep CSV")->required();

  auto* pipe = app->add_subcommand("pipeline", "synth -> dives -> featurize -> train -> predict -> evaluate -> jerks");
  add_common(pipe, o, true);
  add_inputs(pipe, o);
  add_synth(pipe, o);
  add_train(pipe, o, true);
  add_eval(pipe, o);
  add_jerk(pipe, o);
  pipe->add_option("--out-dir", o.out_dir, "Output directory")->required();
  return app;
}

// ---------------------------------------------------------------- config

struct ConfigEntry {
  std::string key, value;
  std::size_t line = 0;
};

std::vector<ConfigEntry> read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::vector<ConfigEntry> out;
  std::string line;
  for (std::size_t no = 1; std::getline(f, line); ++no) {
    const auto t = io::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(no) + ": expected `key = value`");
    ConfigEntry e{io::trim(std::string_view(t).substr(0, eq)), io::trim(std::string_view(t).substr(eq + 1)), no};
    if (e.key.empty()) throw ConfigError(path + ":" + std::to_string(no) + ": empty key");
    if (e.key == "config") throw ConfigError(path + ":" + std::to_string(no) + ": config files cannot nest");
    out.push_back(std::move(e));
  }
  return out;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// Expands `--config` into leading `--key=value` arguments. Keys already given
// on the command line are skipped so that flags override the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::size_t sub = 0;
  for (std::size_t i = 1; i < args.size() && !sub; ++i)
    if (std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end()) sub = i;
  if (!sub) return args;
  std::string path;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  const std::vector<std::string> rest(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, args.end());
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1);
  for (const auto& e : read_config(path)) {
    const std::string where = path + ":" + std::to_string(e.line);
    Options probe_opts;
    auto probe = build_app(probe_opts);
    auto* sc = probe->get_subcommand(args[sub]);
    if (!sc->get_option_no_throw("--" + e.key))
      throw ConfigError(where + ": unknown key '" + e.key + "' for subcommand " + args[sub]);
    if (given_on_command_line(rest, e.key)) continue;
    const std::string arg = "--" + e.key + "=" + e.value;
    try {
      std::vector<std::string> one{args[sub], arg};
      std::reverse(one.begin(), one.end());
      probe->parse(one);
    } catch (const CLI::ConversionError& ex) {
      throw ConfigError(where + ": " + ex.what());
    } catch (const CLI::ValidationError& ex) {
      throw ConfigError(where + ": " + ex.what());
    } catch (const CLI::ParseError&) {
      // Missing required options are expected when probing a single key.
    }
    out.push_back(arg);
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

// ---------------------------------------------------------------- run helpers

struct Run {
  CLI::App* sub = nullptr;
  Options* o = nullptr;
  json inputs = json::array();
  json outputs = json::array();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void input(const std::string& p) { inputs.push_back(p); }

  void check_output(const std::string& path) const {
    if (fs::exists(path) && !o->common.overwrite)
      throw ConfigError("refusing to overwrite existing " + path + " (pass --overwrite)");
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
  }

  void write(const std::string& path, std::string_view bytes) {
    check_output(path);
    io::write_file(path, bytes);
    outputs.push_back(path);
  }

  void write_manifest(const std::string& default_path) {
    const std::string path = o->common.manifest.empty() ? default_path : o->common.manifest;
    json cfg = json::object();
    for (const auto* opt : sub->get_options()) {
      if (opt->get_name().empty() || opt->get_name() == "--help" || opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        cfg[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else {
        cfg[name] = opt->get_default_str();
      }
    }
    json m;
    m["subcommand"] = sub->get_name();
    m["config"] = cfg;
    m["seed"] = o->common.seed;
    m["versions"] = {{"buzzdet", BUZZDET_VERSION},
                     {"record_format", io::kRecordVersion},
                     {"checkpoint_format", models::kCheckpointVersion},
                     {"compiler", __VERSION__}};
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check_output(path);
    io::write_file(path, m.dump(2) + "\n");
  }
};

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(io::trim(part));
  return out;
}

std::vector<WhaleRecord> load_inputs(Run& run) {
  const auto& in = run.o->in;
  std::vector<WhaleRecord> recs;
  for (const auto& p : in.records) {
    run.input(p);
    recs.push_back(io::load_record(p));
  }
  for (const auto& spec : in.raw) {
    const auto parts = split_commas(spec);
    if (parts.size() != 3) throw ConfigError("--raw expects accel.csv,depth.csv,buzz.csv, got '" + spec + "'");
    for (const auto& p : parts) run.input(p);
    auto raw = io::read_raw_channels(stem_of(parts[0]), parts[0], parts[1], parts[2]);
    raw = skip_leading(raw, in.skip_hours * 3600.0);
    recs.push_back(build_record(raw, in.dive));
  }
  if (recs.empty()) throw ConfigError("no input records (use --record or --raw)");
  return recs;
}

WhaleRecord load_single(Run& run) {
  auto recs = load_inputs(run);
  if (recs.size() != 1) throw ConfigError("this subcommand takes exactly one input record");
  return std::move(recs.front());
}

WindowPhaseRule phase_rule(const Options& o) {
  return o.train.phase_rule == "majority" ? WindowPhaseRule::Majority : WindowPhaseRule::Center;
}

pipeline::TrainSettings train_settings(const Options& o) {
  auto s = o.train.s;
  s.forest.seed = o.common.seed;
  s.forest.threads = o.common.threads;
  s.forest.balanced_subsample = !o.train.unweighted;
  s.unet.seed = o.common.seed;
  s.window = o.window;
  s.phase_rule = phase_rule(o);
  return s;
}

pipeline::EvalSettings eval_settings(const Options& o) {
  pipeline::EvalSettings s;
  s.match.overlap_thresholds = o.eval.overlaps;
  s.match.distances_s = o.eval.distances;
  s.match.overlap_mode = o.eval.iou ? eval::OverlapMode::IoU : eval::OverlapMode::TruthFraction;
  s.min_event_s = o.eval.min_event_s;
  s.dives = o.in.dive;
  return s;
}

std::vector<SynthOutput> generate(const Options& o) {
  std::vector<SynthOutput> out;
  for (std::size_t w = 0; w < o.synth.whales; ++w) {
    auto cfg = o.synth.cfg;
    cfg.rng_seed = o.common.seed + w;
    cfg.whale_id = o.synth.prefix + "_" + std::to_string(w);
    out.push_back(synth_generate_detailed(cfg));
  }
  return out;
}

void write_synth(Run& run, const SynthOutput& s, const std::string& dir) {
  const auto& id = s.record.whale_id;
  run.write((fs::path(dir) / (id + ".bzr")).string(), io::encode_record(s.record));
  if (run.o->synth.csv) {
    run.write((fs::path(dir) / (id + "_accel.csv")).string(), io::format_accel_csv(s.record));
    run.write((fs::path(dir) / (id + "_depth.csv")).string(), io::format_depth_csv(s.record));
    run.write((fs::path(dir) / (id + "_buzz.csv")).string(), io::format_buzz_intervals_csv(s.buzzes));
  }
}

std::string events_csv(const std::vector<eval::EventInterval>& ev) {
  std::string out = "start_s,end_s\n";
  for (const auto& e : ev) out += io::fmt_double(e.start_s) + ',' + io::fmt_double(e.end_s) + '\n';
  return out;
}

void write_eval(Run& run, const pipeline::EvalResult& r, const std::string& dir) {
  run.write((fs::path(dir) / "match_report.csv").string(), io::format_match_csv(r.match));
  run.write((fs::path(dir) / "dive_report.csv").string(), io::format_dive_report_csv(r.dives));
  run.write((fs::path(dir) / "confusion.json").string(), io::format_confusion_json(r.dives.confusion));
  run.write((fs::path(dir) / "differences.csv").string(), io::format_differences_csv(r.differences));
}

std::vector<SweepRow> jerk_sweep(const WhaleRecord& r, const Options& o) {
  const auto j = compute_jerk(r, o.jerk.norm ? JerkMode::EuclideanNorm : JerkMode::PerAxis);
  const auto rms = rms_jerk(j);
  const auto labels = window_buzz_labels(r.buzz, rms.size());
  return sweep(rms, labels, o.jerk.sweep);
}

models::Part parse_part(const std::string& s) {
  if (s == "train") return models::Part::Train;
  if (s == "val") return models::Part::Val;
  return models::Part::Test;
}

std::vector<pipeline::EvalInput> eval_inputs(const std::vector<WhaleRecord>& recs,
                                             const std::vector<std::vector<std::uint8_t>>& preds,
                                             const std::string& split_mode, std::size_t fold_idx,
                                             const std::string& part) {
  std::vector<pipeline::EvalInput> inputs;
  if (part == "all") {
    for (std::size_t w = 0; w < recs.size(); ++w) inputs.push_back({&recs[w], &preds[w], 0, recs[w].size()});
    return inputs;
  }
  const auto plan = models::split(recs, models::parse_split_mode(split_mode));
  if (fold_idx >= plan.folds.size())
    throw ConfigError("fold " + std::to_string(fold_idx) + " out of range (" + std::to_string(plan.folds.size()) +
                      " folds)");
  for (std::size_t w = 0; w < recs.size(); ++w)
    if (auto r = pipeline::part_range(plan.folds[fold_idx], w, parse_part(part)))
      inputs.push_back({&recs[w], &preds[w], r->first, r->second});
  return inputs;
}

// ---------------------------------------------------------------- subcommands

void cmd_synth(Run& run) {
  for (const auto& s : generate(*run.o)) write_synth(run, s, run.o->out_dir);
  run.write_manifest((fs::path(run.o->out_dir) / "manifest.json").string());
}

void cmd_dives(Run& run) {
  const auto r = load_single(run);
  run.write(run.o->out, io::format_dives_csv(detect_dives(r.depth, run.o->in.dive), r.sample_rate));
  run.write_manifest(run.o->out + ".manifest.json");
}

void cmd_featurize(Run& run) {
  const auto r = load_single(run);
  run.write(run.o->out, io::format_feature_csv(featurize(r, run.o->window, phase_rule(*run.o))));
  run.write_manifest(run.o->out + ".manifest.json");
}

void cmd_train(Run& run) {
  const auto& o = *run.o;
  const auto kind = pipeline::parse_model_kind(o.train.model);
  const auto settings = train_settings(o);
  models::AnyModel model;
  if (!o.features.empty()) {
    if (kind == pipeline::ModelKind::UNet) throw ConfigError("the U-Net trains on records, not feature tables");
    if (!o.in.records.empty() || !o.in.raw.empty()) throw ConfigError("give either --features or record inputs");
    models::Dataset d;
    for (const auto& p : o.features) {
      run.input(p);
      models::append_rows(d, io::read_feature_csv(p));
    }
    if (kind == pipeline::ModelKind::LogReg) model = models::logreg_fit(d, settings.logreg);
    else model = models::rf_fit(d, settings.forest);
  } else {
    const auto recs = load_inputs(run);
    const auto plan = models::split(recs, models::parse_split_mode(o.train.split));
    if (o.train.fold >= plan.folds.size()) throw ConfigError("--fold out of range");
    auto res = pipeline::train(kind, recs, plan.folds[o.train.fold], settings, [](const models::EpochStats& e) {
      std::cerr << "epoch " << e.epoch << " train_dice " << e.train_dice << " val_dice " << e.val_dice << '\n';
    });
    model = std::move(res.model);
    if (kind == pipeline::ModelKind::UNet)
      run.write(o.trace.empty() ? o.checkpoint + ".trace.csv" : o.trace, io::format_trace_csv(res.trace));
  }
  run.write(o.checkpoint, models::encode_checkpoint(model));
  run.write_manifest(o.checkpoint + ".manifest.json");
}

void cmd_predict(Run& run) {
  const auto& o = *run.o;
  run.input(o.checkpoint);
  const auto model = models::checkpoint_load(o.checkpoint);
  const auto r = load_single(run);
  const auto p = models::predict_record(model, r, o.window);
  run.write(o.out, io::format_predictions_csv(p.prob, p.label));
  if (!o.events.empty())
    run.write(o.events, events_csv(eval::extract_events(p.label, r.sample_rate, eval::EventSource::Prediction)));
  run.write_manifest(o.out + ".manifest.json");
}

void cmd_evaluate(Run& run) {
  const auto& o = *run.o;
  const auto recs = load_inputs(run);
  if (o.preds.size() != recs.size())
    throw ConfigError(std::to_string(o.preds.size()) + " prediction files for " + std::to_string(recs.size()) +
                      " records");
  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& p : o.preds) {
    run.input(p);
    labels.push_back(io::read_predictions_csv(p).label);
  }
  const auto inputs = eval_inputs(recs, labels, o.eval.split, o.eval.fold, o.eval.part);
  write_eval(run, pipeline::evaluate(inputs, eval_settings(o)), o.out_dir);
  run.write_manifest((fs::path(o.out_dir) / "manifest.json").string());
}

void cmd_jerks(Run& run) {
  const auto r = load_single(run);
  run.write(run.o->out, io::format_sweep_csv(jerk_sweep(r, *run.o)));
  run.write_manifest(run.o->out + ".manifest.json");
}

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string("stage ") + name + ": " + e.what());
  }
}

void cmd_pipeline(Run& run) {
  const auto& o = *run.o;
  const fs::path dir(o.out_dir);
  std::vector<WhaleRecord> recs;
  if (o.in.records.empty() && o.in.raw.empty()) {
    recs = stage("synth", [&] {
      std::vector<WhaleRecord> out;
      for (auto& s : generate(o)) {
        write_synth(run, s, (dir / "records").string());
        out.push_back(std::move(s.record));
      }
      return out;
    });
  } else {
    recs = stage("ingest", [&] { return load_inputs(run); });
  }
  const auto kind = pipeline::parse_model_kind(o.train.model);
  stage("dives", [&] {
    for (const auto& r : recs)
      run.write((dir / "dives" / (r.whale_id + ".csv")).string(),
                io::format_dives_csv(detect_dives(r.depth, o.in.dive), r.sample_rate));
  });
  if (kind != pipeline::ModelKind::UNet)
    stage("featurize", [&] {
      for (const auto& r : recs)
        run.write((dir / "features" / (r.whale_id + ".csv")).string(),
                  io::format_feature_csv(featurize(r, o.window, phase_rule(o))));
    });
  const auto plan = stage("split", [&] { return models::split(recs, models::parse_split_mode(o.train.split)); });
  if (o.train.fold >= plan.folds.size()) throw Error("stage split: --fold out of range");
  const auto& fold = plan.folds[o.train.fold];
  const auto trained = stage("train", [&] {
    auto res = pipeline::train(kind, recs, fold, train_settings(o), [](const models::EpochStats& e) {
      std::cerr << "epoch " << e.epoch << " train_dice " << e.train_dice << " val_dice " << e.val_dice << '\n';
    });
    run.write((dir / "model.bzsg").string(), models::encode_checkpoint(res.model));
    if (kind == pipeline::ModelKind::UNet)
      run.write((dir / "model.trace.csv").string(), io::format_trace_csv(res.trace));
    return res;
  });
  std::vector<std::vector<std::uint8_t>> labels;
  stage("predict", [&] {
    for (const auto& r : recs) {
      auto p = models::predict_record(trained.model, r, o.window);
      run.write((dir / "predictions" / (r.whale_id + ".csv")).string(), io::format_predictions_csv(p.prob, p.label));
      labels.push_back(std::move(p.label));
    }
  });
  stage("evaluate", [&] {
    const auto inputs = eval_inputs(recs, labels, o.train.split, o.train.fold, o.eval.part);
    write_eval(run, pipeline::evaluate(inputs, eval_settings(o)), (dir / "eval").string());
  });
  stage("jerks", [&] {
    for (const auto& r : recs)
      run.write((dir / "jerks" / (r.whale_id + ".csv")).string(), io::format_sweep_csv(jerk_sweep(r, o)));
  });
  run.write_manifest((dir / "manifest.json").string());
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(args);
  } catch (const std::exception& e) {
    std::cerr << "buzzdet: config error: " << e.what() << '\n';
    return 2;
  }
  Options o;
  auto app = build_app(o);
  try {
    std::vector<std::string> rev(args.begin() + 1, args.end());
    std::reverse(rev.begin(), rev.end());
    app->parse(rev);
  } catch (const CLI::ParseError& e) {
    return app->exit(e);
  }
  CLI::App* sub = app->get_subcommands().front();
  Run run{sub, &o};
  static const std::map<std::string, std::function<void(Run&)>> commands = {
      {"synth", cmd_synth},     {"dives", cmd_dives},       {"featurize", cmd_featurize}, {"train", cmd_train},
      {"predict", cmd_predict}, {"evaluate", cmd_evaluate}, {"jerks", cmd_jerks},         {"pipeline", cmd_pipeline}};
  try {
    commands.at(sub->get_name())(run);
  } catch (const std::exception& e) {
    std::cerr << "buzzdet " << sub->get_name() << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
