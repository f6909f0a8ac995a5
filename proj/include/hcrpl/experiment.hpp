// Operator surface behind the CLI: strict JSON experiment configs, flag
// presets, sweep expansion, and the generate / run / report commands.
// Commands return process exit codes (0 ok, 1 runtime/domain error,
// 2 usage/config error) so they can be driven from tests directly.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hcrpl/dataset.hpp"
#include "hcrpl/error.hpp"
#include "hcrpl/pipeline.hpp"

#include <nlohmann/json.hpp>

namespace hcrpl {

struct ExperimentConfig {
  std::optional<ShiftSpec> dataset;       // inline synthetic benchmark
  std::optional<std::string> source_csv;  // or pre-generated files
  std::optional<std::string> target_csv;
  int csv_classes = 0;  // class count for CSV inputs
  RunConfig run;
  std::string out_dir = "runs/out";
  std::vector<double> sweep_alpha;
  std::vector<double> sweep_temperature;
};

namespace detail {

// Thin cursor over a json object that rejects unknown keys and reports
// every problem with its JSON-pointer path.
struct JsonView {
  const nlohmann::json& j;
  std::string path;

  [[noreturn]] void bad(const std::string& key,
                        const std::string& message) const {
    fail(Errc::config_error, path + "/" + key + ": " + message);
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& item : j.items()) {
      bool known = false;
      for (std::string_view k : keys)
        if (item.key() == k) { known = true; break; }
      if (!known)
        fail(Errc::config_error, path + "/" + item.key() + ": unknown key");
    }
  }

  bool has(const char* key) const { return j.contains(key); }

  JsonView child(const char* key) const {
    if (!j.at(key).is_object()) bad(key, "expected an object");
    return JsonView{j.at(key), path + "/" + key};
  }

  int get_int(const char* key) const {
    if (!j.at(key).is_number_integer()) bad(key, "expected an integer");
    return j.at(key).get<int>();
  }
  int get_int(const char* key, int def) const {
    return has(key) ? get_int(key) : def;
  }

  std::uint64_t get_u64(const char* key, std::uint64_t def) const {
    if (!has(key)) return def;
    if (!j.at(key).is_number_integer()) bad(key, "expected an integer");
    return j.at(key).get<std::uint64_t>();
  }

  double get_num(const char* key) const {
    if (!j.at(key).is_number()) bad(key, "expected a number");
    return j.at(key).get<double>();
  }
  double get_num(const char* key, double def) const {
    return has(key) ? get_num(key) : def;
  }

  bool get_bool(const char* key, bool def) const {
    if (!has(key)) return def;
    if (!j.at(key).is_boolean()) bad(key, "expected a boolean");
    return j.at(key).get<bool>();
  }

  std::string get_str(const char* key) const {
    if (!j.at(key).is_string()) bad(key, "expected a string");
    return j.at(key).get<std::string>();
  }

  std::vector<double> get_num_array(const char* key) const {
    if (!j.at(key).is_array()) bad(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
      if (!v.is_number()) bad(key, "expected an array of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
};

inline ShiftSpec parse_shift_spec(const JsonView& v) {
  v.allow_only({"classes", "dim", "n_source_per_class", "n_target_per_class",
                "class_centers", "center_scale", "within_class_std",
                "target_translation", "target_rotation_angle", "hard_class",
                "source_class_weights", "seed"});
  ShiftSpec spec;
  spec.num_classes = v.get_int("classes");
  spec.dim = v.get_int("dim");
  if (spec.num_classes < 2) v.bad("classes", "must be >= 2");
  if (spec.dim < 1) v.bad("dim", "must be >= 1");
  spec.n_source_per_class = v.get_int("n_source_per_class");
  spec.n_target_per_class = v.get_int("n_target_per_class");
  if (spec.n_source_per_class < 1) v.bad("n_source_per_class", "must be >= 1");
  if (spec.n_target_per_class < 1) v.bad("n_target_per_class", "must be >= 1");

  if (v.has("class_centers") && v.has("center_scale"))
    v.bad("center_scale", "give class_centers or center_scale, not both");
  if (v.has("class_centers")) {
    const auto& rows = v.j.at("class_centers");
    if (!rows.is_array()) v.bad("class_centers", "expected an array of rows");
    for (const auto& row : rows) {
      if (!row.is_array()) v.bad("class_centers", "expected an array of rows");
      std::vector<double> center;
      for (const auto& x : row) {
        if (!x.is_number()) v.bad("class_centers", "expected numeric cells");
        center.push_back(x.get<double>());
      }
      spec.class_centers.push_back(std::move(center));
    }
    if (spec.class_centers.size() != static_cast<std::size_t>(spec.num_classes))
      v.bad("class_centers", "need one row per class");
  } else if (v.has("center_scale")) {
    spec.class_centers = axis_class_centers(spec.num_classes, spec.dim,
                                            v.get_num("center_scale"));
  } else {
    v.bad("class_centers", "missing (or give center_scale)");
  }

  spec.within_class_std = v.get_num("within_class_std");
  if (!(spec.within_class_std > 0.0))
    v.bad("within_class_std", "must be positive");
  if (v.has("target_translation"))
    spec.target_translation = v.get_num_array("target_translation");
  spec.target_rotation_angle = v.get_num("target_rotation_angle", 0.0);

  if (v.has("hard_class")) {
    JsonView h = v.child("hard_class");
    h.allow_only({"victim", "confusable", "pull_fraction"});
    HardClassSpec hc;
    hc.victim = h.get_int("victim");
    hc.confusable = h.get_int("confusable");
    hc.pull_fraction = h.get_num("pull_fraction");
    if (hc.victim < 0 || hc.victim >= spec.num_classes)
      h.bad("victim", "out of range");
    if (hc.confusable < 0 || hc.confusable >= spec.num_classes)
      h.bad("confusable", "out of range");
    if (hc.victim == hc.confusable) h.bad("confusable", "must differ from victim");
    if (!(hc.pull_fraction >= 0.0 && hc.pull_fraction <= 1.0))
      h.bad("pull_fraction", "must be in [0, 1]");
    spec.hard_class = hc;
  }

  if (v.has("source_class_weights")) {
    std::vector<double> w = v.get_num_array("source_class_weights");
    if (w.size() != static_cast<std::size_t>(spec.num_classes))
      v.bad("source_class_weights", "need one weight per class");
    try {
      spec.source_class_weights = ClassProportion(std::move(w));
    } catch (const Error& e) {
      v.bad("source_class_weights", e.what());
    }
  }

  spec.seed = v.get_u64("seed", 0);
  return spec;
}

inline QSource parse_q_source(const JsonView& v, const char* key) {
  const std::string s = v.get_str(key);
  if (s == "source-proportion") return QSource::source_proportion;
  if (s == "explicit") return QSource::explicit_prior;
  if (s == "target-oracle") return QSource::target_oracle;
  v.bad(key, "expected source-proportion | explicit | target-oracle");
}

inline RunConfig parse_run_config(const JsonView& v) {
  v.allow_only({"rounds", "epochs_per_round", "alpha", "temperature",
                "portion", "pretrain_epochs", "first_round_lr",
                "later_round_lr", "use_apc", "use_se", "use_te",
                "accumulate_pseudo", "q_source", "q_explicit", "ssda_shots",
                "train", "seed"});
  RunConfig cfg;
  cfg.rounds = v.get_int("rounds", cfg.rounds);
  cfg.epochs_per_round = v.get_int("epochs_per_round", cfg.epochs_per_round);
  cfg.alpha = v.get_num("alpha", cfg.alpha);
  cfg.temperature = v.get_num("temperature", cfg.temperature);
  if (v.has("portion")) {
    JsonView p = v.child("portion");
    p.allow_only({"slope", "intercept", "cap"});
    cfg.portion.slope = p.get_num("slope", cfg.portion.slope);
    cfg.portion.intercept = p.get_num("intercept", cfg.portion.intercept);
    cfg.portion.cap = p.get_num("cap", cfg.portion.cap);
  }
  cfg.pretrain_epochs = v.get_int("pretrain_epochs", cfg.pretrain_epochs);
  cfg.first_round_lr = v.get_num("first_round_lr", cfg.first_round_lr);
  cfg.later_round_lr = v.get_num("later_round_lr", cfg.later_round_lr);
  cfg.use_apc = v.get_bool("use_apc", cfg.use_apc);
  cfg.use_se = v.get_bool("use_se", cfg.use_se);
  cfg.use_te = v.get_bool("use_te", cfg.use_te);
  cfg.accumulate_pseudo = v.get_bool("accumulate_pseudo", cfg.accumulate_pseudo);
  if (v.has("q_source")) cfg.q_source = parse_q_source(v, "q_source");
  if (v.has("q_explicit")) {
    std::vector<double> q = v.get_num_array("q_explicit");
    try {
      cfg.q_explicit = ClassProportion(std::move(q));
    } catch (const Error& e) {
      v.bad("q_explicit", e.what());
    }
  }
  cfg.ssda_shots = v.get_int("ssda_shots", cfg.ssda_shots);
  if (v.has("train")) {
    JsonView t = v.child("train");
    t.allow_only({"momentum", "weight_decay", "batch_size", "augment_std"});
    cfg.train.momentum = t.get_num("momentum", cfg.train.momentum);
    cfg.train.weight_decay = t.get_num("weight_decay", cfg.train.weight_decay);
    cfg.train.batch_size = t.get_int("batch_size", cfg.train.batch_size);
    cfg.train.augment_std = t.get_num("augment_std", cfg.train.augment_std);
    if (cfg.train.batch_size < 1) t.bad("batch_size", "must be >= 1");
    if (!(cfg.train.momentum >= 0.0 && cfg.train.momentum < 1.0))
      t.bad("momentum", "must be in [0, 1)");
    if (cfg.train.weight_decay < 0.0) t.bad("weight_decay", "must be >= 0");
    if (cfg.train.augment_std < 0.0) t.bad("augment_std", "must be >= 0");
  }
  cfg.seed = v.get_u64("seed", cfg.seed);
  return cfg;
}

inline nlohmann::json shift_spec_to_json(const ShiftSpec& spec) {
  nlohmann::json j;
  j["classes"] = spec.num_classes;
  j["dim"] = spec.dim;
  j["n_source_per_class"] = spec.n_source_per_class;
  j["n_target_per_class"] = spec.n_target_per_class;
  j["class_centers"] = spec.class_centers;
  j["within_class_std"] = spec.within_class_std;
  if (!spec.target_translation.empty())
    j["target_translation"] = spec.target_translation;
  if (spec.target_rotation_angle != 0.0)
    j["target_rotation_angle"] = spec.target_rotation_angle;
  if (spec.hard_class)
    j["hard_class"] = {{"victim", spec.hard_class->victim},
                       {"confusable", spec.hard_class->confusable},
                       {"pull_fraction", spec.hard_class->pull_fraction}};
  if (spec.source_class_weights)
    j["source_class_weights"] = spec.source_class_weights->values();
  j["seed"] = spec.seed;
  return j;
}

inline const char* q_source_name(QSource q) {
  switch (q) {
    case QSource::source_proportion: return "source-proportion";
    case QSource::explicit_prior: return "explicit";
    case QSource::target_oracle: return "target-oracle";
  }
  return "source-proportion";
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["rounds"] = cfg.rounds;
  j["epochs_per_round"] = cfg.epochs_per_round;
  j["alpha"] = cfg.alpha;
  j["temperature"] = cfg.temperature;
  j["portion"] = {{"slope", cfg.portion.slope},
                  {"intercept", cfg.portion.intercept},
                  {"cap", cfg.portion.cap}};
  j["pretrain_epochs"] = cfg.pretrain_epochs;
  j["first_round_lr"] = cfg.first_round_lr;
  j["later_round_lr"] = cfg.later_round_lr;
  j["use_apc"] = cfg.use_apc;
  j["use_se"] = cfg.use_se;
  j["use_te"] = cfg.use_te;
  j["accumulate_pseudo"] = cfg.accumulate_pseudo;
  j["q_source"] = q_source_name(cfg.q_source);
  if (cfg.q_explicit) j["q_explicit"] = cfg.q_explicit->values();
  j["ssda_shots"] = cfg.ssda_shots;
  j["train"] = {{"momentum", cfg.train.momentum},
                {"weight_decay", cfg.train.weight_decay},
                {"batch_size", cfg.train.batch_size},
                {"augment_std", cfg.train.augment_std}};
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& root) {
  if (!root.is_object())
    fail(Errc::config_error, "/: expected a top-level object");
  detail::JsonView v{root, ""};
  v.allow_only({"dataset", "data", "run", "out_dir", "sweep"});

  ExperimentConfig cfg;
  if (v.has("dataset")) cfg.dataset = detail::parse_shift_spec(v.child("dataset"));
  if (v.has("data")) {
    detail::JsonView d = v.child("data");
    d.allow_only({"source_csv", "target_csv", "classes"});
    cfg.source_csv = d.get_str("source_csv");
    cfg.target_csv = d.get_str("target_csv");
    cfg.csv_classes = d.get_int("classes");
    if (cfg.csv_classes < 2) d.bad("classes", "must be >= 2");
  }
  if (v.has("run")) cfg.run = detail::parse_run_config(v.child("run"));
  if (v.has("out_dir")) cfg.out_dir = v.get_str("out_dir");
  if (v.has("sweep")) {
    detail::JsonView s = v.child("sweep");
    s.allow_only({"alpha", "temperature"});
    if (s.has("alpha")) cfg.sweep_alpha = s.get_num_array("alpha");
    if (s.has("temperature"))
      cfg.sweep_temperature = s.get_num_array("temperature");
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open config: " + path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, std::string("invalid json: ") + e.what());
  }
  return parse_experiment_config(root);
}

// Resolved echo of one run, valid as input to `run` again; sweeps are
// already expanded, so reproducing a sub-run is a plain rerun.
inline nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (cfg.dataset) j["dataset"] = detail::shift_spec_to_json(*cfg.dataset);
  if (cfg.source_csv)
    j["data"] = {{"source_csv", *cfg.source_csv},
                 {"target_csv", *cfg.target_csv},
                 {"classes", cfg.csv_classes}};
  j["run"] = detail::run_config_to_json(cfg.run);
  j["out_dir"] = cfg.out_dir;
  return j;
}

// Flag bundles: cbst is the ablation baseline (no calibration, no
// ensembling, no sharpening), hcrpl the full desk-scale method, paper the
// published schedule of 30 rounds x 20 epochs with fine-tuning rates.
inline void apply_preset(RunConfig& cfg, const std::string& name) {
  if (name == "cbst") {
    cfg.use_apc = false;
    cfg.use_se = false;
    cfg.use_te = false;
    cfg.temperature = 1.0;
  } else if (name == "hcrpl") {
    cfg.use_apc = true;
    cfg.use_se = true;
    cfg.use_te = true;
    cfg.temperature = 0.5;
    cfg.alpha = 0.95;
  } else if (name == "paper") {
    apply_preset(cfg, "hcrpl");
    cfg.rounds = 30;
    cfg.epochs_per_round = 20;
    cfg.first_round_lr = 5e-5;
    cfg.later_round_lr = 1.5e-5;
  } else {
    fail(Errc::config_error, "unknown preset: " + name);
  }
}

// The frozen desk-scale benchmark: five classes in eight dimensions with a
// global shift plus one class pulled most of the way toward a confusable
// neighbor, so naive self-training entrenches the confusion.
inline ShiftSpec standard_benchmark_spec(std::uint64_t seed) {
  ShiftSpec spec;
  spec.num_classes = 5;
  spec.dim = 8;
  spec.n_source_per_class = 200;
  spec.n_target_per_class = 200;
  spec.class_centers = axis_class_centers(5, 8, 3.0);
  spec.within_class_std = 0.8;
  spec.target_translation = {0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  spec.target_rotation_angle = 0.25;
  spec.hard_class = HardClassSpec{3, 1, 0.7};
  spec.seed = seed;
  return spec;
}

inline RunConfig standard_run_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.train.augment_std = 0.3;
  cfg.seed = seed;
  return cfg;
}

// ---- commands -------------------------------------------------------------

namespace detail {

inline int exit_code_for(const Error& e) {
  return e.code() == Errc::config_error ? 2 : 1;
}

inline std::string trim_dir(std::string dir) {
  while (dir.size() > 1 && dir.back() == '/') dir.pop_back();
  return dir;
}

inline std::string sweep_value_name(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct MetricsTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& dir) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(Errc::schema_error, "metrics.csv in " + dir + " lacks column " + name);
  }
};

inline MetricsTable read_metrics_csv(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "metrics.csv").string();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::missing_metrics, "no metrics.csv in " + dir);
  MetricsTable table;
  std::string line;
  if (!std::getline(in, line))
    fail(Errc::missing_metrics, "empty metrics.csv in " + dir);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != table.header.size())
      fail(Errc::schema_error, "ragged metrics.csv in " + dir);
    table.rows.push_back(std::move(cells));
  }
  if (table.rows.empty())
    fail(Errc::missing_metrics, "metrics.csv in " + dir + " has no rows");
  return table;
}

// Loads the run's datasets either from the inline spec or from CSVs.
inline std::pair<DomainDataset, DomainDataset> materialize_data(
    const ExperimentConfig& cfg) {
  if (cfg.dataset) return generate_shifted_pair(*cfg.dataset);
  if (cfg.source_csv && cfg.target_csv)
    return {load_csv(*cfg.source_csv, cfg.csv_classes, DomainTag::source),
            load_csv(*cfg.target_csv, cfg.csv_classes, DomainTag::target)};
  fail(Errc::config_error, "/: need either dataset or data.{source_csv,target_csv}");
}

inline void execute_one_run(const ExperimentConfig& resolved) {
  auto [source, target] = materialize_data(resolved);
  const int C = source.num_classes;
  RunResult result = run_full(std::move(source), std::move(target), resolved.run);
  write_run_dir(resolved.out_dir, experiment_to_json(resolved), result, C);
}

}  // namespace detail

struct RunOverrides {
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

inline int cmd_generate(const std::string& config_path,
                        const std::string& out_dir_flag,
                        std::ostream& err = std::cerr) {
  try {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (!cfg.dataset)
      fail(Errc::config_error, "/dataset: required by generate");
    const std::string out =
        out_dir_flag.empty() ? cfg.out_dir : out_dir_flag;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) fail(Errc::io_error, "cannot create " + out);

    auto [source, target] = generate_shifted_pair(*cfg.dataset);
    namespace fs = std::filesystem;
    save_csv(source, (fs::path(out) / "source.csv").string());
    save_csv(target, (fs::path(out) / "target.csv").string());
    nlohmann::json manifest;
    manifest["dataset"] = detail::shift_spec_to_json(*cfg.dataset);
    manifest["source_csv"] = "source.csv";
    manifest["target_csv"] = "target.csv";
    std::ofstream mout(fs::path(out) / "manifest.json", std::ios::binary);
    if (!mout) fail(Errc::io_error, "cannot write manifest.json in " + out);
    mout << manifest.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    err << "generate: " << e.what() << "\n";
    return detail::exit_code_for(e);
  }
}

inline int cmd_run(const std::string& config_path, const RunOverrides& over,
                   std::ostream& err = std::cerr) {
  try {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (over.preset) apply_preset(cfg.run, *over.preset);
    if (over.seed) cfg.run.seed = *over.seed;
    if (over.out_dir) cfg.out_dir = *over.out_dir;

    if (cfg.sweep_alpha.empty() && cfg.sweep_temperature.empty()) {
      detail::execute_one_run(cfg);
      return 0;
    }
    const std::vector<double> alphas =
        cfg.sweep_alpha.empty() ? std::vector<double>{cfg.run.alpha}
                                : cfg.sweep_alpha;
    const std::vector<double> temps = cfg.sweep_temperature.empty()
                                          ? std::vector<double>{cfg.run.temperature}
                                          : cfg.sweep_temperature;
    for (double a : alphas) {
      for (double t : temps) {
        ExperimentConfig sub = cfg;
        sub.sweep_alpha.clear();
        sub.sweep_temperature.clear();
        sub.run.alpha = a;
        sub.run.temperature = t;
        std::string name;
        if (!cfg.sweep_alpha.empty())
          name += "alpha" + detail::sweep_value_name(a);
        if (!cfg.sweep_temperature.empty()) {
          if (!name.empty()) name += "_";
          name += "T" + detail::sweep_value_name(t);
        }
        sub.out_dir =
            (std::filesystem::path(cfg.out_dir) / name).string();
        detail::execute_one_run(sub);
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "run: " << e.what() << "\n";
    return detail::exit_code_for(e);
  }
}

inline int cmd_report(const std::vector<std::string>& run_dirs,
                      const std::string& out_dir,
                      std::ostream& out_stream = std::cout,
                      std::ostream& err = std::cerr) {
  if (run_dirs.empty()) {
    err << "report: no run directories given\n";
    return 2;
  }
  try {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(Errc::io_error, "cannot create " + out_dir);

    struct RunRow {
      std::string id;
      detail::MetricsTable table;
    };
    std::vector<RunRow> runs;
    for (const std::string& dir : run_dirs) {
      RunRow row;
      row.id = fs::path(detail::trim_dir(dir)).filename().string();
      row.table = detail::read_metrics_csv(dir);
      if (!runs.empty() && row.table.header != runs.front().table.header)
        fail(Errc::schema_error, "metrics headers differ across runs: " + dir);
      runs.push_back(std::move(row));
    }

    // Joined table, original cells kept verbatim.
    {
      std::ofstream out(fs::path(out_dir) / "report.csv", std::ios::binary);
      if (!out) fail(Errc::io_error, "cannot write report.csv");
      out << "run_id";
      for (const std::string& h : runs.front().table.header) out << ',' << h;
      out << "\n";
      for (const RunRow& run : runs)
        for (const auto& cells : run.table.rows) {
          out << run.id;
          for (const std::string& c : cells) out << ',' << c;
          out << "\n";
        }
    }

    auto final_value = [&](const RunRow& run, const char* column) {
      const std::size_t idx = run.table.column(column, run.id);
      const std::string& cell = run.table.rows.back()[idx];
      return std::stod(cell);
    };
    auto mean_std = [](const std::vector<double>& xs) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= static_cast<double>(xs.size());
      return std::pair<double, double>(mean, std::sqrt(var));
    };

    nlohmann::json summary;
    std::vector<double> final_acc, final_worst;
    nlohmann::json per_run = nlohmann::json::array();
    for (const RunRow& run : runs) {
      const double acc = final_value(run, "test_accuracy");
      const double worst = final_value(run, "worst_class_f1");
      const double macro = final_value(run, "macro_f1");
      final_acc.push_back(acc);
      final_worst.push_back(worst);
      per_run.push_back({{"run_id", run.id},
                         {"rounds", run.table.rows.size()},
                         {"final_test_accuracy", acc},
                         {"final_worst_class_f1", worst},
                         {"final_macro_f1", macro}});
    }
    summary["runs"] = per_run;
    const auto [acc_mean, acc_std] = mean_std(final_acc);
    const auto [worst_mean, worst_std] = mean_std(final_worst);
    summary["mean_final_test_accuracy"] = acc_mean;
    summary["std_final_test_accuracy"] = acc_std;
    summary["mean_final_worst_class_f1"] = worst_mean;
    summary["std_final_worst_class_f1"] = worst_std;

    std::ofstream sout(fs::path(out_dir) / "summary.json", std::ios::binary);
    if (!sout) fail(Errc::io_error, "cannot write summary.json");
    sout << summary.dump(2) << "\n";
    out_stream << summary.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    err << "report: " << e.what() << "\n";
    return detail::exit_code_for(e);
  }
}

}  // namespace hcrpl
