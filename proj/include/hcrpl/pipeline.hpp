// Round-based orchestration: pretrain on the labeled set, then alternate
// training, predicting, and selecting phases, growing the pseudo-labeled
// set each round.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcrpl/dataset.hpp"
#include "hcrpl/ensemble.hpp"
#include "hcrpl/error.hpp"
#include "hcrpl/metrics.hpp"
#include "hcrpl/model.hpp"
#include "hcrpl/prob.hpp"
#include "hcrpl/rng.hpp"
#include "hcrpl/select.hpp"

#include <nlohmann/json.hpp>

namespace hcrpl {

enum class QSource {
  source_proportion,  // prior from the (possibly composed) source labels
  explicit_prior,     // prior supplied in the config
  target_oracle,      // prior from hidden target labels; analysis only
};

struct RunConfig {
  // Desk-scale defaults; the "paper" preset switches to 30 rounds of 20
  // epochs with the fine-tuning learning rates.
  int rounds = 10;
  int epochs_per_round = 5;
  double alpha = 0.95;        // EMA momentum
  double temperature = 0.5;   // sharpening temperature
  PortionSchedule portion;
  int pretrain_epochs = 20;
  double first_round_lr = 0.05;
  double later_round_lr = 0.015;
  bool use_apc = true;
  bool use_se = true;
  bool use_te = true;
  bool accumulate_pseudo = false;  // keep prior-round selections not re-won
  QSource q_source = QSource::source_proportion;
  std::optional<ClassProportion> q_explicit;
  int ssda_shots = 0;
  TrainConfig train;
  std::uint64_t seed = 0;
};

struct RoundReport {
  int round = 0;
  double portion_percent = 0.0;
  double test_accuracy = 0.0;
  std::int64_t pseudo_count = 0;
  double pseudo_accuracy = 1.0;  // 1 for an empty pseudo set, flagged below
  double false_ratio = 0.0;
  bool pseudo_empty = true;
  PrfReport prf;
  ClassProportion predictive_proportion;
  ConfusionMatrix confusion;
};

struct RunResult {
  RoundReport pretrain_report;         // round 0, before any selection
  std::vector<RoundReport> reports;    // rounds 1..Rs
  ModelParams final_params;
};

namespace detail {

inline void validate_run_config(const RunConfig& cfg) {
  if (cfg.rounds < 1) fail(Errc::config_error, "rounds must be >= 1");
  if (cfg.epochs_per_round < 1)
    fail(Errc::config_error, "epochs_per_round must be >= 1");
  if (cfg.pretrain_epochs < 0)
    fail(Errc::config_error, "pretrain_epochs must be >= 0");
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0))
    fail(Errc::config_error, "alpha must be in [0, 1)");
  if (!(cfg.temperature > 0.0))
    fail(Errc::config_error, "temperature must be positive");
  if (cfg.ssda_shots < 0) fail(Errc::config_error, "ssda_shots must be >= 0");
  if (cfg.q_source == QSource::target_oracle && cfg.ssda_shots > 0)
    fail(Errc::config_error,
         "target-oracle prior is an analysis mode and is refused under ssda");
  if (cfg.q_source == QSource::explicit_prior && !cfg.q_explicit)
    fail(Errc::config_error, "explicit prior requested but none given");
}

}  // namespace detail

// Owns the round loop state. Training touches only visible labels; hidden
// target labels are read exclusively when scoring reports (and for the
// target-oracle prior, which is refused outside analysis runs).
class Runner {
 public:
  Runner(DomainDataset source, DomainDataset target, RunConfig cfg)
      : cfg_(std::move(cfg)),
        train_rng_(mix_seed(cfg_.seed, 1)),
        predict_rng_(mix_seed(cfg_.seed, 2)) {
    detail::validate_run_config(cfg_);
    if (source.dim != target.dim || source.num_classes != target.num_classes)
      fail(Errc::dimension_mismatch, "source/target shape mismatch");
    if (source.samples.empty()) fail(Errc::empty_dataset, "source is empty");
    if (target.samples.empty()) fail(Errc::empty_dataset, "target is empty");

    if (cfg_.ssda_shots > 0) {
      auto [s, t] = compose_ssda_source(source, target, cfg_.ssda_shots,
                                        mix_seed(cfg_.seed, 3));
      source_ = std::move(s);
      target_ = std::move(t);
    } else {
      source_ = std::move(source);
      target_ = std::move(target);
    }

    switch (cfg_.q_source) {
      case QSource::source_proportion: q_ = class_proportion(source_); break;
      case QSource::explicit_prior:
        if (cfg_.q_explicit->size() !=
            static_cast<std::size_t>(source_.num_classes))
          fail(Errc::config_error, "explicit prior has wrong class count");
        q_ = *cfg_.q_explicit;
        break;
      case QSource::target_oracle: q_ = hidden_class_proportion(target_); break;
    }

    store_.alpha = cfg_.use_te ? cfg_.alpha : 0.0;
    train_set_ = source_.samples;
  }

  // Trains on the labeled set alone and seeds the ensemble table with one
  // prediction pass from the pretrained model.
  void pretrain() {
    params_ = init_params(source_.num_classes, source_.dim,
                          mix_seed(cfg_.seed, 0));
    TrainConfig tc = cfg_.train;
    tc.learning_rate = cfg_.first_round_lr;
    for (int e = 0; e < cfg_.pretrain_epochs; ++e)
      params_ = sgd_epoch(params_, train_set_, tc, train_rng_, &velocity_);
    te_update(store_, fresh_predictions());
    pretrain_report_ = make_report(0, 0.0);
  }

  // One round: Es epochs of train + predict, then select and rebuild the
  // training set as source plus pseudo-labeled targets.
  RoundReport run_round() {
    const int r = ++round_;
    TrainConfig tc = cfg_.train;
    tc.learning_rate = r == 1 ? cfg_.first_round_lr : cfg_.later_round_lr;
    for (int e = 0; e < cfg_.epochs_per_round; ++e) {
      params_ = sgd_epoch(params_, train_set_, tc, train_rng_, &velocity_);
      te_update(store_, fresh_predictions());
    }

    const double percent = cfg_.portion.at_round(r);
    std::vector<ScoredPrediction> scored(store_.table.begin(),
                                         store_.table.end());
    const std::vector<double> thresholds = class_thresholds(scored, percent);
    PseudoLabelSet selected = cbst_select(scored, thresholds);
    selected.round = r;
    if (cfg_.accumulate_pseudo) {
      for (const auto& [id, label] : pseudo_.entries)
        selected.entries.emplace(id, label);  // re-selected ids keep new label
    }
    pseudo_ = std::move(selected);
    rebuild_train_set();
    RoundReport report = make_report(r, percent);
    reports_.push_back(report);
    return report;
  }

  RunResult run() {
    pretrain();
    for (int r = 0; r < cfg_.rounds; ++r) run_round();
    RunResult result;
    result.pretrain_report = pretrain_report_;
    result.reports = reports_;
    result.final_params = params_;
    return result;
  }

  const ModelParams& params() const { return params_; }
  const EnsembleStore& store() const { return store_; }
  const PseudoLabelSet& pseudo() const { return pseudo_; }
  const std::vector<Sample>& train_set() const { return train_set_; }
  const DomainDataset& working_source() const { return source_; }
  const DomainDataset& working_target() const { return target_; }
  const ClassProportion& prior() const { return q_; }

 private:
  std::vector<std::pair<std::uint64_t, ProbVector>> fresh_predictions() {
    PredictOptions opts;
    opts.temperature = cfg_.temperature;
    opts.use_apc = cfg_.use_apc;
    opts.use_se = cfg_.use_se;
    opts.augment_std = cfg_.train.augment_std;
    std::vector<ProbVector> preds =
        se_predict(params_, target_, q_, opts, predict_rng_);
    std::vector<std::pair<std::uint64_t, ProbVector>> fresh;
    fresh.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
      fresh.emplace_back(target_.samples[i].id, std::move(preds[i]));
    return fresh;
  }

  void rebuild_train_set() {
    train_set_ = source_.samples;
    for (const Sample& s : target_.samples) {
      auto it = pseudo_.entries.find(s.id);
      if (it == pseudo_.entries.end()) continue;
      Sample copy = s;
      copy.label = it->second;
      copy.hidden_label = kNoLabel;  // scrubbed; training sees labels only
      train_set_.push_back(std::move(copy));
    }
  }

  RoundReport make_report(int round, double percent) const {
    RoundReport rep;
    rep.round = round;
    rep.portion_percent = percent;

    std::vector<ProbVector> raw;
    raw.reserve(target_.samples.size());
    std::vector<int> truth, predicted;
    truth.reserve(target_.samples.size());
    predicted.reserve(target_.samples.size());
    for (const Sample& s : target_.samples) {
      ProbVector p = predict_proba(params_, s.features);
      predicted.push_back(argmax_stable(p));
      raw.push_back(std::move(p));
      if (s.hidden_label == kNoLabel)
        fail(Errc::missing_truth, "target sample " + std::to_string(s.id) +
                                      " has no hidden label to score against");
      truth.push_back(s.hidden_label);
    }
    rep.confusion = confusion(truth, predicted, target_.num_classes);
    rep.test_accuracy = rep.confusion.accuracy();
    rep.prf = precision_recall_f1(rep.confusion);
    rep.predictive_proportion = predictive_class_proportion(raw);

    rep.pseudo_count = static_cast<std::int64_t>(pseudo_.entries.size());
    const FalseRatio fr = false_pseudo_label_ratio(pseudo_, target_);
    rep.false_ratio = fr.ratio;
    rep.pseudo_empty = fr.empty;
    rep.pseudo_accuracy = 1.0 - fr.ratio;
    return rep;
  }

  RunConfig cfg_;
  DomainDataset source_;
  DomainDataset target_;
  ClassProportion q_;
  Rng train_rng_;
  Rng predict_rng_;
  SgdVelocity velocity_;
  ModelParams params_;
  EnsembleStore store_;
  PseudoLabelSet pseudo_;
  std::vector<Sample> train_set_;
  RoundReport pretrain_report_;
  std::vector<RoundReport> reports_;
  int round_ = 0;
};

inline RunResult run_full(DomainDataset source, DomainDataset target,
                          const RunConfig& cfg) {
  Runner runner(std::move(source), std::move(target), cfg);
  return runner.run();
}

// ---- run directory serialization -----------------------------------------
// Layout: config.json (resolved echo, written by the caller), round_{r:03}
// .json per round plus round_000.json for the pretrain snapshot, metrics.csv
// with one row per round, model_final.json.

namespace detail {

inline nlohmann::json report_to_json(const RoundReport& rep) {
  nlohmann::json j;
  j["round"] = rep.round;
  j["portion_percent"] = rep.portion_percent;
  j["test_accuracy"] = rep.test_accuracy;
  j["pseudo_count"] = rep.pseudo_count;
  j["pseudo_accuracy"] = rep.pseudo_accuracy;
  j["false_ratio"] = rep.false_ratio;
  j["pseudo_empty"] = rep.pseudo_empty;
  j["macro_precision"] = rep.prf.macro_precision;
  j["macro_recall"] = rep.prf.macro_recall;
  j["macro_f1"] = rep.prf.macro_f1;
  j["worst_class_f1"] = rep.prf.worst_class_f1;
  nlohmann::json per_class = nlohmann::json::array();
  for (const PerClassMetrics& m : rep.prf.per_class)
    per_class.push_back({{"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1}});
  j["per_class"] = per_class;
  j["predictive_proportion"] = rep.predictive_proportion.values();
  nlohmann::json cm = nlohmann::json::array();
  for (int t = 0; t < rep.confusion.num_classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < rep.confusion.num_classes; ++p)
      row.push_back(rep.confusion.at(t, p));
    cm.push_back(row);
  }
  j["confusion"] = cm;
  return j;
}

inline std::string round_file_name(int round) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "round_%03d.json", round);
  return buf;
}

}  // namespace detail

// metrics.csv: round, headline numbers, then per-class P/R/F1 triplets.
inline void write_metrics_csv(const std::vector<RoundReport>& reports,
                              int num_classes, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out << "round,test_accuracy,pseudo_count,pseudo_accuracy,false_ratio,"
         "macro_f1,worst_class_f1";
  for (int c = 0; c < num_classes; ++c)
    out << ",precision_" << c << ",recall_" << c << ",f1_" << c;
  out << "\n";
  for (const RoundReport& rep : reports) {
    out << rep.round << ',' << detail::format_double(rep.test_accuracy) << ','
        << rep.pseudo_count << ',' << detail::format_double(rep.pseudo_accuracy)
        << ',' << detail::format_double(rep.false_ratio) << ','
        << detail::format_double(rep.prf.macro_f1) << ','
        << detail::format_double(rep.prf.worst_class_f1);
    for (const PerClassMetrics& m : rep.prf.per_class)
      out << ',' << detail::format_double(m.precision) << ','
          << detail::format_double(m.recall) << ','
          << detail::format_double(m.f1);
    out << "\n";
  }
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

inline void write_run_dir(const std::string& dir,
                          const nlohmann::json& resolved_config,
                          const RunResult& result, int num_classes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io_error, "cannot create run dir: " + dir);

  {
    std::ofstream out(fs::path(dir) / "config.json", std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write config.json in " + dir);
    out << resolved_config.dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / detail::round_file_name(0),
                      std::ios::binary);
    out << detail::report_to_json(result.pretrain_report).dump(2) << "\n";
  }
  for (const RoundReport& rep : result.reports) {
    std::ofstream out(fs::path(dir) / detail::round_file_name(rep.round),
                      std::ios::binary);
    out << detail::report_to_json(rep).dump(2) << "\n";
  }
  write_metrics_csv(result.reports, num_classes,
                    (fs::path(dir) / "metrics.csv").string());
  save_checkpoint(result.final_params,
                  (fs::path(dir) / "model_final.json").string());
}

}  // namespace hcrpl
