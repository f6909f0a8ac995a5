// Error taxonomy shared by every module. One exception type carrying a
// machine-checkable code plus a human-readable message.
#pragma once

#include <stdexcept>
#include <string>

namespace hcrpl {

enum class Errc {
  zero_mass,
  negative_entry,
  invalid_distribution,
  invalid_temperature,
  invalid_spec,
  schema_error,
  io_error,
  insufficient_samples,
  unlabeled_sample,
  empty_dataset,
  dimension_mismatch,
  empty_training_set,
  empty_predictions,
  degenerate_class,
  unknown_id,
  label_out_of_range,
  missing_truth,
  config_error,
  missing_metrics,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::zero_mass: return "ZeroMass";
    case Errc::negative_entry: return "NegativeEntry";
    case Errc::invalid_distribution: return "InvalidDistribution";
    case Errc::invalid_temperature: return "InvalidTemperature";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::schema_error: return "SchemaError";
    case Errc::io_error: return "IoError";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::unlabeled_sample: return "UnlabeledSample";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_training_set: return "EmptyTrainingSet";
    case Errc::empty_predictions: return "EmptyPredictions";
    case Errc::degenerate_class: return "DegenerateClass";
    case Errc::unknown_id: return "UnknownId";
    case Errc::label_out_of_range: return "LabelOutOfRange";
    case Errc::missing_truth: return "MissingTruth";
    case Errc::config_error: return "ConfigError";
    case Errc::missing_metrics: return "MissingMetrics";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hcrpl
