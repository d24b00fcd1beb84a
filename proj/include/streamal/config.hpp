#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamal/learner.hpp"
#include "streamal/oracle.hpp"
#include "streamal/sampling.hpp"
#include "streamal/stream.hpp"

namespace streamal {

// Parsed sectioned key-value file:
//   # comment
//   [section]
//   key = value
// Keys keep file order; a key repeated within its section is an error.
struct KeyValueFile {
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
  };
  std::vector<Entry> entries;

  std::optional<std::string> get(std::string_view section,
                                 std::string_view key) const;
};

KeyValueFile parse_key_value(std::string_view content);
KeyValueFile load_key_value(const std::string& path);

enum class FeatureMode { Hashed, Embeddings };
enum class TimeUnit { Instance, Day };
enum class DeltaUnit { Interval, Instance };
enum class MetricKind { Micro, Macro };

struct ExperimentConfig {
  // Exactly one source: a dataset file or a synthetic stream.
  std::optional<std::string> dataset_path;
  DatasetFormat dataset_format = DatasetFormat::Csv;

  bool synthetic = false;
  int synth_classes = 4;
  int synth_n = 1000;
  int synth_dim = 32;
  double synth_span_days = 10.0;
  double synth_noise_sigma = 1.0;
  double synth_centroid_scale = 2.5;
  std::vector<double> synth_priors;  // empty = uniform

  FeatureMode feature_mode = FeatureMode::Hashed;
  int feature_dim = 64;
  std::uint64_t hash_seed = 0;
  std::string embeddings_path;

  double test_frac = 0.2;
  int warmup_per_class = 20;
  bool chronological_test = false;

  SamplerKind sampler = SamplerKind::Uncertainty;
  double band_lo = 0.30;
  double band_hi = 0.70;
  int window_l = 3;
  DeltaUnit delta_unit = DeltaUnit::Interval;

  std::string regime = "none";
  TimeUnit time_unit = TimeUnit::Instance;

  LearnerHyper learner;
  TrainMode train_mode = TrainMode::FullRetrain;
  MetricKind metric = MetricKind::Micro;

  std::uint64_t seed = 0;
};

// Builds a config from a parsed file, rejecting unknown sections/keys and
// out-of-range values.
ExperimentConfig config_from_file(const KeyValueFile& file);
ExperimentConfig load_config(const std::string& path);

// Applies one `section.key=value` override on top of a loaded config.
void apply_override(ExperimentConfig& config, std::string_view dotted_key,
                    std::string_view value);

void validate_config(const ExperimentConfig& config);

}  // namespace streamal
