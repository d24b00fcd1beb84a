#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streamal {

using ClassId = std::int32_t;
using FeatureVector = std::vector<double>;

// Ordered set of class names; a ClassId is an index into it.
class ClassSet {
 public:
  ClassSet() = default;
  explicit ClassSet(std::vector<std::string> names);

  ClassId get_or_add(std::string_view name);
  std::optional<ClassId> find(std::string_view name) const;
  const std::string& name(ClassId id) const;
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const ClassSet&) const = default;

 private:
  std::vector<std::string> names_;
};

// One stream item. Either `text` or `features` must be usable for learning;
// `features` is filled in by the feature stage when absent.
struct Instance {
  std::string id;
  std::int64_t timestamp = 0;  // seconds since epoch
  std::string text;
  std::optional<FeatureVector> features;
  ClassId label = -1;
};

struct Dataset {
  std::vector<Instance> instances;
  ClassSet classes;
};

enum class DatasetFormat { Csv, Jsonl };
DatasetFormat dataset_format_from_name(std::string_view name);

// CSV header: id,timestamp,text,label. JSONL: same keys per line plus an
// optional `features` array. Malformed rows raise with the line number;
// duplicate ids raise.
Dataset load_dataset(const std::string& path, DatasetFormat format);

void write_dataset_jsonl(const std::string& path, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);

struct DatasetSplit {
  std::vector<Instance> warmup;  // up to z per class
  std::vector<Instance> train;   // ascending (timestamp, id)
  std::vector<Instance> test;
};

struct SplitOptions {
  double test_frac = 0.2;
  int warmup_per_class = 20;  // z
  bool chronological_test = false;
};

// Seeded partition into test / warmup / train. The test set is a uniform
// sample of round(test_frac * n) instances (or the chronological tail when
// chronological_test is set); from the remainder up to z instances per class
// go to warmup; the rest is the train stream, sorted by (timestamp, id).
// A class with no instances at all is reported through `warnings`.
DatasetSplit split_dataset(const Dataset& data, const SplitOptions& opts,
                           std::uint64_t seed,
                           std::vector<std::string>* warnings = nullptr);

struct IntervalPlan {
  int interval_size = 0;  // instances per arrival interval
  int num_intervals = 0;
};

// interval_size = ceil(|train| / span_days) with span_days =
// max(1, floor((t_max - t_min) / 86400)). Ceiling division on both counts so
// no instance is dropped and degenerate one-day spans still bin.
IntervalPlan compute_interval_size(std::span<const Instance> train);

// Consecutive slices of interval_size; the last bin may be short.
std::vector<std::vector<Instance>> bin_stream(std::span<const Instance> train,
                                              const IntervalPlan& plan);

struct SyntheticSpec {
  int num_classes = 4;
  std::vector<double> priors;           // must sum to 1
  std::vector<FeatureVector> centroids;  // one per class, equal dims
  double noise_sigma = 1.0;
  int n = 1000;
  double span_days = 10.0;  // elapsed span of the timestamps, in days
};

// Gaussian blobs around per-class centroids with labels drawn from the
// priors; timestamps evenly spaced across the full span.
Dataset generate_synthetic_stream(const SyntheticSpec& spec,
                                  std::uint64_t seed);

// Seeded centroids: gaussian directions scaled to `scale`.
std::vector<FeatureVector> random_centroids(int num_classes, int dim,
                                            double scale, std::uint64_t seed);

}  // namespace streamal
