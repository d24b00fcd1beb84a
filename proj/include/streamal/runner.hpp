#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamal/config.hpp"
#include "streamal/sampling.hpp"
#include "streamal/stream.hpp"

namespace streamal {

struct IntervalMetrics {
  int interval = 0;  // 1-based
  std::string sampler;
  std::string regime;
  std::uint64_t seed = 0;
  int batch_size = 0;          // N
  int region_size = 0;         // n
  int annotated = 0;           // m
  std::optional<std::string> discarded_class;
  long cumulative_annotated = 0;  // oracle-labelled stream instances so far
  double auc = 0.0;
};

// One oracle interaction, kept for audit.
struct AnnotationRecord {
  int interval = 0;
  std::string instance_id;
  ClassId true_label = 0;
  ClassId reported = 0;
};

struct RunResult {
  std::vector<IntervalMetrics> metrics;
  std::vector<AnnotationRecord> audit;
  std::vector<std::string> warnings;
  ClassSet classes;
  double warmup_auc = 0.0;
  LinearModel final_model;
};

struct RunHooks {
  // When set, the error matrix and score table are dumped there after each
  // interval (error_mitigating runs only).
  std::string dump_dir;
};

RunResult run_experiment(const ExperimentConfig& config,
                         const RunHooks& hooks = {});

struct MetricsRow {
  std::string run_id;
  IntervalMetrics m;
};

void write_metrics_csv(const std::string& path,
                       std::span<const MetricsRow> rows);
void write_metrics_json(const std::string& path,
                        std::span<const MetricsRow> rows);

struct SweepOutcome {
  std::string run_id;
  ExperimentConfig config;
  std::optional<RunResult> result;  // absent on failure
  std::string error;                // failure message when result is absent
};

// Runs every config (run ids r0, r1, ... in input order), up to `jobs` at a
// time. A failing run records its error and the rest continue.
std::vector<SweepOutcome> sweep(std::span<const ExperimentConfig> configs,
                                int jobs = 1);

}  // namespace streamal
