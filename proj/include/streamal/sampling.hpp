#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streamal/learner.hpp"
#include "streamal/stream.hpp"

namespace streamal {

enum class SamplerKind { Random, Uncertainty, ErrorMitigating };

SamplerKind sampler_from_name(std::string_view name);
std::string_view sampler_name(SamplerKind kind);

// One annotated instance remembered by the sliding context window.
// time_value feeds the forget-score clock: by default it equals the arrival
// interval index, but a run may use instance-sequence positions instead.
struct WindowEntry {
  Instance instance;
  int interval_index = 0;
  double time_value = 0.0;
  ClassId annotated = 0;
};

// Sliding window over the annotated instances of the most recent l intervals.
struct ContextWindow {
  int l = 3;
  std::vector<WindowEntry> entries;

  void add(WindowEntry entry) { entries.push_back(std::move(entry)); }
  // Keeps entries with interval_index in (current_interval - l, current_interval].
  void prune(int current_interval);
};

// Rolling record of how each annotated instance shifted the model against
// the window, one row per annotation. Columns are ordered class pairs
// (c_j, c_k), j != k: cell (c_j, c_k) holds the error rate on window
// instances annotated c_j after the model absorbed an instance annotated c_k.
struct ErrorMatrixRow {
  std::string instance_id;
  ClassId annotated = 0;
  int interval_index = 0;
  std::vector<double> cells;
};

struct ErrorMatrix {
  int num_classes = 0;
  std::vector<ErrorMatrixRow> rows;

  explicit ErrorMatrix(int num_classes_ = 0) : num_classes(num_classes_) {}

  int column_count() const { return num_classes * (num_classes - 1); }
  // Flat index of pair (c_j, c_k), j != k: pairs are grouped by j, then k
  // ascending with k == j skipped.
  int column_index(ClassId j, ClassId k) const;
  std::pair<ClassId, ClassId> column_pair(int col) const;
  // Drops rows outside (current_interval - l, current_interval].
  void prune(int current_interval, int l);
};

// Instances whose top predicted probability falls inside the closed band
// [lo, hi]; input order kept. The result size defines n for the samplers.
std::vector<Instance> uncertainty_region(const LinearModel& model,
                                         std::span<const Instance> batch,
                                         double lo = 0.30, double hi = 0.70);

// Uniform draw of n distinct instances, input order kept. n > |batch| is
// clamped with a warning pushed to `warnings` when given.
std::vector<Instance> random_sample(std::span<const Instance> batch,
                                    std::size_t n, std::uint64_t seed,
                                    std::vector<std::string>* warnings = nullptr);

// Appends one row for (x, label): the model is cloned and nudged with the
// annotation, then for every other class c_j the cell (c_j, label) becomes
// the updated model's error rate on window entries annotated c_j. Cells with
// no window evidence — and every column not ending in `label` — carry the
// previous row's value (0 on the first row).
ErrorMatrix update_error_matrix(const ErrorMatrix& E, const LinearModel& model,
                                const Instance& x, ClassId label,
                                const ContextWindow& window,
                                int interval_index = 0);

// Sum of cells (c_j, c_k) over j != k across rows annotated c_k. The matrix
// is expected to be pruned to the current window already.
double bias_score(const ErrorMatrix& E, ClassId c_k);

double forget_score_from_delta(double delta_t);

// e^(-dT) where dT is the time_value gap between the last two window entries
// annotated c_k; a class seen fewer than twice scores 0.
double forget_score_class(const ContextWindow& window, ClassId c_k);

// argmax over classes of forget_score * bias_score, or nullopt during the
// first three intervals or when every score is zero. Ties go to the smallest
// class index.
std::optional<ClassId> class_to_discard(const ErrorMatrix& E,
                                        const ContextWindow& window,
                                        int interval_index);

struct MitigatedSample {
  std::vector<Instance> selected;
  std::optional<ClassId> discarded;
  std::size_t region_size = 0;
};

// Uncertainty region minus the instances the interval-entry model assigns to
// the discard class.
MitigatedSample error_mitigating_sample(const LinearModel& model,
                                        std::span<const Instance> batch,
                                        const ErrorMatrix& E,
                                        const ContextWindow& window,
                                        int interval_index, double lo = 0.30,
                                        double hi = 0.70);

// Audit dumps (one file per call): the matrix as
// `interval,row_id,class,<one column per pair>` and the per-class scores as
// `class,forget_score,bias_score,score`.
void write_error_matrix_csv(const std::string& path, const ErrorMatrix& E,
                            const ClassSet& classes, int interval_index);
void write_scores_csv(const std::string& path, const ErrorMatrix& E,
                      const ContextWindow& window, const ClassSet& classes);

}  // namespace streamal
