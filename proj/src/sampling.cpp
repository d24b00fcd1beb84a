#include "streamal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "streamal/io_util.hpp"
#include "streamal/rng.hpp"

namespace streamal {

SamplerKind sampler_from_name(std::string_view name) {
  if (name == "random") return SamplerKind::Random;
  if (name == "uncertainty") return SamplerKind::Uncertainty;
  if (name == "error_mitigating") return SamplerKind::ErrorMitigating;
  throw std::invalid_argument(
      "unknown sampler '" + std::string(name) +
      "' (expected random, uncertainty or error_mitigating)");
}

std::string_view sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Random: return "random";
    case SamplerKind::Uncertainty: return "uncertainty";
    default: return "error_mitigating";
  }
}

void ContextWindow::prune(int current_interval) {
  std::erase_if(entries, [&](const WindowEntry& e) {
    return e.interval_index <= current_interval - l;
  });
}

int ErrorMatrix::column_index(ClassId j, ClassId k) const {
  if (j == k || j < 0 || k < 0 || j >= num_classes || k >= num_classes) {
    throw std::invalid_argument("invalid class pair (" + std::to_string(j) +
                                ", " + std::to_string(k) + ")");
  }
  return j * (num_classes - 1) + (k < j ? k : k - 1);
}

std::pair<ClassId, ClassId> ErrorMatrix::column_pair(int col) const {
  if (col < 0 || col >= column_count()) {
    throw std::out_of_range("column " + std::to_string(col) + " out of range");
  }
  const ClassId j = col / (num_classes - 1);
  ClassId k = col % (num_classes - 1);
  if (k >= j) ++k;
  return {j, k};
}

void ErrorMatrix::prune(int current_interval, int l) {
  std::erase_if(rows, [&](const ErrorMatrixRow& r) {
    return r.interval_index <= current_interval - l;
  });
}

std::vector<Instance> uncertainty_region(const LinearModel& model,
                                         std::span<const Instance> batch,
                                         double lo, double hi) {
  if (!(0.0 <= lo && lo < hi && hi <= 1.0)) {
    throw std::invalid_argument("confidence band must satisfy 0 <= lo < hi <= 1");
  }
  std::vector<Instance> region;
  for (const auto& inst : batch) {
    if (!inst.features) {
      throw std::invalid_argument("instance '" + inst.id +
                                  "' has no feature vector");
    }
    const Prediction p = predict_proba(model, *inst.features);
    const double top = *std::max_element(p.begin(), p.end());
    if (top >= lo && top <= hi) region.push_back(inst);
  }
  return region;
}

std::vector<Instance> random_sample(std::span<const Instance> batch,
                                    std::size_t n, std::uint64_t seed,
                                    std::vector<std::string>* warnings) {
  if (n > batch.size()) {
    if (warnings) {
      warnings->push_back("random sample size " + std::to_string(n) +
                          " clamped to batch size " +
                          std::to_string(batch.size()));
    }
    n = batch.size();
  }
  Rng rng(seed);
  const std::vector<std::size_t> picks = rng.sample_indices(batch.size(), n);
  std::vector<Instance> out;
  out.reserve(n);
  for (std::size_t i : picks) out.push_back(batch[i]);
  return out;
}

ErrorMatrix update_error_matrix(const ErrorMatrix& E, const LinearModel& model,
                                const Instance& x, ClassId label,
                                const ContextWindow& window,
                                int interval_index) {
  if (E.num_classes < 2) {
    throw std::invalid_argument("error matrix needs at least 2 classes");
  }
  if (label < 0 || label >= E.num_classes) {
    throw std::invalid_argument("annotated label outside class range");
  }
  if (!x.features) {
    throw std::invalid_argument("instance '" + x.id + "' has no feature vector");
  }

  ErrorMatrix out = E;
  ErrorMatrixRow row;
  row.instance_id = x.id;
  row.annotated = label;
  row.interval_index = interval_index;
  row.cells = out.rows.empty()
                  ? std::vector<double>(
                        static_cast<std::size_t>(out.column_count()), 0.0)
                  : out.rows.back().cells;

  const LinearModel updated = clone_and_update(model, *x.features, label);
  for (ClassId j = 0; j < E.num_classes; ++j) {
    if (j == label) continue;
    std::size_t total = 0;
    std::size_t wrong = 0;
    for (const auto& entry : window.entries) {
      if (entry.annotated != j) continue;
      ++total;
      const Prediction p = predict_proba(updated, *entry.instance.features);
      const auto top = static_cast<ClassId>(
          std::max_element(p.begin(), p.end()) - p.begin());
      if (top != j) ++wrong;
    }
    if (total > 0) {
      row.cells[static_cast<std::size_t>(out.column_index(j, label))] =
          static_cast<double>(wrong) / static_cast<double>(total);
    }
    // No window evidence for c_j: the copied value stands.
  }
  out.rows.push_back(std::move(row));
  return out;
}

double bias_score(const ErrorMatrix& E, ClassId c_k) {
  if (c_k < 0 || c_k >= E.num_classes) {
    throw std::invalid_argument("class outside matrix range");
  }
  double total = 0.0;
  for (const auto& row : E.rows) {
    if (row.annotated != c_k) continue;
    for (ClassId j = 0; j < E.num_classes; ++j) {
      if (j == c_k) continue;
      total += row.cells[static_cast<std::size_t>(E.column_index(j, c_k))];
    }
  }
  return total;
}

double forget_score_from_delta(double delta_t) {
  if (delta_t < 0.0) {
    throw std::invalid_argument("time delta must be >= 0");
  }
  return std::exp(-delta_t);
}

double forget_score_class(const ContextWindow& window, ClassId c_k) {
  double last = 0.0;
  double second_last = 0.0;
  int seen = 0;
  for (const auto& entry : window.entries) {
    if (entry.annotated != c_k) continue;
    second_last = last;
    last = entry.time_value;
    ++seen;
  }
  if (seen < 2) return 0.0;
  return forget_score_from_delta(last - second_last);
}

std::optional<ClassId> class_to_discard(const ErrorMatrix& E,
                                        const ContextWindow& window,
                                        int interval_index) {
  if (interval_index < 1) {
    throw std::invalid_argument("interval index must be >= 1");
  }
  if (interval_index <= 3) return std::nullopt;

  std::optional<ClassId> best;
  double best_score = 0.0;
  for (ClassId c = 0; c < E.num_classes; ++c) {
    const double score = forget_score_class(window, c) * bias_score(E, c);
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;  // stays nullopt when every score is zero
}

MitigatedSample error_mitigating_sample(const LinearModel& model,
                                        std::span<const Instance> batch,
                                        const ErrorMatrix& E,
                                        const ContextWindow& window,
                                        int interval_index, double lo,
                                        double hi) {
  MitigatedSample out;
  std::vector<Instance> region = uncertainty_region(model, batch, lo, hi);
  out.region_size = region.size();
  out.discarded = class_to_discard(E, window, interval_index);
  if (!out.discarded) {
    out.selected = std::move(region);
    return out;
  }
  for (auto& inst : region) {
    const Prediction p = predict_proba(model, *inst.features);
    const auto top = static_cast<ClassId>(
        std::max_element(p.begin(), p.end()) - p.begin());
    if (top != *out.discarded) out.selected.push_back(std::move(inst));
  }
  return out;
}

void write_error_matrix_csv(const std::string& path, const ErrorMatrix& E,
                            const ClassSet& classes, int interval_index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "interval,row_id,class";
  for (int col = 0; col < E.column_count(); ++col) {
    const auto [j, k] = E.column_pair(col);
    out << ",e_" << classes.name(j) << '_' << classes.name(k);
  }
  out << '\n';
  for (const auto& row : E.rows) {
    out << interval_index << ',' << csv_escape(row.instance_id) << ','
        << csv_escape(classes.name(row.annotated));
    for (double cell : row.cells) out << ',' << format_double(cell);
    out << '\n';
  }
}

void write_scores_csv(const std::string& path, const ErrorMatrix& E,
                      const ContextWindow& window, const ClassSet& classes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "class,forget_score,bias_score,score\n";
  for (ClassId c = 0; c < E.num_classes; ++c) {
    const double fs = forget_score_class(window, c);
    const double bs = bias_score(E, c);
    out << csv_escape(classes.name(c)) << ',' << format_double(fs) << ','
        << format_double(bs) << ',' << format_double(fs * bs) << '\n';
  }
}

}  // namespace streamal
