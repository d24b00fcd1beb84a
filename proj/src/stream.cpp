#include "streamal/stream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "streamal/io_util.hpp"
#include "streamal/rng.hpp"

#include <json.hpp>

namespace streamal {

namespace {

std::int64_t parse_timestamp(std::string_view raw, std::size_t line) {
  std::int64_t value = 0;
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::runtime_error("line " + std::to_string(line) +
                             ": field 'timestamp' is not an integer: '" +
                             std::string(raw) + "'");
  }
  if (value < 0) {
    throw std::runtime_error("line " + std::to_string(line) +
                             ": field 'timestamp' must be >= 0");
  }
  return value;
}

void check_duplicate_id(std::unordered_set<std::string>& seen,
                        const std::string& id, std::size_t line) {
  if (!seen.insert(id).second) {
    throw std::runtime_error("line " + std::to_string(line) +
                             ": duplicate id '" + id + "'");
  }
}

Dataset load_csv(const std::string& path) {
  const std::string content = read_file(path);
  Dataset data;
  if (content.empty()) return data;

  const auto records = parse_csv(content);
  if (records.empty()) return data;

  const auto& header = records.front().fields;
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t c = 0; c < header.size(); ++c) columns[header[c]] = c;
  for (const char* required : {"id", "timestamp", "text", "label"}) {
    if (!columns.count(required)) {
      throw std::runtime_error(path + ": missing CSV column '" +
                               std::string(required) + "'");
    }
  }

  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() < header.size()) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " +
                               std::to_string(rec.fields.size()));
    }
    Instance inst;
    inst.id = rec.fields[columns["id"]];
    if (inst.id.empty()) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": field 'id' is empty");
    }
    check_duplicate_id(seen, inst.id, rec.line);
    inst.timestamp = parse_timestamp(rec.fields[columns["timestamp"]], rec.line);
    inst.text = rec.fields[columns["text"]];
    const std::string& label = rec.fields[columns["label"]];
    if (label.empty()) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": field 'label' is empty");
    }
    inst.label = data.classes.get_or_add(label);
    data.instances.push_back(std::move(inst));
  }
  return data;
}

Dataset load_jsonl(const std::string& path) {
  const std::string content = read_file(path);
  Dataset data;
  std::unordered_set<std::string> seen;

  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t end = content.find('\n', pos);
    const std::string_view raw =
        std::string_view(content).substr(pos, end == std::string::npos
                                                  ? std::string::npos
                                                  : end - pos);
    pos = (end == std::string::npos) ? content.size() + 1 : end + 1;
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("line " + std::to_string(line) +
                               ": invalid JSON: " + e.what());
    }
    auto require = [&](const char* key) -> const nlohmann::json& {
      if (!obj.contains(key)) {
        throw std::runtime_error("line " + std::to_string(line) +
                                 ": missing field '" + std::string(key) + "'");
      }
      return obj.at(key);
    };

    Instance inst;
    if (!require("id").is_string()) {
      throw std::runtime_error("line " + std::to_string(line) +
                               ": field 'id' must be a string");
    }
    inst.id = obj["id"].get<std::string>();
    check_duplicate_id(seen, inst.id, line);
    if (!require("timestamp").is_number_integer()) {
      throw std::runtime_error("line " + std::to_string(line) +
                               ": field 'timestamp' must be an integer");
    }
    inst.timestamp = obj["timestamp"].get<std::int64_t>();
    if (inst.timestamp < 0) {
      throw std::runtime_error("line " + std::to_string(line) +
                               ": field 'timestamp' must be >= 0");
    }
    if (obj.contains("text") && !obj["text"].is_null()) {
      if (!obj["text"].is_string()) {
        throw std::runtime_error("line " + std::to_string(line) +
                                 ": field 'text' must be a string");
      }
      inst.text = obj["text"].get<std::string>();
    }
    if (obj.contains("features") && !obj["features"].is_null()) {
      if (!obj["features"].is_array()) {
        throw std::runtime_error("line " + std::to_string(line) +
                                 ": field 'features' must be an array");
      }
      FeatureVector f;
      f.reserve(obj["features"].size());
      for (const auto& v : obj["features"]) {
        if (!v.is_number()) {
          throw std::runtime_error("line " + std::to_string(line) +
                                   ": field 'features' must hold numbers");
        }
        f.push_back(v.get<double>());
      }
      inst.features = std::move(f);
    }
    if (!require("label").is_string()) {
      throw std::runtime_error("line " + std::to_string(line) +
                               ": field 'label' must be a string");
    }
    inst.label = data.classes.get_or_add(obj["label"].get<std::string>());
    data.instances.push_back(std::move(inst));
  }
  return data;
}

}  // namespace

ClassSet::ClassSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) {
        throw std::invalid_argument("duplicate class name '" + names_[i] + "'");
      }
    }
  }
}

ClassId ClassSet::get_or_add(std::string_view name) {
  if (auto existing = find(name)) return *existing;
  names_.emplace_back(name);
  return static_cast<ClassId>(names_.size() - 1);
}

std::optional<ClassId> ClassSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<ClassId>(i);
  }
  return std::nullopt;
}

const std::string& ClassSet::name(ClassId id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("class index " + std::to_string(id) +
                            " out of range (|C| = " + std::to_string(size()) +
                            ")");
  }
  return names_[static_cast<std::size_t>(id)];
}

DatasetFormat dataset_format_from_name(std::string_view name) {
  if (name == "csv") return DatasetFormat::Csv;
  if (name == "jsonl") return DatasetFormat::Jsonl;
  throw std::invalid_argument("unknown dataset format '" + std::string(name) +
                              "' (expected csv or jsonl)");
}

Dataset load_dataset(const std::string& path, DatasetFormat format) {
  return format == DatasetFormat::Csv ? load_csv(path) : load_jsonl(path);
}

void write_dataset_jsonl(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const auto& inst : data.instances) {
    nlohmann::json obj;
    obj["id"] = inst.id;
    obj["timestamp"] = inst.timestamp;
    obj["text"] = inst.text;
    obj["label"] = data.classes.name(inst.label);
    if (inst.features) obj["features"] = *inst.features;
    out << obj.dump() << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "id,timestamp,text,label\n";
  for (const auto& inst : data.instances) {
    if (inst.text.empty() && inst.features) {
      throw std::runtime_error(
          "instance '" + inst.id +
          "' has dense features and no text; the CSV schema cannot carry "
          "features, write jsonl instead");
    }
    out << csv_escape(inst.id) << ',' << inst.timestamp << ','
        << csv_escape(inst.text) << ',' << csv_escape(data.classes.name(inst.label))
        << '\n';
  }
}

DatasetSplit split_dataset(const Dataset& data, const SplitOptions& opts,
                           std::uint64_t seed,
                           std::vector<std::string>* warnings) {
  if (!(opts.test_frac > 0.0 && opts.test_frac < 1.0)) {
    throw std::invalid_argument("test_frac must lie in (0, 1)");
  }
  if (opts.warmup_per_class < 1) {
    throw std::invalid_argument("warmup size z must be >= 1");
  }

  const std::size_t n = data.instances.size();
  const auto test_size = static_cast<std::size_t>(
      std::llround(opts.test_frac * static_cast<double>(n)));

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  auto by_time_then_id = [&](std::size_t a, std::size_t b) {
    const auto& ia = data.instances[a];
    const auto& ib = data.instances[b];
    if (ia.timestamp != ib.timestamp) return ia.timestamp < ib.timestamp;
    return ia.id < ib.id;
  };

  std::vector<char> in_test(n, 0);
  if (opts.chronological_test) {
    std::sort(order.begin(), order.end(), by_time_then_id);
    for (std::size_t i = n - std::min(test_size, n); i < n; ++i) {
      in_test[order[i]] = 1;
    }
  } else {
    rng.shuffle(order);
    for (std::size_t i = 0; i < std::min(test_size, n); ++i) {
      in_test[order[i]] = 1;
    }
  }

  // Group the remainder by class; indices stay in dataset order so the draw
  // depends only on (data, seed).
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(data.classes.size()));
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_test[i]) {
      by_class[static_cast<std::size_t>(data.instances[i].label)].push_back(i);
    }
  }

  std::vector<char> in_warmup(n, 0);
  for (ClassId c = 0; c < data.classes.size(); ++c) {
    auto& pool = by_class[static_cast<std::size_t>(c)];
    if (pool.empty()) {
      if (warnings) {
        warnings->push_back("class '" + data.classes.name(c) +
                            "' has no instances outside the test split");
      }
      continue;
    }
    rng.shuffle(pool);
    const std::size_t take =
        std::min(pool.size(), static_cast<std::size_t>(opts.warmup_per_class));
    for (std::size_t i = 0; i < take; ++i) in_warmup[pool[i]] = 1;
  }

  DatasetSplit split;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_test[i]) {
      split.test.push_back(data.instances[i]);
    } else if (in_warmup[i]) {
      split.warmup.push_back(data.instances[i]);
    } else {
      train_idx.push_back(i);
    }
  }
  std::sort(train_idx.begin(), train_idx.end(), by_time_then_id);
  split.train.reserve(train_idx.size());
  for (std::size_t i : train_idx) split.train.push_back(data.instances[i]);
  return split;
}

IntervalPlan compute_interval_size(std::span<const Instance> train) {
  if (train.empty()) {
    throw std::invalid_argument("train stream is empty");
  }
  const std::int64_t span_seconds =
      train.back().timestamp - train.front().timestamp;
  const std::int64_t span_days = std::max<std::int64_t>(1, span_seconds / 86400);
  const auto size = static_cast<std::int64_t>(train.size());

  IntervalPlan plan;
  plan.interval_size = static_cast<int>((size + span_days - 1) / span_days);
  plan.num_intervals =
      static_cast<int>((size + plan.interval_size - 1) / plan.interval_size);
  return plan;
}

std::vector<std::vector<Instance>> bin_stream(std::span<const Instance> train,
                                              const IntervalPlan& plan) {
  if (plan.interval_size <= 0) {
    throw std::invalid_argument("interval_size must be positive");
  }
  std::vector<std::vector<Instance>> bins;
  const auto step = static_cast<std::size_t>(plan.interval_size);
  for (std::size_t start = 0; start < train.size(); start += step) {
    const std::size_t stop = std::min(train.size(), start + step);
    bins.emplace_back(train.begin() + static_cast<std::ptrdiff_t>(start),
                      train.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return bins;
}

std::vector<FeatureVector> random_centroids(int num_classes, int dim,
                                            double scale, std::uint64_t seed) {
  if (num_classes < 1 || dim < 1) {
    throw std::invalid_argument("num_classes and dim must be positive");
  }
  Rng rng(seed);
  std::vector<FeatureVector> centroids;
  centroids.reserve(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    FeatureVector v(static_cast<std::size_t>(dim));
    double norm_sq = 0.0;
    for (auto& x : v) {
      x = rng.gaussian();
      norm_sq += x * x;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > 0.0) {
      for (auto& x : v) x *= scale / norm;
    }
    centroids.push_back(std::move(v));
  }
  return centroids;
}

Dataset generate_synthetic_stream(const SyntheticSpec& spec,
                                  std::uint64_t seed) {
  if (spec.num_classes < 1) {
    throw std::invalid_argument("num_classes must be positive");
  }
  if (spec.priors.size() != static_cast<std::size_t>(spec.num_classes) ||
      spec.centroids.size() != static_cast<std::size_t>(spec.num_classes)) {
    throw std::invalid_argument(
        "priors and centroids must each have one entry per class");
  }
  double total = 0.0;
  for (double p : spec.priors) {
    if (p < 0.0) throw std::invalid_argument("priors must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("priors must sum to 1");
  }
  const std::size_t dim = spec.centroids.front().size();
  for (const auto& c : spec.centroids) {
    if (c.size() != dim) {
      throw std::invalid_argument("centroids must share one dimension");
    }
  }
  if (spec.n < 1) throw std::invalid_argument("n must be positive");
  if (spec.span_days < 0.0) {
    throw std::invalid_argument("span_days must be >= 0");
  }

  Dataset data;
  for (int c = 0; c < spec.num_classes; ++c) {
    data.classes.get_or_add("class" + std::to_string(c));
  }

  Rng rng(seed);
  const double span_seconds = spec.span_days * 86400.0;
  data.instances.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    Instance inst;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "syn-%06d", i);
    inst.id = buf;
    inst.timestamp =
        spec.n > 1 ? static_cast<std::int64_t>(std::llround(
                         static_cast<double>(i) * span_seconds /
                         static_cast<double>(spec.n - 1)))
                   : 0;

    // Inverse-CDF draw over the priors.
    const double u = rng.uniform_real();
    double acc = 0.0;
    ClassId label = spec.num_classes - 1;
    for (int c = 0; c < spec.num_classes; ++c) {
      acc += spec.priors[static_cast<std::size_t>(c)];
      if (u < acc) {
        label = c;
        break;
      }
    }
    inst.label = label;

    FeatureVector f(dim);
    const auto& centroid = spec.centroids[static_cast<std::size_t>(label)];
    for (std::size_t d = 0; d < dim; ++d) {
      f[d] = centroid[d] + spec.noise_sigma * rng.gaussian();
    }
    inst.features = std::move(f);
    data.instances.push_back(std::move(inst));
  }
  return data;
}

}  // namespace streamal
