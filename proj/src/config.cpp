#include "streamal/config.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "streamal/io_util.hpp"

namespace streamal {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void bad_value(const KeyValueFile::Entry& e,
                            const std::string& why) {
  throw std::runtime_error("config line " + std::to_string(e.line) + ": [" +
                           e.section + "] " + e.key + " = '" + e.value +
                           "': " + why);
}

double parse_real(const KeyValueFile::Entry& e) {
  double v = 0.0;
  const auto* first = e.value.data();
  const auto* last = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) bad_value(e, "not a number");
  return v;
}

std::int64_t parse_int(const KeyValueFile::Entry& e) {
  std::int64_t v = 0;
  const auto* first = e.value.data();
  const auto* last = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) bad_value(e, "not an integer");
  return v;
}

std::uint64_t parse_seed(const KeyValueFile::Entry& e) {
  std::uint64_t v = 0;
  const auto* first = e.value.data();
  const auto* last = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    bad_value(e, "not a non-negative integer");
  }
  return v;
}

bool parse_bool(const KeyValueFile::Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  bad_value(e, "not a boolean (true/false)");
}

std::vector<double> parse_real_list(const KeyValueFile::Entry& e) {
  std::vector<double> out;
  std::size_t pos = 0;
  const std::string& s = e.value;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string_view piece = trim(std::string_view(s).substr(pos, comma - pos));
    if (piece.empty()) bad_value(e, "empty list element");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (ec != std::errc{} || ptr != piece.data() + piece.size()) {
      bad_value(e, "list element is not a number");
    }
    out.push_back(v);
    pos = comma + 1;
    if (comma == s.size()) break;
  }
  return out;
}

void apply_entry(ExperimentConfig& c, const KeyValueFile::Entry& e,
                 bool& saw_dataset, bool& saw_synthetic) {
  const std::string& s = e.section;
  const std::string& k = e.key;

  if (s == "dataset") {
    saw_dataset = true;
    if (k == "path") {
      c.dataset_path = e.value;
    } else if (k == "format") {
      c.dataset_format = dataset_format_from_name(e.value);
    } else {
      bad_value(e, "unknown key in [dataset]");
    }
    return;
  }
  if (s == "synthetic") {
    saw_synthetic = true;
    c.synthetic = true;
    if (k == "classes") {
      c.synth_classes = static_cast<int>(parse_int(e));
    } else if (k == "n") {
      c.synth_n = static_cast<int>(parse_int(e));
    } else if (k == "dim") {
      c.synth_dim = static_cast<int>(parse_int(e));
    } else if (k == "span_days") {
      c.synth_span_days = parse_real(e);
    } else if (k == "noise_sigma") {
      c.synth_noise_sigma = parse_real(e);
    } else if (k == "centroid_scale") {
      c.synth_centroid_scale = parse_real(e);
    } else if (k == "priors") {
      c.synth_priors = parse_real_list(e);
    } else {
      bad_value(e, "unknown key in [synthetic]");
    }
    return;
  }
  if (s == "features") {
    if (k == "mode") {
      if (e.value == "hashed") {
        c.feature_mode = FeatureMode::Hashed;
      } else if (e.value == "embeddings") {
        c.feature_mode = FeatureMode::Embeddings;
      } else {
        bad_value(e, "expected hashed or embeddings");
      }
    } else if (k == "dim") {
      c.feature_dim = static_cast<int>(parse_int(e));
    } else if (k == "hash_seed") {
      c.hash_seed = parse_seed(e);
    } else if (k == "embeddings_path") {
      c.embeddings_path = e.value;
    } else {
      bad_value(e, "unknown key in [features]");
    }
    return;
  }
  if (s == "split") {
    if (k == "test_frac") {
      c.test_frac = parse_real(e);
    } else if (k == "warmup_per_class") {
      c.warmup_per_class = static_cast<int>(parse_int(e));
    } else if (k == "chronological_test") {
      c.chronological_test = parse_bool(e);
    } else {
      bad_value(e, "unknown key in [split]");
    }
    return;
  }
  if (s == "sampler") {
    if (k == "kind") {
      c.sampler = sampler_from_name(e.value);
    } else if (k == "band_lo") {
      c.band_lo = parse_real(e);
    } else if (k == "band_hi") {
      c.band_hi = parse_real(e);
    } else if (k == "window_l") {
      c.window_l = static_cast<int>(parse_int(e));
    } else if (k == "delta_unit") {
      if (e.value == "interval") {
        c.delta_unit = DeltaUnit::Interval;
      } else if (e.value == "instance") {
        c.delta_unit = DeltaUnit::Instance;
      } else {
        bad_value(e, "expected interval or instance");
      }
    } else {
      bad_value(e, "unknown key in [sampler]");
    }
    return;
  }
  if (s == "oracle") {
    if (k == "regime") {
      regime_from_name(e.value);  // validates
      c.regime = e.value;
    } else if (k == "time_unit") {
      if (e.value == "instance") {
        c.time_unit = TimeUnit::Instance;
      } else if (e.value == "day") {
        c.time_unit = TimeUnit::Day;
      } else {
        bad_value(e, "expected instance or day");
      }
    } else {
      bad_value(e, "unknown key in [oracle]");
    }
    return;
  }
  if (s == "learner") {
    if (k == "learning_rate") {
      c.learner.learning_rate = parse_real(e);
    } else if (k == "l2") {
      c.learner.l2 = parse_real(e);
    } else if (k == "epochs") {
      c.learner.epochs = static_cast<int>(parse_int(e));
    } else if (k == "loss") {
      c.learner.loss = loss_from_name(e.value);
    } else if (k == "clone_update_steps") {
      c.learner.clone_update_steps = static_cast<int>(parse_int(e));
    } else if (k == "train_mode") {
      if (e.value == "full_retrain") {
        c.train_mode = TrainMode::FullRetrain;
      } else if (e.value == "incremental") {
        c.train_mode = TrainMode::Incremental;
      } else {
        bad_value(e, "expected full_retrain or incremental");
      }
    } else if (k == "metric") {
      if (e.value == "micro") {
        c.metric = MetricKind::Micro;
      } else if (e.value == "macro") {
        c.metric = MetricKind::Macro;
      } else {
        bad_value(e, "expected micro or macro");
      }
    } else {
      bad_value(e, "unknown key in [learner]");
    }
    return;
  }
  if (s == "run") {
    if (k == "seed") {
      c.seed = parse_seed(e);
    } else {
      bad_value(e, "unknown key in [run]");
    }
    return;
  }
  throw std::runtime_error("config line " + std::to_string(e.line) +
                           ": unknown section [" + s + "]");
}

}  // namespace

std::optional<std::string> KeyValueFile::get(std::string_view section,
                                             std::string_view key) const {
  for (const auto& e : entries) {
    if (e.section == section && e.key == key) return e.value;
  }
  return std::nullopt;
}

KeyValueFile parse_key_value(std::string_view content) {
  KeyValueFile file;
  std::string section;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view raw = trim(content.substr(pos, end - pos));
    pos = end + 1;
    ++line;
    if (raw.empty() || raw.front() == '#' || raw.front() == ';') {
      if (pos > content.size()) break;
      continue;
    }
    if (raw.front() == '[') {
      if (raw.back() != ']' || raw.size() < 3) {
        throw std::runtime_error("config line " + std::to_string(line) +
                                 ": malformed section header");
      }
      section = std::string(trim(raw.substr(1, raw.size() - 2)));
      if (pos > content.size()) break;
      continue;
    }
    const std::size_t eq = raw.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error("config line " + std::to_string(line) +
                               ": expected key = value");
    }
    KeyValueFile::Entry entry;
    entry.section = section;
    entry.key = std::string(trim(raw.substr(0, eq)));
    entry.value = std::string(trim(raw.substr(eq + 1)));
    entry.line = line;
    if (entry.key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line) +
                               ": empty key");
    }
    if (entry.section.empty()) {
      throw std::runtime_error("config line " + std::to_string(line) +
                               ": key outside any [section]");
    }
    for (const auto& prev : file.entries) {
      if (prev.section == entry.section && prev.key == entry.key) {
        throw std::runtime_error("config line " + std::to_string(line) +
                                 ": duplicate key '" + entry.key + "' in [" +
                                 entry.section + "]");
      }
    }
    file.entries.push_back(std::move(entry));
    if (pos > content.size()) break;
  }
  return file;
}

KeyValueFile load_key_value(const std::string& path) {
  return parse_key_value(read_file(path));
}

ExperimentConfig config_from_file(const KeyValueFile& file) {
  ExperimentConfig config;
  bool saw_dataset = false;
  bool saw_synthetic = false;
  for (const auto& e : file.entries) {
    apply_entry(config, e, saw_dataset, saw_synthetic);
  }
  if (saw_dataset && saw_synthetic) {
    throw std::runtime_error(
        "config declares both [dataset] and [synthetic]; pick one source");
  }
  if (!saw_dataset && !saw_synthetic) {
    throw std::runtime_error(
        "config needs a [dataset] or [synthetic] section");
  }
  validate_config(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_file(load_key_value(path));
}

void apply_override(ExperimentConfig& config, std::string_view dotted_key,
                    std::string_view value) {
  const std::size_t dot = dotted_key.find('.');
  if (dot == std::string_view::npos || dot == 0 ||
      dot == dotted_key.size() - 1) {
    throw std::runtime_error("override '" + std::string(dotted_key) +
                             "' must look like section.key");
  }
  KeyValueFile::Entry e;
  e.section = std::string(dotted_key.substr(0, dot));
  e.key = std::string(dotted_key.substr(dot + 1));
  e.value = std::string(value);
  e.line = 0;
  bool saw_dataset = config.dataset_path.has_value();
  bool saw_synthetic = config.synthetic;
  apply_entry(config, e, saw_dataset, saw_synthetic);
  if (config.dataset_path && config.synthetic) {
    throw std::runtime_error(
        "override mixes [dataset] and [synthetic] sources");
  }
  validate_config(config);
}

void validate_config(const ExperimentConfig& c) {
  if (!(c.test_frac > 0.0 && c.test_frac < 1.0)) {
    throw std::runtime_error("split.test_frac must lie in (0, 1)");
  }
  if (c.warmup_per_class < 1) {
    throw std::runtime_error("split.warmup_per_class must be >= 1");
  }
  if (!(0.0 <= c.band_lo && c.band_lo < c.band_hi && c.band_hi <= 1.0)) {
    throw std::runtime_error(
        "sampler band must satisfy 0 <= band_lo < band_hi <= 1");
  }
  if (c.window_l < 1) {
    throw std::runtime_error("sampler.window_l must be >= 1");
  }
  if (c.learner.learning_rate <= 0.0) {
    throw std::runtime_error("learner.learning_rate must be > 0");
  }
  if (c.learner.l2 < 0.0) {
    throw std::runtime_error("learner.l2 must be >= 0");
  }
  if (c.learner.epochs < 1) {
    throw std::runtime_error("learner.epochs must be >= 1");
  }
  if (c.learner.clone_update_steps < 0) {
    throw std::runtime_error("learner.clone_update_steps must be >= 0");
  }
  if (c.synthetic) {
    if (c.synth_classes < 2) {
      throw std::runtime_error("synthetic.classes must be >= 2");
    }
    if (c.synth_n < 1) {
      throw std::runtime_error("synthetic.n must be >= 1");
    }
    if (c.synth_dim < 1) {
      throw std::runtime_error("synthetic.dim must be >= 1");
    }
    if (c.synth_span_days < 0.0) {
      throw std::runtime_error("synthetic.span_days must be >= 0");
    }
    if (c.synth_noise_sigma < 0.0) {
      throw std::runtime_error("synthetic.noise_sigma must be >= 0");
    }
    if (!c.synth_priors.empty() &&
        c.synth_priors.size() != static_cast<std::size_t>(c.synth_classes)) {
      throw std::runtime_error(
          "synthetic.priors must list one value per class");
    }
  }
  if (c.feature_mode == FeatureMode::Hashed && c.feature_dim < 8) {
    throw std::runtime_error("features.dim must be >= 8 for hashed features");
  }
  if (c.feature_mode == FeatureMode::Embeddings && c.embeddings_path.empty() &&
      !c.synthetic) {
    throw std::runtime_error(
        "features.mode = embeddings needs features.embeddings_path");
  }
}

}  // namespace streamal
