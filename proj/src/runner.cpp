#include "streamal/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "streamal/features.hpp"
#include "streamal/io_util.hpp"
#include "streamal/learner.hpp"
#include "streamal/oracle.hpp"
#include "streamal/rng.hpp"

#include <json.hpp>

namespace streamal {

namespace {

Dataset obtain_dataset(const ExperimentConfig& config) {
  if (config.synthetic) {
    SyntheticSpec spec;
    spec.num_classes = config.synth_classes;
    spec.n = config.synth_n;
    spec.span_days = config.synth_span_days;
    spec.noise_sigma = config.synth_noise_sigma;
    if (config.synth_priors.empty()) {
      spec.priors.assign(static_cast<std::size_t>(config.synth_classes),
                         1.0 / config.synth_classes);
    } else {
      spec.priors = config.synth_priors;
    }
    spec.centroids =
        random_centroids(config.synth_classes, config.synth_dim,
                         config.synth_centroid_scale,
                         derive_seed(config.seed, "centroids"));
    return generate_synthetic_stream(spec, derive_seed(config.seed, "synth"));
  }
  if (!config.dataset_path) {
    throw std::runtime_error("config names no dataset source");
  }
  return load_dataset(*config.dataset_path, config.dataset_format);
}

std::vector<LabeledVector> to_labeled(std::span<const Instance> instances) {
  std::vector<LabeledVector> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back(LabeledVector{*inst.features, inst.label});
  }
  return out;
}

double evaluate(const LinearModel& model, std::span<const LabeledVector> test,
                MetricKind metric) {
  return metric == MetricKind::Micro ? auc_micro(model, test)
                                     : auc_macro(model, test);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config_in,
                         const RunHooks& hooks) {
  validate_config(config_in);
  ExperimentConfig config = config_in;

  Dataset data = obtain_dataset(config);
  if (data.classes.size() < 2) {
    throw std::runtime_error("dataset holds fewer than 2 classes");
  }

  RunResult result;

  // Feature materialisation: synthetic streams arrive dense; text datasets
  // are embedded or hashed on the fly.
  EmbeddingTable table;
  const EmbeddingTable* table_ptr = nullptr;
  if (config.feature_mode == FeatureMode::Embeddings &&
      !config.embeddings_path.empty()) {
    table = load_embeddings(config.embeddings_path, config.feature_dim);
    if (table.skipped_lines > 0) {
      result.warnings.push_back(std::to_string(table.skipped_lines) +
                                " embedding rows skipped (width mismatch)");
    }
    table_ptr = &table;
  }
  const int dim = materialize_features(data, table_ptr, config.feature_dim,
                                       config.hash_seed);

  SplitOptions split_opts;
  split_opts.test_frac = config.test_frac;
  split_opts.warmup_per_class = config.warmup_per_class;
  split_opts.chronological_test = config.chronological_test;
  DatasetSplit split = split_dataset(data, split_opts,
                                     derive_seed(config.seed, "split"),
                                     &result.warnings);
  if (split.warmup.empty()) {
    throw std::runtime_error("warm-up set is empty; lower test_frac or z");
  }
  if (split.train.empty()) {
    throw std::runtime_error("train stream is empty after the split");
  }
  const std::vector<LabeledVector> test = to_labeled(split.test);
  {
    bool multi = false;
    for (const auto& lv : test) {
      if (lv.y != test.front().y) {
        multi = true;
        break;
      }
    }
    if (test.empty() || !multi) {
      throw std::runtime_error(
          "test split needs at least 2 classes to score AUC");
    }
  }

  LearnerHyper hyper = config.learner;
  hyper.seed = derive_seed(config.seed, "learner");
  LinearModel model = make_model(data.classes.size(), dim, hyper);

  // Warm-up on trusted labels.
  std::vector<LabeledVector> cumulative = to_labeled(split.warmup);
  model = train(model, cumulative, TrainMode::FullRetrain);
  result.warmup_auc = evaluate(model, test, config.metric);

  const IntervalPlan plan = compute_interval_size(split.train);
  const auto bins = bin_stream(split.train, plan);

  const OracleRegime regime = regime_from_name(config.regime);
  OracleState oracle(derive_seed(config.seed, "oracle"));
  oracle.stream_start =
      config.time_unit == TimeUnit::Day
          ? static_cast<double>(split.train.front().timestamp) / 86400.0
          : 0.0;

  ContextWindow window;
  window.l = config.window_l;
  ErrorMatrix matrix(data.classes.size());

  long cumulative_annotated = 0;
  long annotation_counter = 0;

  for (std::size_t b = 0; b < bins.size(); ++b) {
    const int interval = static_cast<int>(b) + 1;
    const auto& batch = bins[b];
    window.prune(interval);
    matrix.prune(interval, window.l);

    const LinearModel entry_model = model;

    std::vector<Instance> selected;
    std::size_t region_size = 0;
    std::optional<ClassId> discarded;
    switch (config.sampler) {
      case SamplerKind::Random: {
        region_size = uncertainty_region(entry_model, batch, config.band_lo,
                                         config.band_hi)
                          .size();
        selected = random_sample(
            batch, region_size,
            derive_seed(config.seed,
                        "sampler-interval-" + std::to_string(interval)),
            &result.warnings);
        break;
      }
      case SamplerKind::Uncertainty: {
        selected = uncertainty_region(entry_model, batch, config.band_lo,
                                      config.band_hi);
        region_size = selected.size();
        break;
      }
      case SamplerKind::ErrorMitigating: {
        MitigatedSample ms =
            error_mitigating_sample(entry_model, batch, matrix, window,
                                    interval, config.band_lo, config.band_hi);
        selected = std::move(ms.selected);
        region_size = ms.region_size;
        discarded = ms.discarded;
        break;
      }
    }

    std::vector<LabeledVector> fresh;
    fresh.reserve(selected.size());
    for (const auto& inst : selected) {
      if (config.time_unit == TimeUnit::Day) {
        oracle.clock = static_cast<double>(inst.timestamp) / 86400.0;
      } else {
        oracle.clock = static_cast<double>(annotation_counter);
      }
      const ClassId reported =
          annotate(oracle, inst.label, regime, data.classes.size());
      result.audit.push_back(
          AnnotationRecord{interval, inst.id, inst.label, reported});

      if (config.sampler == SamplerKind::ErrorMitigating) {
        matrix = update_error_matrix(matrix, entry_model, inst, reported,
                                     window, interval);
        WindowEntry entry;
        entry.instance = inst;
        entry.interval_index = interval;
        entry.time_value = config.delta_unit == DeltaUnit::Interval
                               ? static_cast<double>(interval)
                               : static_cast<double>(annotation_counter);
        entry.annotated = reported;
        window.add(std::move(entry));
      }

      fresh.push_back(LabeledVector{*inst.features, reported});
      ++annotation_counter;
      ++cumulative_annotated;
    }

    if (!fresh.empty()) {
      if (config.train_mode == TrainMode::FullRetrain) {
        cumulative.insert(cumulative.end(), fresh.begin(), fresh.end());
        model = train(model, cumulative, TrainMode::FullRetrain);
      } else {
        cumulative.insert(cumulative.end(), fresh.begin(), fresh.end());
        model = train(model, fresh, TrainMode::Incremental);
      }
    }

    IntervalMetrics m;
    m.interval = interval;
    m.sampler = std::string(sampler_name(config.sampler));
    m.regime = config.regime;
    m.seed = config.seed;
    m.batch_size = static_cast<int>(batch.size());
    m.region_size = static_cast<int>(region_size);
    m.annotated = static_cast<int>(selected.size());
    if (discarded) m.discarded_class = data.classes.name(*discarded);
    m.cumulative_annotated = cumulative_annotated;
    m.auc = evaluate(model, test, config.metric);
    result.metrics.push_back(std::move(m));

    if (!hooks.dump_dir.empty() &&
        config.sampler == SamplerKind::ErrorMitigating) {
      const std::string stem =
          hooks.dump_dir + "/interval_" + std::to_string(interval);
      write_error_matrix_csv(stem + "_matrix.csv", matrix, data.classes,
                             interval);
      write_scores_csv(stem + "_scores.csv", matrix, window, data.classes);
    }
  }

  result.classes = data.classes;
  result.final_model = std::move(model);
  return result;
}

void write_metrics_csv(const std::string& path,
                       std::span<const MetricsRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "run_id,interval,sampler,regime,seed,N,n,m,discarded_class,"
         "cumulative_annotated,auc_micro\n";
  for (const auto& row : rows) {
    const auto& m = row.m;
    out << csv_escape(row.run_id) << ',' << m.interval << ','
        << csv_escape(m.sampler) << ',' << csv_escape(m.regime) << ','
        << m.seed << ',' << m.batch_size << ',' << m.region_size << ','
        << m.annotated << ','
        << (m.discarded_class ? csv_escape(*m.discarded_class) : "") << ','
        << m.cumulative_annotated << ',' << format_double(m.auc) << '\n';
  }
}

void write_metrics_json(const std::string& path,
                        std::span<const MetricsRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    const auto& m = row.m;
    nlohmann::json j;
    j["run_id"] = row.run_id;
    j["interval"] = m.interval;
    j["sampler"] = m.sampler;
    j["regime"] = m.regime;
    j["seed"] = m.seed;
    j["N"] = m.batch_size;
    j["n"] = m.region_size;
    j["m"] = m.annotated;
    if (m.discarded_class) {
      j["discarded_class"] = *m.discarded_class;
    } else {
      j["discarded_class"] = nullptr;
    }
    j["cumulative_annotated"] = m.cumulative_annotated;
    j["auc_micro"] = m.auc;
    arr.push_back(std::move(j));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << arr.dump(2) << '\n';
}

std::vector<SweepOutcome> sweep(std::span<const ExperimentConfig> configs,
                                int jobs) {
  if (configs.empty()) {
    throw std::invalid_argument("sweep needs at least one config");
  }
  if (jobs < 1) {
    throw std::invalid_argument("sweep needs jobs >= 1");
  }

  std::vector<SweepOutcome> outcomes(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    outcomes[i].run_id = "r" + std::to_string(i);
    outcomes[i].config = configs[i];
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        outcomes[i].result = run_experiment(configs[i]);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };

  const int n_threads =
      std::min<int>(jobs, static_cast<int>(configs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return outcomes;
}

}  // namespace streamal
