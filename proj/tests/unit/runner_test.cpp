#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "streamal/runner.hpp"
#include "test_util.hpp"

using namespace streamal;

namespace {

// Small separable synthetic stream that runs in well under a second.
ExperimentConfig small_config(std::uint64_t seed) {
  ExperimentConfig config;
  config.synthetic = true;
  config.synth_classes = 3;
  config.synth_n = 400;
  config.synth_dim = 8;
  config.synth_span_days = 8.5;
  config.synth_noise_sigma = 1.0;
  config.synth_centroid_scale = 3.0;
  config.warmup_per_class = 10;
  config.learner.epochs = 8;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("run_experiment: regime none reports the truth everywhere") {
  auto config = small_config(5);
  config.regime = "none";
  config.sampler = SamplerKind::Uncertainty;
  const auto result = run_experiment(config);
  CHECK(!result.audit.empty());
  for (const auto& rec : result.audit) {
    CHECK(rec.reported == rec.true_label);
  }
}

TEST_CASE("run_experiment: fast regime actually corrupts labels") {
  auto config = small_config(5);
  config.regime = "fast";
  config.sampler = SamplerKind::Uncertainty;
  const auto result = run_experiment(config);
  int wrong = 0;
  for (const auto& rec : result.audit) wrong += rec.reported != rec.true_label;
  CHECK(!result.audit.empty());
  CHECK(wrong > 0);
}

TEST_CASE("run_experiment: discard gate closed for intervals 1-3") {
  auto config = small_config(7);
  config.regime = "fast";
  config.sampler = SamplerKind::ErrorMitigating;
  const auto result = run_experiment(config);
  REQUIRE(result.metrics.size() >= 3);
  for (const auto& m : result.metrics) {
    if (m.interval <= 3) CHECK(!m.discarded_class.has_value());
  }
}

TEST_CASE("run_experiment: record shape and counters") {
  auto config = small_config(11);
  config.regime = "slow";
  config.sampler = SamplerKind::Uncertainty;
  const auto result = run_experiment(config);
  REQUIRE(!result.metrics.empty());

  long prev_cumulative = 0;
  int expected_interval = 1;
  for (const auto& m : result.metrics) {
    CHECK(m.interval == expected_interval++);
    CHECK(m.sampler == "uncertainty");
    CHECK(m.regime == "slow");
    CHECK(m.seed == 11);
    CHECK(m.annotated <= m.region_size);
    CHECK(m.region_size <= m.batch_size);
    CHECK(m.auc >= 0.0);
    CHECK(m.auc <= 1.0);
    if (m.annotated > 0) {
      CHECK(m.cumulative_annotated == prev_cumulative + m.annotated);
    } else {
      CHECK(m.cumulative_annotated == prev_cumulative);
    }
    prev_cumulative = m.cumulative_annotated;
  }
}

TEST_CASE("run_experiment: deterministic per seed") {
  auto config = small_config(13);
  config.regime = "fast";
  config.sampler = SamplerKind::ErrorMitigating;
  const auto a = run_experiment(config);
  const auto b = run_experiment(config);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].auc == b.metrics[i].auc);
    CHECK(a.metrics[i].annotated == b.metrics[i].annotated);
    CHECK(a.metrics[i].region_size == b.metrics[i].region_size);
    CHECK(a.metrics[i].discarded_class == b.metrics[i].discarded_class);
    CHECK(a.metrics[i].cumulative_annotated == b.metrics[i].cumulative_annotated);
  }
  REQUIRE(a.audit.size() == b.audit.size());
  for (std::size_t i = 0; i < a.audit.size(); ++i) {
    CHECK(a.audit[i].instance_id == b.audit[i].instance_id);
    CHECK(a.audit[i].reported == b.audit[i].reported);
  }

  auto other = config;
  other.seed = 14;
  const auto c = run_experiment(other);
  bool identical = c.metrics.size() == a.metrics.size();
  if (identical) {
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
      if (a.metrics[i].auc != c.metrics[i].auc ||
          a.metrics[i].annotated != c.metrics[i].annotated) {
        identical = false;
        break;
      }
    }
  }
  CHECK(!identical);
}

TEST_CASE("run_experiment: unreachable band means idle intervals") {
  auto config = small_config(17);
  config.sampler = SamplerKind::Uncertainty;
  // Three classes put every max prob at 1/3 or above, so this band is empty.
  config.band_lo = 0.01;
  config.band_hi = 0.02;
  const auto result = run_experiment(config);
  for (const auto& m : result.metrics) {
    CHECK(m.annotated == 0);
    CHECK(m.cumulative_annotated == 0);
    // Model never changes, so the score stays at the warm-up level.
    CHECK(m.auc == result.warmup_auc);
  }
}

TEST_CASE("run_experiment: easy data mostly improves on the warm-up") {
  int improved = 0;
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  for (auto seed : seeds) {
    auto config = small_config(seed);
    // Overlapping blobs: the warm-up model is mediocre, so the stream's
    // extra labels have headroom to show up in the final score.
    config.synth_noise_sigma = 2.0;
    config.synth_centroid_scale = 2.0;
    config.regime = "none";
    config.sampler = SamplerKind::Uncertainty;
    const auto result = run_experiment(config);
    REQUIRE(!result.metrics.empty());
    improved += result.metrics.back().auc >= result.warmup_auc;
  }
  CHECK(improved >= 3);
}

TEST_CASE("run_experiment: dataset file route") {
  testutil::TempDir tmp("runner_file");
  // Materialise a synthetic stream to disk, then run from the file.
  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.priors = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  spec.centroids = random_centroids(3, 8, 3.0, 2);
  spec.n = 300;
  spec.span_days = 6.5;
  const auto data = generate_synthetic_stream(spec, 21);
  const auto path = tmp.file("stream.jsonl");
  write_dataset_jsonl(path, data);

  ExperimentConfig config;
  config.dataset_path = path;
  config.dataset_format = DatasetFormat::Jsonl;
  config.warmup_per_class = 10;
  config.learner.epochs = 5;
  config.seed = 3;
  const auto result = run_experiment(config);
  CHECK(!result.metrics.empty());
  CHECK(result.classes.size() == 3);
}

TEST_CASE("run_experiment: missing dataset file raises with the path") {
  ExperimentConfig config;
  config.dataset_path = "/nonexistent/stream.csv";
  std::string message;
  try {
    run_experiment(config);
  } catch (const std::exception& e) {
    message = e.what();
  }
  CHECK(message.find("/nonexistent/stream.csv") != std::string::npos);
}

TEST_CASE("run_experiment: error-mitigating dumps per-interval files") {
  testutil::TempDir tmp("runner_dump");
  auto config = small_config(19);
  config.regime = "fast";
  config.sampler = SamplerKind::ErrorMitigating;
  RunHooks hooks;
  hooks.dump_dir = tmp.file("");
  const auto result = run_experiment(config, hooks);
  for (const auto& m : result.metrics) {
    const auto stem = tmp.file("interval_" + std::to_string(m.interval));
    CHECK(std::filesystem::exists(stem + "_matrix.csv"));
    CHECK(std::filesystem::exists(stem + "_scores.csv"));
  }
}

TEST_CASE("metrics writers: csv header and json array") {
  testutil::TempDir tmp("metrics_out");
  auto config = small_config(23);
  config.sampler = SamplerKind::ErrorMitigating;
  config.regime = "fast";
  const auto result = run_experiment(config);
  std::vector<MetricsRow> rows;
  for (const auto& m : result.metrics) rows.push_back({"r0", m});

  const auto csv_path = tmp.file("m.csv");
  write_metrics_csv(csv_path, rows);
  const auto csv_text = testutil::read_text(csv_path);
  CHECK(csv_text.rfind("run_id,interval,sampler,regime,seed,N,n,m,"
                       "discarded_class,cumulative_annotated,auc_micro\n",
                       0) == 0);
  std::size_t lines = 0;
  for (char ch : csv_text) lines += ch == '\n';
  CHECK(lines == rows.size() + 1);

  const auto json_path = tmp.file("m.json");
  write_metrics_json(json_path, rows);
  const auto parsed = nlohmann::json::parse(testutil::read_text(json_path));
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == rows.size());
  CHECK(parsed[0]["run_id"] == "r0");
  CHECK(parsed[0]["interval"] == 1);
  CHECK(parsed[0]["auc_micro"].is_number());
}

TEST_CASE("sweep: grid runs all configs and keeps input order") {
  std::vector<ExperimentConfig> configs;
  const SamplerKind kinds[] = {SamplerKind::Random, SamplerKind::Uncertainty,
                               SamplerKind::ErrorMitigating};
  const char* regimes[] = {"none", "slow", "fast"};
  for (auto kind : kinds) {
    for (const char* regime : regimes) {
      auto config = small_config(31);
      config.sampler = kind;
      config.regime = regime;
      configs.push_back(config);
    }
  }
  const auto outcomes = sweep(configs, 3);
  REQUIRE(outcomes.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(outcomes[i].run_id == "r" + std::to_string(i));
    REQUIRE(outcomes[i].result.has_value());
    CHECK(outcomes[i].error.empty());
    CHECK(outcomes[i].result->metrics.front().sampler ==
          sampler_name(configs[i].sampler));
    CHECK(outcomes[i].result->metrics.front().regime == configs[i].regime);
  }
}

TEST_CASE("sweep: a broken run is recorded, the rest proceed") {
  std::vector<ExperimentConfig> configs;
  configs.push_back(small_config(1));
  ExperimentConfig broken;
  broken.dataset_path = "/missing/file.csv";
  configs.push_back(broken);
  configs.push_back(small_config(2));

  const auto outcomes = sweep(configs, 2);
  REQUIRE(outcomes.size() == 3);
  CHECK(outcomes[0].result.has_value());
  CHECK(!outcomes[1].result.has_value());
  CHECK(outcomes[1].error.find("/missing/file.csv") != std::string::npos);
  CHECK(outcomes[2].result.has_value());

  const std::vector<ExperimentConfig> empty;
  CHECK_THROWS(sweep(empty, 1));
}

TEST_CASE("sweep: same config twice differs only through the seed") {
  auto a = small_config(1);
  auto b = small_config(2);
  const std::vector<ExperimentConfig> configs = {a, b};
  const auto outcomes = sweep(configs, 1);
  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].result->metrics.front().seed == 1);
  CHECK(outcomes[1].result->metrics.front().seed == 2);
}
