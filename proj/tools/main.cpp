#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamal/config.hpp"
#include "streamal/io_util.hpp"
#include "streamal/learner.hpp"
#include "streamal/oracle.hpp"
#include "streamal/runner.hpp"
#include "streamal/schedule_lab.hpp"
#include "streamal/stream.hpp"

namespace {

using namespace streamal;

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

void emit_metrics(const std::string& output, const std::string& format,
                  std::span<const MetricsRow> rows) {
  if (output.empty()) {
    // No file requested: CSV to stdout via a temp buffer-free path.
    std::cout << "run_id,interval,sampler,regime,seed,N,n,m,discarded_class,"
                 "cumulative_annotated,auc_micro\n";
    for (const auto& row : rows) {
      const auto& m = row.m;
      std::cout << csv_escape(row.run_id) << ',' << m.interval << ','
                << csv_escape(m.sampler) << ',' << csv_escape(m.regime) << ','
                << m.seed << ',' << m.batch_size << ',' << m.region_size << ','
                << m.annotated << ','
                << (m.discarded_class ? csv_escape(*m.discarded_class) : "")
                << ',' << m.cumulative_annotated << ',' << format_double(m.auc)
                << '\n';
    }
    return;
  }
  if (format == "json") {
    write_metrics_json(output, rows);
  } else {
    write_metrics_csv(output, rows);
  }
}

void write_audit_csv(const std::string& path, const RunResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "interval,instance_id,true_label,reported_label,erred\n";
  for (const auto& rec : result.audit) {
    out << rec.interval << ',' << csv_escape(rec.instance_id) << ','
        << csv_escape(result.classes.name(rec.true_label)) << ','
        << csv_escape(result.classes.name(rec.reported)) << ','
        << (rec.true_label == rec.reported ? 0 : 1) << '\n';
  }
}

struct RunArgs {
  std::string config_path;
  std::string sampler;
  std::string regime;
  std::string seed;
  std::vector<std::string> overrides;
  std::string output;
  std::string format = "csv";
  std::string run_id = "r0";
  std::string save_model;
  std::string dump_dir;
  std::string audit_path;
};

ExperimentConfig resolve_config(const RunArgs& args) {
  ExperimentConfig config = load_config(args.config_path);
  for (const auto& ov : args.overrides) {
    const std::size_t eq = ov.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("--set needs section.key=value, got '" + ov +
                               "'");
    }
    apply_override(config, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (!args.sampler.empty()) apply_override(config, "sampler.kind", args.sampler);
  if (!args.regime.empty()) apply_override(config, "oracle.regime", args.regime);
  if (!args.seed.empty()) apply_override(config, "run.seed", args.seed);
  return config;
}

int cmd_run(const RunArgs& args) {
  const ExperimentConfig config = resolve_config(args);
  RunHooks hooks;
  hooks.dump_dir = args.dump_dir;
  const RunResult result = run_experiment(config, hooks);

  for (const auto& w : result.warnings) {
    std::cerr << "warning: " << w << '\n';
  }

  std::vector<MetricsRow> rows;
  rows.reserve(result.metrics.size());
  for (const auto& m : result.metrics) rows.push_back({args.run_id, m});
  emit_metrics(args.output, args.format, rows);

  if (!args.save_model.empty()) {
    save_model_json(result.final_model, args.save_model);
  }
  if (!args.audit_path.empty()) {
    write_audit_csv(args.audit_path, result);
  }
  return 0;
}

int cmd_fit(const std::string& observations_path, int bins,
            const std::string& output) {
  const auto obs = load_observations_csv(observations_path);
  FitOptions opts;
  opts.bins = bins;
  const ForgettingParams params = fit_forgetting_params(obs, opts);
  nlohmann::json j;
  j["alpha"] = params.alpha;
  j["beta"] = params.beta;
  j["gamma"] = params.gamma;
  if (output.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + output);
    out << j.dump(2) << '\n';
  }
  return 0;
}

struct ScheduleArgs {
  std::string kind;
  bool generate = false;
  std::string classes = "c1,c2,c3,c4";
  std::string target = "c3";
  int length = 20;
  int targets = 3;
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_schedule(const ScheduleArgs& args) {
  Schedule schedule;
  if (args.generate) {
    const ClassSet classes(split_csv_list(args.classes));
    const auto target = classes.find(args.target);
    if (!target) {
      throw std::runtime_error("target class '" + args.target +
                               "' is not in --classes");
    }
    const ErrorType kind =
        args.kind == "slip" ? ErrorType::Slip : ErrorType::Mistake;
    schedule = generate_schedule(kind, classes, *target, args.length,
                                 args.targets, args.seed);
  } else {
    auto [slip, mistake] = reference_schedules();
    schedule = args.kind == "slip" ? slip : mistake;
  }
  if (args.output.empty()) {
    nlohmann::json j;
    j["sequence"] = nlohmann::json::array();
    for (ClassId c : schedule.sequence) {
      j["sequence"].push_back(schedule.classes.name(c));
    }
    j["target"] = schedule.classes.name(schedule.target);
    j["target_positions"] = schedule.target_positions;
    std::cout << j.dump(2) << '\n';
  } else {
    save_schedule_json(schedule, args.output);
  }
  return 0;
}

struct SynthArgs {
  std::string output;
  int classes = 4;
  int n = 1000;
  int dim = 32;
  double span_days = 10.0;
  double noise_sigma = 1.0;
  double centroid_scale = 2.5;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& args) {
  SyntheticSpec spec;
  spec.num_classes = args.classes;
  spec.n = args.n;
  spec.span_days = args.span_days;
  spec.noise_sigma = args.noise_sigma;
  spec.priors.assign(static_cast<std::size_t>(args.classes),
                     1.0 / args.classes);
  spec.centroids = random_centroids(args.classes, args.dim,
                                    args.centroid_scale,
                                    derive_seed(args.seed, "centroids"));
  const Dataset data =
      generate_synthetic_stream(spec, derive_seed(args.seed, "synth"));
  write_dataset_jsonl(args.output, data);
  return 0;
}

struct SweepArgs {
  std::string config_path;
  std::string samplers;
  std::string regimes;
  std::string seeds;
  int jobs = 1;
  std::string output;
  std::string format = "csv";
};

int cmd_sweep(const SweepArgs& args) {
  const ExperimentConfig base = load_config(args.config_path);

  std::vector<std::string> samplers =
      args.samplers.empty() ? std::vector<std::string>{std::string(
                                  sampler_name(base.sampler))}
                            : split_csv_list(args.samplers);
  std::vector<std::string> regimes =
      args.regimes.empty() ? std::vector<std::string>{base.regime}
                           : split_csv_list(args.regimes);
  std::vector<std::string> seeds =
      args.seeds.empty() ? std::vector<std::string>{std::to_string(base.seed)}
                         : split_csv_list(args.seeds);

  std::vector<ExperimentConfig> configs;
  for (const auto& sampler : samplers) {
    for (const auto& regime : regimes) {
      for (const auto& seed : seeds) {
        ExperimentConfig c = base;
        apply_override(c, "sampler.kind", sampler);
        apply_override(c, "oracle.regime", regime);
        apply_override(c, "run.seed", seed);
        configs.push_back(std::move(c));
      }
    }
  }

  const auto outcomes = sweep(configs, args.jobs);

  std::vector<MetricsRow> rows;
  std::size_t failures = 0;
  for (const auto& outcome : outcomes) {
    if (!outcome.result) {
      ++failures;
      std::cerr << "error: run " << outcome.run_id << " failed: "
                << outcome.error << '\n';
      continue;
    }
    for (const auto& w : outcome.result->warnings) {
      std::cerr << "warning: " << outcome.run_id << ": " << w << '\n';
    }
    for (const auto& m : outcome.result->metrics) {
      rows.push_back({outcome.run_id, m});
    }
  }
  emit_metrics(args.output, args.format, rows);
  return failures == outcomes.size() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stream active-learning lab with a forgetful annotation oracle"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand(
      "run", "Run one experiment from a config file");
  run->add_option("--config", run_args.config_path, "Config file path")
      ->required();
  run->add_option("--sampler", run_args.sampler,
                  "Override sampler.kind (random|uncertainty|error_mitigating)");
  run->add_option("--regime", run_args.regime,
                  "Override oracle.regime (slow|fast|none)");
  run->add_option("--seed", run_args.seed, "Override run.seed");
  run->add_option("--set", run_args.overrides,
                  "Override any config key as section.key=value (repeatable)");
  run->add_option("--output", run_args.output,
                  "Metrics file (stdout CSV when omitted)");
  run->add_option("--format", run_args.format, "Output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--run-id", run_args.run_id, "Run identifier column value");
  run->add_option("--save-model", run_args.save_model,
                  "Write the final model snapshot (JSON) here");
  run->add_option("--dump-error-matrix", run_args.dump_dir,
                  "Directory for per-interval error-matrix dumps");
  run->add_option("--audit", run_args.audit_path,
                  "Write the per-annotation audit CSV here");

  std::string fit_observations;
  int fit_bins = 10;
  std::string fit_output;
  auto* fit = app.add_subcommand(
      "fit-forgetting", "Fit the forgetting curve to observed errors");
  fit->add_option("--observations", fit_observations,
                  "CSV of t,erred observations")
      ->required();
  fit->add_option("--bins", fit_bins, "Number of equal-width time bins")
      ->check(CLI::PositiveNumber);
  fit->add_option("--output", fit_output, "Write params JSON here (stdout "
                  "when omitted)");

  ScheduleArgs schedule_args;
  auto* schedule = app.add_subcommand(
      "schedule", "Emit a crowd annotation schedule as JSON");
  schedule->add_option("--kind", schedule_args.kind, "slip or mistake")
      ->required()
      ->check(CLI::IsMember({"slip", "mistake"}));
  schedule->add_flag("--generate", schedule_args.generate,
                     "Generate a fresh schedule instead of the reference one");
  schedule->add_option("--classes", schedule_args.classes,
                       "Comma-separated class names (with --generate)");
  schedule->add_option("--target", schedule_args.target,
                       "Target class name (with --generate)");
  schedule->add_option("--length", schedule_args.length,
                       "Schedule length (with --generate)");
  schedule->add_option("--targets", schedule_args.targets,
                       "Target occurrences (with --generate)");
  schedule->add_option("--seed", schedule_args.seed,
                       "Seed for non-target fills (with --generate)");
  schedule->add_option("--output", schedule_args.output,
                       "Write schedule JSON here (stdout when omitted)");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic labelled stream (JSONL)");
  synth->add_option("--output", synth_args.output, "Output JSONL path")
      ->required();
  synth->add_option("--classes", synth_args.classes, "Number of classes");
  synth->add_option("--n", synth_args.n, "Number of instances");
  synth->add_option("--dim", synth_args.dim, "Feature dimension");
  synth->add_option("--span-days", synth_args.span_days,
                    "Stream duration in days");
  synth->add_option("--noise-sigma", synth_args.noise_sigma,
                    "Per-coordinate Gaussian noise");
  synth->add_option("--centroid-scale", synth_args.centroid_scale,
                    "Distance of class centroids from the origin");
  synth->add_option("--seed", synth_args.seed, "Generator seed");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Run a sampler x regime x seed grid from one base config");
  sweep_cmd->add_option("--config", sweep_args.config_path, "Base config file")
      ->required();
  sweep_cmd->add_option("--samplers", sweep_args.samplers,
                        "Comma-separated sampler kinds");
  sweep_cmd->add_option("--regimes", sweep_args.regimes,
                        "Comma-separated oracle regimes");
  sweep_cmd->add_option("--seeds", sweep_args.seeds, "Comma-separated seeds");
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "Concurrent runs")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--output", sweep_args.output,
                        "Metrics file (stdout CSV when omitted)");
  sweep_cmd->add_option("--format", sweep_args.format,
                        "Output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(e);  // --help / --version
    }
    std::cerr << "error: " << e.what() << " (try --help)" << '\n';
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (fit->parsed()) return cmd_fit(fit_observations, fit_bins, fit_output);
    if (schedule->parsed()) return cmd_schedule(schedule_args);
    if (synth->parsed()) return cmd_synth(synth_args);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
