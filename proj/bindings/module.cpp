#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "streamal/config.hpp"
#include "streamal/features.hpp"
#include "streamal/learner.hpp"
#include "streamal/oracle.hpp"
#include "streamal/runner.hpp"
#include "streamal/sampling.hpp"
#include "streamal/schedule_lab.hpp"

namespace py = pybind11;

namespace {

using namespace streamal;

py::dict schedule_to_dict(const Schedule& s) {
  py::list sequence;
  for (ClassId c : s.sequence) sequence.append(s.classes.name(c));
  py::dict d;
  d["sequence"] = std::move(sequence);
  d["target"] = s.classes.name(s.target);
  d["target_positions"] = s.target_positions;
  return d;
}

py::dict metrics_to_dict(const IntervalMetrics& m) {
  py::dict d;
  d["interval"] = m.interval;
  d["sampler"] = m.sampler;
  d["regime"] = m.regime;
  d["seed"] = m.seed;
  d["N"] = m.batch_size;
  d["n"] = m.region_size;
  d["m"] = m.annotated;
  if (m.discarded_class) {
    d["discarded_class"] = *m.discarded_class;
  } else {
    d["discarded_class"] = py::none();
  }
  d["cumulative_annotated"] = m.cumulative_annotated;
  d["auc_micro"] = m.auc;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Stream active-learning lab: forgetting oracle, samplers, and the "
      "experiment runner";

  py::class_<ForgettingParams>(m, "ForgettingParams")
      .def(py::init([](double alpha, double beta, double gamma) {
             return ForgettingParams{alpha, beta, gamma};
           }),
           py::arg("alpha"), py::arg("beta"), py::arg("gamma"))
      .def_readwrite("alpha", &ForgettingParams::alpha)
      .def_readwrite("beta", &ForgettingParams::beta)
      .def_readwrite("gamma", &ForgettingParams::gamma)
      .def("__repr__", [](const ForgettingParams& p) {
        return "ForgettingParams(alpha=" + std::to_string(p.alpha) +
               ", beta=" + std::to_string(p.beta) +
               ", gamma=" + std::to_string(p.gamma) + ")";
      });

  m.def("forgetting_score", &forgetting_score, py::arg("params"),
        py::arg("t"),
        "gamma / (1 + e^(-alpha*t + beta)) — mislabel probability after t "
        "time units without the class");

  m.def(
      "regime_params",
      [](const std::string& name) -> py::object {
        const OracleRegime regime = regime_from_name(name);
        if (!regime.params) return py::none();
        return py::cast(*regime.params);
      },
      py::arg("name"),
      "Forgetting parameters of a named regime (slow/fast); None for none");

  m.def(
      "fit_forgetting_params",
      [](const std::vector<std::pair<double, bool>>& observations, int bins) {
        std::vector<ErrorObservation> obs;
        obs.reserve(observations.size());
        for (const auto& [t, erred] : observations) {
          obs.push_back(ErrorObservation{t, erred});
        }
        FitOptions opts;
        opts.bins = bins;
        return fit_forgetting_params(obs, opts);
      },
      py::arg("observations"), py::arg("bins") = 10,
      "Least-squares fit of the forgetting curve to (t, erred) observations");

  m.def(
      "rank_auc",
      [](const std::vector<double>& scores, const std::vector<bool>& positive) {
        std::vector<char> pos(positive.begin(), positive.end());
        return rank_auc(scores, pos);
      },
      py::arg("scores"), py::arg("positive"),
      "Binary ROC AUC with midrank tie handling");

  m.def(
      "tokenize",
      [](const std::string& text) { return tokenize(text); }, py::arg("text"),
      "Lowercased whitespace tokens with edge punctuation stripped");

  m.def(
      "hashed_bow",
      [](const std::string& text, int dim, std::uint64_t seed) {
        return hashed_bow(text, dim, seed);
      },
      py::arg("text"), py::arg("dim") = 64, py::arg("seed") = 0,
      "L2-normalised hashed bag-of-words vector");

  m.def(
      "reference_schedules",
      []() {
        const auto [slip, mistake] = reference_schedules();
        py::dict d;
        d["slip"] = schedule_to_dict(slip);
        d["mistake"] = schedule_to_dict(mistake);
        return d;
      },
      "The two hand-built 20-item crowd schedules");

  m.def(
      "generate_schedule",
      [](const std::string& kind, const std::vector<std::string>& classes,
         const std::string& target, int length, int target_count,
         std::uint64_t seed) {
        if (kind != "slip" && kind != "mistake") {
          throw std::invalid_argument("kind must be slip or mistake");
        }
        const ClassSet class_set(classes);
        const auto target_id = class_set.find(target);
        if (!target_id) {
          throw std::invalid_argument("target class '" + target +
                                      "' is not in classes");
        }
        const Schedule s = generate_schedule(
            kind == "slip" ? ErrorType::Slip : ErrorType::Mistake, class_set,
            *target_id, length, target_count, seed);
        return schedule_to_dict(s);
      },
      py::arg("kind"), py::arg("classes"), py::arg("target"),
      py::arg("length"), py::arg("target_count"), py::arg("seed") = 0);

  m.def(
      "two_tailed_position_test",
      [](int wrong_last, int total_last, int wrong_earlier, int total_earlier,
         const std::string& method) {
        TestMethod tm;
        if (method == "pooled_z") {
          tm = TestMethod::PooledZ;
        } else if (method == "fisher") {
          tm = TestMethod::FisherExact;
        } else {
          throw std::invalid_argument("method must be pooled_z or fisher");
        }
        return two_tailed_position_test(
            ErrorCounts{wrong_last, total_last},
            ErrorCounts{wrong_earlier, total_earlier}, tm);
      },
      py::arg("wrong_last"), py::arg("total_last"), py::arg("wrong_earlier"),
      py::arg("total_earlier"), py::arg("method") = "pooled_z",
      "Two-tailed equal-error-rate test between two schedule positions");

  m.def(
      "run_config",
      [](const std::string& path, const std::vector<std::string>& overrides) {
        ExperimentConfig config = load_config(path);
        for (const auto& ov : overrides) {
          const std::size_t eq = ov.find('=');
          if (eq == std::string::npos) {
            throw std::invalid_argument(
                "override needs section.key=value, got '" + ov + "'");
          }
          apply_override(config, ov.substr(0, eq), ov.substr(eq + 1));
        }
        const RunResult result = run_experiment(config);
        py::list rows;
        for (const auto& metric : result.metrics) {
          rows.append(metrics_to_dict(metric));
        }
        return rows;
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{},
      "Run one experiment from a config file; one dict per interval");
}
