#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "streamal/rng.hpp"
#include "streamal/stream.hpp"

namespace streamal {

// The two kinds of annotation error a judge can make: a slip is a one-off
// lapse on a concept the judge knows; a mistake reflects a concept that was
// never learned correctly.
enum class ErrorType { Slip, Mistake };

struct ForgettingParams {
  double alpha = 0.0;  // steepness per unit elapsed time, > 0
  double beta = 0.0;   // offset
  double gamma = 0.0;  // asymptotic error ceiling, in [0, 1]
};

// gamma / (1 + e^(-alpha*t + beta)): the chance the annotator has forgotten
// a class after going t time units without seeing it.
double forgetting_score(const ForgettingParams& params, double t);

enum class RegimeKind { Slow, Fast, None };

struct OracleRegime {
  RegimeKind kind = RegimeKind::None;
  std::optional<ForgettingParams> params;  // absent iff kind == None
};

OracleRegime regime_from_name(std::string_view name);
std::string_view regime_name(RegimeKind kind);

// Mutable annotation clock for a single simulated judge. The caller advances
// `clock` to the current instance's time before calling annotate.
struct OracleState {
  std::unordered_map<ClassId, double> last_seen;
  double clock = 0.0;
  double stream_start = 0.0;
  Rng rng;

  explicit OracleState(std::uint64_t seed) : rng(seed) {}
};

// Returns the label the judge reports for an instance whose true class is
// `true_label`. Under an active regime the judge errs with probability
// forgetting_score(t) where t = clock - last_seen[true_label] (first
// encounter: t = clock - stream_start); the wrong label is uniform over the
// other classes, or drawn from `confusion` (row-major class_count x
// class_count, row = true class) when one is supplied. last_seen[true_label]
// is set to clock afterwards either way.
ClassId annotate(OracleState& state, ClassId true_label,
                 const OracleRegime& regime, int class_count,
                 const std::vector<double>* confusion = nullptr);

struct ErrorObservation {
  double t = 0.0;
  bool erred = false;
};

struct FitOptions {
  int bins = 10;
};

// Least-squares fit of the forgetting curve to binned error rates: equal-
// width bins over t, grid search (alpha log-spaced in [1e-3, 1], beta in
// [-5, 5], gamma in [0, 1]) then coordinate-descent refinement. Fully
// deterministic.
ForgettingParams fit_forgetting_params(std::span<const ErrorObservation> obs,
                                       const FitOptions& opts = {});

// CSV with header `t,erred`, erred in {0,1}.
std::vector<ErrorObservation> load_observations_csv(const std::string& path);

}  // namespace streamal
