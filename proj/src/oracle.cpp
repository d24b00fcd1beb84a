#include "streamal/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "streamal/io_util.hpp"

namespace streamal {

double forgetting_score(const ForgettingParams& params, double t) {
  if (t < 0.0) {
    throw std::invalid_argument("elapsed time t must be >= 0");
  }
  return params.gamma / (1.0 + std::exp(-params.alpha * t + params.beta));
}

OracleRegime regime_from_name(std::string_view name) {
  OracleRegime regime;
  if (name == "slow") {
    regime.kind = RegimeKind::Slow;
    regime.params = ForgettingParams{0.0434, 0.9025, 0.75};
  } else if (name == "fast") {
    regime.kind = RegimeKind::Fast;
    regime.params = ForgettingParams{0.03, 1.0, 1.0};
  } else if (name == "none") {
    regime.kind = RegimeKind::None;
  } else {
    throw std::invalid_argument("unknown oracle regime '" + std::string(name) +
                                "' (expected slow, fast or none)");
  }
  return regime;
}

std::string_view regime_name(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::Slow: return "slow";
    case RegimeKind::Fast: return "fast";
    default: return "none";
  }
}

ClassId annotate(OracleState& state, ClassId true_label,
                 const OracleRegime& regime, int class_count,
                 const std::vector<double>* confusion) {
  if (true_label < 0 || true_label >= class_count) {
    throw std::invalid_argument("true label outside class range");
  }

  ClassId reported = true_label;
  if (regime.kind != RegimeKind::None) {
    if (class_count < 2) {
      throw std::invalid_argument(
          "forgetting needs at least 2 classes to pick a wrong label");
    }
    if (!regime.params) {
      throw std::invalid_argument("active regime is missing its parameters");
    }
    const auto it = state.last_seen.find(true_label);
    const double since =
        it != state.last_seen.end() ? it->second : state.stream_start;
    const double t = std::max(0.0, state.clock - since);
    if (state.rng.uniform_real() < forgetting_score(*regime.params, t)) {
      if (confusion) {
        const auto n = static_cast<std::size_t>(class_count);
        if (confusion->size() != n * n) {
          throw std::invalid_argument(
              "confusion matrix must be class_count x class_count");
        }
        const double* row =
            confusion->data() + static_cast<std::size_t>(true_label) * n;
        double total = 0.0;
        for (int c = 0; c < class_count; ++c) {
          if (c != true_label) total += row[c];
        }
        if (total <= 0.0) {
          throw std::invalid_argument(
              "confusion row has no mass outside the true class");
        }
        double u = state.rng.uniform_real() * total;
        reported = -1;
        for (int c = 0; c < class_count; ++c) {
          if (c == true_label) continue;
          u -= row[c];
          if (u < 0.0) {
            reported = c;
            break;
          }
        }
        if (reported < 0) {
          // Guard against accumulated rounding walking past the last class.
          for (int c = class_count - 1; c >= 0; --c) {
            if (c != true_label) {
              reported = c;
              break;
            }
          }
        }
      } else {
        const auto draw = static_cast<ClassId>(
            state.rng.bounded(static_cast<std::uint64_t>(class_count - 1)));
        reported = draw + (draw >= true_label ? 1 : 0);
      }
    }
  }
  state.last_seen[true_label] = state.clock;
  return reported;
}

namespace {

struct BinnedRates {
  std::vector<double> t;     // mean elapsed time of each non-empty bin
  std::vector<double> rate;  // empirical error rate of that bin
};

BinnedRates bin_observations(std::span<const ErrorObservation> obs, int bins) {
  double t_min = obs.front().t;
  double t_max = obs.front().t;
  for (const auto& o : obs) {
    t_min = std::min(t_min, o.t);
    t_max = std::max(t_max, o.t);
  }
  const double width = (t_max - t_min) / static_cast<double>(bins);

  std::vector<double> t_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> err(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
  for (const auto& o : obs) {
    auto idx = static_cast<std::size_t>((o.t - t_min) / width);
    idx = std::min(idx, static_cast<std::size_t>(bins - 1));
    t_sum[idx] += o.t;
    err[idx] += o.erred ? 1.0 : 0.0;
    count[idx] += 1.0;
  }

  BinnedRates out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(bins); ++i) {
    if (count[i] > 0.0) {
      out.t.push_back(t_sum[i] / count[i]);
      out.rate.push_back(err[i] / count[i]);
    }
  }
  return out;
}

double sse(const BinnedRates& data, const ForgettingParams& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.t.size(); ++i) {
    const double d = forgetting_score(p, data.t[i]) - data.rate[i];
    total += d * d;
  }
  return total;
}

}  // namespace

ForgettingParams fit_forgetting_params(std::span<const ErrorObservation> obs,
                                       const FitOptions& opts) {
  if (obs.size() < 20) {
    throw std::invalid_argument("fitting needs at least 20 observations");
  }
  if (opts.bins < 2) {
    throw std::invalid_argument("fitting needs at least 2 bins");
  }
  std::vector<double> ts;
  ts.reserve(obs.size());
  for (const auto& o : obs) {
    if (o.t < 0.0) {
      throw std::invalid_argument("observation has negative elapsed time");
    }
    ts.push_back(o.t);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (ts.size() < 3) {
    throw std::invalid_argument(
        "observations span fewer than 3 distinct t values");
  }

  const BinnedRates data = bin_observations(obs, opts.bins);

  // Coarse grid.
  ForgettingParams best{1e-3, 0.0, 0.5};
  double best_err = sse(data, best);
  constexpr int kAlphaSteps = 25;
  constexpr int kBetaSteps = 41;
  constexpr int kGammaSteps = 21;
  const double log_lo = std::log(1e-3);
  const double log_hi = std::log(1.0);
  for (int ia = 0; ia < kAlphaSteps; ++ia) {
    ForgettingParams p;
    p.alpha = std::exp(log_lo + (log_hi - log_lo) * ia / (kAlphaSteps - 1));
    for (int ib = 0; ib < kBetaSteps; ++ib) {
      p.beta = -5.0 + 10.0 * ib / (kBetaSteps - 1);
      for (int ig = 0; ig < kGammaSteps; ++ig) {
        p.gamma = static_cast<double>(ig) / (kGammaSteps - 1);
        const double e = sse(data, p);
        if (e < best_err) {
          best_err = e;
          best = p;
        }
      }
    }
  }

  // Coordinate descent: per-parameter bracketed scans with a shrinking step.
  double step_alpha = best.alpha * 0.5;
  double step_beta = 0.5;
  double step_gamma = 0.05;
  for (int round = 0; round < 60; ++round) {
    auto try_point = [&](ForgettingParams p) {
      p.alpha = std::clamp(p.alpha, 1e-6, 10.0);
      p.beta = std::clamp(p.beta, -10.0, 10.0);
      p.gamma = std::clamp(p.gamma, 0.0, 1.0);
      const double e = sse(data, p);
      if (e < best_err) {
        best_err = e;
        best = p;
        return true;
      }
      return false;
    };
    bool moved = false;
    for (double sign : {-1.0, 1.0}) {
      ForgettingParams p = best;
      p.alpha = best.alpha + sign * step_alpha;
      moved |= try_point(p);
      p = best;
      p.beta = best.beta + sign * step_beta;
      moved |= try_point(p);
      p = best;
      p.gamma = best.gamma + sign * step_gamma;
      moved |= try_point(p);
    }
    if (!moved) {
      step_alpha *= 0.5;
      step_beta *= 0.5;
      step_gamma *= 0.5;
    }
  }

  best.alpha = std::max(best.alpha, 1e-6);
  return best;
}

std::vector<ErrorObservation> load_observations_csv(const std::string& path) {
  const auto records = parse_csv(read_file(path));
  if (records.empty()) {
    throw std::runtime_error(path + ": file is empty");
  }
  const auto& header = records.front().fields;
  if (header.size() < 2 || header[0] != "t" || header[1] != "erred") {
    throw std::runtime_error(path + ": expected header 't,erred'");
  }
  std::vector<ErrorObservation> obs;
  obs.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() < 2) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": expected 2 fields");
    }
    ErrorObservation o;
    const auto& ts = rec.fields[0];
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), o.t);
    if (ec != std::errc{} || ptr != ts.data() + ts.size()) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": 't' is not a number: '" + ts + "'");
    }
    if (rec.fields[1] == "0") {
      o.erred = false;
    } else if (rec.fields[1] == "1") {
      o.erred = true;
    } else {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": 'erred' must be 0 or 1, got '" +
                               rec.fields[1] + "'");
    }
    obs.push_back(o);
  }
  return obs;
}

}  // namespace streamal
