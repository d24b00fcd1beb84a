#include "streamal/schedule_lab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "streamal/io_util.hpp"
#include "streamal/rng.hpp"

#include <json.hpp>

namespace streamal {

namespace {

Schedule build_reference(const std::vector<int>& sequence,
                         const std::vector<int>& positions) {
  Schedule s;
  s.classes = ClassSet({"c1", "c2", "c3", "c4"});
  s.target = *s.classes.find("c3");
  for (int c : sequence) s.sequence.push_back(c - 1);  // 1-based class tags
  s.target_positions = positions;
  return s;
}

void check_schedule(const Schedule& s) {
  if (s.target_positions.empty()) {
    throw std::invalid_argument("schedule has no target positions");
  }
  for (int p : s.target_positions) {
    if (p < 0 || p >= static_cast<int>(s.sequence.size())) {
      throw std::invalid_argument("target position " + std::to_string(p) +
                                  " outside the sequence");
    }
    if (s.sequence[static_cast<std::size_t>(p)] != s.target) {
      throw std::invalid_argument("position " + std::to_string(p) +
                                  " does not hold the target class");
    }
  }
}

double normal_two_tailed(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double fisher_exact_two_tailed(int w1, int n1, int w2, int n2) {
  // 2x2 table with fixed margins; row totals n1, n2, first-column total
  // w1 + w2. Probability of a table with k errors in group 1:
  const int c1 = w1 + w2;
  const int n = n1 + n2;
  const int k_lo = std::max(0, c1 - n2);
  const int k_hi = std::min(n1, c1);
  const double log_denom = log_choose(n, c1);
  auto log_prob = [&](int k) {
    return log_choose(n1, k) + log_choose(n2, c1 - k) - log_denom;
  };
  const double observed = log_prob(w1);
  double p = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    if (log_prob(k) <= observed + 1e-9) p += std::exp(log_prob(k));
  }
  return std::min(1.0, p);
}

}  // namespace

std::pair<Schedule, Schedule> reference_schedules() {
  const Schedule slip = build_reference(
      {4, 1, 2, 3, 1, 3, 4, 1, 4, 1, 4, 2, 1, 4, 1, 2, 4, 2, 4, 3},
      {3, 5, 19});
  const Schedule mistake = build_reference(
      {4, 1, 2, 1, 4, 2, 1, 4, 3, 1, 2, 4, 3, 1, 2, 1, 3, 2, 4, 4},
      {8, 12, 16});
  check_schedule(slip);
  check_schedule(mistake);
  return {slip, mistake};
}

Schedule generate_schedule(ErrorType kind, const ClassSet& classes,
                           ClassId target, int length, int target_count,
                           std::uint64_t seed) {
  if (classes.size() < 2) {
    throw std::invalid_argument("schedule needs at least 2 classes");
  }
  if (target < 0 || target >= classes.size()) {
    throw std::invalid_argument("target class outside the class set");
  }
  if (target_count < 2) {
    throw std::invalid_argument("target_count must be >= 2");
  }
  if (length < 2 * target_count) {
    throw std::invalid_argument("length must be >= 2 * target_count");
  }

  Rng rng(seed);
  std::vector<int> positions;

  if (kind == ErrorType::Mistake) {
    // Equal gaps; whatever does not divide evenly is left as the tail.
    const int gap = length / (target_count + 2);
    if (gap < 1) {
      throw std::invalid_argument(
          "length too small for equally spaced target positions");
    }
    for (int i = 0; i < target_count; ++i) positions.push_back(gap * (i + 2));
  } else {
    // Growing gaps u, 2u, 3u, ... are strictly non-uniform and make the
    // largest at least twice the smallest — which needs three appearances.
    if (target_count < 3) {
      throw std::invalid_argument(
          "a slip schedule needs target_count >= 3 to vary its gaps");
    }
    const int start = static_cast<int>(rng.bounded(2));  // 0 or 1
    const int span_units = target_count * (target_count - 1) / 2;
    const int u = (length - 1 - start) / span_units;
    if (u < 1) {
      throw std::invalid_argument(
          "length too small for a non-uniform gap pattern");
    }
    int p = start;
    positions.push_back(p);
    for (int i = 1; i < target_count; ++i) {
      p += i * u;
      positions.push_back(p);
    }
  }

  Schedule s;
  s.classes = classes;
  s.target = target;
  s.target_positions = positions;
  s.sequence.assign(static_cast<std::size_t>(length), -1);
  for (int p : positions) s.sequence[static_cast<std::size_t>(p)] = target;
  for (auto& slot : s.sequence) {
    if (slot >= 0) continue;
    const auto draw =
        static_cast<ClassId>(rng.bounded(static_cast<std::uint64_t>(
            classes.size() - 1)));
    slot = draw + (draw >= target ? 1 : 0);
  }
  check_schedule(s);
  return s;
}

std::vector<std::vector<std::string>> permute_target_positions(
    const Schedule& schedule,
    const std::vector<std::string>& target_instances) {
  if (target_instances.size() != schedule.target_positions.size()) {
    throw std::invalid_argument(
        std::to_string(target_instances.size()) + " instances for " +
        std::to_string(schedule.target_positions.size()) +
        " target positions");
  }
  for (std::size_t i = 0; i < target_instances.size(); ++i) {
    for (std::size_t j = i + 1; j < target_instances.size(); ++j) {
      if (target_instances[i] == target_instances[j]) {
        throw std::invalid_argument("target instances must be distinct");
      }
    }
  }

  std::vector<std::size_t> order(target_instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<std::string>> assignments;
  do {
    std::vector<std::string> assignment;
    assignment.reserve(order.size());
    for (std::size_t idx : order) assignment.push_back(target_instances[idx]);
    assignments.push_back(std::move(assignment));
  } while (std::next_permutation(order.begin(), order.end()));
  return assignments;
}

std::vector<double> position_error_rates(const ResponseSet& responses,
                                         const Schedule& schedule) {
  if (responses.responses.empty()) {
    throw std::invalid_argument("response set is empty");
  }
  check_schedule(schedule);
  for (const auto& r : responses.responses) {
    if (r.choices.size() != schedule.sequence.size()) {
      throw std::invalid_argument("judge '" + r.judge_id + "' answered " +
                                  std::to_string(r.choices.size()) +
                                  " positions, schedule has " +
                                  std::to_string(schedule.sequence.size()));
    }
  }
  std::vector<double> rates;
  rates.reserve(schedule.target_positions.size());
  for (int p : schedule.target_positions) {
    int wrong = 0;
    for (const auto& r : responses.responses) {
      if (r.choices[static_cast<std::size_t>(p)] != schedule.target) ++wrong;
    }
    rates.push_back(static_cast<double>(wrong) /
                    static_cast<double>(responses.responses.size()));
  }
  return rates;
}

double two_tailed_position_test(const ErrorCounts& err_last,
                                const ErrorCounts& err_earlier,
                                TestMethod method) {
  for (const auto* c : {&err_last, &err_earlier}) {
    if (c->total < 1) {
      throw std::invalid_argument("error counts need total >= 1");
    }
    if (c->wrong < 0 || c->wrong > c->total) {
      throw std::invalid_argument("wrong count outside [0, total]");
    }
  }

  if (method == TestMethod::FisherExact) {
    return fisher_exact_two_tailed(err_last.wrong, err_last.total,
                                   err_earlier.wrong, err_earlier.total);
  }

  const double p1 =
      static_cast<double>(err_last.wrong) / static_cast<double>(err_last.total);
  const double p2 = static_cast<double>(err_earlier.wrong) /
                    static_cast<double>(err_earlier.total);
  if (p1 == p2) return 1.0;
  const double pooled =
      static_cast<double>(err_last.wrong + err_earlier.wrong) /
      static_cast<double>(err_last.total + err_earlier.total);
  const double se =
      std::sqrt(pooled * (1.0 - pooled) *
                (1.0 / err_last.total + 1.0 / err_earlier.total));
  if (se == 0.0) return 1.0;
  return normal_two_tailed((p1 - p2) / se);
}

ResponseSet load_responses_csv(const std::string& path,
                               const Schedule& schedule) {
  const auto records = parse_csv(read_file(path));
  if (records.empty()) {
    throw std::runtime_error(path + ": file is empty");
  }
  const auto& header = records.front().fields;
  if (header.size() < 3 || header[0] != "judge_id" ||
      header[1] != "position" || header[2] != "chosen_label") {
    throw std::runtime_error(
        path + ": expected header 'judge_id,position,chosen_label'");
  }

  const auto L = static_cast<int>(schedule.sequence.size());
  std::map<std::string, std::vector<std::optional<ClassId>>> by_judge;
  std::vector<std::string> judge_order;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() < 3) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": expected 3 fields");
    }
    const std::string& judge = rec.fields[0];
    int position = -1;
    const auto& ps = rec.fields[1];
    auto [ptr, ec] =
        std::from_chars(ps.data(), ps.data() + ps.size(), position);
    if (ec != std::errc{} || ptr != ps.data() + ps.size() || position < 0 ||
        position >= L) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": position must be an integer in [0, " +
                               std::to_string(L - 1) + "]");
    }
    const auto label = schedule.classes.find(rec.fields[2]);
    if (!label) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": unknown class '" + rec.fields[2] + "'");
    }
    auto [it, inserted] = by_judge.try_emplace(
        judge, static_cast<std::size_t>(L), std::nullopt);
    if (inserted) judge_order.push_back(judge);
    auto& slot = it->second[static_cast<std::size_t>(position)];
    if (slot) {
      throw std::runtime_error("line " + std::to_string(rec.line) +
                               ": judge '" + judge +
                               "' answered position " +
                               std::to_string(position) + " twice");
    }
    slot = *label;
  }

  ResponseSet set;
  for (const auto& judge : judge_order) {
    const auto& slots = by_judge.at(judge);
    JudgeResponse jr;
    jr.judge_id = judge;
    for (int p = 0; p < L; ++p) {
      const auto& slot = slots[static_cast<std::size_t>(p)];
      if (!slot) {
        throw std::runtime_error(path + ": judge '" + judge +
                                 "' is missing position " + std::to_string(p));
      }
      jr.choices.push_back(*slot);
    }
    set.responses.push_back(std::move(jr));
  }
  return set;
}

void save_schedule_json(const Schedule& schedule, const std::string& path) {
  check_schedule(schedule);
  nlohmann::json j;
  j["sequence"] = nlohmann::json::array();
  for (ClassId c : schedule.sequence) {
    j["sequence"].push_back(schedule.classes.name(c));
  }
  j["target"] = schedule.classes.name(schedule.target);
  j["target_positions"] = schedule.target_positions;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

Schedule load_schedule_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  Schedule s;
  if (!j.contains("sequence") || !j["sequence"].is_array() ||
      !j.contains("target") || !j.contains("target_positions")) {
    throw std::runtime_error(
        path + ": schedule needs sequence, target and target_positions");
  }
  for (const auto& name : j["sequence"]) {
    s.sequence.push_back(s.classes.get_or_add(name.get<std::string>()));
  }
  s.target = s.classes.get_or_add(j["target"].get<std::string>());
  for (const auto& p : j["target_positions"]) {
    s.target_positions.push_back(p.get<int>());
  }
  check_schedule(s);
  return s;
}

}  // namespace streamal
