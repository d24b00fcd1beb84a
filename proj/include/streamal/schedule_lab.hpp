#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streamal/oracle.hpp"
#include "streamal/stream.hpp"

namespace streamal {

// A fixed annotation sequence shown to crowd judges, with the positions of
// the class whose recall is under study.
struct Schedule {
  ClassSet classes;
  std::vector<ClassId> sequence;
  ClassId target = 0;
  std::vector<int> target_positions;
};

struct JudgeResponse {
  std::string judge_id;
  std::vector<ClassId> choices;  // one per schedule position
};

struct ResponseSet {
  std::vector<JudgeResponse> responses;
};

// The two hand-built 20-item reference schedules over classes c1..c4 with
// target c3: the slip design mixes short and long gaps (positions 3, 5, 19),
// the mistake design spaces the target evenly (positions 8, 12, 16).
std::pair<Schedule, Schedule> reference_schedules();

// Builds a schedule of `length` items holding `target_count` occurrences of
// `target`. Slip: strictly non-uniform gaps, the largest at least twice the
// smallest (needs target_count >= 3). Mistake: equal gaps with the remainder
// absorbed at the tail. Non-target slots are seeded uniform draws over the
// other classes. Throws when the gap pattern cannot fit.
Schedule generate_schedule(ErrorType kind, const ClassSet& classes,
                           ClassId target, int length, int target_count,
                           std::uint64_t seed);

// All |positions|! assignments of instance ids to target positions, in
// lexicographic permutation order. assignment[i] = instance at
// target_positions[i].
std::vector<std::vector<std::string>> permute_target_positions(
    const Schedule& schedule, const std::vector<std::string>& target_instances);

// Per target position: fraction of responses that did not choose the target.
std::vector<double> position_error_rates(const ResponseSet& responses,
                                         const Schedule& schedule);

struct ErrorCounts {
  int wrong = 0;
  int total = 0;
};

enum class TestMethod { PooledZ, FisherExact };

// Two-tailed test of "the two positions err at the same rate". PooledZ is a
// two-proportion z-test with pooled variance (identical proportions give
// p = 1); FisherExact sums hypergeometric tables at most as likely as the
// observed one.
double two_tailed_position_test(const ErrorCounts& err_last,
                                const ErrorCounts& err_earlier,
                                TestMethod method = TestMethod::PooledZ);

// CSV with header `judge_id,position,chosen_label`; every judge must cover
// each position of `schedule` exactly once.
ResponseSet load_responses_csv(const std::string& path,
                               const Schedule& schedule);

// JSON round trip: {"sequence": [...names], "target": name,
// "target_positions": [...]}.
void save_schedule_json(const Schedule& schedule, const std::string& path);
Schedule load_schedule_json(const std::string& path);

}  // namespace streamal
