#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "streamal/schedule_lab.hpp"
#include "test_util.hpp"

using namespace streamal;

namespace {

std::vector<std::string> sequence_names(const Schedule& s) {
  std::vector<std::string> out;
  for (ClassId c : s.sequence) out.push_back(s.classes.name(c));
  return out;
}

std::vector<int> gaps(const std::vector<int>& positions) {
  std::vector<int> out;
  for (std::size_t i = 1; i < positions.size(); ++i) {
    out.push_back(positions[i] - positions[i - 1]);
  }
  return out;
}

ClassSet four_classes() {
  return ClassSet({"c1", "c2", "c3", "c4"});
}

}  // namespace

TEST_CASE("reference schedules match the fixed designs") {
  const auto [slip, mistake] = reference_schedules();

  CHECK(sequence_names(slip) ==
        std::vector<std::string>{"c4", "c1", "c2", "c3", "c1", "c3", "c4",
                                 "c1", "c4", "c1", "c4", "c2", "c1", "c4",
                                 "c1", "c2", "c4", "c2", "c4", "c3"});
  CHECK(slip.target_positions == std::vector<int>{3, 5, 19});
  CHECK(slip.classes.name(slip.target) == "c3");

  CHECK(sequence_names(mistake) ==
        std::vector<std::string>{"c4", "c1", "c2", "c1", "c4", "c2", "c1",
                                 "c4", "c3", "c1", "c2", "c4", "c3", "c1",
                                 "c2", "c1", "c3", "c2", "c4", "c4"});
  CHECK(mistake.target_positions == std::vector<int>{8, 12, 16});
  CHECK(mistake.classes.name(mistake.target) == "c3");

  CHECK(gaps(mistake.target_positions) == std::vector<int>{4, 4});

  for (const auto* sched : {&slip, &mistake}) {
    CHECK(sched->sequence.size() == 20);
    for (int pos : sched->target_positions) {
      CHECK(sched->sequence[pos] == sched->target);
    }
  }
}

TEST_CASE("generate_schedule mistake: equal gaps") {
  const auto classes = four_classes();
  const ClassId target = *classes.find("c3");
  const auto sched =
      generate_schedule(ErrorType::Mistake, classes, target, 20, 3, 11);
  CHECK(sched.sequence.size() == 20);
  REQUIRE(sched.target_positions.size() == 3);
  const auto g = gaps(sched.target_positions);
  for (int v : g) CHECK(v == g[0]);
  for (int pos : sched.target_positions) {
    CHECK(sched.sequence[pos] == target);
  }
  // Non-target slots never hold the target class.
  std::set<int> target_set(sched.target_positions.begin(),
                           sched.target_positions.end());
  for (int i = 0; i < 20; ++i) {
    if (!target_set.count(i)) CHECK(sched.sequence[i] != target);
  }
}

TEST_CASE("generate_schedule slip: non-uniform gaps, widest at least double") {
  const auto classes = four_classes();
  const ClassId target = *classes.find("c3");
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 42ull}) {
    const auto sched =
        generate_schedule(ErrorType::Slip, classes, target, 20, 3, seed);
    REQUIRE(sched.target_positions.size() == 3);
    const auto g = gaps(sched.target_positions);
    const int lo = *std::min_element(g.begin(), g.end());
    const int hi = *std::max_element(g.begin(), g.end());
    CHECK(hi >= 2 * lo);
    CHECK(lo >= 1);
    std::set<int> distinct(g.begin(), g.end());
    CHECK(distinct.size() == g.size());
    for (int pos : sched.target_positions) {
      CHECK(pos < 20);
      CHECK(sched.sequence[pos] == target);
    }
  }
}

TEST_CASE("generate_schedule: deterministic per seed") {
  const auto classes = four_classes();
  const ClassId target = *classes.find("c2");
  const auto a = generate_schedule(ErrorType::Slip, classes, target, 30, 4, 5);
  const auto b = generate_schedule(ErrorType::Slip, classes, target, 30, 4, 5);
  CHECK(a.sequence == b.sequence);
  CHECK(a.target_positions == b.target_positions);
  const auto c = generate_schedule(ErrorType::Slip, classes, target, 30, 4, 6);
  CHECK((a.sequence != c.sequence || a.target_positions != c.target_positions));
}

TEST_CASE("generate_schedule: infeasible shapes rejected") {
  const auto classes = four_classes();
  const ClassId target = *classes.find("c3");
  // Passes the length floor but the growing-gap pattern cannot fit.
  CHECK_THROWS(generate_schedule(ErrorType::Slip, classes, target, 10, 5, 1));
  // target_count below the minimum.
  CHECK_THROWS(generate_schedule(ErrorType::Mistake, classes, target, 20, 1, 1));
  // Slip needs at least three occurrences to stagger the gaps.
  CHECK_THROWS(generate_schedule(ErrorType::Slip, classes, target, 20, 2, 1));
  // length < 2 * target_count.
  CHECK_THROWS(generate_schedule(ErrorType::Mistake, classes, target, 5, 3, 1));
}

TEST_CASE("permute_target_positions: all six assignments") {
  const auto [slip, mistake] = reference_schedules();
  const std::vector<std::string> items = {"t1", "t2", "t3"};
  const auto perms = permute_target_positions(slip, items);
  REQUIRE(perms.size() == 6);

  // Lexicographic order starts at the identity assignment.
  CHECK(perms[0] == std::vector<std::string>{"t1", "t2", "t3"});
  CHECK(perms[5] == std::vector<std::string>{"t3", "t2", "t1"});

  std::set<std::vector<std::string>> uniq(perms.begin(), perms.end());
  CHECK(uniq.size() == 6);

  // Each instance lands at each position in exactly 2 of the 6 cases.
  for (const auto& item : items) {
    for (std::size_t pos = 0; pos < 3; ++pos) {
      int hits = 0;
      for (const auto& p : perms) hits += p[pos] == item;
      CHECK(hits == 2);
    }
  }

  CHECK_THROWS(permute_target_positions(slip, {"t1", "t2"}));
  CHECK_THROWS(permute_target_positions(slip, {"t1", "t1", "t2"}));
}

TEST_CASE("position_error_rates: counting against the target") {
  const auto [slip, _] = reference_schedules();
  const ClassId target = slip.target;
  const ClassId other = (target + 1) % 4;

  ResponseSet all_right;
  for (int j = 0; j < 4; ++j) {
    JudgeResponse r;
    r.judge_id = "j" + std::to_string(j);
    r.choices = slip.sequence;  // echo the ground truth
    all_right.responses.push_back(r);
  }
  auto rates = position_error_rates(all_right, slip);
  REQUIRE(rates.size() == 3);
  for (double v : rates) CHECK(v == 0.0);

  // 10 judges, 3 of them wrong at the second target position only.
  ResponseSet mixed;
  for (int j = 0; j < 10; ++j) {
    JudgeResponse r;
    r.judge_id = "j" + std::to_string(j);
    r.choices = slip.sequence;
    if (j < 3) r.choices[slip.target_positions[1]] = other;
    mixed.responses.push_back(r);
  }
  rates = position_error_rates(mixed, slip);
  CHECK(rates[0] == 0.0);
  CHECK(rates[1] == 0.3);
  CHECK(rates[2] == 0.0);

  // A single judge wrong everywhere saturates every rate.
  ResponseSet lone;
  JudgeResponse r;
  r.judge_id = "solo";
  r.choices = slip.sequence;
  for (int pos : slip.target_positions) r.choices[pos] = other;
  lone.responses.push_back(r);
  rates = position_error_rates(lone, slip);
  for (double v : rates) CHECK(v == 1.0);

  CHECK_THROWS(position_error_rates(ResponseSet{}, slip));
}

TEST_CASE("two_tailed_position_test: pooled z behaviour") {
  CHECK(two_tailed_position_test({3, 10}, {3, 10}) == 1.0);
  CHECK(two_tailed_position_test({10, 10}, {0, 10}) < 0.001);

  // Symmetric in the two groups.
  CHECK(two_tailed_position_test({7, 12}, {2, 9}) ==
        two_tailed_position_test({2, 9}, {7, 12}));

  // p falls as the proportions drift apart.
  double prev = 1.1;
  for (int wrong = 10; wrong >= 0; --wrong) {
    const double p = two_tailed_position_test({10, 10}, {wrong, 10});
    CHECK(p <= prev);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }

  CHECK_THROWS(two_tailed_position_test({0, 0}, {1, 5}));
  CHECK_THROWS(two_tailed_position_test({6, 5}, {1, 5}));
}

TEST_CASE("two_tailed_position_test: fisher variant") {
  CHECK(two_tailed_position_test({3, 10}, {3, 10}, TestMethod::FisherExact) ==
        1.0);
  const double p =
      two_tailed_position_test({10, 10}, {0, 10}, TestMethod::FisherExact);
  // Exactly 2 / C(20,10) for the saturated split.
  CHECK(p == doctest::Approx(2.0 / 184756.0).epsilon(1e-9));
  // Swapping the groups swaps the hypergeometric margins; the sum is the
  // same quantity accumulated in a different order, so compare loosely.
  CHECK(two_tailed_position_test({5, 8}, {1, 7}, TestMethod::FisherExact) ==
        doctest::Approx(two_tailed_position_test({1, 7}, {5, 8},
                                                 TestMethod::FisherExact))
            .epsilon(1e-12));
}

TEST_CASE("load_responses_csv: parse and coverage checks") {
  testutil::TempDir tmp("responses");
  const auto [slip, _] = reference_schedules();
  const auto path = tmp.file("r.csv");

  std::string csv = "judge_id,position,chosen_label\n";
  for (int j = 0; j < 2; ++j) {
    for (int pos = 0; pos < 20; ++pos) {
      const auto label = slip.classes.name(slip.sequence[pos]);
      csv += "judge" + std::to_string(j) + "," + std::to_string(pos) + "," +
             label + "\n";
    }
  }
  testutil::write_text(path, csv);
  const auto responses = load_responses_csv(path, slip);
  REQUIRE(responses.responses.size() == 2);
  CHECK(responses.responses[0].judge_id == "judge0");
  CHECK(responses.responses[0].choices == slip.sequence);

  // Missing a position is an error.
  std::string partial = "judge_id,position,chosen_label\n";
  for (int pos = 0; pos < 19; ++pos) {
    partial += "j0," + std::to_string(pos) + ",c1\n";
  }
  testutil::write_text(path, partial);
  CHECK_THROWS(load_responses_csv(path, slip));

  // Unknown class name is an error.
  std::string unknown = csv;
  unknown += "judge9,0,zebra\n";
  testutil::write_text(path, unknown);
  CHECK_THROWS(load_responses_csv(path, slip));
}

TEST_CASE("schedule JSON round trip") {
  testutil::TempDir tmp("sched_json");
  const auto [_, mistake] = reference_schedules();
  const auto path = tmp.file("s.json");
  save_schedule_json(mistake, path);
  const auto back = load_schedule_json(path);
  CHECK(sequence_names(back) == sequence_names(mistake));
  CHECK(back.target_positions == mistake.target_positions);
  CHECK(back.classes.name(back.target) ==
        mistake.classes.name(mistake.target));
}
