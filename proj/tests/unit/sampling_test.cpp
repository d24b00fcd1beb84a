#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "streamal/sampling.hpp"
#include "test_util.hpp"

using namespace streamal;

namespace {

Instance inst_with(std::string id, FeatureVector x, ClassId label = 0) {
  Instance inst;
  inst.id = std::move(id);
  inst.features = std::move(x);
  inst.label = label;
  return inst;
}

// Two-class, one-feature model: score0 = x, score1 = -x. Predicts class 0
// exactly when x > 0 (class 0 on the tie at x = 0).
LinearModel sign_model() {
  auto model = make_model(2, 1, LearnerHyper{});
  model.weights = {1.0, -1.0};
  return model;
}

WindowEntry entry(std::string id, FeatureVector x, ClassId annotated,
                  int interval, double time_value) {
  WindowEntry e;
  e.instance = inst_with(std::move(id), std::move(x), annotated);
  e.annotated = annotated;
  e.interval_index = interval;
  e.time_value = time_value;
  return e;
}

}  // namespace

TEST_CASE("sampler names round trip") {
  CHECK(sampler_from_name("random") == SamplerKind::Random);
  CHECK(sampler_from_name("uncertainty") == SamplerKind::Uncertainty);
  CHECK(sampler_from_name("error_mitigating") == SamplerKind::ErrorMitigating);
  CHECK(sampler_name(SamplerKind::ErrorMitigating) == "error_mitigating");
  CHECK_THROWS(sampler_from_name("margin"));
}

TEST_CASE("context window prune keeps the last l intervals") {
  ContextWindow window;
  window.l = 3;
  for (int i = 1; i <= 6; ++i) {
    window.add(entry("w" + std::to_string(i), {0.0}, 0, i, i));
  }
  window.prune(6);  // keep intervals 4, 5, 6
  REQUIRE(window.entries.size() == 3);
  CHECK(window.entries[0].interval_index == 4);
  CHECK(window.entries[2].interval_index == 6);
}

TEST_CASE("error matrix column layout for three classes") {
  ErrorMatrix E(3);
  CHECK(E.column_count() == 6);
  // Pairs grouped by j with k ascending, k == j skipped.
  CHECK(E.column_index(0, 1) == 0);
  CHECK(E.column_index(0, 2) == 1);
  CHECK(E.column_index(1, 0) == 2);
  CHECK(E.column_index(1, 2) == 3);
  CHECK(E.column_index(2, 0) == 4);
  CHECK(E.column_index(2, 1) == 5);
  for (int col = 0; col < 6; ++col) {
    const auto [j, k] = E.column_pair(col);
    CHECK(E.column_index(j, k) == col);
    CHECK(j != k);
  }
  CHECK_THROWS(E.column_index(1, 1));
  CHECK_THROWS(E.column_index(0, 3));
  CHECK_THROWS(E.column_pair(6));
}

TEST_CASE("error matrix prune drops stale rows") {
  ErrorMatrix E(2);
  for (int i = 1; i <= 5; ++i) {
    ErrorMatrixRow row;
    row.instance_id = "r" + std::to_string(i);
    row.interval_index = i;
    row.cells.assign(2, 0.0);
    E.rows.push_back(std::move(row));
  }
  E.prune(5, 2);  // keep intervals 4, 5
  REQUIRE(E.rows.size() == 2);
  CHECK(E.rows[0].instance_id == "r4");
}

TEST_CASE("uncertainty_region: band edges are inclusive") {
  const auto model = sign_model();
  // max prob = sigma(2|x|); solve for the exact 0.70 edge.
  const double x_hi = 0.5 * std::log(0.7 / 0.3);
  std::vector<Instance> batch = {
      inst_with("mid", {0.0}),         // max prob 0.5: inside
      inst_with("edge", {x_hi}),       // max prob exactly 0.70: inside
      inst_with("hot", {3.0}),         // ~0.998: outside
      inst_with("cool", {-0.1}),       // ~0.55: inside
  };
  const auto region = uncertainty_region(model, batch, 0.30, 0.70);
  REQUIRE(region.size() == 3);
  CHECK(region[0].id == "mid");
  CHECK(region[1].id == "edge");
  CHECK(region[2].id == "cool");
}

TEST_CASE("uncertainty_region: uniform and confident models give nothing") {
  // Four zero-weight classes: every max prob is 0.25, below the band.
  const auto uniform = make_model(4, 1, LearnerHyper{});
  std::vector<Instance> batch = {inst_with("a", {1.0}), inst_with("b", {2.0})};
  CHECK(uncertainty_region(uniform, batch).empty());

  auto confident = sign_model();
  confident.weights = {50.0, -50.0};
  CHECK(uncertainty_region(confident, batch).empty());
}

TEST_CASE("uncertainty_region: input validation") {
  const auto model = sign_model();
  std::vector<Instance> no_features = {Instance{}};
  CHECK_THROWS(uncertainty_region(model, no_features));
  std::vector<Instance> ok = {inst_with("a", {0.0})};
  CHECK_THROWS(uncertainty_region(model, ok, 0.7, 0.3));
  CHECK_THROWS(uncertainty_region(model, ok, -0.1, 0.5));
}

TEST_CASE("random_sample: full draw, empty draw, determinism, clamp") {
  std::vector<Instance> batch;
  for (int i = 0; i < 10; ++i) batch.push_back(inst_with("b" + std::to_string(i), {0.0}));

  const auto all = random_sample(batch, 10, 1);
  REQUIRE(all.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(all[i].id == batch[i].id);

  CHECK(random_sample(batch, 0, 1).empty());

  const auto a = random_sample(batch, 4, 7);
  const auto b = random_sample(batch, 4, 7);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i].id == b[i].id);

  std::vector<std::string> warnings;
  const auto clamped = random_sample(batch, 25, 3, &warnings);
  CHECK(clamped.size() == 10);
  CHECK(!warnings.empty());
}

TEST_CASE("update_error_matrix: first row from an empty window is zeros") {
  const auto model = sign_model();
  ContextWindow window;
  const auto E1 = update_error_matrix(ErrorMatrix(2), model,
                                      inst_with("x0", {0.5}, 1), 1, window, 1);
  REQUIRE(E1.rows.size() == 1);
  CHECK(E1.rows[0].annotated == 1);
  CHECK(E1.rows[0].cells == std::vector<double>{0.0, 0.0});
}

TEST_CASE("update_error_matrix: one miss out of two window entries is 0.5") {
  auto model = sign_model();
  // Freeze the clone update so the evaluated model is exactly this one.
  model.hyper.learning_rate = 0.0;
  ContextWindow window;
  // Both annotated class 0; the model calls x=+1 class 0 and x=-1 class 1.
  window.add(entry("w1", {1.0}, 0, 1, 1.0));
  window.add(entry("w2", {-1.0}, 0, 1, 1.0));

  const auto E = update_error_matrix(ErrorMatrix(2), model,
                                     inst_with("x0", {0.2}, 1), 1, window, 1);
  REQUIRE(E.rows.size() == 1);
  const auto& row = E.rows[0];
  CHECK(row.cells[E.column_index(0, 1)] == 0.5);
  // The other direction has no fresh evidence: stays at the first-row zero.
  CHECK(row.cells[E.column_index(1, 0)] == 0.0);
}

TEST_CASE("update_error_matrix: rows change only in the annotated column") {
  auto model = make_model(3, 2, LearnerHyper{});
  model.weights = {0.8, -0.1, -0.4, 0.7, 0.1, -0.6};
  model.bias = {0.05, -0.02, 0.0};

  ContextWindow window;
  window.add(entry("w1", {1.0, 0.2}, 0, 1, 1.0));
  window.add(entry("w2", {-0.5, 0.9}, 1, 1, 1.0));
  window.add(entry("w3", {0.1, -0.8}, 2, 1, 1.0));
  window.add(entry("w4", {0.9, -0.3}, 0, 1, 1.0));

  ErrorMatrix E(3);
  const ClassId labels[] = {1, 2, 0, 1};
  const double feats[][2] = {{0.3, 0.3}, {-0.2, 0.5}, {0.6, -0.1}, {0.0, 0.4}};
  for (int i = 0; i < 4; ++i) {
    E = update_error_matrix(
        E, model, inst_with("x" + std::to_string(i), {feats[i][0], feats[i][1]},
                            labels[i]),
        labels[i], window, 1);
  }
  REQUIRE(E.rows.size() == 4);
  for (std::size_t r = 1; r < E.rows.size(); ++r) {
    const ClassId k = E.rows[r].annotated;
    for (int col = 0; col < E.column_count(); ++col) {
      const auto [cj, ck] = E.column_pair(col);
      if (ck != k) {
        CHECK(E.rows[r].cells[col] == E.rows[r - 1].cells[col]);
      }
    }
  }
  for (const auto& row : E.rows) {
    for (double cell : row.cells) {
      CHECK(cell >= 0.0);
      CHECK(cell <= 1.0);
    }
  }
}

TEST_CASE("bias_score: hand sums and the empty cases") {
  ErrorMatrix E(3);
  // One row annotated class 2 with cells (0,2)=0.5 and (1,2)=0.25.
  ErrorMatrixRow row;
  row.instance_id = "r0";
  row.annotated = 2;
  row.interval_index = 1;
  row.cells.assign(6, 0.0);
  row.cells[E.column_index(0, 2)] = 0.5;
  row.cells[E.column_index(1, 2)] = 0.25;
  E.rows.push_back(row);

  CHECK(bias_score(E, 2) == 0.75);
  CHECK(bias_score(E, 0) == 0.0);  // no rows annotated class 0

  ErrorMatrix zero(3);
  zero.rows.push_back(ErrorMatrixRow{"z", 1, 1, std::vector<double>(6, 0.0)});
  for (ClassId c = 0; c < 3; ++c) CHECK(bias_score(zero, c) == 0.0);
}

TEST_CASE("bias_score: equals brute-force double summation") {
  auto model = make_model(3, 2, LearnerHyper{});
  model.weights = {0.9, -0.2, -0.5, 0.8, 0.2, -0.7};
  ContextWindow window;
  for (int i = 0; i < 6; ++i) {
    window.add(entry("w" + std::to_string(i),
                     {0.4 * (i % 3) - 0.4, 0.3 * (i % 2)}, i % 3, 1, 1.0));
  }
  ErrorMatrix E(3);
  for (int i = 0; i < 8; ++i) {
    const ClassId label = (i * 2 + 1) % 3;
    E = update_error_matrix(
        E, model, inst_with("x" + std::to_string(i), {0.1 * i - 0.4, 0.2},
                            label),
        label, window, 1);
  }
  for (ClassId k = 0; k < 3; ++k) {
    double expected = 0.0;
    for (const auto& row : E.rows) {
      if (row.annotated != k) continue;
      for (ClassId j = 0; j < 3; ++j) {
        if (j == k) continue;
        expected += row.cells[E.column_index(j, k)];
      }
    }
    CHECK(bias_score(E, k) == expected);
  }
}

TEST_CASE("forget scores: anchors and the lone-appearance rule") {
  CHECK(forget_score_from_delta(0.0) == 1.0);
  CHECK(forget_score_from_delta(std::log(2.0)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS(forget_score_from_delta(-0.5));

  ContextWindow window;
  window.add(entry("a", {0.0}, 0, 2, 2.0));
  window.add(entry("b", {0.0}, 0, 2, 2.0));  // same interval: dT = 0
  window.add(entry("c", {0.0}, 1, 1, 1.0));
  window.add(entry("d", {0.0}, 1, 1.0 + std::log(2.0), 1.0 + std::log(2.0)));
  window.add(entry("e", {0.0}, 2, 3, 3.0));  // seen once

  CHECK(forget_score_class(window, 0) == 1.0);
  CHECK(forget_score_class(window, 1) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(forget_score_class(window, 2) == 0.0);
  CHECK(forget_score_class(window, 7) == 0.0);  // class absent entirely
}

TEST_CASE("forget_score_class: uses the last two appearances") {
  ContextWindow window;
  window.add(entry("a", {0.0}, 0, 1, 1.0));
  window.add(entry("b", {0.0}, 0, 2, 2.0));
  window.add(entry("c", {0.0}, 0, 5, 5.0));
  // Last two are at 2.0 and 5.0, so dT = 3.
  CHECK(forget_score_class(window, 0) ==
        doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
}

TEST_CASE("class_to_discard: gated off for the first three intervals") {
  ErrorMatrix E(2);
  ErrorMatrixRow row;
  row.instance_id = "r";
  row.annotated = 0;
  row.interval_index = 1;
  row.cells = {0.0, 0.9};  // strong bias signal already
  E.rows.push_back(row);
  ContextWindow window;
  window.add(entry("a", {0.0}, 0, 1, 1.0));
  window.add(entry("b", {0.0}, 0, 1, 1.0));

  CHECK(!class_to_discard(E, window, 1).has_value());
  CHECK(!class_to_discard(E, window, 2).has_value());
  CHECK(!class_to_discard(E, window, 3).has_value());
  CHECK(class_to_discard(E, window, 4).has_value());
  CHECK_THROWS(class_to_discard(E, window, 0));
}

TEST_CASE("class_to_discard: argmax of forget * bias, smallest index on ties") {
  ErrorMatrix E(3);
  ContextWindow window;
  // Every class appears twice in the same interval: forget scores all 1.
  for (ClassId c = 0; c < 3; ++c) {
    window.add(entry("p" + std::to_string(c), {0.0}, c, 4, 4.0));
    window.add(entry("q" + std::to_string(c), {0.0}, c, 4, 4.0));
  }
  auto add_row = [&](ClassId annotated, double total) {
    ErrorMatrixRow row;
    row.instance_id = "r" + std::to_string(E.rows.size());
    row.annotated = annotated;
    row.interval_index = 4;
    row.cells.assign(6, 0.0);
    // Put the whole mass on one incoming column of the annotated class.
    const ClassId other = annotated == 0 ? 1 : 0;
    row.cells[E.column_index(other, annotated)] = total;
    E.rows.push_back(row);
  };

  add_row(1, 0.3);
  add_row(2, 0.1);
  CHECK(class_to_discard(E, window, 4) == ClassId{1});

  // Exact tie between classes 1 and 2: smallest index wins.
  ErrorMatrix tied(3);
  std::swap(E, tied);
  add_row(1, 0.3);
  add_row(2, 0.3);
  CHECK(bias_score(E, 1) == bias_score(E, 2));
  CHECK(class_to_discard(E, window, 4) == ClassId{1});

  // All-zero scores mean nothing to discard.
  ErrorMatrix blank(3);
  CHECK(!class_to_discard(blank, window, 5).has_value());
}

TEST_CASE("error_mitigating_sample: identity before the gate opens") {
  const auto model = sign_model();
  std::vector<Instance> batch = {
      inst_with("a", {0.1}), inst_with("b", {2.0}), inst_with("c", {-0.2})};
  ErrorMatrix E(2);
  ContextWindow window;
  const auto out = error_mitigating_sample(model, batch, E, window, 2);
  const auto region = uncertainty_region(model, batch);
  CHECK(!out.discarded.has_value());
  REQUIRE(out.selected.size() == region.size());
  for (std::size_t i = 0; i < region.size(); ++i) {
    CHECK(out.selected[i].id == region[i].id);
  }
  CHECK(out.region_size == region.size());
}

TEST_CASE("error_mitigating_sample: drops the discard class, keeps order") {
  const auto model = sign_model();
  // All five sit in the band; three are predicted class 0 (positive x).
  std::vector<Instance> batch = {
      inst_with("p1", {0.2}),  inst_with("n1", {-0.2}), inst_with("p2", {0.3}),
      inst_with("n2", {-0.3}), inst_with("p3", {0.1})};

  // Rows biased against class 0 and a window where class 0 recurs.
  ErrorMatrix E(2);
  ErrorMatrixRow row;
  row.instance_id = "r0";
  row.annotated = 0;
  row.interval_index = 4;
  row.cells.assign(2, 0.0);
  row.cells[E.column_index(1, 0)] = 0.4;
  E.rows.push_back(row);
  ContextWindow window;
  window.add(entry("w1", {0.5}, 0, 4, 4.0));
  window.add(entry("w2", {0.6}, 0, 4, 4.0));

  const auto out = error_mitigating_sample(model, batch, E, window, 5);
  CHECK(out.discarded == ClassId{0});
  CHECK(out.region_size == 5);
  REQUIRE(out.selected.size() == 2);
  CHECK(out.selected[0].id == "n1");
  CHECK(out.selected[1].id == "n2");

  // Selection never exceeds the region.
  CHECK(out.selected.size() <= out.region_size);

  // When every region member is predicted as the discard class: m = 0.
  std::vector<Instance> all_pos = {inst_with("p1", {0.2}),
                                   inst_with("p2", {0.4})};
  const auto none = error_mitigating_sample(model, all_pos, E, window, 5);
  CHECK(none.discarded == ClassId{0});
  CHECK(none.selected.empty());
}

TEST_CASE("matrix and score dumps are well-formed csv") {
  testutil::TempDir tmp("dumps");
  ClassSet classes;
  classes.get_or_add("alpha");
  classes.get_or_add("beta");

  ErrorMatrix E(2);
  ErrorMatrixRow row;
  row.instance_id = "r0";
  row.annotated = 1;
  row.interval_index = 4;
  row.cells = {0.25, 0.0};
  E.rows.push_back(row);
  ContextWindow window;
  window.add(entry("w1", {0.0}, 1, 4, 4.0));
  window.add(entry("w2", {0.0}, 1, 4, 4.0));

  const auto matrix_path = tmp.file("matrix.csv");
  write_error_matrix_csv(matrix_path, E, classes, 4);
  const auto matrix_text = testutil::read_text(matrix_path);
  CHECK(matrix_text.find("interval,row_id,class") != std::string::npos);
  CHECK(matrix_text.find("e_alpha_beta") != std::string::npos);
  CHECK(matrix_text.find("r0") != std::string::npos);

  const auto scores_path = tmp.file("scores.csv");
  write_scores_csv(scores_path, E, window, classes);
  const auto scores_text = testutil::read_text(scores_path);
  CHECK(scores_text.find("class,forget_score,bias_score,score") !=
        std::string::npos);
  CHECK(scores_text.find("beta") != std::string::npos);
}
