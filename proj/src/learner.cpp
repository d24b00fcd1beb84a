#include "streamal/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "streamal/io_util.hpp"
#include "streamal/rng.hpp"

#include <json.hpp>

namespace streamal {

namespace {

void check_dims(const LinearModel& model, const FeatureVector& x) {
  if (static_cast<int>(x.size()) != model.dim) {
    throw std::invalid_argument(
        "feature vector has dim " + std::to_string(x.size()) +
        ", model expects " + std::to_string(model.dim));
  }
}

void check_label(const LinearModel& model, ClassId y) {
  if (y < 0 || y >= model.num_classes) {
    throw std::invalid_argument("label " + std::to_string(y) +
                                " outside model's " +
                                std::to_string(model.num_classes) + " classes");
  }
}

// One SGD step on (x, y). L2 decay touches weights only, never the bias.
void sgd_step(LinearModel& m, const FeatureVector& x, ClassId y) {
  const double lr = m.hyper.learning_rate;
  const double l2 = m.hyper.l2;
  const int C = m.num_classes;
  const int D = m.dim;

  if (m.hyper.loss == LossKind::SoftmaxCrossEntropy) {
    const Prediction p = predict_proba(m, x);
    for (int c = 0; c < C; ++c) {
      const double g = p[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
      double* row = m.weights.data() +
                    static_cast<std::size_t>(c) * static_cast<std::size_t>(D);
      for (int d = 0; d < D; ++d) {
        row[d] -= lr * (g * x[static_cast<std::size_t>(d)] + l2 * row[d]);
      }
      m.bias[static_cast<std::size_t>(c)] -= lr * g;
    }
  } else {
    // Multiclass hinge (Weston–Watkins): every class whose margin against
    // the true class is violated pushes its own row up and the true row down.
    const std::vector<double> s = raw_scores(m, x);
    const double sy = s[static_cast<std::size_t>(y)];
    std::vector<int> violators;
    for (int c = 0; c < C; ++c) {
      if (c != y && sy - s[static_cast<std::size_t>(c)] < 1.0) {
        violators.push_back(c);
      }
    }
    // Shared decay first so every row shrinks, violated or not.
    for (auto& wv : m.weights) wv -= lr * l2 * wv;
    double* wy = m.weights.data() +
                 static_cast<std::size_t>(y) * static_cast<std::size_t>(D);
    for (int c : violators) {
      double* wc = m.weights.data() +
                   static_cast<std::size_t>(c) * static_cast<std::size_t>(D);
      for (int d = 0; d < D; ++d) {
        wc[d] -= lr * x[static_cast<std::size_t>(d)];
        wy[d] += lr * x[static_cast<std::size_t>(d)];
      }
      m.bias[static_cast<std::size_t>(c)] -= lr;
      m.bias[static_cast<std::size_t>(y)] += lr;
    }
  }
}

}  // namespace

LossKind loss_from_name(std::string_view name) {
  if (name == "softmax_ce") return LossKind::SoftmaxCrossEntropy;
  if (name == "hinge") return LossKind::Hinge;
  throw std::invalid_argument("unknown loss '" + std::string(name) +
                              "' (expected softmax_ce or hinge)");
}

std::string_view loss_name(LossKind kind) {
  return kind == LossKind::SoftmaxCrossEntropy ? "softmax_ce" : "hinge";
}

LinearModel make_model(int num_classes, int dim, const LearnerHyper& hyper) {
  if (num_classes < 2) {
    throw std::invalid_argument("model needs at least 2 classes, got " +
                                std::to_string(num_classes));
  }
  if (dim < 1) {
    throw std::invalid_argument("feature dim must be positive");
  }
  LinearModel m;
  m.num_classes = num_classes;
  m.dim = dim;
  m.weights.assign(
      static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(dim),
      0.0);
  m.bias.assign(static_cast<std::size_t>(num_classes), 0.0);
  m.hyper = hyper;
  return m;
}

LinearModel train(const LinearModel& model, std::span<const LabeledVector> data,
                  TrainMode mode) {
  if (data.empty()) {
    throw std::invalid_argument("training data is empty");
  }
  for (const auto& lv : data) {
    check_dims(model, lv.x);
    check_label(model, lv.y);
  }

  LinearModel out = model;
  if (mode == TrainMode::FullRetrain) {
    std::fill(out.weights.begin(), out.weights.end(), 0.0);
    std::fill(out.bias.begin(), out.bias.end(), 0.0);
    Rng rng(derive_seed(out.hyper.seed, "sgd-shuffle"));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < out.hyper.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t i : order) sgd_step(out, data[i].x, data[i].y);
    }
  } else {
    for (const auto& lv : data) sgd_step(out, lv.x, lv.y);
  }
  return out;
}

std::vector<double> raw_scores(const LinearModel& model,
                               const FeatureVector& x) {
  check_dims(model, x);
  std::vector<double> s(static_cast<std::size_t>(model.num_classes));
  for (int c = 0; c < model.num_classes; ++c) {
    const double* row =
        model.weights.data() +
        static_cast<std::size_t>(c) * static_cast<std::size_t>(model.dim);
    double acc = model.bias[static_cast<std::size_t>(c)];
    for (int d = 0; d < model.dim; ++d) {
      acc += row[d] * x[static_cast<std::size_t>(d)];
    }
    s[static_cast<std::size_t>(c)] = acc;
  }
  return s;
}

Prediction predict_proba(const LinearModel& model, const FeatureVector& x) {
  std::vector<double> s = raw_scores(model, x);
  const double mx = *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (auto& v : s) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : s) v /= total;
  return s;
}

LinearModel clone_and_update(const LinearModel& model, const FeatureVector& x,
                             ClassId y) {
  check_dims(model, x);
  check_label(model, y);
  LinearModel out = model;
  for (int step = 0; step < out.hyper.clone_update_steps; ++step) {
    sgd_step(out, x, y);
  }
  return out;
}

double rank_auc(std::span<const double> scores,
                std::span<const char> positive) {
  if (scores.size() != positive.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  std::int64_t pos = 0;
  for (char c : positive) pos += (c != 0);
  const std::int64_t neg = static_cast<std::int64_t>(scores.size()) - pos;
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument(
        "AUC needs at least one positive and one negative");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Twice the positive rank sum stays integral under midranks: a tie group
  // occupying ranks lo..hi gives each member rank (lo+hi)/2.
  std::int64_t twice_pos_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           scores[order[j + 1]] == scores[order[i]]) {
      ++j;
    }
    const std::int64_t lo = static_cast<std::int64_t>(i) + 1;
    const std::int64_t hi = static_cast<std::int64_t>(j) + 1;
    for (std::size_t k = i; k <= j; ++k) {
      if (positive[order[k]]) twice_pos_rank_sum += lo + hi;
    }
    i = j + 1;
  }

  const std::int64_t twice_u = twice_pos_rank_sum - pos * (pos + 1);
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

namespace {

double pooled_auc(const LinearModel& model, std::span<const LabeledVector> test,
                  bool micro) {
  if (test.empty()) {
    throw std::invalid_argument("test set is empty");
  }
  bool multi = false;
  for (const auto& lv : test) {
    if (lv.y != test.front().y) {
      multi = true;
      break;
    }
  }
  if (!multi) {
    throw std::invalid_argument(
        "test set holds a single label; AUC is undefined");
  }

  std::vector<Prediction> probs;
  probs.reserve(test.size());
  for (const auto& lv : test) probs.push_back(predict_proba(model, lv.x));

  if (micro) {
    std::vector<double> scores;
    std::vector<char> positive;
    scores.reserve(test.size() * static_cast<std::size_t>(model.num_classes));
    positive.reserve(scores.capacity());
    for (std::size_t n = 0; n < test.size(); ++n) {
      for (int c = 0; c < model.num_classes; ++c) {
        scores.push_back(probs[n][static_cast<std::size_t>(c)]);
        positive.push_back(test[n].y == c ? 1 : 0);
      }
    }
    return rank_auc(scores, positive);
  }

  double total = 0.0;
  int counted = 0;
  for (int c = 0; c < model.num_classes; ++c) {
    std::int64_t pos = 0;
    for (const auto& lv : test) pos += (lv.y == c);
    if (pos == 0 || pos == static_cast<std::int64_t>(test.size())) continue;
    std::vector<double> scores;
    std::vector<char> positive;
    scores.reserve(test.size());
    positive.reserve(test.size());
    for (std::size_t n = 0; n < test.size(); ++n) {
      scores.push_back(probs[n][static_cast<std::size_t>(c)]);
      positive.push_back(test[n].y == c ? 1 : 0);
    }
    total += rank_auc(scores, positive);
    ++counted;
  }
  return total / static_cast<double>(counted);
}

}  // namespace

double auc_micro(const LinearModel& model,
                 std::span<const LabeledVector> test) {
  return pooled_auc(model, test, /*micro=*/true);
}

double auc_macro(const LinearModel& model,
                 std::span<const LabeledVector> test) {
  return pooled_auc(model, test, /*micro=*/false);
}

double ce_objective(const LinearModel& model,
                    std::span<const LabeledVector> data) {
  if (data.empty()) {
    throw std::invalid_argument("objective over empty data");
  }
  double loss = 0.0;
  for (const auto& lv : data) {
    check_label(model, lv.y);
    std::vector<double> s = raw_scores(model, lv.x);
    const double mx = *std::max_element(s.begin(), s.end());
    double lse = 0.0;
    for (double v : s) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    loss += lse - s[static_cast<std::size_t>(lv.y)];
  }
  loss /= static_cast<double>(data.size());
  double reg = 0.0;
  for (double wv : model.weights) reg += wv * wv;
  return loss + 0.5 * model.hyper.l2 * reg;
}

std::pair<std::vector<double>, std::vector<double>> ce_gradient(
    const LinearModel& model, std::span<const LabeledVector> data) {
  if (data.empty()) {
    throw std::invalid_argument("gradient over empty data");
  }
  std::vector<double> gw(model.weights.size(), 0.0);
  std::vector<double> gb(model.bias.size(), 0.0);
  for (const auto& lv : data) {
    check_label(model, lv.y);
    const Prediction p = predict_proba(model, lv.x);
    for (int c = 0; c < model.num_classes; ++c) {
      const double g =
          p[static_cast<std::size_t>(c)] - (c == lv.y ? 1.0 : 0.0);
      double* row = gw.data() + static_cast<std::size_t>(c) *
                                    static_cast<std::size_t>(model.dim);
      for (int d = 0; d < model.dim; ++d) {
        row[d] += g * lv.x[static_cast<std::size_t>(d)];
      }
      gb[static_cast<std::size_t>(c)] += g;
    }
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < gw.size(); ++i) {
    gw[i] = gw[i] * inv + model.hyper.l2 * model.weights[i];
  }
  for (auto& v : gb) v *= inv;
  return {std::move(gw), std::move(gb)};
}

void save_model_json(const LinearModel& model, const std::string& path) {
  nlohmann::json j;
  j["format"] = "streamal-linear-model";
  j["version"] = 1;
  j["num_classes"] = model.num_classes;
  j["dim"] = model.dim;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["hyper"] = {{"learning_rate", model.hyper.learning_rate},
                {"l2", model.hyper.l2},
                {"epochs", model.hyper.epochs},
                {"seed", model.hyper.seed},
                {"loss", std::string(loss_name(model.hyper.loss))},
                {"clone_update_steps", model.hyper.clone_update_steps}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

LinearModel load_model_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid model file: " + e.what());
  }
  if (!j.contains("format") || j["format"] != "streamal-linear-model") {
    throw std::runtime_error(path + ": not a model snapshot");
  }
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    throw std::runtime_error(path + ": unsupported snapshot version");
  }
  LearnerHyper hyper;
  const auto& h = j.at("hyper");
  hyper.learning_rate = h.at("learning_rate").get<double>();
  hyper.l2 = h.at("l2").get<double>();
  hyper.epochs = h.at("epochs").get<int>();
  hyper.seed = h.at("seed").get<std::uint64_t>();
  hyper.loss = loss_from_name(h.at("loss").get<std::string>());
  hyper.clone_update_steps = h.at("clone_update_steps").get<int>();

  LinearModel m = make_model(j.at("num_classes").get<int>(),
                             j.at("dim").get<int>(), hyper);
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<std::vector<double>>();
  if (m.weights.size() != static_cast<std::size_t>(m.num_classes) *
                              static_cast<std::size_t>(m.dim) ||
      m.bias.size() != static_cast<std::size_t>(m.num_classes)) {
    throw std::runtime_error(path + ": parameter shapes are inconsistent");
  }
  return m;
}

}  // namespace streamal
