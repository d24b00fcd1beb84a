#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streamal/stream.hpp"

namespace streamal {

enum class LossKind { SoftmaxCrossEntropy, Hinge };

LossKind loss_from_name(std::string_view name);
std::string_view loss_name(LossKind kind);

struct LearnerHyper {
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int epochs = 20;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::SoftmaxCrossEntropy;
  // SGD steps applied by clone_and_update.
  int clone_update_steps = 1;
};

struct LabeledVector {
  FeatureVector x;
  ClassId y = 0;
};

// Linear multiclass model. Confidence comes from a softmax over the class
// scores regardless of the training loss, so the sampler always sees a
// probability distribution.
struct LinearModel {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> weights;  // row-major, num_classes x dim
  std::vector<double> bias;     // num_classes
  LearnerHyper hyper;

  double& w(int c, int d) {
    return weights[static_cast<std::size_t>(c) * static_cast<std::size_t>(dim) +
                   static_cast<std::size_t>(d)];
  }
  double w(int c, int d) const {
    return weights[static_cast<std::size_t>(c) * static_cast<std::size_t>(dim) +
                   static_cast<std::size_t>(d)];
  }
};

// Zero-initialised model.
LinearModel make_model(int num_classes, int dim, const LearnerHyper& hyper);

enum class TrainMode { FullRetrain, Incremental };

// FullRetrain: reset parameters, then hyper.epochs seeded-shuffled SGD
// passes. Incremental: a single in-order pass from the current parameters.
// The input model is left untouched.
LinearModel train(const LinearModel& model, std::span<const LabeledVector> data,
                  TrainMode mode);

using Prediction = std::vector<double>;

std::vector<double> raw_scores(const LinearModel& model,
                               const FeatureVector& x);
Prediction predict_proba(const LinearModel& model, const FeatureVector& x);

// Copy of `model` nudged by hyper.clone_update_steps SGD steps on one
// labelled point; `model` itself is never written.
LinearModel clone_and_update(const LinearModel& model, const FeatureVector& x,
                             ClassId y);

// Rank-based binary AUC with midrank tie handling. Exact: the numerator is
// held in integer half-units, so the result matches the pairwise
// (#correct + 0.5 #tied) / (P*N) definition bit for bit.
double rank_auc(std::span<const double> scores, std::span<const char> positive);

// Micro-average one-vs-rest AUC: pool (prob, is-positive) over every
// (test item, class) pair, then rank_auc. Throws if test holds < 2 labels.
double auc_micro(const LinearModel& model, std::span<const LabeledVector> test);

// Per-class one-vs-rest AUC averaged over classes that have both a positive
// and a negative in `test`.
double auc_macro(const LinearModel& model, std::span<const LabeledVector> test);

// Mean cross-entropy + (l2/2)·||W||^2, and its exact full-batch gradient —
// the reference pair for derivative checks.
double ce_objective(const LinearModel& model,
                    std::span<const LabeledVector> data);
std::pair<std::vector<double>, std::vector<double>> ce_gradient(
    const LinearModel& model, std::span<const LabeledVector> data);

void save_model_json(const LinearModel& model, const std::string& path);
LinearModel load_model_json(const std::string& path);

}  // namespace streamal
