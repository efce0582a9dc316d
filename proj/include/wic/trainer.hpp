#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wic/datamodel.hpp"
#include "wic/encoder.hpp"
#include "wic/losses.hpp"

namespace wic {

enum class DevMetric { average_precision, spearman };

std::string to_string(DevMetric metric);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;  // toy-scale default; 1e-5 matches full-scale runs
  double weight_decay = 0.0;
  double warmup_fraction = 0.10;
  double eval_every_fraction = 0.25;
  int patience = 10;
  double min_improvement = 0.02;  // absolute
  std::uint64_t seed = 0;
  LossConfig loss = LossConfig::for_kind(LossKind::cosent);
  DevMetric dev_metric = DevMetric::spearman;
  // Intermediate label space the gold labels pass through before the
  // loss-required final mapping; unset means the native space.
  std::optional<LabelSpace> label_route;

  void validate() const;

  // AP for contrastive training, Spearman for the rest.
  static DevMetric default_dev_metric(LossKind kind);
};

struct EvalRecord {
  long step = 0;
  double train_loss = 0.0;
  double dev_score = 0.0;
};

struct TrainReport {
  std::vector<EvalRecord> history;
  long best_step = 0;
  double best_dev_score = 0.0;
  bool stopped_early = false;

  long total_steps = 0;
  long warmup_steps = 0;
  double base_learning_rate = 0.0;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.0;
  double adam_epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string loss_kind;
  std::string dev_metric;

  // One JSON record per line: header, evaluations, summary.
  std::string to_jsonl() const;
};

// Linear warmup to the base rate, constant afterwards. Steps are 1-based.
double learning_rate_at(long step, double base_rate, long warmup_steps);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct AdamMoments {
  AdamMoments() = default;
  explicit AdamMoments(const Matrix& shape)
      : first(shape.rows(), shape.cols()), second(shape.rows(), shape.cols()) {}

  Matrix first;
  Matrix second;
};

// One decoupled-weight-decay update with bias correction; `step` is the
// 1-based update count for this parameter. Throws "non-finite-gradient" on a
// non-finite gradient entry.
void adamw_step(Matrix& params, const Matrix& grads, AdamMoments& state, long step,
                double learning_rate, double weight_decay,
                double beta1 = kAdamBeta1, double beta2 = kAdamBeta2,
                double epsilon = kAdamEpsilon);

// Maps a gold label into the training-target value required by the loss
// (0/1 for contrastive, a cosine target otherwise), optionally routed
// through an intermediate label space. Throws "label-space-mismatch" when no
// mapping exists.
double training_target(const GoldLabel& gold, LossKind kind,
                       std::optional<LabelSpace> route);

std::pair<EncoderModel, TrainReport> train(EncoderModel model,
                                           const Tokenizer& tokenizer,
                                           const Dataset& train_data,
                                           const Dataset& dev_data,
                                           const TrainConfig& cfg);

}  // namespace wic
