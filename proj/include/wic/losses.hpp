#pragma once

#include <span>
#include <string>
#include <vector>

#include "wic/error.hpp"
#include "wic/matrix.hpp"

namespace wic {

enum class LossKind { contrastive, cosine_mse, cosent, angle };
enum class SimilarityKernel { cosine, complex_angle };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct LossConfig {
  LossKind kind = LossKind::cosent;
  double margin_m = 0.5;       // contrastive only
  double scale_lambda = 20.0;  // cosent / angle only
  SimilarityKernel kernel = SimilarityKernel::cosine;

  // Config with the kernel implied by the loss kind.
  static LossConfig for_kind(LossKind kind);
  void validate() const;
};

// Two aligned B x D embedding matrices plus per-row continuous targets
// (cosine targets, or 0/1 for the contrastive loss).
struct EmbeddingPairBatch {
  EmbeddingPairBatch(Matrix left_, Matrix right_, std::vector<double> targets_);

  std::size_t size() const { return left.rows(); }
  std::size_t dim() const { return left.cols(); }

  Matrix left;
  Matrix right;
  std::vector<double> targets;
};

struct LossOutput {
  double value = 0.0;
  Matrix grad_left;
  Matrix grad_right;
};

// u.v / (|u||v|). Throws "degenerate-embedding" on a zero-norm input.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Angle-difference measure in complex space: the two halves of each vector
// are read as real and imaginary parts, the elementwise quotient u/v is
// normalized by |v|^2 and the magnitude ratio |u|/|v|, and the absolute
// value of the summed components is returned. Nonnegative.
double complex_angle_difference(std::span<const double> u, std::span<const double> v);

LossOutput contrastive_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg);
LossOutput cosine_mse_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg);
LossOutput cosent_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg);
LossOutput angle_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg);

LossOutput compute_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg);

}  // namespace wic
