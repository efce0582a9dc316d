#pragma once

#include <cstdint>
#include <string>

#include "wic/losses.hpp"

namespace wic {

struct GradCheckResult {
  double max_relative_error = 0.0;
  int trials = 0;
  bool passed = false;
};

// Compares the analytic loss gradients against central finite differences on
// random batches (B <= 8, D = 16, double precision). Batches are drawn away
// from the non-smooth points of each loss (the contrastive margin clamp, the
// absolute value inside the angle kernel).
GradCheckResult check_loss_gradients(LossKind kind, int trials, double tolerance,
                                     std::uint64_t seed);

// Central-difference directional check of a single batch; returns the
// maximum relative error over every entry of both embedding matrices.
double max_gradient_error(const EmbeddingPairBatch& batch, const LossConfig& cfg);

}  // namespace wic
