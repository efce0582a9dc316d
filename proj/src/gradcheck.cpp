#include "wic/gradcheck.hpp"

#include <cmath>
#include <random>

namespace wic {

namespace {

constexpr double kStep = 1e-6;

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1.0});
  return std::fabs(analytic - numeric) / scale;
}

double loss_value(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  return compute_loss(batch, cfg).value;
}

// Keeps contrastive test points off the margin clamp boundary; other losses
// are smooth once targets stay fixed and the angle numerator stays away
// from zero, which random normal batches do.
bool near_nonsmooth_point(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  if (cfg.kind == LossKind::contrastive) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double d =
          1.0 - cosine_similarity(batch.left.row(i), batch.right.row(i));
      if (std::fabs(cfg.margin_m - d) < 0.05) return true;
    }
  }
  if (cfg.kind == LossKind::angle) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (complex_angle_difference(batch.left.row(i), batch.right.row(i)) < 0.05)
        return true;
    }
  }
  return false;
}

EmbeddingPairBatch random_batch(LossKind kind, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> batch_pick(2, 8);
  const std::size_t b = batch_pick(rng);
  const std::size_t d = 16;

  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix left(b, d);
  Matrix right(b, d);
  for (double& v : left.data()) v = normal(rng);
  for (double& v : right.data()) v = normal(rng);

  std::vector<double> targets(b);
  if (kind == LossKind::contrastive) {
    std::uniform_int_distribution<int> binary(0, 1);
    for (double& t : targets) t = binary(rng);
  } else {
    std::uniform_int_distribution<int> level(0, 3);
    for (double& t : targets) t = static_cast<double>(level(rng)) / 3.0;
  }
  return {std::move(left), std::move(right), std::move(targets)};
}

}  // namespace

double max_gradient_error(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  const LossOutput analytic = compute_loss(batch, cfg);

  double worst = 0.0;
  for (int side = 0; side < 2; ++side) {
    const Matrix& grads = side == 0 ? analytic.grad_left : analytic.grad_right;
    for (std::size_t r = 0; r < batch.size(); ++r) {
      for (std::size_t c = 0; c < batch.dim(); ++c) {
        EmbeddingPairBatch probe = batch;
        Matrix& target = side == 0 ? probe.left : probe.right;
        const double original = target(r, c);

        target(r, c) = original + kStep;
        const double plus = loss_value(probe, cfg);
        target(r, c) = original - kStep;
        const double minus = loss_value(probe, cfg);

        const double numeric = (plus - minus) / (2.0 * kStep);
        worst = std::max(worst, relative_error(grads(r, c), numeric));
      }
    }
  }
  return worst;
}

GradCheckResult check_loss_gradients(LossKind kind, int trials, double tolerance,
                                     std::uint64_t seed) {
  const LossConfig cfg = LossConfig::for_kind(kind);
  std::mt19937_64 rng(seed);

  GradCheckResult result;
  while (result.trials < trials) {
    EmbeddingPairBatch batch = random_batch(kind, rng);
    if (near_nonsmooth_point(batch, cfg)) continue;
    result.max_relative_error =
        std::max(result.max_relative_error, max_gradient_error(batch, cfg));
    ++result.trials;
  }
  result.passed = result.max_relative_error < tolerance;
  return result;
}

}  // namespace wic
