#include "wic/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace wic {

namespace {

constexpr double kMaskConstant = 1e12;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

// Kernel score for one pair plus its gradients w.r.t. both vectors.
struct KernelEval {
  double score = 0.0;
  std::vector<double> grad_u;
  std::vector<double> grad_v;
};

KernelEval cosine_with_grad(std::span<const double> u, std::span<const double> v) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0)
    throw Error("degenerate-embedding", "cosine similarity of a zero vector");

  KernelEval out;
  const double s = dot(u, v) / (nu * nv);
  out.score = s;
  out.grad_u.resize(u.size());
  out.grad_v.resize(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.grad_u[i] = v[i] / (nu * nv) - s * u[i] / (nu * nu);
    out.grad_v[i] = u[i] / (nu * nv) - s * v[i] / (nv * nv);
  }
  return out;
}

// The summed quotient components reduce to
//   A / (|u| |v|),  A = sum_j a_j (c_j - d_j) + b_j (c_j + d_j)
// with (a,b) and (c,d) the half-splits of u and v; the kernel value is |.|.
KernelEval angle_with_grad(std::span<const double> u, std::span<const double> v) {
  if (u.size() % 2 != 0)
    throw Error("odd-dimension", "complex-angle kernel needs an even dimension");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nv == 0.0 || nu == 0.0)
    throw Error("degenerate-embedding", "complex-angle kernel on a zero vector");

  const std::size_t h = u.size() / 2;
  double amount = 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    const double a = u[j], b = u[h + j];
    const double c = v[j], d = v[h + j];
    amount += a * (c - d) + b * (c + d);
  }

  const double denom = nu * nv;
  const double value = std::fabs(amount) / denom;
  const double sign = amount > 0.0 ? 1.0 : (amount < 0.0 ? -1.0 : 0.0);

  KernelEval out;
  out.score = value;
  out.grad_u.resize(u.size());
  out.grad_v.resize(v.size());
  for (std::size_t j = 0; j < h; ++j) {
    const double a = u[j], b = u[h + j];
    const double c = v[j], d = v[h + j];
    out.grad_u[j] = sign * (c - d) / denom - value * a / (nu * nu);
    out.grad_u[h + j] = sign * (c + d) / denom - value * b / (nu * nu);
    out.grad_v[j] = sign * (a + b) / denom - value * c / (nv * nv);
    out.grad_v[h + j] = sign * (b - a) / denom - value * d / (nv * nv);
  }
  return out;
}

KernelEval kernel_with_grad(SimilarityKernel kernel, std::span<const double> u,
                            std::span<const double> v) {
  return kernel == SimilarityKernel::cosine ? cosine_with_grad(u, v)
                                            : angle_with_grad(u, v);
}

void require_kind(const LossConfig& cfg, LossKind kind, const char* name) {
  if (cfg.kind != kind)
    throw Error("invalid-config", std::string("config kind does not match ") + name);
  cfg.validate();
}

// Shared CoSENT ranking core over precomputed per-pair scores:
//   log(1 + sum_{y_i < y_j} exp(lambda (s_i - s_j)))
// realized exactly via the masking scheme: every ordered pair enters the
// log-sum-exp, non-qualifying pairs with kMaskConstant subtracted, plus an
// appended zero. Returns the loss and d loss / d s_i.
double ranking_core(const std::vector<double>& scores,
                    const std::vector<double>& targets, double lambda,
                    std::vector<double>& grad_scores) {
  const std::size_t b = scores.size();

  double max_term = 0.0;  // the appended zero
  std::vector<double> exponents(b * b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      double e = lambda * (scores[i] - scores[j]);
      if (!(targets[i] < targets[j])) e -= kMaskConstant;
      exponents[i * b + j] = e;
      max_term = std::max(max_term, e);
    }
  }

  double total = std::exp(0.0 - max_term);
  for (double e : exponents) total += std::exp(e - max_term);
  const double loss = max_term + std::log(total);

  grad_scores.assign(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double w = std::exp(exponents[i * b + j] - max_term) / total;
      if (w == 0.0) continue;
      grad_scores[i] += lambda * w;
      grad_scores[j] -= lambda * w;
    }
  }
  return loss;
}

LossOutput ranking_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg,
                        SimilarityKernel kernel, double score_sign) {
  const std::size_t b = batch.size();
  std::vector<KernelEval> evals(b);
  std::vector<double> scores(b);
  for (std::size_t i = 0; i < b; ++i) {
    evals[i] = kernel_with_grad(kernel, batch.left.row(i), batch.right.row(i));
    scores[i] = score_sign * evals[i].score;
  }

  std::vector<double> grad_scores;
  LossOutput out;
  out.value = ranking_core(scores, batch.targets, cfg.scale_lambda, grad_scores);
  out.grad_left = Matrix(b, batch.dim());
  out.grad_right = Matrix(b, batch.dim());
  for (std::size_t i = 0; i < b; ++i) {
    const double g = score_sign * grad_scores[i];
    for (std::size_t k = 0; k < batch.dim(); ++k) {
      out.grad_left(i, k) = g * evals[i].grad_u[k];
      out.grad_right(i, k) = g * evals[i].grad_v[k];
    }
  }
  return out;
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::contrastive: return "contrastive";
    case LossKind::cosine_mse: return "cosine";
    case LossKind::cosent: return "cosent";
    case LossKind::angle: return "angle";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "contrastive") return LossKind::contrastive;
  if (name == "cosine" || name == "cosine_mse") return LossKind::cosine_mse;
  if (name == "cosent") return LossKind::cosent;
  if (name == "angle") return LossKind::angle;
  throw Error("invalid-config", "unknown loss kind '" + name + "'");
}

LossConfig LossConfig::for_kind(LossKind kind) {
  LossConfig cfg;
  cfg.kind = kind;
  cfg.kernel = kind == LossKind::angle ? SimilarityKernel::complex_angle
                                       : SimilarityKernel::cosine;
  return cfg;
}

void LossConfig::validate() const {
  if (margin_m <= 0.0)
    throw Error("invalid-config", "margin must be positive");
  if (scale_lambda <= 0.0)
    throw Error("invalid-config", "scale lambda must be positive");
  if (kind == LossKind::angle && kernel != SimilarityKernel::complex_angle)
    throw Error("invalid-config", "angle loss requires the complex-angle kernel");
  if ((kind == LossKind::cosent || kind == LossKind::cosine_mse) &&
      kernel != SimilarityKernel::cosine)
    throw Error("invalid-config", "cosent/cosine losses require the cosine kernel");
}

EmbeddingPairBatch::EmbeddingPairBatch(Matrix left_, Matrix right_,
                                       std::vector<double> targets_)
    : left(std::move(left_)), right(std::move(right_)), targets(std::move(targets_)) {
  if (!left.same_shape(right))
    throw Error("shape-mismatch", "left and right embedding matrices differ in shape");
  if (left.rows() < 1 || left.cols() < 2)
    throw Error("shape-mismatch", "batch needs B >= 1 and D >= 2");
  if (targets.size() != left.rows())
    throw Error("shape-mismatch", "targets length does not match batch size");
  if (!left.all_finite() || !right.all_finite())
    throw Error("non-finite-value", "embedding batch contains non-finite entries");
  for (double t : targets)
    if (!std::isfinite(t))
      throw Error("non-finite-value", "targets contain non-finite entries");
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error("shape-mismatch", "cosine similarity of different-length vectors");
  return cosine_with_grad(u, v).score;
}

double complex_angle_difference(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error("shape-mismatch", "angle difference of different-length vectors");
  return angle_with_grad(u, v).score;
}

LossOutput contrastive_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  require_kind(cfg, LossKind::contrastive, "contrastive");
  for (double t : batch.targets)
    if (t != 0.0 && t != 1.0)
      throw Error("label-space-mismatch", "contrastive loss requires 0/1 targets");

  const std::size_t b = batch.size();
  LossOutput out;
  out.grad_left = Matrix(b, batch.dim());
  out.grad_right = Matrix(b, batch.dim());

  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto k = cosine_with_grad(batch.left.row(i), batch.right.row(i));
    const double d = 1.0 - k.score;  // cosine distance
    const double y = batch.targets[i];
    const double slack = std::max(0.0, cfg.margin_m - d);
    total += 0.5 * (y * d * d + (1.0 - y) * slack * slack);

    // dL/dd, zero on the clamped branch of the negative term
    const double dl_dd = y * d - (1.0 - y) * slack;
    const double scale = -dl_dd / static_cast<double>(b);  // dd/ds = -1
    for (std::size_t c = 0; c < batch.dim(); ++c) {
      out.grad_left(i, c) = scale * k.grad_u[c];
      out.grad_right(i, c) = scale * k.grad_v[c];
    }
  }
  out.value = total / static_cast<double>(b);
  return out;
}

LossOutput cosine_mse_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  require_kind(cfg, LossKind::cosine_mse, "cosine");
  const std::size_t b = batch.size();
  LossOutput out;
  out.grad_left = Matrix(b, batch.dim());
  out.grad_right = Matrix(b, batch.dim());

  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto k = cosine_with_grad(batch.left.row(i), batch.right.row(i));
    const double r = k.score - batch.targets[i];
    total += r * r;
    const double scale = 2.0 * r / static_cast<double>(b);
    for (std::size_t c = 0; c < batch.dim(); ++c) {
      out.grad_left(i, c) = scale * k.grad_u[c];
      out.grad_right(i, c) = scale * k.grad_v[c];
    }
  }
  out.value = total / static_cast<double>(b);
  return out;
}

LossOutput cosent_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  require_kind(cfg, LossKind::cosent, "cosent");
  return ranking_loss(batch, cfg, SimilarityKernel::cosine, 1.0);
}

LossOutput angle_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  require_kind(cfg, LossKind::angle, "angle");
  // The normalized quotient measure enters the ranking form as-is, matching
  // the reference implementation of the loss: for a weight-shared encoder it
  // rises with complex alignment, so higher-labeled pairs are driven
  // together. Negating it instead drives their inner products to zero and
  // breaks the cosine inference head.
  return ranking_loss(batch, cfg, SimilarityKernel::complex_angle, 1.0);
}

LossOutput compute_loss(const EmbeddingPairBatch& batch, const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::contrastive: return contrastive_loss(batch, cfg);
    case LossKind::cosine_mse: return cosine_mse_loss(batch, cfg);
    case LossKind::cosent: return cosent_loss(batch, cfg);
    case LossKind::angle: return angle_loss(batch, cfg);
  }
  throw Error("invalid-config", "unknown loss kind");
}

}  // namespace wic
