#include "wic/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "json.hpp"
#include "wic/metrics.hpp"

namespace wic {

namespace {

GoldLabel map_label(const GoldLabel& gold, LabelSpace to) {
  const LabelSpace from = label_space_of(gold);
  if (from == to) return gold;
  if (from == LabelSpace::ordinal) {
    const auto& label = std::get<OrdinalLabel>(gold);
    return to == LabelSpace::binary ? GoldLabel(ordinal_to_binary(label))
                                    : GoldLabel(ordinal_to_cosine(label));
  }
  if (from == LabelSpace::binary) {
    const auto& label = std::get<BinaryLabel>(gold);
    return to == LabelSpace::ordinal ? GoldLabel(binary_to_ordinal(label))
                                     : GoldLabel(binary_to_cosine(label));
  }
  throw Error("label-space-mismatch",
              "no mapping from cosine labels to " + to_string(to));
}

double numeric_value(const GoldLabel& gold) {
  if (const auto* o = std::get_if<OrdinalLabel>(&gold)) return o->value();
  if (const auto* b = std::get_if<BinaryLabel>(&gold)) return b->value();
  return std::get<CosineTarget>(gold).value();
}

// Evenly interleaves the per-label index groups (smooth weighted
// round-robin), so consecutive batch windows mix labels whenever more than
// one label exists.
std::vector<std::size_t> interleave_by_label(
    const std::vector<std::size_t>& order, const std::vector<double>& targets) {
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t idx : order) groups[targets[idx]].push_back(idx);
  if (groups.size() < 2) return order;

  struct GroupState {
    const std::vector<std::size_t>* members;
    std::size_t next = 0;
    double credit = 0.0;
  };
  std::vector<GroupState> states;
  states.reserve(groups.size());
  for (const auto& [label, members] : groups) states.push_back({&members});

  const double total = static_cast<double>(order.size());
  std::vector<std::size_t> result;
  result.reserve(order.size());
  while (result.size() < order.size()) {
    std::size_t pick = states.size();
    for (std::size_t g = 0; g < states.size(); ++g) {
      auto& s = states[g];
      if (s.next >= s.members->size()) continue;
      s.credit += static_cast<double>(s.members->size());
      if (pick == states.size() || s.credit > states[pick].credit) pick = g;
    }
    auto& chosen = states[pick];
    result.push_back((*chosen.members)[chosen.next++]);
    chosen.credit -= total;
  }
  return result;
}

struct PreparedInstance {
  MarkedUsage left;
  MarkedUsage right;
  double target = 0.0;
};

struct DevInstance {
  MarkedUsage left;
  MarkedUsage right;
  double gold_numeric = 0.0;
  double gold_binary = 0.0;
};

double dev_pair_similarity(const DevInstance& inst, const EncoderModel& model) {
  const auto u = encode(inst.left, model);
  const auto v = encode(inst.right, model);
  return cosine_similarity(u, v);
}

double evaluate_dev(const std::vector<DevInstance>& dev, const EncoderModel& model,
                    DevMetric metric) {
  ScoreSeriesPair series;
  series.gold.reserve(dev.size());
  series.scores.reserve(dev.size());
  for (const auto& inst : dev) {
    series.gold.push_back(metric == DevMetric::spearman ? inst.gold_numeric
                                                        : inst.gold_binary);
    series.scores.push_back(dev_pair_similarity(inst, model));
  }
  return metric == DevMetric::spearman ? spearman_rho(series)
                                       : average_precision(series);
}

}  // namespace

std::string to_string(DevMetric metric) {
  return metric == DevMetric::spearman ? "spearman" : "average_precision";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("invalid-config", "epochs must be >= 1");
  if (batch_size < 1) throw Error("invalid-config", "batch_size must be >= 1");
  if (!(warmup_fraction > 0.0 && warmup_fraction <= 1.0))
    throw Error("invalid-config", "warmup_fraction must be in (0,1]");
  if (!(eval_every_fraction > 0.0 && eval_every_fraction <= 1.0))
    throw Error("invalid-config", "eval_every_fraction must be in (0,1]");
  if (patience < 1) throw Error("invalid-config", "patience must be >= 1");
  if (learning_rate < 0.0) throw Error("invalid-config", "learning_rate must be >= 0");
  if (weight_decay < 0.0) throw Error("invalid-config", "weight_decay must be >= 0");
  if (min_improvement < 0.0)
    throw Error("invalid-config", "min_improvement must be >= 0");
  loss.validate();
}

DevMetric TrainConfig::default_dev_metric(LossKind kind) {
  return kind == LossKind::contrastive ? DevMetric::average_precision
                                       : DevMetric::spearman;
}

double learning_rate_at(long step, double base_rate, long warmup_steps) {
  if (warmup_steps <= 0 || step >= warmup_steps) return base_rate;
  return base_rate * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

void adamw_step(Matrix& params, const Matrix& grads, AdamMoments& state, long step,
                double learning_rate, double weight_decay, double beta1,
                double beta2, double epsilon) {
  if (!params.same_shape(grads) || !params.same_shape(state.first) ||
      !params.same_shape(state.second))
    throw Error("shape-mismatch", "adamw shapes do not align");
  if (!grads.all_finite())
    throw Error("non-finite-gradient",
                "non-finite gradient at step " + std::to_string(step));

  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  auto& p = params.data();
  const auto& g = grads.data();
  auto& m = state.first.data();
  auto& v = state.second.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= learning_rate * weight_decay * p[i];
    p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

double training_target(const GoldLabel& gold, LossKind kind,
                       std::optional<LabelSpace> route) {
  GoldLabel routed = route ? map_label(gold, *route) : gold;
  if (kind == LossKind::contrastive) {
    const GoldLabel final_label = map_label(routed, LabelSpace::binary);
    return std::get<BinaryLabel>(final_label).value();
  }
  const GoldLabel final_label = map_label(routed, LabelSpace::cosine);
  return std::get<CosineTarget>(final_label).value();
}

std::string TrainReport::to_jsonl() const {
  nlohmann::json header{
      {"record", "header"},
      {"format_version", 1},
      {"loss", loss_kind},
      {"dev_metric", dev_metric},
      {"seed", seed},
      {"total_steps", total_steps},
      {"warmup_steps", warmup_steps},
      {"base_learning_rate", base_learning_rate},
      {"adam_beta1", adam_beta1},
      {"adam_beta2", adam_beta2},
      {"adam_epsilon", adam_epsilon},
  };
  std::string out = header.dump() + "\n";
  for (const auto& rec : history) {
    nlohmann::json line{{"record", "eval"},
                        {"step", rec.step},
                        {"train_loss", rec.train_loss},
                        {"dev_score", rec.dev_score}};
    out += line.dump() + "\n";
  }
  nlohmann::json summary{{"record", "summary"},
                         {"best_step", best_step},
                         {"best_dev_score", best_dev_score},
                         {"stopped_early", stopped_early}};
  out += summary.dump() + "\n";
  return out;
}

std::pair<EncoderModel, TrainReport> train(EncoderModel model,
                                           const Tokenizer& tokenizer,
                                           const Dataset& train_data,
                                           const Dataset& dev_data,
                                           const TrainConfig& cfg) {
  cfg.validate();
  if (train_data.empty() || dev_data.empty())
    throw Error("invalid-config", "train and dev datasets must be non-empty");

  // Resolve every training target before any step runs so label-space
  // mismatches surface as configuration errors.
  std::vector<PreparedInstance> prepared;
  prepared.reserve(train_data.size());
  std::vector<double> targets;
  targets.reserve(train_data.size());
  for (const auto& inst : train_data.instances()) {
    PreparedInstance p;
    p.left = mark_and_tokenize(inst.usage1, tokenizer);
    p.right = mark_and_tokenize(inst.usage2, tokenizer);
    p.target = training_target(inst.gold, cfg.loss.kind, cfg.label_route);
    targets.push_back(p.target);
    prepared.push_back(std::move(p));
  }

  std::vector<DevInstance> dev;
  dev.reserve(dev_data.size());
  for (const auto& inst : dev_data.instances()) {
    DevInstance d;
    d.left = mark_and_tokenize(inst.usage1, tokenizer);
    d.right = mark_and_tokenize(inst.usage2, tokenizer);
    d.gold_numeric = numeric_value(inst.gold);
    if (cfg.dev_metric == DevMetric::average_precision) {
      if (label_space_of(inst.gold) == LabelSpace::cosine)
        throw Error("label-space-mismatch",
                    "average precision needs binary-mappable dev gold");
      d.gold_binary = numeric_value(map_label(inst.gold, LabelSpace::binary));
    }
    dev.push_back(std::move(d));
  }
  if (cfg.dev_metric == DevMetric::average_precision) {
    const bool any_positive =
        std::any_of(dev.begin(), dev.end(),
                    [](const DevInstance& d) { return d.gold_binary == 1.0; });
    if (!any_positive)
      throw Error("invalid-config", "dev set has no positive for average precision");
  } else {
    if (dev.size() < 2)
      throw Error("invalid-config", "spearman dev metric needs >= 2 dev instances");
    const bool constant_gold =
        std::all_of(dev.begin(), dev.end(), [&](const DevInstance& d) {
          return d.gold_numeric == dev.front().gold_numeric;
        });
    if (constant_gold)
      throw Error("invalid-config", "spearman dev metric needs varying dev gold");
  }

  const long steps_per_epoch = static_cast<long>(
      (prepared.size() + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size));
  const long total_steps = steps_per_epoch * cfg.epochs;
  const long warmup_steps = static_cast<long>(
      std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps)));

  TrainReport report;
  report.total_steps = total_steps;
  report.warmup_steps = warmup_steps;
  report.base_learning_rate = cfg.learning_rate;
  report.adam_beta1 = kAdamBeta1;
  report.adam_beta2 = kAdamBeta2;
  report.adam_epsilon = kAdamEpsilon;
  report.seed = cfg.seed;
  report.loss_kind = to_string(cfg.loss.kind);
  report.dev_metric = to_string(cfg.dev_metric);

  AdamMoments embedding_moments(model.embedding_table);
  AdamMoments projection_moments;
  if (model.projection) projection_moments = AdamMoments(*model.projection);
  EncoderGrad grad(model);

  const bool mix_batches =
      cfg.loss.kind == LossKind::cosent || cfg.loss.kind == LossKind::angle;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  EncoderModel best_model = model;
  double best_score = 0.0;
  bool have_best = false;
  double stop_best = 0.0;
  bool have_stop_best = false;
  int stale_evaluations = 0;
  long step = 0;
  bool stop = false;

  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    if (mix_batches) order = interleave_by_label(order, targets);

    for (long batch_index = 0; batch_index < steps_per_epoch && !stop; ++batch_index) {
      const std::size_t begin =
          static_cast<std::size_t>(batch_index) * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t end = std::min(begin + static_cast<std::size_t>(cfg.batch_size),
                                       prepared.size());
      const std::size_t b = end - begin;

      Matrix left(b, model.dim());
      Matrix right(b, model.dim());
      std::vector<double> batch_targets(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& inst = prepared[order[begin + i]];
        const auto u = encode(inst.left, model);
        const auto v = encode(inst.right, model);
        std::copy(u.begin(), u.end(), left.row(i).begin());
        std::copy(v.begin(), v.end(), right.row(i).begin());
        batch_targets[i] = inst.target;
      }

      EmbeddingPairBatch batch(std::move(left), std::move(right),
                               std::move(batch_targets));
      const LossOutput loss = compute_loss(batch, cfg.loss);

      grad.reset();
      for (std::size_t i = 0; i < b; ++i) {
        const auto& inst = prepared[order[begin + i]];
        encode_backward(loss.grad_left.row(i), inst.left, model, grad);
        encode_backward(loss.grad_right.row(i), inst.right, model, grad);
      }

      ++step;
      if (!std::isfinite(loss.value) || !grad.all_finite())
        throw Error("non-finite-gradient",
                    "non-finite loss or gradient at step " + std::to_string(step));

      const double lr = learning_rate_at(step, cfg.learning_rate, warmup_steps);
      adamw_step(model.embedding_table, grad.embedding_table, embedding_moments,
                 step, lr, cfg.weight_decay);
      if (model.projection)
        adamw_step(*model.projection, *grad.projection, projection_moments, step, lr,
                   cfg.weight_decay);

      // Evaluations owed to epoch-fraction boundaries crossed by this step.
      const double frac = cfg.eval_every_fraction;
      const double progress =
          static_cast<double>(step) / static_cast<double>(steps_per_epoch);
      const double previous =
          static_cast<double>(step - 1) / static_cast<double>(steps_per_epoch);
      const long owed = static_cast<long>(std::floor(progress / frac + 1e-9)) -
                        static_cast<long>(std::floor(previous / frac + 1e-9));
      if (owed <= 0) continue;

      const double score = evaluate_dev(dev, model, cfg.dev_metric);
      for (long e = 0; e < owed; ++e)
        report.history.push_back({step, loss.value, score});

      if (!have_best || score > best_score) {
        best_score = score;
        best_model = model;
        report.best_step = step;
        have_best = true;
      }

      // Early stopping counts evaluations after warm-up only.
      if (step > warmup_steps) {
        for (long e = 0; e < owed && !stop; ++e) {
          if (!have_stop_best || score >= stop_best + cfg.min_improvement) {
            stop_best = std::max(score, have_stop_best ? stop_best : score);
            have_stop_best = true;
            stale_evaluations = 0;
          } else {
            ++stale_evaluations;
          }
          if (stale_evaluations >= cfg.patience) {
            report.stopped_early = true;
            stop = true;
          }
        }
      }
    }
  }

  report.best_dev_score = best_score;
  return {std::move(best_model), std::move(report)};
}

}  // namespace wic
