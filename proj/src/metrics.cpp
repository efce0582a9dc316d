#include "wic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <unordered_map>

namespace wic {

namespace {

void check_series(const LabelSeriesPair& data) {
  if (data.gold.size() != data.predicted.size())
    throw Error("length-mismatch", "gold and predicted series differ in length");
  if (data.gold.empty())
    throw Error("empty-series", "need at least one gold/predicted pair");
  for (int c : data.gold)
    if (std::find(data.category_set.begin(), data.category_set.end(), c) ==
        data.category_set.end())
      throw Error("unknown-category",
                  "gold label " + std::to_string(c) + " not in category set");
  for (int c : data.predicted)
    if (std::find(data.category_set.begin(), data.category_set.end(), c) ==
        data.category_set.end())
      throw Error("unknown-category",
                  "predicted label " + std::to_string(c) + " not in category set");
}

}  // namespace

double krippendorff_alpha(const LabelSeriesPair& data, AlphaMetric metric) {
  check_series(data);

  const std::size_t k = data.category_set.size();
  std::unordered_map<int, std::size_t> index;
  for (std::size_t i = 0; i < k; ++i) index[data.category_set[i]] = i;

  // Coincidence matrix over the two raters: each unit contributes both
  // ordered value pairs with weight 1.
  std::vector<double> coincidence(k * k, 0.0);
  for (std::size_t u = 0; u < data.gold.size(); ++u) {
    const std::size_t g = index.at(data.gold[u]);
    const std::size_t p = index.at(data.predicted[u]);
    coincidence[g * k + p] += 1.0;
    coincidence[p * k + g] += 1.0;
  }

  std::vector<double> marginal(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < k; ++j) marginal[c] += coincidence[c * k + j];

  std::size_t observed_categories = 0;
  for (double m : marginal)
    if (m > 0.0) ++observed_categories;
  if (observed_categories < 2)
    throw Error("undefined-alpha",
                "only one category observed; agreement is undefined");

  // Squared difference between categories c and j (indices into the ordered
  // category set). The ordinal distance accumulates coincidence marginals
  // between the two categories.
  auto delta_sq = [&](std::size_t c, std::size_t j) -> double {
    if (c == j) return 0.0;
    if (metric == AlphaMetric::nominal) return 1.0;
    const std::size_t lo = std::min(c, j);
    const std::size_t hi = std::max(c, j);
    double between = 0.0;
    for (std::size_t g = lo; g <= hi; ++g) between += marginal[g];
    const double d = between - (marginal[lo] + marginal[hi]) / 2.0;
    return d * d;
  };

  const double n = 2.0 * static_cast<double>(data.gold.size());
  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d2 = delta_sq(c, j);
      observed += coincidence[c * k + j] * d2;
      expected += marginal[c] * marginal[j] * d2;
    }
  }
  observed /= n;
  expected /= n * (n - 1.0);

  if (expected <= 0.0)
    throw Error("undefined-alpha", "expected disagreement is zero");
  return 1.0 - observed / expected;
}

namespace {

// Fractional ranks: ties get the average of the 1-based positions they span.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw Error("undefined-correlation", "a series is constant");
  return sxy / std::sqrt(sxx * syy);
}

void check_scores(const ScoreSeriesPair& data, std::size_t min_len) {
  if (data.gold.size() != data.scores.size())
    throw Error("length-mismatch", "gold and score series differ in length");
  if (data.gold.size() < min_len)
    throw Error("empty-series",
                "need at least " + std::to_string(min_len) + " elements");
  for (double v : data.gold)
    if (!std::isfinite(v)) throw Error("non-finite-value", "gold contains a non-finite value");
  for (double v : data.scores)
    if (!std::isfinite(v)) throw Error("non-finite-value", "scores contain a non-finite value");
}

}  // namespace

double spearman_rho(const ScoreSeriesPair& data) {
  check_scores(data, 2);
  return pearson(average_ranks(data.gold), average_ranks(data.scores));
}

double average_precision(const ScoreSeriesPair& data) {
  check_scores(data, 1);

  const std::size_t n = data.gold.size();
  std::size_t positives = 0;
  for (double g : data.gold) {
    if (g != 0.0 && g != 1.0)
      throw Error("label-space-mismatch", "average precision requires 0/1 gold");
    if (g == 1.0) ++positives;
  }
  if (positives == 0)
    throw Error("undefined-ap", "no positive instance in gold");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.scores[a] > data.scores[b];
  });

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (data.gold[order[rank]] == 1.0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(positives);
}

}  // namespace wic
