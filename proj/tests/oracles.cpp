#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

namespace wic::oracle {

namespace {

double squared_difference(int a, int b, AlphaMetric metric,
                          const std::vector<int>& ordered_categories,
                          const std::map<int, double>& pooled_counts) {
  if (a == b) return 0.0;
  if (metric == AlphaMetric::nominal) return 1.0;

  // Ordinal: count pooled values of every category between the two,
  // inclusive, minus half the endpoints.
  const auto pos = [&](int value) {
    return std::find(ordered_categories.begin(), ordered_categories.end(), value) -
           ordered_categories.begin();
  };
  auto lo = pos(a), hi = pos(b);
  if (lo > hi) std::swap(lo, hi);
  double between = 0.0;
  for (auto i = lo; i <= hi; ++i) {
    auto it = pooled_counts.find(ordered_categories[static_cast<std::size_t>(i)]);
    if (it != pooled_counts.end()) between += it->second;
  }
  const double ends =
      (pooled_counts.count(ordered_categories[static_cast<std::size_t>(lo)])
           ? pooled_counts.at(ordered_categories[static_cast<std::size_t>(lo)])
           : 0.0) +
      (pooled_counts.count(ordered_categories[static_cast<std::size_t>(hi)])
           ? pooled_counts.at(ordered_categories[static_cast<std::size_t>(hi)])
           : 0.0);
  const double d = between - ends / 2.0;
  return d * d;
}

}  // namespace

bool krippendorff_alpha(const LabelSeriesPair& data, AlphaMetric metric,
                        double& alpha_out) {
  std::vector<int> pooled;
  for (std::size_t i = 0; i < data.gold.size(); ++i) {
    pooled.push_back(data.gold[i]);
    pooled.push_back(data.predicted[i]);
  }

  std::map<int, double> counts;
  for (int v : pooled) counts[v] += 1.0;
  if (counts.size() < 2) return false;

  // Observed: the two ordered pairs inside every unit.
  double observed = 0.0;
  for (std::size_t i = 0; i < data.gold.size(); ++i) {
    observed += squared_difference(data.gold[i], data.predicted[i], metric,
                                   data.category_set, counts);
    observed += squared_difference(data.predicted[i], data.gold[i], metric,
                                   data.category_set, counts);
  }
  observed /= static_cast<double>(pooled.size());

  // Expected: every ordered pair of distinct positions in the pooled list.
  double expected = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = 0; j < pooled.size(); ++j)
      if (i != j)
        expected += squared_difference(pooled[i], pooled[j], metric,
                                       data.category_set, counts);
  expected /=
      static_cast<double>(pooled.size()) * static_cast<double>(pooled.size() - 1);

  if (expected <= 0.0) return false;
  alpha_out = 1.0 - observed / expected;
  return true;
}

bool spearman_rho(const ScoreSeriesPair& data, double& rho_out) {
  const std::size_t n = data.gold.size();
  if (n < 2) return false;

  auto ranks_of = [n](const std::vector<double>& values) {
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (values[j] < values[i]) ++less;
        if (values[j] == values[i]) ++equal;
      }
      // Average of positions less+1 .. less+equal.
      ranks[i] = static_cast<double>(less) +
                 (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return ranks;
  };

  const auto rx = ranks_of(data.gold);
  const auto ry = ranks_of(data.scores);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return false;
  rho_out = sxy / std::sqrt(sxx * syy);
  return true;
}

bool average_precision(const ScoreSeriesPair& data, double& ap_out) {
  const std::size_t n = data.gold.size();
  std::size_t positives = 0;
  for (double g : data.gold)
    if (g == 1.0) ++positives;
  if (positives == 0) return false;

  // Stable-descending rank of i: elements with a higher score, plus earlier
  // elements with an equal score, plus itself.
  auto rank_of = [&](std::size_t i) {
    std::size_t r = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (data.scores[j] > data.scores[i] ||
          (data.scores[j] == data.scores[i] && j < i))
        ++r;
    }
    return r;
  };

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.gold[i] != 1.0) continue;
    const std::size_t r = rank_of(i);
    std::size_t positives_at_or_above = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (data.gold[j] == 1.0 && rank_of(j) <= r) ++positives_at_or_above;
    sum += static_cast<double>(positives_at_or_above) / static_cast<double>(r);
  }
  ap_out = sum / static_cast<double>(positives);
  return true;
}

double complex_angle_difference(std::span<const double> u, std::span<const double> v) {
  const std::size_t h = u.size() / 2;
  std::complex<double> total(0.0, 0.0);
  double z = 0.0, norm_u_sq = 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    const std::complex<double> zu(u[j], u[h + j]);
    const std::complex<double> zv(v[j], v[h + j]);
    total += zu * std::conj(zv);
    z += std::norm(zv);
    norm_u_sq += std::norm(zu);
  }
  const double ratio = std::sqrt(norm_u_sq) / std::sqrt(z);
  const std::complex<double> normalized = total / (z * ratio);
  return std::fabs(normalized.real() + normalized.imag());
}

double grid_search_best_alpha(const std::vector<OrdinalLabel>& gold,
                              std::span<const double> similarities, double step) {
  double lo = similarities[0], hi = similarities[0];
  for (double s : similarities) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }

  std::vector<double> grid;
  for (double x = lo; x <= hi + step / 2.0; x += step) grid.push_back(x);

  double best = -1e30;
  for (std::size_t a = 0; a < grid.size(); ++a)
    for (std::size_t b = a; b < grid.size(); ++b)
      for (std::size_t c = b; c < grid.size(); ++c) {
        const double objective =
            threshold_objective(gold, similarities, {grid[a], grid[b], grid[c]});
        best = std::max(best, 1.0 - objective);
      }
  return best;
}

}  // namespace wic::oracle
