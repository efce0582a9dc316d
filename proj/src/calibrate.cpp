#include "wic/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "wic/metrics.hpp"

namespace wic {

namespace {

constexpr double kDegeneratePenalty = 2.0;
constexpr double kSpreadTolerance = 1e-6;
// The objective is piecewise constant in theta, so equal objective values at
// the vertices do not mean convergence; the simplex must also have shrunk.
constexpr double kDiameterTolerance = 1e-4;
constexpr int kMaxIterations = 500;

using Point = std::array<double, 3>;

struct NelderMeadResult {
  Point best;
  double best_value = 0.0;
  int iterations = 0;
};

// Standard simplex search with reflection 1.0, expansion 2.0, contraction
// 0.5 and shrink 0.5. The best vertex is never discarded, so the returned
// objective cannot exceed the best initial vertex.
NelderMeadResult nelder_mead_3d(const std::function<double(const Point&)>& f,
                                std::array<Point, 4> simplex) {
  std::array<double, 4> values{};
  for (std::size_t i = 0; i < 4; ++i) values[i] = f(simplex[i]);

  auto order = [&]() {
    std::array<std::size_t, 4> idx{0, 1, 2, 3};
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::array<Point, 4> s;
    std::array<double, 4> v{};
    for (std::size_t i = 0; i < 4; ++i) {
      s[i] = simplex[idx[i]];
      v[i] = values[idx[i]];
    }
    simplex = s;
    values = v;
  };

  auto diameter = [&]() {
    double d = 0.0;
    for (std::size_t i = 1; i < 4; ++i)
      for (std::size_t c = 0; c < 3; ++c)
        d = std::max(d, std::fabs(simplex[i][c] - simplex[0][c]));
    return d;
  };

  int iter = 0;
  for (; iter < kMaxIterations; ++iter) {
    order();
    if (values[3] - values[0] < kSpreadTolerance && diameter() < kDiameterTolerance)
      break;

    Point centroid{};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t d = 0; d < 3; ++d) centroid[d] += simplex[i][d] / 3.0;

    auto blend = [&](double coeff) {
      Point p;
      for (std::size_t d = 0; d < 3; ++d)
        p[d] = centroid[d] + coeff * (centroid[d] - simplex[3][d]);
      return p;
    };

    const Point reflected = blend(1.0);
    const double fr = f(reflected);

    if (fr < values[0]) {
      const Point expanded = blend(2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[3] = expanded;
        values[3] = fe;
      } else {
        simplex[3] = reflected;
        values[3] = fr;
      }
      continue;
    }
    if (fr < values[2]) {
      simplex[3] = reflected;
      values[3] = fr;
      continue;
    }

    if (fr < values[3]) {
      const Point outside = blend(0.5);
      const double fo = f(outside);
      if (fo <= fr) {
        simplex[3] = outside;
        values[3] = fo;
        continue;
      }
    } else {
      const Point inside = blend(-0.5);
      const double fi = f(inside);
      if (fi < values[3]) {
        simplex[3] = inside;
        values[3] = fi;
        continue;
      }
    }

    // Shrink toward the best vertex.
    for (std::size_t i = 1; i < 4; ++i) {
      for (std::size_t d = 0; d < 3; ++d)
        simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
      values[i] = f(simplex[i]);
    }
  }

  order();
  return {simplex[0], values[0], iter};
}

void check_slice(const std::vector<OrdinalLabel>& gold,
                 std::span<const double> similarities) {
  if (gold.empty() || gold.size() != similarities.size())
    throw Error("degenerate-dev-slice",
                "dev slice empty or gold/similarity lengths differ");
  std::set<int> distinct;
  for (const auto& g : gold) distinct.insert(g.value());
  if (distinct.size() < 2)
    throw Error("degenerate-dev-slice",
                "calibration needs at least two distinct gold labels");
}

}  // namespace

ThresholdSet::ThresholdSet(double a, double b, double c) : theta{a, b, c} {
  std::sort(theta.begin(), theta.end());
}

std::vector<OrdinalLabel> apply_thresholds(std::span<const double> similarities,
                                           const ThresholdSet& thresholds) {
  std::vector<OrdinalLabel> out;
  out.reserve(similarities.size());
  for (double s : similarities) {
    int label = 1;
    if (s >= thresholds.theta[0]) label = 2;
    if (s >= thresholds.theta[1]) label = 3;
    if (s >= thresholds.theta[2]) label = 4;
    out.emplace_back(label);
  }
  return out;
}

double threshold_objective(const std::vector<OrdinalLabel>& gold,
                           std::span<const double> similarities,
                           std::array<double, 3> theta) {
  std::sort(theta.begin(), theta.end());
  const ThresholdSet set(theta[0], theta[1], theta[2]);
  const auto predicted = apply_thresholds(similarities, set);

  bool uniform = true;
  for (std::size_t i = 1; i < predicted.size(); ++i)
    if (!(predicted[i] == predicted[0])) {
      uniform = false;
      break;
    }
  if (uniform) return kDegeneratePenalty;

  LabelSeriesPair series;
  series.category_set = {1, 2, 3, 4};
  series.gold.reserve(gold.size());
  series.predicted.reserve(predicted.size());
  for (const auto& g : gold) series.gold.push_back(g.value());
  for (const auto& p : predicted) series.predicted.push_back(p.value());

  try {
    return 1.0 - krippendorff_alpha(series, AlphaMetric::ordinal);
  } catch (const Error& e) {
    if (e.code() == "undefined-alpha") return kDegeneratePenalty;
    throw;
  }
}

ThresholdSet percentile_init(std::span<const double> similarities) {
  std::vector<double> sorted(similarities.begin(), similarities.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
  };
  return ThresholdSet(quantile(0.25), quantile(0.50), quantile(0.75));
}

LanguageCalibration calibrate_language(const std::vector<OrdinalLabel>& gold,
                                       std::span<const double> similarities,
                                       const ThresholdSet& init) {
  check_slice(gold, similarities);

  auto objective = [&](const Point& theta) {
    return threshold_objective(gold, similarities, theta);
  };

  std::array<Point, 4> simplex;
  simplex[0] = init.theta;
  for (std::size_t d = 0; d < 3; ++d) {
    simplex[d + 1] = init.theta;
    simplex[d + 1][d] += 0.05;
  }

  const auto result = nelder_mead_3d(objective, simplex);
  const ThresholdSet best(result.best[0], result.best[1], result.best[2]);
  return {best, 1.0 - result.best_value, result.iterations};
}

LanguageCalibration calibrate_language(const std::vector<OrdinalLabel>& gold,
                                       std::span<const double> similarities) {
  check_slice(gold, similarities);
  return calibrate_language(gold, similarities, percentile_init(similarities));
}

CalibrationResult calibrate_all(const std::vector<ScoredInstance>& dev) {
  std::map<std::string, std::pair<std::vector<OrdinalLabel>, std::vector<double>>>
      slices;
  for (const auto& inst : dev) {
    auto& slice = slices[inst.language];
    slice.first.push_back(inst.gold);
    slice.second.push_back(inst.similarity);
  }

  CalibrationResult result;
  for (const auto& [language, slice] : slices) {
    try {
      result.by_language.emplace(language,
                                 calibrate_language(slice.first, slice.second));
    } catch (const Error& e) {
      result.failures.emplace(language, e.what());
    }
  }
  return result;
}

}  // namespace wic
