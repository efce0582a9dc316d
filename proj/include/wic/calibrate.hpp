#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wic/datamodel.hpp"

namespace wic {

// Three ascending cut points mapping continuous similarity to ordinal labels.
struct ThresholdSet {
  ThresholdSet(double a, double b, double c);

  std::array<double, 3> theta;  // canonical, ascending
};

// Half-open binning: s < t1 -> 1; t1 <= s < t2 -> 2; t2 <= s < t3 -> 3;
// s >= t3 -> 4. A similarity exactly at a threshold lands in the upper bin.
std::vector<OrdinalLabel> apply_thresholds(std::span<const double> similarities,
                                           const ThresholdSet& thresholds);

// 1 - ordinal alpha of the binned similarities against gold. Theta is sorted
// before binning; a single-bin prediction (or otherwise undefined alpha)
// scores the fixed penalty 2.0.
double threshold_objective(const std::vector<OrdinalLabel>& gold,
                           std::span<const double> similarities,
                           std::array<double, 3> theta);

struct LanguageCalibration {
  LanguageCalibration() : thresholds(0.0, 0.0, 0.0) {}
  LanguageCalibration(ThresholdSet t, double a, int it)
      : thresholds(t), dev_alpha(a), iterations(it) {}

  ThresholdSet thresholds;
  double dev_alpha = 0.0;
  int iterations = 0;
};

// Nelder-Mead in 3-d from the simplex around init (init plus +0.05 along
// each coordinate); reflection 1.0, expansion 2.0, contraction 0.5, shrink
// 0.5; stops when the objective spread over the simplex drops below 1e-6 or
// after 500 iterations. Throws "degenerate-dev-slice" on fewer than two
// distinct gold labels.
LanguageCalibration calibrate_language(const std::vector<OrdinalLabel>& gold,
                                       std::span<const double> similarities,
                                       const ThresholdSet& init);

// Same, initialized at the 25th/50th/75th percentiles of the similarities.
LanguageCalibration calibrate_language(const std::vector<OrdinalLabel>& gold,
                                       std::span<const double> similarities);

ThresholdSet percentile_init(std::span<const double> similarities);

// One dev instance ready for calibration.
struct ScoredInstance {
  std::string language;
  OrdinalLabel gold;
  double similarity;
};

struct CalibrationResult {
  std::map<std::string, LanguageCalibration> by_language;
  // Languages whose slice failed preconditions, with the reason. Reported,
  // never silently dropped.
  std::map<std::string, std::string> failures;
};

CalibrationResult calibrate_all(const std::vector<ScoredInstance>& dev);

}  // namespace wic
