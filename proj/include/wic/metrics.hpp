#pragma once

#include <vector>

#include "wic/error.hpp"

namespace wic {

enum class AlphaMetric { ordinal, nominal };

// Gold and predicted label series over a shared ordered category set.
struct LabelSeriesPair {
  std::vector<int> gold;
  std::vector<int> predicted;
  std::vector<int> category_set;  // ordered admissible labels
};

// Chance-corrected agreement between the two series, treated as two raters
// with no missing values. alpha <= 1, and alpha == 1 iff the series agree
// everywhere. Throws "undefined-alpha" when fewer than two categories are
// observed across both series.
double krippendorff_alpha(const LabelSeriesPair& data, AlphaMetric metric);

struct ScoreSeriesPair {
  std::vector<double> gold;
  std::vector<double> scores;
};

// Pearson correlation of average-tied ranks. Throws "undefined-correlation"
// when either series is constant.
double spearman_rho(const ScoreSeriesPair& data);

// Area-under-PR summary over descending-score order; gold must be 0/1.
// Ties in scores are broken by input order (stable sort). Throws
// "undefined-ap" when there is no positive.
double average_precision(const ScoreSeriesPair& data);

}  // namespace wic
