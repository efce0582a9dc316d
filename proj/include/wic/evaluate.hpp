#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wic/calibrate.hpp"
#include "wic/datamodel.hpp"
#include "wic/encoder.hpp"
#include "wic/io.hpp"

namespace wic {

struct LanguageEval {
  std::optional<double> ordinal_alpha;
  std::optional<double> nominal_alpha_binarized;
  std::optional<double> spearman;
  std::optional<double> average_precision;
  std::size_t instances = 0;
};

struct EvalReport {
  std::map<std::string, LanguageEval> per_language;
  // Unweighted means over the languages where the metric is defined.
  LanguageEval averages;
  std::optional<nlohmann::json> thresholds_used;

  nlohmann::json to_json() const;  // versioned with format_version
};

// Encodes the test pairs, scores similarities with the cosine kernel, bins
// them with the per-language thresholds, and reports ordinal alpha plus the
// binarized nominal alpha, AP, and Spearman per language and averaged.
// Throws "missing-thresholds" listing every language without thresholds.
EvalReport run_evaluate(const EncoderModel& model, const Tokenizer& tokenizer,
                        const Dataset& test_data, const CalibrationResult& thresholds);

// Same report computed from already-binned predictions joined to gold by
// instance id.
EvalReport evaluate_predictions(const PredictionsFile& predictions,
                                const Dataset& gold_data);

}  // namespace wic
