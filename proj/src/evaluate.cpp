#include "wic/evaluate.hpp"

#include <algorithm>
#include <unordered_map>

#include "wic/losses.hpp"
#include "wic/metrics.hpp"

namespace wic {

namespace {

OrdinalLabel gold_as_ordinal(const GoldLabel& gold) {
  if (const auto* o = std::get_if<OrdinalLabel>(&gold)) return *o;
  if (const auto* b = std::get_if<BinaryLabel>(&gold)) return binary_to_ordinal(*b);
  throw Error("label-space-mismatch",
              "evaluation needs ordinal or binary gold labels");
}

struct LanguageSlice {
  std::vector<int> gold_ordinal;
  std::vector<int> predicted_ordinal;
  std::vector<double> similarities;
};

LanguageEval eval_slice(const LanguageSlice& slice) {
  LanguageEval eval;
  eval.instances = slice.gold_ordinal.size();

  LabelSeriesPair ordinal_series{slice.gold_ordinal, slice.predicted_ordinal,
                                 {1, 2, 3, 4}};
  try {
    eval.ordinal_alpha = krippendorff_alpha(ordinal_series, AlphaMetric::ordinal);
  } catch (const Error& e) {
    if (e.code() != "undefined-alpha") throw;
  }

  LabelSeriesPair binary_series;
  binary_series.category_set = {0, 1};
  std::vector<double> gold_binary;
  for (std::size_t i = 0; i < slice.gold_ordinal.size(); ++i) {
    binary_series.gold.push_back(
        ordinal_to_binary(OrdinalLabel(slice.gold_ordinal[i])).value());
    binary_series.predicted.push_back(
        ordinal_to_binary(OrdinalLabel(slice.predicted_ordinal[i])).value());
    gold_binary.push_back(binary_series.gold.back());
  }
  try {
    eval.nominal_alpha_binarized =
        krippendorff_alpha(binary_series, AlphaMetric::nominal);
  } catch (const Error& e) {
    if (e.code() != "undefined-alpha") throw;
  }

  std::vector<double> gold_numeric(slice.gold_ordinal.begin(),
                                   slice.gold_ordinal.end());
  try {
    eval.spearman = spearman_rho({gold_numeric, slice.similarities});
  } catch (const Error& e) {
    if (e.code() != "undefined-correlation") throw;
  }
  try {
    eval.average_precision = average_precision({gold_binary, slice.similarities});
  } catch (const Error& e) {
    if (e.code() != "undefined-ap") throw;
  }
  return eval;
}

EvalReport assemble(std::map<std::string, LanguageSlice> slices,
                    std::optional<nlohmann::json> thresholds_used) {
  EvalReport report;
  report.thresholds_used = std::move(thresholds_used);

  auto add_average = [](std::optional<double>& avg, double& sum, std::size_t& count) {
    avg = count > 0 ? std::optional<double>(sum / static_cast<double>(count))
                    : std::nullopt;
  };

  double sums[4] = {0, 0, 0, 0};
  std::size_t counts[4] = {0, 0, 0, 0};
  for (const auto& [language, slice] : slices) {
    LanguageEval eval = eval_slice(slice);
    const std::optional<double>* metrics[4] = {
        &eval.ordinal_alpha, &eval.nominal_alpha_binarized, &eval.spearman,
        &eval.average_precision};
    for (int m = 0; m < 4; ++m) {
      if (metrics[m]->has_value()) {
        sums[m] += **metrics[m];
        ++counts[m];
      }
    }
    report.averages.instances += eval.instances;
    report.per_language.emplace(language, std::move(eval));
  }
  add_average(report.averages.ordinal_alpha, sums[0], counts[0]);
  add_average(report.averages.nominal_alpha_binarized, sums[1], counts[1]);
  add_average(report.averages.spearman, sums[2], counts[2]);
  add_average(report.averages.average_precision, sums[3], counts[3]);
  return report;
}

nlohmann::json eval_to_json(const LanguageEval& eval) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"ordinal_alpha", opt(eval.ordinal_alpha)},
          {"nominal_alpha_binarized", opt(eval.nominal_alpha_binarized)},
          {"spearman", opt(eval.spearman)},
          {"average_precision", opt(eval.average_precision)},
          {"instances", eval.instances}};
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json langs = nlohmann::json::object();
  for (const auto& [language, eval] : per_language)
    langs[language] = eval_to_json(eval);
  nlohmann::json j{{"format_version", 1},
                   {"per_language", std::move(langs)},
                   {"averages", eval_to_json(averages)},
                   {"average_kind", "unweighted"}};
  j["thresholds"] = thresholds_used ? *thresholds_used : nlohmann::json(nullptr);
  return j;
}

EvalReport run_evaluate(const EncoderModel& model, const Tokenizer& tokenizer,
                        const Dataset& test_data, const CalibrationResult& thresholds) {
  std::vector<std::string> missing;
  for (const auto& inst : test_data.instances()) {
    if (!thresholds.by_language.contains(inst.language) &&
        std::find(missing.begin(), missing.end(), inst.language) == missing.end())
      missing.push_back(inst.language);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& language : missing) list += (list.empty() ? "" : ", ") + language;
    throw Error("missing-thresholds", "no thresholds for: " + list);
  }

  std::map<std::string, LanguageSlice> slices;
  for (const auto& inst : test_data.instances()) {
    const auto u = encode(mark_and_tokenize(inst.usage1, tokenizer), model);
    const auto v = encode(mark_and_tokenize(inst.usage2, tokenizer), model);
    const double similarity = cosine_similarity(u, v);

    auto& slice = slices[inst.language];
    slice.similarities.push_back(similarity);
    slice.gold_ordinal.push_back(gold_as_ordinal(inst.gold).value());
  }
  for (auto& [language, slice] : slices) {
    const auto& set = thresholds.by_language.at(language).thresholds;
    for (const auto& label : apply_thresholds(slice.similarities, set))
      slice.predicted_ordinal.push_back(label.value());
  }

  return assemble(std::move(slices), calibration_to_json(thresholds));
}

EvalReport evaluate_predictions(const PredictionsFile& predictions,
                                const Dataset& gold_data) {
  std::unordered_map<std::string, const JudgedInstance*> by_id;
  for (const auto& inst : gold_data.instances()) by_id[inst.instance_id] = &inst;

  std::map<std::string, LanguageSlice> slices;
  std::size_t matched = 0;
  for (const auto& row : predictions.rows) {
    auto it = by_id.find(row.instance_id);
    if (it == by_id.end())
      throw Error("invalid-config",
                  "prediction for unknown instance '" + row.instance_id + "'");
    ++matched;
    auto& slice = slices[row.language];
    slice.similarities.push_back(row.similarity);
    slice.predicted_ordinal.push_back(row.label);
    slice.gold_ordinal.push_back(gold_as_ordinal(it->second->gold).value());
  }
  if (matched != gold_data.size())
    throw Error("invalid-config",
                "predictions cover " + std::to_string(matched) + " of " +
                    std::to_string(gold_data.size()) + " gold instances");

  return assemble(std::move(slices), predictions.thresholds);
}

}  // namespace wic
