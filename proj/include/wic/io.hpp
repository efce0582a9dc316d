#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wic/calibrate.hpp"
#include "wic/datamodel.hpp"
#include "wic/synth.hpp"

namespace wic {

enum class FileFormat { tsv, jsonl };

FileFormat format_from_path(const std::filesystem::path& path);

// Columns of the instance file schema, in order. TSV files carry them as a
// header row; JSONL files use them as keys.
extern const std::vector<std::string> kInstanceColumns;

struct IngestIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestOptions {
  bool skip_bad_rows = false;
};

struct IngestResult {
  Dataset dataset;
  std::vector<IngestIssue> issues;  // rows skipped under skip_bad_rows
};

// Reads and validates an instance file. Row-level failures carry line
// numbers; with skip_bad_rows unset, any failure aborts with a combined
// report. Rows with an empty instance_id get "<file>:<line>".
IngestResult ingest(const std::filesystem::path& path, FileFormat format,
                    Split split, IngestOptions options = {});

void serialize(const Dataset& dataset, const std::filesystem::path& path,
               FileFormat format);

// Per-language thresholds document.
nlohmann::json calibration_to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const nlohmann::json& j);
void save_calibration(const std::filesystem::path& path, const CalibrationResult& result);
CalibrationResult load_calibration(const std::filesystem::path& path);

struct PredictionRow {
  std::string instance_id;
  std::string language;
  double similarity = 0.0;
  int label = 1;
};

// predictions.tsv: an optional "#thresholds <json>" comment line, a header,
// then one row per instance.
void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRow>& rows,
                       const std::optional<nlohmann::json>& thresholds);

struct PredictionsFile {
  std::vector<PredictionRow> rows;
  std::optional<nlohmann::json> thresholds;
};

PredictionsFile read_predictions(const std::filesystem::path& path);

nlohmann::json synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);
SynthConfig load_synth_config(const std::filesystem::path& path);

}  // namespace wic
