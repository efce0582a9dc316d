#include "wic/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace wic {

namespace {

std::string dump_double(double v) {
  // Shortest representation that parses back to the same double.
  return nlohmann::json(v).dump();
}

std::size_t parse_offset(const std::string& text, const char* what) {
  std::size_t value = 0;
  const auto* begin = text.data();
  const auto* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw Error("bad-row", std::string("malformed ") + what + " offset '" + text + "'");
  return value;
}

GoldLabel parse_label(const std::string& space_name, const std::string& text) {
  const LabelSpace space = [&] {
    try {
      return label_space_from_string(space_name);
    } catch (const Error&) {
      throw Error("bad-row", "unknown label_space '" + space_name + "'");
    }
  }();

  try {
    switch (space) {
      case LabelSpace::ordinal: {
        int v = 0;
        const auto* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end)
          throw Error("bad-row", "unparseable ordinal label '" + text + "'");
        return OrdinalLabel(v);
      }
      case LabelSpace::binary: {
        int v = 0;
        const auto* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end)
          throw Error("bad-row", "unparseable binary label '" + text + "'");
        return BinaryLabel(v);
      }
      case LabelSpace::cosine: {
        std::size_t consumed = 0;
        double v = 0.0;
        try {
          v = std::stod(text, &consumed);
        } catch (const std::exception&) {
          throw Error("bad-row", "unparseable cosine label '" + text + "'");
        }
        if (consumed != text.size())
          throw Error("bad-row", "unparseable cosine label '" + text + "'");
        return CosineTarget(v);
      }
    }
  } catch (const Error& e) {
    if (e.code() == "invalid-label")
      throw Error("bad-row", std::string(e.what()));
    throw;
  }
  throw Error("bad-row", "unknown label space");
}

struct RawRow {
  std::string instance_id, language, lemma, text1, text2, label_space, label;
  std::string start1, end1, start2, end2;
};

JudgedInstance row_to_instance(const RawRow& row, const std::string& fallback_id) {
  const std::size_t s1 = parse_offset(row.start1, "start1");
  const std::size_t e1 = parse_offset(row.end1, "end1");
  const std::size_t s2 = parse_offset(row.start2, "start2");
  const std::size_t e2 = parse_offset(row.end2, "end2");

  try {
    return JudgedInstance(row.instance_id.empty() ? fallback_id : row.instance_id,
                          row.language, row.lemma, Usage(row.text1, s1, e1),
                          Usage(row.text2, s2, e2),
                          parse_label(row.label_space, row.label));
  } catch (const Error& e) {
    if (e.code() == "invalid-span" || e.code() == "invalid-instance")
      throw Error("bad-row", std::string(e.what()));
    throw;
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

RawRow raw_from_fields(const std::vector<std::string>& fields) {
  RawRow row;
  row.instance_id = fields[0];
  row.language = fields[1];
  row.lemma = fields[2];
  row.text1 = fields[3];
  row.start1 = fields[4];
  row.end1 = fields[5];
  row.text2 = fields[6];
  row.start2 = fields[7];
  row.end2 = fields[8];
  row.label_space = fields[9];
  row.label = fields[10];
  return row;
}

RawRow raw_from_json(const nlohmann::json& j) {
  RawRow row;
  auto fetch = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw Error("bad-row", std::string("missing key '") + key + "'");
      return {};
    }
    const auto& v = j.at(key);
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  row.instance_id = fetch("instance_id", false);
  row.language = fetch("language", true);
  row.lemma = fetch("lemma", false);
  row.text1 = fetch("text1", true);
  row.start1 = fetch("start1", true);
  row.end1 = fetch("end1", true);
  row.text2 = fetch("text2", true);
  row.start2 = fetch("start2", true);
  row.end2 = fetch("end2", true);
  row.label_space = fetch("label_space", true);
  row.label = fetch("label", true);
  return row;
}

std::string label_to_text(const GoldLabel& gold) {
  if (const auto* o = std::get_if<OrdinalLabel>(&gold)) return std::to_string(o->value());
  if (const auto* b = std::get_if<BinaryLabel>(&gold)) return std::to_string(b->value());
  return dump_double(std::get<CosineTarget>(gold).value());
}

void check_tsv_safe(const std::string& text) {
  if (text.find('\t') != std::string::npos || text.find('\n') != std::string::npos)
    throw Error("io-error", "text contains a tab or newline; use the jsonl format");
}

}  // namespace

const std::vector<std::string> kInstanceColumns = {
    "instance_id", "language", "lemma", "text1", "start1", "end1",
    "text2",       "start2",   "end2",  "label_space", "label"};

FileFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".tsv") return FileFormat::tsv;
  if (ext == ".jsonl") return FileFormat::jsonl;
  throw Error("invalid-config",
              "cannot infer format from '" + path.string() + "'; use .tsv or .jsonl");
}

IngestResult ingest(const std::filesystem::path& path, FileFormat format,
                    Split split, IngestOptions options) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot open " + path.string());

  std::vector<JudgedInstance> instances;
  std::vector<IngestIssue> issues;
  std::string line;
  std::size_t line_no = 0;
  const std::string file_tag = path.filename().string();

  if (format == FileFormat::tsv) {
    if (!std::getline(in, line))
      throw Error("io-error", "empty file " + path.string());
    ++line_no;
    const auto header = split_tabs(line);
    if (header != kInstanceColumns)
      throw Error("invalid-config",
                  "header of " + path.string() + " does not match the instance schema");
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      RawRow row;
      if (format == FileFormat::tsv) {
        const auto fields = split_tabs(line);
        if (fields.size() != kInstanceColumns.size())
          throw Error("bad-row", "expected " + std::to_string(kInstanceColumns.size()) +
                                     " fields, got " + std::to_string(fields.size()));
        row = raw_from_fields(fields);
      } else {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          throw Error("bad-row", e.what());
        }
        row = raw_from_json(j);
      }
      instances.push_back(
          row_to_instance(row, file_tag + ":" + std::to_string(line_no)));
    } catch (const Error& e) {
      if (e.code() != "bad-row") throw;
      issues.push_back({line_no, e.what()});
    }
  }

  if (!issues.empty() && !options.skip_bad_rows) {
    std::string report = std::to_string(issues.size()) + " bad row(s) in " +
                         path.string() + ":";
    for (const auto& issue : issues)
      report += "\n  line " + std::to_string(issue.line) + ": " + issue.message;
    throw Error("bad-rows", report);
  }

  return {Dataset(std::move(instances), split), std::move(issues)};
}

void serialize(const Dataset& dataset, const std::filesystem::path& path,
               FileFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path.string());

  if (format == FileFormat::tsv) {
    for (std::size_t i = 0; i < kInstanceColumns.size(); ++i)
      out << (i ? "\t" : "") << kInstanceColumns[i];
    out << '\n';
    for (const auto& inst : dataset.instances()) {
      check_tsv_safe(inst.instance_id);
      check_tsv_safe(inst.language);
      check_tsv_safe(inst.lemma);
      check_tsv_safe(inst.usage1.text);
      check_tsv_safe(inst.usage2.text);
      out << inst.instance_id << '\t' << inst.language << '\t' << inst.lemma << '\t'
          << inst.usage1.text << '\t' << inst.usage1.target_start << '\t'
          << inst.usage1.target_end << '\t' << inst.usage2.text << '\t'
          << inst.usage2.target_start << '\t' << inst.usage2.target_end << '\t'
          << to_string(label_space_of(inst.gold)) << '\t' << label_to_text(inst.gold)
          << '\n';
    }
    return;
  }

  for (const auto& inst : dataset.instances()) {
    nlohmann::json j{{"instance_id", inst.instance_id},
                     {"language", inst.language},
                     {"lemma", inst.lemma},
                     {"text1", inst.usage1.text},
                     {"start1", inst.usage1.target_start},
                     {"end1", inst.usage1.target_end},
                     {"text2", inst.usage2.text},
                     {"start2", inst.usage2.target_start},
                     {"end2", inst.usage2.target_end},
                     {"label_space", to_string(label_space_of(inst.gold))}};
    if (const auto* o = std::get_if<OrdinalLabel>(&inst.gold))
      j["label"] = o->value();
    else if (const auto* b = std::get_if<BinaryLabel>(&inst.gold))
      j["label"] = b->value();
    else
      j["label"] = std::get<CosineTarget>(inst.gold).value();
    out << j.dump() << '\n';
  }
}

nlohmann::json calibration_to_json(const CalibrationResult& result) {
  nlohmann::json languages = nlohmann::json::object();
  for (const auto& [language, cal] : result.by_language) {
    languages[language] = {
        {"language", language},
        {"thresholds",
         {cal.thresholds.theta[0], cal.thresholds.theta[1], cal.thresholds.theta[2]}},
        {"dev_alpha", cal.dev_alpha},
        {"iterations", cal.iterations}};
  }
  nlohmann::json j{{"format_version", 1}, {"languages", std::move(languages)}};
  if (!result.failures.empty()) j["failures"] = result.failures;
  return j;
}

CalibrationResult calibration_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw Error("invalid-config", "unsupported thresholds format version");
  CalibrationResult result;
  for (const auto& [language, entry] : j.at("languages").items()) {
    const auto& t = entry.at("thresholds");
    if (t.size() != 3)
      throw Error("invalid-config", "thresholds for '" + language + "' must have 3 values");
    LanguageCalibration cal(
        ThresholdSet(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()),
        entry.value("dev_alpha", 0.0), entry.value("iterations", 0));
    result.by_language.emplace(language, cal);
  }
  if (j.contains("failures"))
    result.failures = j.at("failures").get<std::map<std::string, std::string>>();
  return result;
}

void save_calibration(const std::filesystem::path& path,
                      const CalibrationResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  out << calibration_to_json(result).dump(2) << '\n';
}

CalibrationResult load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid-config", e.what());
  }
  return calibration_from_json(j);
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionRow>& rows,
                       const std::optional<nlohmann::json>& thresholds) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  if (thresholds) out << "#thresholds\t" << thresholds->dump() << '\n';
  out << "instance_id\tlanguage\tsimilarity\tlabel\n";
  for (const auto& row : rows)
    out << row.instance_id << '\t' << row.language << '\t'
        << dump_double(row.similarity) << '\t' << row.label << '\n';
}

PredictionsFile read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot open " + path.string());

  PredictionsFile file;
  std::string line;
  if (!std::getline(in, line)) throw Error("io-error", "empty predictions file");
  if (line.rfind("#thresholds\t", 0) == 0) {
    try {
      file.thresholds = nlohmann::json::parse(line.substr(line.find('\t') + 1));
    } catch (const nlohmann::json::exception& e) {
      throw Error("invalid-config", std::string("bad thresholds header: ") + e.what());
    }
    if (!std::getline(in, line)) throw Error("io-error", "missing predictions header");
  }
  if (line != "instance_id\tlanguage\tsimilarity\tlabel")
    throw Error("invalid-config", "unexpected predictions header");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw Error("invalid-config",
                  "predictions line " + std::to_string(line_no) + " malformed");
    PredictionRow row;
    row.instance_id = fields[0];
    row.language = fields[1];
    try {
      row.similarity = std::stod(fields[2]);
      row.label = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw Error("invalid-config",
                  "predictions line " + std::to_string(line_no) + " malformed");
    }
    if (row.label < 1 || row.label > 4)
      throw Error("invalid-config",
                  "predictions line " + std::to_string(line_no) + " label out of range");
    file.rows.push_back(std::move(row));
  }
  return file;
}

nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
  return {{"languages", cfg.languages},
          {"lemmas_per_language", cfg.lemmas_per_language},
          {"senses_per_lemma", cfg.senses_per_lemma},
          {"usages_per_sense", cfg.usages_per_sense},
          {"noise_scale", cfg.noise_scale},
          {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig cfg;
  if (j.contains("languages")) cfg.languages = j["languages"].get<std::vector<std::string>>();
  cfg.lemmas_per_language = j.value("lemmas_per_language", cfg.lemmas_per_language);
  cfg.senses_per_lemma = j.value("senses_per_lemma", cfg.senses_per_lemma);
  cfg.usages_per_sense = j.value("usages_per_sense", cfg.usages_per_sense);
  cfg.noise_scale = j.value("noise_scale", cfg.noise_scale);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid-config", e.what());
  }
  return synth_config_from_json(j);
}

}  // namespace wic
