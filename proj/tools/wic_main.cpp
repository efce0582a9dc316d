#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wic/calibrate.hpp"
#include "wic/datamodel.hpp"
#include "wic/encoder.hpp"
#include "wic/evaluate.hpp"
#include "wic/gradcheck.hpp"
#include "wic/io.hpp"
#include "wic/losses.hpp"
#include "wic/synth.hpp"
#include "wic/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

bool is_numerical_failure(const std::string& code) {
  return code == "non-finite-gradient" || code == "undefined-alpha" ||
         code == "undefined-correlation" || code == "undefined-ap" ||
         code == "degenerate-embedding" || code == "non-finite-value" ||
         code == "gradcheck-failed";
}

wic::Dataset load_dataset(const std::string& path, wic::Split split,
                          bool skip_bad_rows) {
  wic::IngestOptions options;
  options.skip_bad_rows = skip_bad_rows;
  auto result =
      wic::ingest(path, wic::format_from_path(path), split, options);
  for (const auto& issue : result.issues)
    std::cerr << "warning: " << path << " line " << issue.line << ": "
              << issue.message << "\n";
  return std::move(result.dataset);
}

int run_synth(const std::string& config_path, const std::string& out_dir) {
  const wic::SynthConfig cfg = config_path.empty()
                                   ? wic::SynthConfig{}
                                   : wic::load_synth_config(config_path);
  const auto datasets = wic::synthesize(cfg);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  wic::serialize(datasets.train, dir / "train.tsv", wic::FileFormat::tsv);
  wic::serialize(datasets.dev, dir / "dev.tsv", wic::FileFormat::tsv);
  wic::serialize(datasets.test, dir / "test.tsv", wic::FileFormat::tsv);

  std::ofstream config_out(dir / "synth_config.json");
  config_out << wic::synth_config_to_json(cfg).dump(2) << '\n';

  std::cout << "wrote " << datasets.train.size() << " train / " << datasets.dev.size()
            << " dev / " << datasets.test.size() << " test instances to " << out_dir
            << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string train_path, dev_path, out_path, report_path;
  std::string loss = "cosent";
  std::string label_space;
  std::string dev_metric;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  int dim = 16;
  int max_length = 128;
  bool projection = false;
  bool skip_bad_rows = false;
};

int run_train(const TrainArgs& args) {
  const auto train_data =
      load_dataset(args.train_path, wic::Split::train, args.skip_bad_rows);
  const auto dev_data = load_dataset(args.dev_path, wic::Split::dev, args.skip_bad_rows);

  wic::TrainConfig cfg;
  cfg.loss = wic::LossConfig::for_kind(wic::loss_kind_from_string(args.loss));
  cfg.epochs = args.epochs;
  cfg.batch_size = args.batch_size;
  cfg.learning_rate = args.learning_rate;
  cfg.weight_decay = args.weight_decay;
  cfg.seed = args.seed;
  cfg.dev_metric = args.dev_metric.empty()
                       ? wic::TrainConfig::default_dev_metric(cfg.loss.kind)
                       : (args.dev_metric == "spearman"
                              ? wic::DevMetric::spearman
                              : wic::DevMetric::average_precision);
  if (!args.label_space.empty())
    cfg.label_route = wic::label_space_from_string(args.label_space);

  std::vector<std::string> texts;
  for (const auto& inst : train_data.instances()) {
    texts.push_back(inst.usage1.text);
    texts.push_back(inst.usage2.text);
  }
  for (const auto& inst : dev_data.instances()) {
    texts.push_back(inst.usage1.text);
    texts.push_back(inst.usage2.text);
  }
  const wic::Tokenizer tokenizer = wic::Tokenizer::from_texts(texts, args.max_length);

  auto model = wic::EncoderModel::random_init(
      tokenizer.vocab_size(), static_cast<std::size_t>(args.dim), args.projection,
      cfg.seed);

  auto [trained, report] = wic::train(std::move(model), tokenizer, train_data,
                                      dev_data, cfg);

  wic::save_checkpoint(args.out_path, tokenizer, trained);
  if (!args.report_path.empty()) {
    std::ofstream out(args.report_path);
    out << report.to_jsonl();
  }
  std::cout << "best dev " << report.dev_metric << " " << report.best_dev_score
            << " at step " << report.best_step
            << (report.stopped_early ? " (early stop)" : "") << "; checkpoint "
            << args.out_path << "\n";
  return kExitOk;
}

int run_calibrate(const std::string& model_path, const std::string& dev_path,
                  const std::string& out_path, bool skip_bad_rows) {
  const auto checkpoint = wic::load_checkpoint(model_path);
  const auto dev_data = load_dataset(dev_path, wic::Split::dev, skip_bad_rows);

  std::vector<wic::ScoredInstance> scored;
  scored.reserve(dev_data.size());
  for (const auto& inst : dev_data.instances()) {
    const auto u =
        wic::encode(wic::mark_and_tokenize(inst.usage1, checkpoint.tokenizer),
                    checkpoint.model);
    const auto v =
        wic::encode(wic::mark_and_tokenize(inst.usage2, checkpoint.tokenizer),
                    checkpoint.model);
    wic::OrdinalLabel gold = [&] {
      if (const auto* o = std::get_if<wic::OrdinalLabel>(&inst.gold)) return *o;
      if (const auto* b = std::get_if<wic::BinaryLabel>(&inst.gold))
        return wic::binary_to_ordinal(*b);
      throw wic::Error("label-space-mismatch",
                       "calibration needs ordinal or binary dev gold");
    }();
    scored.push_back({inst.language, gold, wic::cosine_similarity(u, v)});
  }

  const auto result = wic::calibrate_all(scored);
  wic::save_calibration(out_path, result);
  for (const auto& [language, cal] : result.by_language)
    std::cout << language << ": thresholds [" << cal.thresholds.theta[0] << ", "
              << cal.thresholds.theta[1] << ", " << cal.thresholds.theta[2]
              << "], dev alpha " << cal.dev_alpha << " (" << cal.iterations
              << " iterations)\n";
  for (const auto& [language, reason] : result.failures)
    std::cerr << "failed: " << language << ": " << reason << "\n";
  return result.by_language.empty() ? kExitValidation : kExitOk;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& thresholds_path, const std::string& out_path,
                bool skip_bad_rows) {
  const auto checkpoint = wic::load_checkpoint(model_path);
  const auto data = load_dataset(data_path, wic::Split::test, skip_bad_rows);
  const auto calibration = wic::load_calibration(thresholds_path);

  std::vector<std::string> missing;
  for (const auto& inst : data.instances())
    if (!calibration.by_language.contains(inst.language) &&
        std::find(missing.begin(), missing.end(), inst.language) == missing.end())
      missing.push_back(inst.language);
  if (!missing.empty()) {
    std::string list;
    for (const auto& language : missing) list += (list.empty() ? "" : ", ") + language;
    throw wic::Error("missing-thresholds", "no thresholds for: " + list);
  }

  std::vector<wic::PredictionRow> rows;
  rows.reserve(data.size());
  for (const auto& inst : data.instances()) {
    const auto u =
        wic::encode(wic::mark_and_tokenize(inst.usage1, checkpoint.tokenizer),
                    checkpoint.model);
    const auto v =
        wic::encode(wic::mark_and_tokenize(inst.usage2, checkpoint.tokenizer),
                    checkpoint.model);
    const double similarity = wic::cosine_similarity(u, v);
    const auto& set = calibration.by_language.at(inst.language).thresholds;
    const auto label = wic::apply_thresholds(std::vector<double>{similarity}, set);
    rows.push_back({inst.instance_id, inst.language, similarity, label[0].value()});
  }

  wic::write_predictions(out_path, rows, wic::calibration_to_json(calibration));
  std::cout << "wrote " << rows.size() << " predictions to " << out_path << "\n";
  return kExitOk;
}

int run_evaluate_cmd(const std::string& predictions_path, const std::string& gold_path,
                     const std::string& report_path, bool skip_bad_rows) {
  const auto predictions = wic::read_predictions(predictions_path);
  const auto gold = load_dataset(gold_path, wic::Split::test, skip_bad_rows);
  const auto report = wic::evaluate_predictions(predictions, gold);

  std::ofstream out(report_path);
  if (!out) throw wic::Error("io-error", "cannot write " + report_path);
  out << report.to_json().dump(2) << '\n';

  auto show = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("n/a");
  };
  for (const auto& [language, eval] : report.per_language)
    std::cout << language << ": ordinal alpha " << show(eval.ordinal_alpha)
              << ", nominal alpha (binarized) " << show(eval.nominal_alpha_binarized)
              << ", spearman " << show(eval.spearman) << ", AP "
              << show(eval.average_precision) << "\n";
  std::cout << "average: ordinal alpha " << show(report.averages.ordinal_alpha)
            << ", nominal alpha (binarized) "
            << show(report.averages.nominal_alpha_binarized) << ", spearman "
            << show(report.averages.spearman) << ", AP "
            << show(report.averages.average_precision) << "\n";
  return kExitOk;
}

int run_gradcheck(const std::string& loss, int trials, double tolerance,
                  std::uint64_t seed) {
  const auto kind = wic::loss_kind_from_string(loss);
  const auto result = wic::check_loss_gradients(kind, trials, tolerance, seed);
  std::cout << "loss " << loss << ": " << result.trials
            << " trials, max relative error " << result.max_relative_error
            << (result.passed ? " (ok)" : " (FAILED)") << "\n";
  if (!result.passed)
    throw wic::Error("gradcheck-failed", "gradient check above tolerance");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordinal word-in-context pipeline: synthesize, train, calibrate, "
               "predict, evaluate"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multilingual dataset");
  std::string synth_config, synth_out;
  synth->add_option("--config", synth_config, "Synthesis config JSON file");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train the toy bi-encoder");
  TrainArgs train_args;
  train->add_option("--train", train_args.train_path, "Training instances")->required();
  train->add_option("--dev", train_args.dev_path, "Dev instances")->required();
  train->add_option("--loss", train_args.loss, "contrastive|cosine|cosent|angle")
      ->required();
  train->add_option("--label-space", train_args.label_space,
                    "Intermediate label space: ordinal|binary|cosine");
  train->add_option("--out", train_args.out_path, "Checkpoint path")->required();
  train->add_option("--report", train_args.report_path, "Training report (JSON lines)");
  train->add_option("--dev-metric", train_args.dev_metric,
                    "spearman|average_precision (default depends on loss)");
  train->add_option("--epochs", train_args.epochs, "Training epochs");
  train->add_option("--batch-size", train_args.batch_size, "Batch size");
  train->add_option("--lr", train_args.learning_rate, "Learning rate");
  train->add_option("--weight-decay", train_args.weight_decay, "Decoupled weight decay");
  train->add_option("--seed", train_args.seed, "Random seed");
  train->add_option("--dim", train_args.dim, "Embedding dimension (even)");
  train->add_option("--max-length", train_args.max_length, "Token budget per usage");
  train->add_flag("--projection", train_args.projection, "Train a projection matrix");
  train->add_flag("--skip-bad-rows", train_args.skip_bad_rows,
                  "Skip malformed input rows instead of aborting");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Fit per-language thresholds");
  std::string cal_model, cal_dev, cal_out;
  bool cal_skip = false;
  calibrate->add_option("--model", cal_model, "Checkpoint path")->required();
  calibrate->add_option("--dev", cal_dev, "Dev instances")->required();
  calibrate->add_option("--out", cal_out, "Thresholds JSON output")->required();
  calibrate->add_flag("--skip-bad-rows", cal_skip, "Skip malformed input rows");

  // predict
  auto* predict = app.add_subcommand("predict", "Score instances and bin to labels");
  std::string pred_model, pred_data, pred_thresholds, pred_out;
  bool pred_skip = false;
  predict->add_option("--model", pred_model, "Checkpoint path")->required();
  predict->add_option("--data", pred_data, "Instances to score")->required();
  predict->add_option("--thresholds", pred_thresholds, "Thresholds JSON")->required();
  predict->add_option("--out", pred_out, "Predictions TSV output")->required();
  predict->add_flag("--skip-bad-rows", pred_skip, "Skip malformed input rows");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
  std::string eval_predictions, eval_gold, eval_report;
  bool eval_skip = false;
  evaluate->add_option("--predictions", eval_predictions, "Predictions TSV")->required();
  evaluate->add_option("--gold", eval_gold, "Gold instances")->required();
  evaluate->add_option("--report", eval_report, "Report JSON output")->required();
  evaluate->add_flag("--skip-bad-rows", eval_skip, "Skip malformed input rows");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::string gc_loss;
  int gc_trials = 100;
  double gc_tol = 1e-4;
  std::uint64_t gc_seed = 1234;
  gradcheck->add_option("--loss", gc_loss, "contrastive|cosine|cosent|angle")
      ->required();
  gradcheck->add_option("--trials", gc_trials, "Number of random batches");
  gradcheck->add_option("--tol", gc_tol, "Maximum relative error");
  gradcheck->add_option("--seed", gc_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_config, synth_out);
    if (train->parsed()) return run_train(train_args);
    if (calibrate->parsed()) return run_calibrate(cal_model, cal_dev, cal_out, cal_skip);
    if (predict->parsed())
      return run_predict(pred_model, pred_data, pred_thresholds, pred_out, pred_skip);
    if (evaluate->parsed())
      return run_evaluate_cmd(eval_predictions, eval_gold, eval_report, eval_skip);
    if (gradcheck->parsed()) return run_gradcheck(gc_loss, gc_trials, gc_tol, gc_seed);
  } catch (const wic::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numerical_failure(e.code()) ? kExitNumerical : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
