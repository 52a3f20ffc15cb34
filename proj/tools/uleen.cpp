#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uleen/config.hpp"
#include "uleen/dataset.hpp"
#include "uleen/persistence.hpp"
#include "uleen/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace uleen;

struct CommonArgs {
  pipeline::DataSpec data;
  uint64_t seed = 1;
  bool seed_given = false;
};

void add_data_flags(CLI::App* cmd, pipeline::DataSpec& spec) {
  cmd->add_option("--csv", spec.csv, "labeled CSV dataset");
  cmd->add_option("--label-column", spec.label_column,
                  "0-based label column; negative counts from the end")
      ->default_val(-1);
  cmd->add_flag("--header", spec.header, "CSV has a header row");
  cmd->add_option("--train-images", spec.train_images, "IDX image file");
  cmd->add_option("--train-labels", spec.train_labels, "IDX label file");
  cmd->add_option("--test-images", spec.test_images,
                  "IDX image file of an explicit test set");
  cmd->add_option("--test-labels", spec.test_labels,
                  "IDX label file of an explicit test set");
}

json config_echo(const RunConfig& cfg) {
  json subs = json::array();
  for (const auto& g : cfg.model.submodels) {
    subs.push_back({{"inputs_per_filter", g.inputs_per_filter},
                    {"entries", uint64_t{1} << g.entries_log2},
                    {"hashes", g.hash_count}});
  }
  return {{"bits_per_input", cfg.model.bits_per_input},
          {"encoder", to_string(cfg.model.encoder_mode)},
          {"submodels", subs},
          {"mode", to_string(cfg.mode)},
          {"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size},
          {"learning_rate", cfg.train.learning_rate},
          {"dropout", cfg.train.dropout_p},
          {"prune_ratio", cfg.train.prune_ratio},
          {"augment", cfg.train.augment},
          {"fine_tune_epochs", cfg.fine_tune_epochs},
          {"bleach", to_string(cfg.bleach)},
          {"val_fraction", cfg.val_fraction}};
}

void emit_report(const json& report, const std::string& report_path) {
  std::cout << report.dump(2) << std::endl;
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error(report_path + ": cannot write report");
    out << report.dump(2) << "\n";
  }
}

int cmd_train(const CommonArgs& args, const std::string& config_path,
              const std::string& mode_override, const std::string& out_path,
              const std::string& report_path) {
  RunConfig cfg = load_config(config_path);
  if (!mode_override.empty()) cfg.mode = train_mode_from_string(mode_override);
  if (args.seed_given) cfg.train.seed = args.seed;
  const Dataset data =
      pipeline::load_data(args.data, cfg.train.seed, cfg.val_fraction);
  const auto outcome = pipeline::run_training(cfg, data, &std::cerr);
  if (!out_path.empty()) save(outcome.model, out_path);

  json report = {{"mode", to_string(cfg.mode)},
                 {"seed", cfg.train.seed},
                 {"accuracy_test", outcome.accuracy_test},
                 {"accuracy_val", outcome.accuracy_val},
                 {"size_bits", model_size_bits(outcome.model)},
                 {"size_kib",
                  static_cast<double>(model_size_bits(outcome.model)) / 8192.0},
                 {"submodel_accuracies", outcome.submodel_accuracy_test},
                 {"config", config_echo(cfg)}};
  if (cfg.mode == TrainMode::kOneshot) {
    report["b_star"] = outcome.b_star;
    report["bleach_mode"] = outcome.bleach_mode_used;
  } else {
    json epochs = json::array();
    for (const auto& e : outcome.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"loss", e.loss},
                        {"val_accuracy", e.val_accuracy}});
    }
    report["epochs"] = epochs;
    report["val_accuracy_before_prune"] = outcome.val_accuracy_before_prune;
    report["val_accuracy_after_prune"] = outcome.val_accuracy_after_prune;
  }
  if (!out_path.empty()) report["model"] = out_path;
  emit_report(report, report_path);
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& model_path,
             const std::string& split_name, double val_fraction,
             const std::string& report_path) {
  const BinaryEnsemble model = load(model_path);
  const Dataset data =
      pipeline::load_data(args.data, args.seed, val_fraction);
  std::vector<size_t> indices;
  if (split_name == "all") {
    indices.resize(data.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  } else if (split_name == "train") {
    indices = data.indices_of(Split::kTrain);
  } else if (split_name == "val") {
    indices = data.indices_of(Split::kVal);
  } else if (split_name == "test") {
    indices = data.indices_of(Split::kTest);
  } else {
    throw std::invalid_argument("unknown split: " + split_name);
  }
  const auto result = pipeline::evaluate(model, data, indices);
  const json report = {
      {"accuracy", result.accuracy},
      {"count", result.count},
      {"split", split_name},
      {"confusion", result.confusion},
      {"size_bits", model_size_bits(model)},
      {"size_kib", static_cast<double>(model_size_bits(model)) / 8192.0}};
  emit_report(report, report_path);
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& config_path,
              const pipeline::SweepGrid& grid, unsigned threads,
              double val_fraction, const std::string& out_path) {
  RunConfig base;
  if (!config_path.empty()) {
    base = load_config(config_path);
  } else {
    base.val_fraction = val_fraction;
  }
  if (args.seed_given || config_path.empty()) base.train.seed = args.seed;
  const Dataset data =
      pipeline::load_data(args.data, base.train.seed, base.val_fraction);
  const auto rows = pipeline::sweep(grid, data, base, threads);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error(out_path + ": cannot write");
    out = &file;
  }
  (*out) << "bits_per_input,inputs_per_filter,entries,hashes,accuracy,"
            "size_bits\n";
  for (const auto& row : rows) {
    (*out) << row.bits_per_input << ',' << row.inputs_per_filter << ','
           << row.entries << ',' << row.hashes << ',' << row.accuracy << ','
           << row.size_bits << '\n';
  }
  return 0;
}

int cmd_inspect(const std::string& model_path) {
  const BinaryEnsemble model = load(model_path);
  std::printf("classes: %zu\n", model.num_classes());
  std::printf("features: %zu\n", model.encoder.num_features());
  std::printf("encoder: %s, bits_per_input=%u, encoded_bits=%zu\n",
              to_string(model.encoder.mode()).c_str(),
              model.encoder.bits_per_input(), model.encoded_bits());
  std::printf("submodels: %zu\n", model.submodels.size());
  for (size_t s = 0; s < model.submodels.size(); ++s) {
    const auto& sm = model.submodels[s];
    const size_t filters = sm.num_filters();
    const size_t kept = sm.discriminators.front().kept_count();
    int32_t bias_lo = sm.discriminators.front().bias;
    int32_t bias_hi = bias_lo;
    uint64_t bits = 0;
    for (const auto& d : sm.discriminators) {
      bias_lo = std::min(bias_lo, d.bias);
      bias_hi = std::max(bias_hi, d.bias);
      bits += d.kept_count() * sm.entries_per_filter();
    }
    const double prune_ratio =
        1.0 - static_cast<double>(kept) / static_cast<double>(filters);
    std::printf(
        "  submodel %zu: inputs_per_filter=%u entries=%zu hashes=%u "
        "filters=%zu kept=%zu prune_ratio=%.2f bias=[%d,%d] size=%.2f KiB\n",
        s, sm.mapping.inputs_per_filter(), sm.entries_per_filter(),
        sm.bank.hash_count(), filters, kept, prune_ratio, bias_lo, bias_hi,
        static_cast<double>(bits) / 8192.0);
  }
  std::printf("Size %.1f KiB (%llu bits)\n",
              static_cast<double>(model_size_bits(model)) / 8192.0,
              static_cast<unsigned long long>(model_size_bits(model)));
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& csv_path,
                const std::string& images_path, int label_column,
                bool header) {
  const BinaryEnsemble model = load(model_path);
  Matrix features;
  if (!csv_path.empty()) {
    if (label_column != std::numeric_limits<int>::min()) {
      features = load_csv(pipeline::resolve_data_path(csv_path), label_column,
                          header)
                     .features;
    } else {
      features =
          load_csv_features(pipeline::resolve_data_path(csv_path), header);
    }
  } else if (!images_path.empty()) {
    features = load_idx_images(pipeline::resolve_data_path(images_path));
  } else {
    throw std::invalid_argument("predict needs --csv or --images");
  }
  for (size_t r = 0; r < features.rows; ++r) {
    const auto pred = predict(model, features.row(r));
    std::printf("sample=%zu class=%zu responses=", r, pred.label);
    for (size_t c = 0; c < pred.responses.size(); ++c) {
      std::printf(c == 0 ? "%lld" : ",%lld",
                  static_cast<long long>(pred.responses[c]));
    }
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weightless neural network trainer"};
  app.require_subcommand(1);

  CommonArgs targs;
  std::string config_path;
  std::string mode_override;
  std::string out_path;
  std::string report_path;
  auto* train = app.add_subcommand("train", "train a model end to end");
  train->add_option("--config", config_path, "model/training config file")
      ->required();
  add_data_flags(train, targs.data);
  train->add_option("--mode", mode_override, "oneshot or multishot");
  auto* train_seed = train->add_option("--seed", targs.seed, "master seed");
  train->add_option("--out", out_path, "model file to write");
  train->add_option("--report", report_path, "also write the JSON report here");

  CommonArgs eargs;
  std::string eval_model;
  std::string eval_split = "test";
  double eval_val_fraction = 0.10;
  std::string eval_report;
  auto* eval = app.add_subcommand("eval", "evaluate a saved model");
  eval->add_option("--model", eval_model, "ULN1 model file")->required();
  add_data_flags(eval, eargs.data);
  eval->add_option("--split", eval_split, "train, val, test or all")
      ->default_val("test");
  eval->add_option("--seed", eargs.seed,
                   "split seed (must match training for cross-checks)");
  eval->add_option("--val-fraction", eval_val_fraction,
                   "validation fraction used when splitting");
  eval->add_option("--report", eval_report, "also write the JSON report here");

  CommonArgs sargs;
  std::string sweep_config;
  pipeline::SweepGrid grid;
  double sweep_size_cap_kib = 0.0;
  unsigned sweep_threads = std::max(1u, std::thread::hardware_concurrency());
  double sweep_val_fraction = 0.10;
  std::string sweep_out;
  auto* sweep = app.add_subcommand(
      "sweep", "one-shot accuracy/size over a hyperparameter grid");
  add_data_flags(sweep, sargs.data);
  sweep->add_option("--config", sweep_config, "base config (optional)");
  sweep->add_option("--bits", grid.bits_per_input, "bits per input values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--inputs", grid.inputs_per_filter,
                    "inputs per filter values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--entries", grid.entries, "entries per filter values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--hashes", grid.hashes, "hash count values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--size-cap-kib", sweep_size_cap_kib,
                    "skip configs larger than this (KiB)");
  sweep->add_option("--threads", sweep_threads, "worker threads");
  auto* sweep_seed = sweep->add_option("--seed", sargs.seed, "master seed");
  sweep->add_option("--val-fraction", sweep_val_fraction,
                    "validation fraction when no config is given");
  sweep->add_option("--out", sweep_out, "CSV output path (default stdout)");

  std::string inspect_model;
  auto* inspect = app.add_subcommand("inspect", "summarize a saved model");
  inspect->add_option("--model", inspect_model, "ULN1 model file")->required();

  std::string predict_model;
  std::string predict_csv;
  std::string predict_images;
  int predict_label_column = std::numeric_limits<int>::min();
  bool predict_header = false;
  auto* predict = app.add_subcommand(
      "predict", "per-sample class and response vector");
  predict->add_option("--model", predict_model, "ULN1 model file")->required();
  predict->add_option("--csv", predict_csv, "CSV of samples");
  predict->add_option("--images", predict_images, "IDX image file");
  predict->add_option("--label-column", predict_label_column,
                      "label column to drop from the CSV");
  predict->add_flag("--header", predict_header, "CSV has a header row");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      targs.seed_given = train_seed->count() > 0;
      return cmd_train(targs, config_path, mode_override, out_path,
                       report_path);
    }
    if (eval->parsed()) {
      return cmd_eval(eargs, eval_model, eval_split, eval_val_fraction,
                      eval_report);
    }
    if (sweep->parsed()) {
      sargs.seed_given = sweep_seed->count() > 0;
      grid.size_cap_bits =
          static_cast<uint64_t>(sweep_size_cap_kib * 8192.0);
      return cmd_sweep(sargs, sweep_config, grid, sweep_threads,
                       sweep_val_fraction, sweep_out);
    }
    if (inspect->parsed()) return cmd_inspect(inspect_model);
    if (predict->parsed()) {
      return cmd_predict(predict_model, predict_csv, predict_images,
                         predict_label_column, predict_header);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
