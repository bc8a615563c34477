// Command-line front end: convert corpora to the canonical JSONL format,
// train baseline or curriculum models, analyze error rates by difficulty
// level, and summarize finished runs.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcl/commands.hpp"
#include "dcl/errors.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic curriculum training for intent classifiers, with density-scored sample difficulty"};
  app.require_subcommand(1);

  // convert
  dcl::ConvertOptions convert_opt;
  auto* convert = app.add_subcommand("convert", "convert a corpus to canonical JSONL");
  convert->add_option("--input", convert_opt.input, "source file")->required();
  convert->add_option("--format", convert_opt.format, "banking77-csv | clinc150-json | jsonl")->required();
  convert->add_option("--output", convert_opt.output, "destination JSONL file")->required();
  convert->add_option("--text-column", convert_opt.text_column, "CSV text column name");
  convert->add_option("--label-column", convert_opt.label_column, "CSV label column name");
  convert->add_option("--split", convert_opt.split, "clinc150-json split: train|val|test|all");

  // train
  dcl::TrainOptions train_opt;
  auto* train = app.add_subcommand("train", "train a model per the config file");
  train->add_option("--config", train_opt.config_path, "key=value config file")->required();
  std::string f_mode, f_embeddings, f_out_dir;
  std::string f_k, f_theta, f_lambda, f_omega_floor, f_reassign, f_seed, f_epochs, f_dim, f_threads;
  auto* o_mode = train->add_option("--mode", f_mode, "baseline | curriculum");
  auto* o_k = train->add_option("--k", f_k, "difficulty levels");
  auto* o_theta = train->add_option("--theta", f_theta, "demarcation percentile (0, 100]");
  auto* o_lambda = train->add_option("--lambda", f_lambda, "attention decay base (> 1)");
  auto* o_floor = train->add_option("--omega-floor", f_omega_floor, "minimum attention weight");
  auto* o_reassign = train->add_option("--reassign-period", f_reassign, "epochs between difficulty re-definitions");
  auto* o_seed = train->add_option("--seed", f_seed, "root seed");
  auto* o_epochs = train->add_option("--epochs", f_epochs, "training epochs");
  auto* o_dim = train->add_option("--dim", f_dim, "embedding dimension");
  auto* o_embeddings = train->add_option("--embeddings", f_embeddings, "external embedding-vector JSONL");
  auto* o_out_dir = train->add_option("--out-dir", f_out_dir, "run output directory");
  auto* o_threads = train->add_option("--threads", f_threads, "internal fan-out cap");

  // analyze
  dcl::AnalyzeOptions analyze_opt;
  auto* analyze = app.add_subcommand("analyze", "error rate per difficulty level for a checkpoint");
  analyze->add_option("--checkpoint", analyze_opt.checkpoint_path, "checkpoint.json from a run")->required();
  analyze->add_option("--dataset", analyze_opt.dataset_path, "evaluation JSONL")->required();
  analyze->add_option("--k-sweep", analyze_opt.k_sweep, "difficulty level settings")->delimiter(',');
  analyze->add_option("--theta", analyze_opt.theta, "demarcation percentile");
  analyze->add_option("--out-dir", analyze_opt.out_dir, "where CSVs go");
  analyze->add_option("--embeddings", analyze_opt.embeddings_path, "external embedding vectors (ids = dataset line numbers)");
  analyze->add_option("--threads", analyze_opt.threads, "internal fan-out cap");

  // report
  dcl::ReportOptions report_opt;
  auto* report = app.add_subcommand("report", "summarize a finished run directory");
  report->add_option("--dir", report_opt.dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*convert) {
      dcl::cmd_convert(convert_opt, std::cout);
    } else if (*train) {
      auto push_if = [&](const CLI::Option* o, const std::string& key, const std::string& value) {
        if (o->count() > 0) train_opt.overrides.emplace_back(key, value);
      };
      push_if(o_mode, "mode", f_mode);
      push_if(o_k, "k", f_k);
      push_if(o_theta, "theta", f_theta);
      push_if(o_lambda, "lambda", f_lambda);
      push_if(o_floor, "omega_floor", f_omega_floor);
      push_if(o_reassign, "reassign_period", f_reassign);
      push_if(o_seed, "seed", f_seed);
      push_if(o_epochs, "epochs", f_epochs);
      push_if(o_dim, "dim", f_dim);
      push_if(o_embeddings, "embeddings", f_embeddings);
      push_if(o_out_dir, "out_dir", f_out_dir);
      push_if(o_threads, "threads", f_threads);
      dcl::cmd_train(train_opt, std::cout);
    } else if (*analyze) {
      dcl::cmd_analyze(analyze_opt, std::cout);
    } else if (*report) {
      dcl::cmd_report(report_opt, std::cout);
    }
  } catch (const dcl::usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dcl::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
