#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>
#include <string>

#include "ewopt/error.hpp"
#include "ewopt/runner.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string method;
  std::string metric;
  long long seed = -1;
  bool have_seed = false;
};

void add_overrides(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args->out_dir, "output directory")->required();
  cmd->add_option("--seed", args->seed, "override config seed");
  cmd->add_option("--method", args->method, "override method.name");
  cmd->add_option("--metric", args->metric, "override metric.name");
}

json load_with_overrides(const CommonArgs& args) {
  json cfg = ewopt::parse_config_file(args.config_path);
  if (args.seed >= 0) cfg["seed"] = args.seed;
  if (!args.method.empty()) cfg["method"]["name"] = args.method;
  if (!args.metric.empty()) cfg["metric"]["name"] = args.metric;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ewopt: post-shift classifiers via example-weight elicitation"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, synth_args;
  std::string pred_path, metric_name, metric_config_path;

  auto* run = app.add_subcommand("run", "execute one configured experiment");
  add_overrides(run, &run_args);

  auto* sweep = app.add_subcommand(
      "sweep", "run every sweep candidate and pick the best by validation");
  add_overrides(sweep, &sweep_args);

  auto* synth =
      app.add_subcommand("synth", "generate a synthetic benchmark to CSV");
  synth->add_option("--config", synth_args.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_args.out_dir, "output directory")
      ->required();
  synth->add_option("--seed", synth_args.seed, "override config seed");

  auto* eval = app.add_subcommand(
      "eval", "recompute a metric from an emitted predictions file");
  eval->add_option("--predictions", pred_path, "predictions CSV")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--metric", metric_name,
                   "metric name (accuracy, gmean, fmeasure-binary, "
                   "fmeasure-macro, fairness)");
  eval->add_option("--metric-config", metric_config_path,
                   "JSON file with the full metric object")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ewopt::RunOutcome rc =
          ewopt::run_config(load_with_overrides(run_args), run_args.out_dir);
      std::cout << rc.report["metrics"].dump() << "\n";
    } else if (sweep->parsed()) {
      const json res = ewopt::sweep_config(load_with_overrides(sweep_args),
                                           sweep_args.out_dir);
      std::cout << json{{"winner", res["winner"]},
                        {"winner_dir", res["winner_dir"]},
                        {"winner_val_metric", res["winner_val_metric"]}}
                       .dump()
                << "\n";
    } else if (synth->parsed()) {
      json cfg = ewopt::parse_config_file(synth_args.config_path);
      if (synth_args.seed >= 0) cfg["seed"] = synth_args.seed;
      const json meta = ewopt::synth_config(cfg, synth_args.out_dir);
      json brief{{"files", meta["files"]}};
      if (meta.contains("oracle")) brief["oracle"] = meta["oracle"]["value"];
      std::cout << brief.dump() << "\n";
    } else if (eval->parsed()) {
      json mconf;
      if (!metric_config_path.empty()) {
        mconf = ewopt::parse_config_file(metric_config_path);
      } else if (!metric_name.empty()) {
        mconf = json{{"name", metric_name}};
      } else {
        throw ewopt::Error("eval: provide --metric or --metric-config");
      }
      std::cout << ewopt::eval_predictions(pred_path, mconf).dump() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
