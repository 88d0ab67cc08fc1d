#pragma once

#include <json.hpp>
#include <string>

namespace ewopt {

/// Outcome of one configured experiment. `report` is fully deterministic
/// for a fixed config (byte-identical across runs); wall-clock numbers live
/// in `timing`, which is written to a separate file for that reason.
struct RunOutcome {
  nlohmann::json report;
  nlohmann::json timing;
  double selection_metric = 0.0;  // validation metric, the sweep key
};

// Executes one experiment described by `config` (schema_version 1; see
// README for the schema): builds or loads the three splits, fits or reads
// the probability model, runs the configured method, and writes
// predictions_{train,val,test}.csv, report.json, timing.json, summary.txt
// and (for iterative methods) trace.jsonl under out_dir.
RunOutcome run_config(const nlohmann::json& config,
                      const std::string& out_dir);

// Runs every candidate in config["sweep"] (grid over elicitation epsilon
// and/or basis sets) in out_dir/candidate-<k>, selects the best by
// validation metric, and writes sweep.json. Throws only if every candidate
// fails.
nlohmann::json sweep_config(const nlohmann::json& config,
                            const std::string& out_dir);

// Generates a synthetic benchmark to train.csv / val.csv / test.csv plus
// meta.json (optionally with the population oracle value).
nlohmann::json synth_config(const nlohmann::json& config,
                            const std::string& out_dir);

// Scores a predictions file (as written by run_config) against a metric
// config; the value is recomputed from the stored class distributions.
nlohmann::json eval_predictions(const std::string& predictions_path,
                                const nlohmann::json& metric_config);

nlohmann::json parse_config_file(const std::string& path);

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace ewopt
