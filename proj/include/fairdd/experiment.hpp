#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairdd/data.hpp"
#include "fairdd/metrics.hpp"
#include "fairdd/trainer.hpp"

namespace fairdd {

// One structured config drives every subcommand. JSON sections: run_id,
// output_dir, mode, seed, dataset{}, model{}, train{}, losses{}, mixup{}.
// Unknown keys anywhere are rejected. Absent seeds derive from the top-level
// seed (model: seed+1, dataset: seed+2) so one knob varies a whole paired
// experiment while an explicit snapshot stays fully pinned.
struct ExperimentConfig {
  std::string run_id = "run";
  std::string output_dir = "runs";
  std::string mode = "fairdd";  // "fairdd" | "vanilla"
  std::uint64_t seed = 1;
  std::string dataset_csv;  // empty: generate synthetic data per `dataset`
  DatasetSpec dataset;
  TrainConfig train;  // carries losses, mixup, and the model template

  void validate() const;
  nlohmann::json to_json() const;  // fully resolved, reload-stable snapshot
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
};

// Output root: FAIRDD_OUTPUT_ROOT env var when set, else cfg.output_dir.
std::string output_root(const ExperimentConfig& cfg);
// Default run directory: <root>/<run_id>-<mode>.
std::string run_directory(const ExperimentConfig& cfg);

// Synthetic generation, or CSV ingestion followed by the same deterministic
// stratified 80/20 split used by the generator.
Dataset load_dataset(const ExperimentConfig& cfg);

struct RunArtifacts {
  std::string dir;
  MetricsReport metrics;
};

// Full training pipeline. Writes into the run directory: config.json,
// log.jsonl, warnings.log (when any), predictions.csv (full test split),
// metrics.json, model.json, stages.json, and buffer.csv (fairdd mode).
// explicit_dir overrides the default run directory when nonempty.
RunArtifacts run_training(const ExperimentConfig& cfg, const std::string& explicit_dir = "");

// Recomputes metrics from a run's predictions.csv and rewrites metrics.json;
// byte-identical to the training-time file for an untouched run.
MetricsReport evaluate_run(const std::string& run_dir);

// FATE of an enhanced run against a baseline run from their metrics.json
// files. Writes fate.json, fate.csv, and fate.svg into out_dir (default: the
// enhanced run's directory). A missing metrics file is reported by path.
std::vector<FateEntry> run_fate(const std::string& enhanced_dir, const std::string& baseline_dir,
                                double lambda, const std::string& out_dir = "");

struct AblateVariant {
  std::string name;
  std::string value;  // the swept setting, as text
  MetricsReport metrics;
};

struct AblateOutcome {
  std::string dir;  // sweep root holding per-variant run dirs + table.csv + sweep.svg
  std::vector<AblateVariant> variants;
};

// Sweeps: order (every stage permutation), mixup (on/off), supcon (on/off),
// alpha, beta, buffer (numeric value lists). `values` applies to the numeric
// sweeps; empty selects the built-in defaults. Each variant is a complete
// fairdd training run in its own subdirectory.
AblateOutcome run_ablate(const ExperimentConfig& base, const std::string& sweep,
                         const std::vector<std::string>& values = {});

// Human-readable summary of a finished run directory.
std::string run_report(const std::string& run_dir);

}  // namespace fairdd
