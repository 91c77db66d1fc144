#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairdd/data.hpp"
#include "fairdd/experiment.hpp"
#include "fairdd/metrics.hpp"

namespace {

void print_error_record(const std::string& type, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
}

std::string two(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void print_metrics(const fairdd::MetricsReport& m) {
  std::cout << "accuracy " << two(m.accuracy * 100.0) << "% | macro F1 " << two(m.macro_f1)
            << "\n";
  std::cout << "fairness gaps (x1e-2): EOpp0 " << two(m.eopp0 * 100.0) << " | EOpp1 "
            << two(m.eopp1 * 100.0) << " | EOdd " << two(m.eodd * 100.0) << "\n";
  if (!m.skipped_classes.empty()) {
    std::cout << "classes skipped in the gap sums:";
    for (int c : m.skipped_classes) std::cout << " " << c;
    std::cout << "\n";
  }
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair domain-incremental training over sensitive-attribute domains"};
  app.require_subcommand(1);

  std::string config_path, out_path, mode, run_dir, enhanced_dir, baseline_dir, out_dir, sweep,
      values_csv;
  double lambda = 1.0;

  CLI::App* gen = app.add_subcommand("generate-data", "write the configured dataset as CSV");
  gen->add_option("--config", config_path, "experiment config JSON")->required();
  gen->add_option("--out", out_path, "output CSV path")->required();

  CLI::App* train = app.add_subcommand("train", "run one training pipeline");
  train->add_option("--config", config_path, "experiment config JSON")->required();
  train->add_option("--mode", mode, "fairdd or vanilla (overrides the config)");
  train->add_option("--run-dir", run_dir, "explicit run directory (default <root>/<run_id>-<mode>)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "recompute metrics from a run's prediction dump");
  evaluate->add_option("--run-dir", run_dir, "run directory")->required();

  CLI::App* fate = app.add_subcommand("fate", "fairness-accuracy tradeoff against a baseline run");
  fate->add_option("--enhanced", enhanced_dir, "enhanced run directory")->required();
  fate->add_option("--baseline", baseline_dir, "baseline run directory")->required();
  fate->add_option("--lambda", lambda, "fairness weight (default 1.0)");
  fate->add_option("--out", out_dir, "output directory (default: enhanced run)");

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one knob, one full run per value");
  ablate->add_option("--config", config_path, "experiment config JSON")->required();
  ablate->add_option("--sweep", sweep, "order | mixup | supcon | alpha | beta | buffer")->required();
  ablate->add_option("--values", values_csv, "comma-separated values (numeric sweeps)");

  CLI::App* report = app.add_subcommand("report", "print a run summary");
  report->add_option("--run-dir", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // help/version paths
    print_error_record("usage", e.what());
    return e.get_exit_code();
  }

  try {
    if (gen->parsed()) {
      const fairdd::ExperimentConfig cfg = fairdd::ExperimentConfig::load(config_path);
      const fairdd::Dataset ds = fairdd::load_dataset(cfg);
      fairdd::write_dataset_csv(ds, out_path);
      std::cout << "wrote " << ds.samples.size() << " samples (" << ds.num_classes
                << " classes, " << ds.feature_dim << " features) to " << out_path << "\n";
    } else if (train->parsed()) {
      fairdd::ExperimentConfig cfg = fairdd::ExperimentConfig::load(config_path);
      if (!mode.empty()) cfg.mode = mode;
      const fairdd::RunArtifacts art = fairdd::run_training(cfg, run_dir);
      std::cout << "run directory: " << art.dir << "\n";
      print_metrics(art.metrics);
    } else if (evaluate->parsed()) {
      print_metrics(fairdd::evaluate_run(run_dir));
    } else if (fate->parsed()) {
      const auto entries = fairdd::run_fate(enhanced_dir, baseline_dir, lambda, out_dir);
      for (const fairdd::FateEntry& e : entries)
        std::cout << e.criterion << ": FATE " << two(e.value * 100.0) << " (x1e-2) | accuracy "
                  << two(e.acc_enhanced * 100.0) << "% vs " << two(e.acc_baseline * 100.0)
                  << "% | gap " << two(e.fc_enhanced * 100.0) << " vs "
                  << two(e.fc_baseline * 100.0) << " (x1e-2)\n";
    } else if (ablate->parsed()) {
      const fairdd::ExperimentConfig cfg = fairdd::ExperimentConfig::load(config_path);
      const fairdd::AblateOutcome outcome =
          fairdd::run_ablate(cfg, sweep, split_csv_list(values_csv));
      std::cout << "sweep directory: " << outcome.dir << "\n";
      for (const fairdd::AblateVariant& v : outcome.variants)
        std::cout << v.name << ": accuracy " << two(v.metrics.accuracy * 100.0) << "% | EOpp0 "
                  << two(v.metrics.eopp0 * 100.0) << " | EOpp1 " << two(v.metrics.eopp1 * 100.0)
                  << " | EOdd " << two(v.metrics.eodd * 100.0) << " (x1e-2)\n";
    } else if (report->parsed()) {
      std::cout << fairdd::run_report(run_dir);
    }
  } catch (const std::invalid_argument& e) {
    print_error_record("invalid_argument", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    print_error_record("runtime_error", e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error_record("error", e.what());
    return 1;
  }
  return 0;
}
