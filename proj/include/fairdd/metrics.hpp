#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fairdd {

struct PredictionRow {
  std::int64_t id = 0;
  int label = 0;
  int predicted = 0;
  int attr = 0;
  std::vector<double> probs;  // length num_classes
};

struct PredictionDump {
  int num_classes = 0;
  std::vector<PredictionRow> rows;
};

struct MetricsReport {
  double accuracy = 0.0;
  // Macro conventions: precision averages over all classes (a never-predicted
  // class scores 0); recall and F1 average over classes with at least one
  // true sample.
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  // One-vs-rest group gaps summed over classes:
  //   eopp1 = sum_c |TPR gap|, eopp0 = sum_c |TNR gap|,
  //   eodd  = sum_c (|TPR gap| + |FPR gap|).
  double eopp0 = 0.0;
  double eopp1 = 0.0;
  double eodd = 0.0;
  // Classes lacking positives or negatives in either group, skipped from the
  // fairness sums.
  std::vector<int> skipped_classes;
};

// Both attribute groups must appear in the dump (throws otherwise).
MetricsReport evaluate_dump(const PredictionDump& dump);

// Fairness-accuracy tradeoff of an enhanced model against a baseline:
//   (acc_e - acc_b)/acc_b - lambda * (fc_e - fc_b)/fc_b
// where fc is a fairness criterion value (lower is fairer). Scale-invariant
// in both inputs; baseline accuracy and fairness must be nonzero.
double fate(double acc_enhanced, double fc_enhanced, double acc_baseline, double fc_baseline,
            double lambda);

struct FateEntry {
  std::string criterion;  // "eopp0" | "eopp1" | "eodd"
  double value = 0.0;
  double acc_enhanced = 0.0, acc_baseline = 0.0;
  double fc_enhanced = 0.0, fc_baseline = 0.0;
  double lambda = 1.0;
};

// FATE per fairness criterion from two evaluated reports.
std::vector<FateEntry> fate_report(const MetricsReport& enhanced, const MetricsReport& baseline,
                                   double lambda);

// CSV schema: id,y,yhat,a,q_0,...,q_{U-1}; full double precision.
void write_dump_csv(const PredictionDump& dump, const std::string& path);
PredictionDump read_dump_csv(const std::string& path);

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

}  // namespace fairdd
