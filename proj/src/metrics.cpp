#include "fairdd/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fairdd {

namespace {

void validate_dump(const PredictionDump& dump) {
  if (dump.num_classes < 2) throw std::invalid_argument("metrics: num_classes must be >= 2");
  if (dump.rows.empty()) throw std::invalid_argument("metrics: empty prediction dump");
  for (const PredictionRow& r : dump.rows) {
    if (r.label < 0 || r.label >= dump.num_classes)
      throw std::invalid_argument("metrics: label " + std::to_string(r.label) + " outside [0, " +
                                  std::to_string(dump.num_classes) + ")");
    if (r.predicted < 0 || r.predicted >= dump.num_classes)
      throw std::invalid_argument("metrics: prediction " + std::to_string(r.predicted) +
                                  " outside [0, " + std::to_string(dump.num_classes) + ")");
    if (r.attr != 0 && r.attr != 1)
      throw std::invalid_argument("metrics: attribute must be 0 or 1, got " +
                                  std::to_string(r.attr));
    if (static_cast<int>(r.probs.size()) != dump.num_classes)
      throw std::invalid_argument("metrics: probability row width mismatch");
  }
}

}  // namespace

MetricsReport evaluate_dump(const PredictionDump& dump) {
  validate_dump(dump);
  const int U = dump.num_classes;
  const std::size_t n = dump.rows.size();

  bool group_seen[2] = {false, false};
  for (const PredictionRow& r : dump.rows) group_seen[r.attr] = true;
  if (!group_seen[0] || !group_seen[1])
    throw std::invalid_argument("metrics: fairness gaps need both attribute groups present");

  MetricsReport rep;

  // --- performance ---
  std::size_t correct = 0;
  std::vector<std::int64_t> tp(U, 0), fp(U, 0), fn(U, 0), truth(U, 0);
  for (const PredictionRow& r : dump.rows) {
    if (r.predicted == r.label) {
      ++correct;
      ++tp[r.label];
    } else {
      ++fp[r.predicted];
      ++fn[r.label];
    }
    ++truth[r.label];
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;
  int present = 0;
  for (int c = 0; c < U; ++c) {
    const std::int64_t denom_p = tp[c] + fp[c];
    const double prec = denom_p > 0 ? static_cast<double>(tp[c]) / static_cast<double>(denom_p) : 0.0;
    prec_sum += prec;  // never-predicted class contributes 0
    if (truth[c] > 0) {
      ++present;
      const double rec = static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
      rec_sum += rec;
      f1_sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
  }
  rep.macro_precision = prec_sum / static_cast<double>(U);
  rep.macro_recall = rec_sum / static_cast<double>(present);
  rep.macro_f1 = f1_sum / static_cast<double>(present);

  // --- one-vs-rest group gaps ---
  for (int c = 0; c < U; ++c) {
    // per group: positives (y == c), negatives (y != c), and hits among each
    std::int64_t pos[2] = {0, 0}, neg[2] = {0, 0}, tp_g[2] = {0, 0}, fp_g[2] = {0, 0},
                 tn_g[2] = {0, 0};
    for (const PredictionRow& r : dump.rows) {
      const int a = r.attr;
      if (r.label == c) {
        ++pos[a];
        if (r.predicted == c) ++tp_g[a];
      } else {
        ++neg[a];
        if (r.predicted == c) ++fp_g[a];
        else ++tn_g[a];
      }
    }
    if (pos[0] == 0 || pos[1] == 0 || neg[0] == 0 || neg[1] == 0) {
      rep.skipped_classes.push_back(c);
      continue;
    }
    const double tpr0 = static_cast<double>(tp_g[0]) / static_cast<double>(pos[0]);
    const double tpr1 = static_cast<double>(tp_g[1]) / static_cast<double>(pos[1]);
    const double fpr0 = static_cast<double>(fp_g[0]) / static_cast<double>(neg[0]);
    const double fpr1 = static_cast<double>(fp_g[1]) / static_cast<double>(neg[1]);
    const double tnr0 = static_cast<double>(tn_g[0]) / static_cast<double>(neg[0]);
    const double tnr1 = static_cast<double>(tn_g[1]) / static_cast<double>(neg[1]);
    rep.eopp1 += std::abs(tpr0 - tpr1);
    rep.eopp0 += std::abs(tnr0 - tnr1);
    rep.eodd += std::abs(tpr0 - tpr1) + std::abs(fpr0 - fpr1);
  }
  return rep;
}

double fate(double acc_enhanced, double fc_enhanced, double acc_baseline, double fc_baseline,
            double lambda) {
  if (acc_baseline == 0.0)
    throw std::invalid_argument("fate: baseline accuracy must be nonzero");
  if (fc_baseline == 0.0)
    throw std::invalid_argument("fate: baseline fairness value must be nonzero");
  return (acc_enhanced - acc_baseline) / acc_baseline -
         lambda * (fc_enhanced - fc_baseline) / fc_baseline;
}

std::vector<FateEntry> fate_report(const MetricsReport& enhanced, const MetricsReport& baseline,
                                   double lambda) {
  std::vector<FateEntry> out;
  const struct {
    const char* name;
    double e, b;
  } rows[] = {{"eopp0", enhanced.eopp0, baseline.eopp0},
              {"eopp1", enhanced.eopp1, baseline.eopp1},
              {"eodd", enhanced.eodd, baseline.eodd}};
  for (const auto& r : rows) {
    FateEntry entry;
    entry.criterion = r.name;
    entry.acc_enhanced = enhanced.accuracy;
    entry.acc_baseline = baseline.accuracy;
    entry.fc_enhanced = r.e;
    entry.fc_baseline = r.b;
    entry.lambda = lambda;
    entry.value = fate(enhanced.accuracy, r.e, baseline.accuracy, r.b, lambda);
    out.push_back(std::move(entry));
  }
  return out;
}

void write_dump_csv(const PredictionDump& dump, const std::string& path) {
  validate_dump(dump);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("metrics: cannot write " + path);
  out << "id,y,yhat,a";
  for (int c = 0; c < dump.num_classes; ++c) out << ",q" << c;
  out << "\n";
  char buf[32];
  for (const PredictionRow& r : dump.rows) {
    out << r.id << "," << r.label << "," << r.predicted << "," << r.attr;
    for (double q : r.probs) {
      std::snprintf(buf, sizeof(buf), "%.17g", q);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("metrics: write failed for " + path);
}

PredictionDump read_dump_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics: " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) cols.push_back(field);
  }
  if (cols.size() < 6 || cols[0] != "id" || cols[1] != "y" || cols[2] != "yhat" || cols[3] != "a")
    throw std::runtime_error("metrics: " + path + " line 1: header must start with id,y,yhat,a,q0,...");
  const int U = static_cast<int>(cols.size()) - 4;
  for (int c = 0; c < U; ++c)
    if (cols[static_cast<std::size_t>(c) + 4] != "q" + std::to_string(c))
      throw std::runtime_error("metrics: " + path + " line 1: expected column q" +
                               std::to_string(c) + ", got " + cols[static_cast<std::size_t>(c) + 4]);

  PredictionDump dump;
  dump.num_classes = U;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (static_cast<int>(fields.size()) != U + 4)
      throw std::runtime_error("metrics: " + path + " line " + std::to_string(line_no) +
                               ": expected " + std::to_string(U + 4) + " fields, got " +
                               std::to_string(fields.size()));
    PredictionRow r;
    try {
      std::size_t pos = 0;
      r.id = std::stoll(fields[0], &pos);
      if (pos != fields[0].size()) throw std::invalid_argument("id");
      r.label = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("y");
      r.predicted = std::stoi(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("yhat");
      r.attr = std::stoi(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("a");
      r.probs.resize(static_cast<std::size_t>(U));
      for (int c = 0; c < U; ++c) {
        r.probs[static_cast<std::size_t>(c)] = std::stod(fields[static_cast<std::size_t>(c) + 4], &pos);
        if (pos != fields[static_cast<std::size_t>(c) + 4].size())
          throw std::invalid_argument("q" + std::to_string(c));
      }
    } catch (const std::exception&) {
      throw std::runtime_error("metrics: " + path + " line " + std::to_string(line_no) +
                               ": malformed numeric field");
    }
    dump.rows.push_back(std::move(r));
  }
  validate_dump(dump);
  return dump;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  return nlohmann::json{{"accuracy", report.accuracy},
                        {"macro_precision", report.macro_precision},
                        {"macro_recall", report.macro_recall},
                        {"macro_f1", report.macro_f1},
                        {"eopp0", report.eopp0},
                        {"eopp1", report.eopp1},
                        {"eodd", report.eodd},
                        {"skipped_classes", report.skipped_classes}};
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport rep;
  rep.accuracy = j.at("accuracy").get<double>();
  rep.macro_precision = j.at("macro_precision").get<double>();
  rep.macro_recall = j.at("macro_recall").get<double>();
  rep.macro_f1 = j.at("macro_f1").get<double>();
  rep.eopp0 = j.at("eopp0").get<double>();
  rep.eopp1 = j.at("eopp1").get<double>();
  rep.eodd = j.at("eodd").get<double>();
  rep.skipped_classes = j.at("skipped_classes").get<std::vector<int>>();
  return rep;
}

}  // namespace fairdd
