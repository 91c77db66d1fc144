#include "fairdd/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fairdd/plot.hpp"

namespace fairdd {

namespace {

namespace fs = std::filesystem;

void check_keys(const nlohmann::json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw std::invalid_argument("config: section \"" + section + "\" must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in " + section);
  }
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

nlohmann::json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(what + ": missing required file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(what + ": cannot parse " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("run: cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("run: write failed for " + path);
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool safe_path_component(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
      return false;
  return s != "." && s != "..";
}

std::string join_order(const std::vector<int>& order) {
  std::string s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) s += '-';
    s += std::to_string(order[i]);
  }
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!safe_path_component(run_id))
    throw std::invalid_argument("config: run_id must be a nonempty name using [A-Za-z0-9._-]");
  if (output_dir.empty()) throw std::invalid_argument("config: output_dir must be nonempty");
  if (mode != "fairdd" && mode != "vanilla")
    throw std::invalid_argument("config: mode must be \"fairdd\" or \"vanilla\", got \"" + mode +
                                "\"");
  train.validate();
  if (dataset_csv.empty()) dataset.validate();
  if (train.network.projector_dim < 1)
    throw std::invalid_argument("config: model projector_dim must be >= 1");
  for (int h : train.network.hidden_dims)
    if (h < 1) throw std::invalid_argument("config: model hidden_dims must be positive");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.train.stage_order = {1, 0};  // minority-first on the default synthetic data
  check_keys(j, "top level",
             {"run_id", "output_dir", "mode", "seed", "dataset", "model", "train", "losses",
              "mixup"});
  read_key(j, "run_id", cfg.run_id);
  read_key(j, "output_dir", cfg.output_dir);
  read_key(j, "mode", cfg.mode);
  read_key(j, "seed", cfg.seed);
  cfg.train.seed = cfg.seed;

  bool model_seed_given = false, dataset_seed_given = false;
  if (j.contains("dataset")) {
    const nlohmann::json& d = j.at("dataset");
    check_keys(d, "dataset",
               {"csv", "num_classes", "feature_dim", "samples_per_cell", "group0_fraction",
                "class_separation", "group_shift", "noise_sigma", "seed"});
    read_key(d, "csv", cfg.dataset_csv);
    read_key(d, "num_classes", cfg.dataset.num_classes);
    read_key(d, "feature_dim", cfg.dataset.feature_dim);
    read_key(d, "samples_per_cell", cfg.dataset.samples_per_cell);
    read_key(d, "group0_fraction", cfg.dataset.group0_fraction);
    read_key(d, "class_separation", cfg.dataset.class_separation);
    read_key(d, "group_shift", cfg.dataset.group_shift);
    read_key(d, "noise_sigma", cfg.dataset.noise_sigma);
    dataset_seed_given = d.contains("seed");
    read_key(d, "seed", cfg.dataset.seed);
  }
  if (j.contains("model")) {
    const nlohmann::json& m = j.at("model");
    check_keys(m, "model", {"hidden_dims", "projector_dim", "seed"});
    read_key(m, "hidden_dims", cfg.train.network.hidden_dims);
    read_key(m, "projector_dim", cfg.train.network.projector_dim);
    model_seed_given = m.contains("seed");
    read_key(m, "seed", cfg.train.network.seed);
  }
  if (j.contains("train")) {
    const nlohmann::json& t = j.at("train");
    check_keys(t, "train",
               {"stage_order", "epochs_per_stage", "batch_size", "learning_rate", "momentum",
                "finetune_learning_rate", "finetune_batches", "buffer_capacity",
                "supcon_enabled"});
    read_key(t, "stage_order", cfg.train.stage_order);
    read_key(t, "epochs_per_stage", cfg.train.epochs_per_stage);
    read_key(t, "batch_size", cfg.train.batch_size);
    read_key(t, "learning_rate", cfg.train.learning_rate);
    read_key(t, "momentum", cfg.train.momentum);
    read_key(t, "finetune_learning_rate", cfg.train.finetune_learning_rate);
    read_key(t, "finetune_batches", cfg.train.finetune_batches);
    read_key(t, "buffer_capacity", cfg.train.buffer_capacity);
    read_key(t, "supcon_enabled", cfg.train.supcon_enabled);
  }
  if (j.contains("losses")) {
    const nlohmann::json& l = j.at("losses");
    check_keys(l, "losses", {"alpha", "beta", "tau", "temperature"});
    read_key(l, "alpha", cfg.train.weights.alpha);
    read_key(l, "beta", cfg.train.weights.beta);
    read_key(l, "tau", cfg.train.weights.tau);
    read_key(l, "temperature", cfg.train.weights.temperature);
  }
  if (j.contains("mixup")) {
    const nlohmann::json& m = j.at("mixup");
    check_keys(m, "mixup", {"enabled", "theta"});
    read_key(m, "enabled", cfg.train.mixup.enabled);
    read_key(m, "theta", cfg.train.mixup.theta);
  }
  if (!model_seed_given) cfg.train.network.seed = cfg.seed + 1;
  if (!dataset_seed_given) cfg.dataset.seed = cfg.seed + 2;
  cfg.validate();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{
      {"run_id", run_id},
      {"output_dir", output_dir},
      {"mode", mode},
      {"seed", seed},
      {"dataset",
       {{"csv", dataset_csv},
        {"num_classes", dataset.num_classes},
        {"feature_dim", dataset.feature_dim},
        {"samples_per_cell", dataset.samples_per_cell},
        {"group0_fraction", dataset.group0_fraction},
        {"class_separation", dataset.class_separation},
        {"group_shift", dataset.group_shift},
        {"noise_sigma", dataset.noise_sigma},
        {"seed", dataset.seed}}},
      {"model",
       {{"hidden_dims", train.network.hidden_dims},
        {"projector_dim", train.network.projector_dim},
        {"seed", train.network.seed}}},
      {"train",
       {{"stage_order", train.stage_order},
        {"epochs_per_stage", train.epochs_per_stage},
        {"batch_size", train.batch_size},
        {"learning_rate", train.learning_rate},
        {"momentum", train.momentum},
        {"finetune_learning_rate", train.finetune_learning_rate},
        {"finetune_batches", train.finetune_batches},
        {"buffer_capacity", train.buffer_capacity},
        {"supcon_enabled", train.supcon_enabled}}},
      {"losses",
       {{"alpha", train.weights.alpha},
        {"beta", train.weights.beta},
        {"tau", train.weights.tau},
        {"temperature", train.weights.temperature}}},
      {"mixup", {{"enabled", train.mixup.enabled}, {"theta", train.mixup.theta}}}};
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_json(read_json_file(path, "config"));
}

std::string output_root(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("FAIRDD_OUTPUT_ROOT"); env != nullptr && *env != '\0')
    return env;
  return cfg.output_dir;
}

std::string run_directory(const ExperimentConfig& cfg) {
  return (fs::path(output_root(cfg)) / (cfg.run_id + "-" + cfg.mode)).string();
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset_csv.empty()) {
    Dataset ds = ingest_csv(cfg.dataset_csv);
    assign_stratified_split(ds, 0.2, cfg.dataset.seed + 1);
    return ds;
  }
  return generate(cfg.dataset);
}

namespace {

nlohmann::json breakdown_to_json(const LossBreakdown& b) {
  return nlohmann::json{
      {"ce", b.ce}, {"sup", b.sup}, {"dis", b.dis}, {"spd", b.spd}, {"total", b.total}};
}

nlohmann::json stages_to_json(const TrainResult& result) {
  nlohmann::json stages = nlohmann::json::array();
  for (const StageReport& rep : result.stages) {
    nlohmann::json acc = nlohmann::json::object();
    for (const auto& [dom, a] : rep.domain_accuracy) acc[std::to_string(dom)] = a;
    nlohmann::json means = nlohmann::json::array();
    for (const LossBreakdown& m : rep.epoch_means) means.push_back(breakdown_to_json(m));
    stages.push_back(nlohmann::json{{"stage", rep.stage},
                                    {"domain", rep.domain},
                                    {"has_teacher", rep.has_teacher},
                                    {"teacher_checksum_before", rep.teacher_checksum_before},
                                    {"teacher_checksum_after", rep.teacher_checksum_after},
                                    {"epoch_means", means},
                                    {"spd_degenerate_steps", rep.spd_degenerate_steps},
                                    {"domain_accuracy", acc}});
  }
  return nlohmann::json{{"stages", stages},
                        {"buffer_checksum_at_freeze", result.buffer_checksum_at_freeze},
                        {"buffer_checksum_at_end", result.buffer_checksum_at_end}};
}

}  // namespace

RunArtifacts run_training(const ExperimentConfig& cfg, const std::string& explicit_dir) {
  cfg.validate();
  const std::string dir = explicit_dir.empty() ? run_directory(cfg) : explicit_dir;
  fs::create_directories(dir);

  const Dataset ds = load_dataset(cfg);
  write_text_file((fs::path(dir) / "config.json").string(), cfg.to_json().dump(2) + "\n");

  std::ofstream log((fs::path(dir) / "log.jsonl").string());
  if (!log) throw std::runtime_error("run: cannot write " + dir + "/log.jsonl");
  std::vector<std::string> warnings;
  TrainHooks hooks;
  hooks.on_epoch = [&log](const nlohmann::json& rec) { log << rec.dump() << "\n"; };
  hooks.on_warning = [&warnings](const std::string& w) { warnings.push_back(w); };

  const TrainResult result =
      cfg.mode == "vanilla" ? run_vanilla(cfg.train, ds, hooks) : run_incremental(cfg.train, ds, hooks);
  log.flush();
  if (!log) throw std::runtime_error("run: write failed for " + dir + "/log.jsonl");

  if (!warnings.empty()) {
    std::string text;
    for (const std::string& w : warnings) text += w + "\n";
    write_text_file((fs::path(dir) / "warnings.log").string(), text);
  }

  const PredictionDump dump = predict(result.net, ds, ds.test_indices());
  write_dump_csv(dump, (fs::path(dir) / "predictions.csv").string());
  const MetricsReport metrics = evaluate_dump(dump);
  write_text_file((fs::path(dir) / "metrics.json").string(),
                  report_to_json(metrics).dump(2) + "\n");
  write_text_file((fs::path(dir) / "model.json").string(), result.net.to_json().dump() + "\n");
  write_text_file((fs::path(dir) / "stages.json").string(), stages_to_json(result).dump(2) + "\n");
  if (cfg.mode == "fairdd")
    write_samples_csv(result.buffer_entries, ds.feature_dim,
                      (fs::path(dir) / "buffer.csv").string());
  return {dir, metrics};
}

MetricsReport evaluate_run(const std::string& run_dir) {
  const std::string dump_path = (fs::path(run_dir) / "predictions.csv").string();
  if (!fs::exists(dump_path))
    throw std::runtime_error("evaluate: missing required file " + dump_path);
  const PredictionDump dump = read_dump_csv(dump_path);
  const MetricsReport metrics = evaluate_dump(dump);
  write_text_file((fs::path(run_dir) / "metrics.json").string(),
                  report_to_json(metrics).dump(2) + "\n");
  return metrics;
}

std::vector<FateEntry> run_fate(const std::string& enhanced_dir, const std::string& baseline_dir,
                                double lambda, const std::string& out_dir) {
  const std::string enhanced_path = (fs::path(enhanced_dir) / "metrics.json").string();
  const std::string baseline_path = (fs::path(baseline_dir) / "metrics.json").string();
  const MetricsReport enhanced = report_from_json(read_json_file(enhanced_path, "fate"));
  const MetricsReport baseline = report_from_json(read_json_file(baseline_path, "fate"));
  const std::vector<FateEntry> entries = fate_report(enhanced, baseline, lambda);

  const std::string dir = out_dir.empty() ? enhanced_dir : out_dir;
  fs::create_directories(dir);

  nlohmann::json jentries = nlohmann::json::array();
  for (const FateEntry& e : entries)
    jentries.push_back(nlohmann::json{{"criterion", e.criterion},
                                      {"fate", e.value},
                                      {"acc_enhanced", e.acc_enhanced},
                                      {"acc_baseline", e.acc_baseline},
                                      {"fc_enhanced", e.fc_enhanced},
                                      {"fc_baseline", e.fc_baseline}});
  write_text_file((fs::path(dir) / "fate.json").string(),
                  nlohmann::json{{"lambda", lambda},
                                 {"enhanced", enhanced_path},
                                 {"baseline", baseline_path},
                                 {"entries", jentries}}
                          .dump(2) +
                      "\n");

  std::string csv = "criterion,fate,acc_enhanced,acc_baseline,fc_enhanced,fc_baseline,lambda\n";
  for (const FateEntry& e : entries)
    csv += e.criterion + "," + g17(e.value) + "," + g17(e.acc_enhanced) + "," +
           g17(e.acc_baseline) + "," + g17(e.fc_enhanced) + "," + g17(e.fc_baseline) + "," +
           g17(e.lambda) + "\n";
  write_text_file((fs::path(dir) / "fate.csv").string(), csv);

  std::vector<std::string> labels;
  std::vector<double> values;
  for (const FateEntry& e : entries) {
    labels.push_back(e.criterion);
    values.push_back(e.value * 100.0);
  }
  write_bar_chart_svg((fs::path(dir) / "fate.svg").string(),
                      "fairness-accuracy tradeoff vs baseline", "FATE (x1e-2)", labels, values);
  return entries;
}

AblateOutcome run_ablate(const ExperimentConfig& base, const std::string& sweep,
                         const std::vector<std::string>& values) {
  base.validate();
  const bool categorical = sweep == "order" || sweep == "mixup" || sweep == "supcon";
  const bool numeric = sweep == "alpha" || sweep == "beta" || sweep == "buffer";
  if (!categorical && !numeric)
    throw std::invalid_argument(
        "ablate: unknown sweep \"" + sweep +
        "\" (expected order, mixup, supcon, alpha, beta, or buffer)");
  if (categorical && !values.empty())
    throw std::invalid_argument("ablate: sweep \"" + sweep + "\" does not take --values");

  struct Variant {
    std::string name;
    std::string value;
    double x = 0.0;  // numeric sweeps only
    ExperimentConfig cfg;
  };
  std::vector<Variant> plan;
  auto variant = [&base](const std::string& name, const std::string& value) {
    Variant v;
    v.name = name;
    v.value = value;
    v.cfg = base;
    v.cfg.mode = "fairdd";
    v.cfg.run_id = name;
    return v;
  };

  if (sweep == "order") {
    std::vector<int> order = base.train.stage_order;
    std::sort(order.begin(), order.end());
    do {
      Variant v = variant("order-" + join_order(order), join_order(order));
      v.cfg.train.stage_order = order;
      plan.push_back(std::move(v));
    } while (std::next_permutation(order.begin(), order.end()));
  } else if (sweep == "mixup" || sweep == "supcon") {
    for (bool on : {true, false}) {
      Variant v = variant(sweep + (on ? "-on" : "-off"), on ? "on" : "off");
      if (sweep == "mixup")
        v.cfg.train.mixup.enabled = on;
      else
        v.cfg.train.supcon_enabled = on;
      plan.push_back(std::move(v));
    }
  } else {
    std::vector<std::string> tokens = values;
    if (tokens.empty()) {
      if (sweep == "buffer")
        tokens = {"1", "30", "100", "300"};
      else
        tokens = {"0.2", "0.4", "0.6", "0.8", "1.0"};
    }
    for (const std::string& tok : tokens) {
      Variant v = variant(sweep + "-" + tok, tok);
      try {
        std::size_t pos = 0;
        if (sweep == "buffer") {
          const int b = std::stoi(tok, &pos);
          if (pos != tok.size() || b < 0) throw std::invalid_argument(tok);
          v.cfg.train.buffer_capacity = b;
          v.x = b;
        } else {
          const double w = std::stod(tok, &pos);
          if (pos != tok.size() || !(w >= 0.0)) throw std::invalid_argument(tok);
          if (sweep == "alpha")
            v.cfg.train.weights.alpha = w;
          else
            v.cfg.train.weights.beta = w;
          v.x = w;
        }
      } catch (const std::exception&) {
        throw std::invalid_argument("ablate: bad --values entry \"" + tok + "\" for sweep " +
                                    sweep);
      }
      if (!safe_path_component(v.name))
        throw std::invalid_argument("ablate: --values entry \"" + tok +
                                    "\" is not usable as a directory name");
      plan.push_back(std::move(v));
    }
  }

  AblateOutcome outcome;
  outcome.dir =
      (fs::path(output_root(base)) / (base.run_id + "-ablate-" + sweep)).string();
  fs::create_directories(outcome.dir);

  std::string csv = "variant,setting,accuracy,macro_f1,eopp0,eopp1,eodd\n";
  std::vector<double> xs;
  std::vector<MetricsReport> reports;
  for (Variant& v : plan) {
    const RunArtifacts art = run_training(v.cfg, (fs::path(outcome.dir) / v.name).string());
    outcome.variants.push_back({v.name, v.value, art.metrics});
    reports.push_back(art.metrics);
    xs.push_back(v.x);
    csv += v.name + "," + v.value + "," + g17(art.metrics.accuracy) + "," +
           g17(art.metrics.macro_f1) + "," + g17(art.metrics.eopp0) + "," +
           g17(art.metrics.eopp1) + "," + g17(art.metrics.eodd) + "\n";
  }
  write_text_file((fs::path(outcome.dir) / "table.csv").string(), csv);

  const std::string svg = (fs::path(outcome.dir) / "sweep.svg").string();
  if (numeric) {
    std::vector<std::size_t> idx(plan.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&xs](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    PlotSeries e0{"EOpp0", {}, {}}, e1{"EOpp1", {}, {}}, eo{"EOdd", {}, {}};
    for (std::size_t i : idx) {
      e0.x.push_back(xs[i]);
      e0.y.push_back(reports[i].eopp0 * 100.0);
      e1.x.push_back(xs[i]);
      e1.y.push_back(reports[i].eopp1 * 100.0);
      eo.x.push_back(xs[i]);
      eo.y.push_back(reports[i].eodd * 100.0);
    }
    write_line_chart_svg(svg, "fairness gaps across the " + sweep + " sweep", sweep,
                         "gap (x1e-2)", {e0, e1, eo});
  } else {
    std::vector<std::string> labels;
    std::vector<double> bars;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      labels.push_back(plan[i].value);
      bars.push_back(reports[i].eodd * 100.0);
    }
    write_bar_chart_svg(svg, "equalized-odds gap across the " + sweep + " sweep",
                        "EOdd (x1e-2)", labels, bars);
  }
  return outcome;
}

std::string run_report(const std::string& run_dir) {
  const nlohmann::json cfg = read_json_file((fs::path(run_dir) / "config.json").string(), "report");
  const MetricsReport m =
      report_from_json(read_json_file((fs::path(run_dir) / "metrics.json").string(), "report"));

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "run: " << run_dir << "\n";
  os << "mode: " << cfg.value("mode", "?") << " | seed: " << cfg.value("seed", 0ULL);
  if (cfg.contains("train") && cfg.at("train").contains("stage_order")) {
    os << " | stage order: ";
    const auto order = cfg.at("train").at("stage_order").get<std::vector<int>>();
    os << join_order(order);
  }
  os << "\n";
  os << "test accuracy: " << m.accuracy * 100.0 << "% | macro F1: " << m.macro_f1 << "\n";
  os << "fairness gaps (x1e-2): EOpp0 " << m.eopp0 * 100.0 << " | EOpp1 " << m.eopp1 * 100.0
     << " | EOdd " << m.eodd * 100.0 << "\n";
  if (!m.skipped_classes.empty()) {
    os << "classes skipped in the gap sums:";
    for (int c : m.skipped_classes) os << " " << c;
    os << "\n";
  }

  const std::string stages_path = (fs::path(run_dir) / "stages.json").string();
  if (fs::exists(stages_path)) {
    const nlohmann::json st = read_json_file(stages_path, "report");
    for (const nlohmann::json& s : st.at("stages")) {
      os << "stage " << s.at("stage").get<int>();
      const int dom = s.at("domain").get<int>();
      os << (dom < 0 ? " (pooled)" : " (domain " + std::to_string(dom) + ")");
      const auto& means = s.at("epoch_means");
      os << ": epochs " << means.size();
      if (!means.empty())
        os << ", final mean loss " << means.back().at("total").get<double>();
      os << ", accuracy by domain {";
      bool first = true;
      for (auto it = s.at("domain_accuracy").begin(); it != s.at("domain_accuracy").end(); ++it) {
        if (!first) os << ", ";
        first = false;
        os << it.key() << ": " << it.value().get<double>() * 100.0 << "%";
      }
      os << "}\n";
    }
  }

  const std::string fate_path = (fs::path(run_dir) / "fate.json").string();
  if (fs::exists(fate_path)) {
    const nlohmann::json f = read_json_file(fate_path, "report");
    os << "FATE vs baseline (x1e-2, lambda " << f.at("lambda").get<double>() << "):";
    for (const nlohmann::json& e : f.at("entries"))
      os << " " << e.at("criterion").get<std::string>() << " "
         << e.at("fate").get<double>() * 100.0;
    os << "\n";
  }
  return os.str();
}

}  // namespace fairdd
