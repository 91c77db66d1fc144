#include "fairdd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fairdd {

namespace {

int split_test_count(int cell_size, double test_fraction) {
  int t = static_cast<int>(std::lround(test_fraction * cell_size));
  if (t < 1) t = 1;
  if (t > cell_size - 1) t = cell_size - 1;
  return t;
}

std::string csv_header(int feature_dim) {
  std::string h = "id,a,y";
  for (int f = 0; f < feature_dim; ++f) h += ",f" + std::to_string(f);
  return h;
}

}  // namespace

void DatasetSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("dataset: num_classes must be >= 2");
  if (feature_dim < num_classes)
    throw std::invalid_argument("dataset: feature_dim must be >= num_classes for the simplex arrangement");
  if (!(group0_fraction > 0.0 && group0_fraction < 1.0))
    throw std::invalid_argument("dataset: group0_fraction must lie in (0, 1)");
  if (samples_per_cell < 2) throw std::invalid_argument("dataset: samples_per_cell must be >= 2");
  if (group1_samples_per_cell() < 2)
    throw std::invalid_argument("dataset: derived group-1 cell size below 2; raise samples_per_cell or group0_fraction");
  if (noise_sigma < 0.0) throw std::invalid_argument("dataset: noise_sigma must be >= 0");
  if (class_separation < 0.0) throw std::invalid_argument("dataset: class_separation must be >= 0");
  if (group_shift < 0.0) throw std::invalid_argument("dataset: group_shift must be >= 0");
}

int DatasetSpec::group1_samples_per_cell() const {
  return static_cast<int>(
      std::lround(samples_per_cell * (1.0 - group0_fraction) / group0_fraction));
}

std::vector<int> Dataset::domain_ids() const {
  std::set<int> attrs;
  for (const Sample& s : samples) attrs.insert(s.attr);
  return {attrs.begin(), attrs.end()};
}

std::vector<std::size_t> Dataset::train_indices(int attr) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!is_test[i] && (attr < 0 || samples[i].attr == attr)) out.push_back(i);
  return out;
}

std::vector<std::size_t> Dataset::test_indices(int attr) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (is_test[i] && (attr < 0 || samples[i].attr == attr)) out.push_back(i);
  return out;
}

void Dataset::validate() const {
  if (num_classes < 2) throw std::invalid_argument("dataset: num_classes must be >= 2");
  if (feature_dim <= 0) throw std::invalid_argument("dataset: feature_dim must be positive");
  if (samples.size() != is_test.size())
    throw std::invalid_argument("dataset: split mask size mismatch");
  for (const Sample& s : samples) {
    if (s.attr != 0 && s.attr != 1)
      throw std::invalid_argument("dataset: attribute must be 0 or 1, got " + std::to_string(s.attr));
    if (s.label < 0 || s.label >= num_classes)
      throw std::invalid_argument("dataset: label " + std::to_string(s.label) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    if (static_cast<int>(s.features.size()) != feature_dim)
      throw std::invalid_argument("dataset: sample feature width mismatch");
  }
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Fixed random unit direction for the group-1 shift, drawn first.
  std::vector<double> shift(spec.feature_dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : shift) {
      v = rng.gaussian();
      norm += v * v;
    }
    norm = std::sqrt(norm);
  } while (norm < 1e-12);
  for (double& v : shift) v = v / norm * spec.group_shift;

  // Simplex arrangement: mean_c = (s / sqrt(2)) * e_c gives pairwise
  // distance exactly s between any two class means.
  const double mean_scale = spec.class_separation / std::sqrt(2.0);

  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.feature_dim = spec.feature_dim;
  std::int64_t next_id = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int a = 0; a < 2; ++a) {
      const int cell = a == 0 ? spec.samples_per_cell : spec.group1_samples_per_cell();
      for (int i = 0; i < cell; ++i) {
        Sample s;
        s.id = next_id++;
        s.attr = a;
        s.label = c;
        s.features.resize(spec.feature_dim);
        for (int f = 0; f < spec.feature_dim; ++f) {
          double v = rng.gaussian(0.0, spec.noise_sigma);
          if (f == c) v += mean_scale;
          if (a == 1) v += shift[f];
          s.features[f] = v;
        }
        ds.samples.push_back(std::move(s));
      }
    }
  }
  ds.is_test.assign(ds.samples.size(), 0);
  assign_stratified_split(ds, 0.2, spec.seed + 1);
  return ds;
}

void assign_stratified_split(Dataset& ds, double test_fraction, std::uint64_t seed) {
  ds.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("dataset: test_fraction must lie in (0, 1)");
  Rng rng(seed);
  std::fill(ds.is_test.begin(), ds.is_test.end(), 0);

  std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    cells[{ds.samples[i].label, ds.samples[i].attr}].push_back(i);

  for (auto& [key, idx] : cells) {
    if (idx.size() < 2)
      throw std::invalid_argument("dataset: cell (class " + std::to_string(key.first) +
                                  ", group " + std::to_string(key.second) +
                                  ") has fewer than 2 samples; cannot keep both splits nonempty");
    rng.shuffle(idx);
    const int t = split_test_count(static_cast<int>(idx.size()), test_fraction);
    for (int i = 0; i < t; ++i) ds.is_test[idx[static_cast<std::size_t>(i)]] = 1;
  }
}

std::vector<int> partition_by_attribute(const Dataset& ds) {
  std::vector<int> domains = ds.domain_ids();
  if (domains.empty()) throw std::invalid_argument("dataset: no samples to partition");
  return domains;
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& indices,
                                                   int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("dataset: batch_size must be >= 1");
  std::vector<std::size_t> order = indices;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t lo = 0; lo < order.size(); lo += batch_size) {
    const std::size_t hi = std::min(order.size(), lo + batch_size);
    out.emplace_back(order.begin() + lo, order.begin() + hi);
  }
  return out;
}

Batch gather(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Batch b;
  const int n = static_cast<int>(indices.size());
  if (n == 0) return b;
  b.features = Tensor({n, ds.feature_dim});
  b.labels.reserve(indices.size());
  for (int i = 0; i < n; ++i) {
    const Sample& s = ds.samples[indices[static_cast<std::size_t>(i)]];
    for (int f = 0; f < ds.feature_dim; ++f) b.features.at(i, f) = s.features[f];
    b.labels.push_back(s.label);
    b.attrs.push_back(s.attr);
    b.ids.push_back(s.id);
  }
  return b;
}

Batch gather_samples(const std::vector<Sample>& samples, int feature_dim) {
  Batch b;
  const int n = static_cast<int>(samples.size());
  if (n == 0) return b;
  b.features = Tensor({n, feature_dim});
  for (int i = 0; i < n; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(i)];
    for (int f = 0; f < feature_dim; ++f) b.features.at(i, f) = s.features[f];
    b.labels.push_back(s.label);
    b.attrs.push_back(s.attr);
    b.ids.push_back(s.id);
  }
  return b;
}

Dataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Header fixes the feature width.
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) cols.push_back(field);
  }
  if (cols.size() < 4 || cols[0] != "id" || cols[1] != "a" || cols[2] != "y")
    throw std::runtime_error("dataset: " + path + " line 1: header must start with id,a,y,f0,...");
  const int d = static_cast<int>(cols.size()) - 3;
  for (int f = 0; f < d; ++f)
    if (cols[static_cast<std::size_t>(f) + 3] != "f" + std::to_string(f))
      throw std::runtime_error("dataset: " + path + " line 1: expected column f" +
                               std::to_string(f) + ", got " + cols[static_cast<std::size_t>(f) + 3]);

  Dataset ds;
  ds.feature_dim = d;
  int max_label = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (static_cast<int>(fields.size()) != d + 3)
      throw std::runtime_error("dataset: " + path + " line " + std::to_string(line_no) +
                               ": expected " + std::to_string(d + 3) + " fields, got " +
                               std::to_string(fields.size()));
    Sample s;
    try {
      std::size_t pos = 0;
      s.id = std::stoll(fields[0], &pos);
      if (pos != fields[0].size()) throw std::invalid_argument("id");
      s.attr = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("a");
      s.label = std::stoi(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("y");
      s.features.resize(static_cast<std::size_t>(d));
      for (int f = 0; f < d; ++f) {
        s.features[static_cast<std::size_t>(f)] = std::stod(fields[static_cast<std::size_t>(f) + 3], &pos);
        if (pos != fields[static_cast<std::size_t>(f) + 3].size()) throw std::invalid_argument("f" + std::to_string(f));
      }
    } catch (const std::exception&) {
      throw std::runtime_error("dataset: " + path + " line " + std::to_string(line_no) +
                               ": malformed numeric field");
    }
    if (s.attr != 0 && s.attr != 1)
      throw std::runtime_error("dataset: " + path + " line " + std::to_string(line_no) +
                               ": attribute must be 0 or 1");
    if (s.label < 0)
      throw std::runtime_error("dataset: " + path + " line " + std::to_string(line_no) +
                               ": negative label");
    max_label = std::max(max_label, s.label);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error("dataset: " + path + " has no data rows");
  ds.num_classes = std::max(2, max_label + 1);
  ds.is_test.assign(ds.samples.size(), 0);
  ds.validate();
  return ds;
}

void write_samples_csv(const std::vector<Sample>& samples, int feature_dim,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  out << csv_header(feature_dim) << "\n";
  char buf[32];
  for (const Sample& s : samples) {
    out << s.id << "," << s.attr << "," << s.label;
    for (int f = 0; f < feature_dim; ++f) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.features[static_cast<std::size_t>(f)]);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("dataset: write failed for " + path);
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  write_samples_csv(ds.samples, ds.feature_dim, path);
}

void write_split_csv(const Dataset& ds, bool test_split, const std::string& path) {
  std::vector<Sample> rows;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    if (static_cast<bool>(ds.is_test[i]) == test_split) rows.push_back(ds.samples[i]);
  write_samples_csv(rows, ds.feature_dim, path);
}

}  // namespace fairdd
