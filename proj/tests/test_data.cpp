#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "fairdd/data.hpp"
#include "fairdd/rng.hpp"

#include "support/tmpdir.hpp"

using namespace fairdd;
using testsupport::TmpDir;

namespace {

DatasetSpec small_spec() {
  DatasetSpec spec;
  spec.num_classes = 3;
  spec.feature_dim = 16;
  spec.samples_per_cell = 40;  // group-1 cells: 10
  spec.group0_fraction = 0.8;
  spec.seed = 7;
  return spec;
}

// Mean feature vector of the given (class, group) cell.
std::vector<double> cell_mean(const Dataset& ds, int label, int attr) {
  std::vector<double> mean(static_cast<std::size_t>(ds.feature_dim), 0.0);
  int count = 0;
  for (const auto& s : ds.samples) {
    if (s.label != label || s.attr != attr) continue;
    for (int f = 0; f < ds.feature_dim; ++f) mean[static_cast<std::size_t>(f)] += s.features[static_cast<std::size_t>(f)];
    ++count;
  }
  for (auto& v : mean) v /= count;
  return mean;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  const Dataset a = generate(small_spec());
  const Dataset b = generate(small_spec());
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].id == b.samples[i].id);
    CHECK(a.samples[i].attr == b.samples[i].attr);
    CHECK(a.samples[i].label == b.samples[i].label);
    CHECK(a.samples[i].features == b.samples[i].features);  // bitwise
    CHECK(a.is_test[i] == b.is_test[i]);
  }

  DatasetSpec other = small_spec();
  other.seed = 8;
  const Dataset c = generate(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    if (a.samples[i].features != c.samples[i].features) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("cell sizes follow the group fraction and the split is stratified") {
  const Dataset ds = generate(small_spec());
  CHECK(ds.num_classes == 3);
  CHECK(ds.feature_dim == 16);
  CHECK(ds.samples.size() == 3 * (40 + 10));
  CHECK(ds.domain_ids() == std::vector<int>{0, 1});

  std::map<std::pair<int, int>, int> total, test;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto key = std::make_pair(ds.samples[i].label, ds.samples[i].attr);
    total[key]++;
    if (ds.is_test[i]) test[key]++;
  }
  for (int y = 0; y < 3; ++y) {
    CHECK(total[{y, 0}] == 40);
    CHECK(total[{y, 1}] == 10);
    CHECK(test[{y, 0}] == 8);  // round(0.2 * 40)
    CHECK(test[{y, 1}] == 2);  // round(0.2 * 10)
  }

  // ids are unique.
  std::set<std::int64_t> ids;
  for (const auto& s : ds.samples) ids.insert(s.id);
  CHECK(ids.size() == ds.samples.size());

  // train/test index lists partition each domain.
  const auto train0 = ds.train_indices(0);
  const auto test0 = ds.test_indices(0);
  CHECK(train0.size() == 3 * 32);
  CHECK(test0.size() == 3 * 8);
  CHECK(ds.train_indices().size() + ds.test_indices().size() == ds.samples.size());
}

TEST_CASE("group shift moves group-1 cells by a shared direction") {
  DatasetSpec spec = small_spec();
  spec.samples_per_cell = 200;  // group-1 cells: 50
  spec.group_shift = 6.0;
  const Dataset ds = generate(spec);

  std::vector<std::vector<double>> gaps;
  for (int y = 0; y < 3; ++y) {
    const auto m0 = cell_mean(ds, y, 0);
    const auto m1 = cell_mean(ds, y, 1);
    std::vector<double> gap(m0.size());
    for (std::size_t f = 0; f < m0.size(); ++f) gap[f] = m1[f] - m0[f];
    const double g = norm(gap);
    CHECK(g > 5.0);
    CHECK(g < 7.0);
    gaps.push_back(gap);
  }
  // The same direction shifts every class.
  for (int y = 1; y < 3; ++y) {
    double dot = 0.0;
    for (std::size_t f = 0; f < gaps[0].size(); ++f) dot += gaps[0][f] * gaps[y][f];
    CHECK(dot / (norm(gaps[0]) * norm(gaps[y])) > 0.9);
  }

  // With no shift the gap is sampling noise only.
  spec.group_shift = 0.0;
  const Dataset flat = generate(spec);
  for (int y = 0; y < 3; ++y) {
    const auto m0 = cell_mean(flat, y, 0);
    const auto m1 = cell_mean(flat, y, 1);
    std::vector<double> gap(m0.size());
    for (std::size_t f = 0; f < m0.size(); ++f) gap[f] = m1[f] - m0[f];
    CHECK(norm(gap) < 1.5);
  }
}

TEST_CASE("near-zero noise makes classes perfectly separable by distance") {
  DatasetSpec spec = small_spec();
  spec.samples_per_cell = 8;  // group-1 cells: 2
  spec.noise_sigma = 0.001;
  spec.group_shift = 0.0;
  const Dataset ds = generate(spec);

  double same_max = 0.0, cross_min = 1e300;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    for (std::size_t j = i + 1; j < ds.samples.size(); ++j) {
      double d2 = 0.0;
      for (int f = 0; f < ds.feature_dim; ++f) {
        const double diff = ds.samples[i].features[static_cast<std::size_t>(f)] -
                            ds.samples[j].features[static_cast<std::size_t>(f)];
        d2 += diff * diff;
      }
      const double d = std::sqrt(d2);
      if (ds.samples[i].label == ds.samples[j].label)
        same_max = std::max(same_max, d);
      else
        cross_min = std::min(cross_min, d);
    }
  CHECK(same_max < 0.1);
  CHECK(cross_min > 2.5);
  // Pairwise class separation is the configured distance.
  CHECK(cross_min == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("dataset CSV round-trips bitwise through ingest") {
  TmpDir tmp("data-roundtrip");
  const Dataset ds = generate(small_spec());
  const std::string path = tmp.file("ds.csv");
  write_dataset_csv(ds, path);

  const Dataset back = ingest_csv(path);
  CHECK(back.num_classes == ds.num_classes);
  CHECK(back.feature_dim == ds.feature_dim);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].id == ds.samples[i].id);
    CHECK(back.samples[i].attr == ds.samples[i].attr);
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].features == ds.samples[i].features);  // bitwise
  }
  // Ingest carries no split.
  CHECK(back.test_indices().empty());
  CHECK(back.train_indices().size() == back.samples.size());
}

TEST_CASE("split assignment is seeded and respects cell floors") {
  TmpDir tmp("data-split");
  const Dataset ds = generate(small_spec());
  const std::string path = tmp.file("ds.csv");
  write_dataset_csv(ds, path);

  Dataset a = ingest_csv(path);
  assign_stratified_split(a, 0.2, 9);
  Dataset b = ingest_csv(path);
  assign_stratified_split(b, 0.2, 9);
  CHECK(a.is_test == b.is_test);

  Dataset c = ingest_csv(path);
  assign_stratified_split(c, 0.2, 10);
  CHECK(a.test_indices().size() == c.test_indices().size());
  CHECK(a.is_test != c.is_test);

  // Tiny cells still keep one sample on each side.
  DatasetSpec tiny = small_spec();
  tiny.samples_per_cell = 8;  // group-1 cells: 2
  Dataset t = generate(tiny);
  std::map<std::pair<int, int>, std::pair<int, int>> counts;  // (train, test)
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    auto& c2 = counts[{t.samples[i].label, t.samples[i].attr}];
    (t.is_test[i] ? c2.second : c2.first)++;
  }
  for (const auto& [key, c2] : counts) {
    CHECK(c2.first >= 1);
    CHECK(c2.second >= 1);
  }
}

TEST_CASE("malformed CSV inputs are rejected with their line number") {
  TmpDir tmp("data-bad");

  SUBCASE("bad header") {
    const std::string p = tmp.file("bad.csv");
    std::ofstream(p) << "id,y,a,f0\n1,0,0,0.5\n";
    CHECK_THROWS_WITH_AS(ingest_csv(p), doctest::Contains("line 1"), std::runtime_error);
  }
  SUBCASE("wrong field count") {
    const std::string p = tmp.file("bad.csv");
    std::ofstream(p) << "id,a,y,f0,f1\n1,0,0,0.5,0.5\n2,1,1,0.25\n";
    CHECK_THROWS_WITH_AS(ingest_csv(p), doctest::Contains("line 3"), std::runtime_error);
  }
  SUBCASE("non-numeric feature") {
    const std::string p = tmp.file("bad.csv");
    std::ofstream(p) << "id,a,y,f0\n1,0,0,zap\n";
    CHECK_THROWS_WITH_AS(ingest_csv(p), doctest::Contains("line 2"), std::runtime_error);
  }
  SUBCASE("attribute outside 0/1") {
    const std::string p = tmp.file("bad.csv");
    std::ofstream(p) << "id,a,y,f0\n1,2,0,0.5\n1,0,0,0.5\n";
    CHECK_THROWS(ingest_csv(p));
  }
  SUBCASE("empty file") {
    const std::string p = tmp.file("bad.csv");
    std::ofstream(p) << "";
    CHECK_THROWS_AS(ingest_csv(p), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(ingest_csv(tmp.file("absent.csv")), std::runtime_error);
  }
}

TEST_CASE("make_batches shuffles a partition of the index list") {
  Rng rng(71);
  std::vector<std::size_t> idx(23);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i * 2;  // arbitrary ids

  const auto batches = make_batches(idx, 5, rng);
  REQUIRE(batches.size() == 5);  // 5,5,5,5,3
  CHECK(batches.back().size() == 3);
  std::multiset<std::size_t> seen;
  for (const auto& b : batches) {
    CHECK(b.size() <= 5);
    for (auto v : b) seen.insert(v);
  }
  CHECK(seen == std::multiset<std::size_t>(idx.begin(), idx.end()));

  // Seeded: same rng seed gives the same batching; consuming rng changes it.
  Rng r2(71);
  CHECK(make_batches(idx, 5, r2) == batches);
  CHECK_THROWS_AS(make_batches(idx, 0, rng), std::invalid_argument);
}

TEST_CASE("gather materializes rows in index order") {
  const Dataset ds = generate(small_spec());
  const std::vector<std::size_t> pick = {4, 0, 17};
  const Batch b = gather(ds, pick);
  CHECK(b.size() == 3);
  CHECK(b.features.rows() == 3);
  CHECK(b.features.cols() == ds.feature_dim);
  for (int r = 0; r < 3; ++r) {
    const Sample& s = ds.samples[pick[static_cast<std::size_t>(r)]];
    CHECK(b.labels[static_cast<std::size_t>(r)] == s.label);
    CHECK(b.attrs[static_cast<std::size_t>(r)] == s.attr);
    CHECK(b.ids[static_cast<std::size_t>(r)] == s.id);
    for (int f = 0; f < ds.feature_dim; ++f)
      CHECK(b.features.at(r, f) == s.features[static_cast<std::size_t>(f)]);
  }

  // gather_samples mirrors gather for loose sample vectors.
  std::vector<Sample> loose = {ds.samples[2], ds.samples[9]};
  const Batch lb = gather_samples(loose, ds.feature_dim);
  CHECK(lb.size() == 2);
  CHECK(lb.ids[0] == ds.samples[2].id);
  CHECK(lb.features.at(1, 0) == ds.samples[9].features[0]);
}

TEST_CASE("split CSV emission writes only the requested split") {
  TmpDir tmp("data-splitcsv");
  const Dataset ds = generate(small_spec());
  const std::string ptest = tmp.file("test.csv");
  const std::string ptrain = tmp.file("train.csv");
  write_split_csv(ds, true, ptest);
  write_split_csv(ds, false, ptrain);

  const Dataset test_part = ingest_csv(ptest);
  const Dataset train_part = ingest_csv(ptrain);
  CHECK(test_part.samples.size() == ds.test_indices().size());
  CHECK(train_part.samples.size() == ds.train_indices().size());
}

TEST_CASE("dataset spec validation rejects malformed recipes") {
  DatasetSpec spec = small_spec();
  spec.num_classes = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.feature_dim = 2;  // below num_classes
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.group0_fraction = 1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.samples_per_cell = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.samples_per_cell = 2;
  spec.group0_fraction = 0.9;  // derived group-1 cell below 2
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.noise_sigma = -0.1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.group_shift = -1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK_NOTHROW(small_spec().validate());
}

TEST_CASE("split fraction bounds are enforced") {
  Dataset ds = generate(small_spec());
  CHECK_THROWS_AS(assign_stratified_split(ds, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(assign_stratified_split(ds, 1.0, 1), std::invalid_argument);
}
