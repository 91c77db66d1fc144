#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "fairdd/replay.hpp"
#include "fairdd/rng.hpp"

using namespace fairdd;

namespace {

Sample make_sample(std::int64_t id) {
  Sample s;
  s.id = id;
  s.attr = static_cast<int>(id % 2);
  s.label = static_cast<int>(id % 3);
  s.features = {static_cast<double>(id), 1.0};
  return s;
}

}  // namespace

TEST_CASE("under capacity every offer is stored in arrival order") {
  ReplayBuffer buf(10);
  Rng rng(61);
  for (int i = 0; i < 7; ++i) CHECK(buf.offer(make_sample(i), rng));
  CHECK(buf.size() == 7);
  CHECK(buf.stream_count() == 7);
  for (int i = 0; i < 7; ++i) CHECK(buf.entries()[i].id == i);
}

TEST_CASE("over capacity the buffer stays full and counts the stream") {
  ReplayBuffer buf(5);
  Rng rng(62);
  for (int i = 0; i < 100; ++i) buf.offer(make_sample(i), rng);
  CHECK(buf.size() == 5);
  CHECK(buf.stream_count() == 100);
  // Entries are a subset of the stream, all distinct.
  std::set<std::int64_t> ids;
  for (const auto& s : buf.entries()) {
    CHECK(s.id >= 0);
    CHECK(s.id < 100);
    ids.insert(s.id);
  }
  CHECK(ids.size() == 5);
}

TEST_CASE("acceptance rate after the fill phase tracks capacity over stream") {
  // Offer i (0-based) past capacity k is accepted with probability k/(i+1);
  // across many seeds the overall post-fill acceptance count concentrates.
  const int k = 20, n = 200, trials = 200;
  double accepted = 0.0;
  for (int t = 0; t < trials; ++t) {
    ReplayBuffer buf(k);
    Rng rng(1000 + t);
    for (int i = 0; i < n; ++i) {
      const bool stored = buf.offer(make_sample(i), rng);
      if (i >= k && stored) accepted += 1.0;
    }
  }
  double expect = 0.0;
  for (int i = k; i < n; ++i) expect += static_cast<double>(k) / (i + 1);
  const double mean = accepted / trials;
  // sd of the per-trial count is < sqrt(expect); 4 sigma of the trial mean.
  const double tol = 4.0 * std::sqrt(expect) / std::sqrt(static_cast<double>(trials));
  CHECK(std::abs(mean - expect) < tol);
}

TEST_CASE("reservoir membership is uniform across the stream") {
  // After N offers into capacity k, each stream element should be present
  // with probability k/N. Monte Carlo over independent seeds; 3-sigma band
  // per element would be too noisy, so check the extreme counts jointly.
  const int k = 10, n = 50, trials = 4000;
  std::vector<int> hits(n, 0);
  for (int t = 0; t < trials; ++t) {
    ReplayBuffer buf(k);
    Rng rng(5000 + t);
    for (int i = 0; i < n; ++i) buf.offer(make_sample(i), rng);
    for (const auto& s : buf.entries()) hits[static_cast<int>(s.id)]++;
  }
  const double p = static_cast<double>(k) / n;  // 0.2
  const double sd = std::sqrt(p * (1 - p) * trials);
  int worst = 0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, static_cast<int>(std::abs(hits[i] - p * trials)));
  // 50 draws from ~N(0, sd): max |z| beyond 4.5 sigma has probability ~3e-4.
  CHECK(worst < 4.5 * sd);
}

TEST_CASE("sample_batch draws distinct entries without mutating the buffer") {
  ReplayBuffer buf(20);
  Rng rng(63);
  for (int i = 0; i < 20; ++i) buf.offer(make_sample(i), rng);
  const std::uint64_t before = buf.checksum();

  std::vector<Sample> got = buf.sample_batch(8, rng);
  CHECK(got.size() == 8);
  std::set<std::int64_t> ids;
  for (const auto& s : got) ids.insert(s.id);
  CHECK(ids.size() == 8);
  CHECK(buf.checksum() == before);

  // k larger than size: everything comes back once.
  got = buf.sample_batch(100, rng);
  CHECK(got.size() == 20);
  ids.clear();
  for (const auto& s : got) ids.insert(s.id);
  CHECK(ids.size() == 20);
}

TEST_CASE("sampling from an empty buffer returns nothing and spends no rng") {
  ReplayBuffer buf(5);
  Rng a(64), b(64);
  CHECK(buf.sample_batch(3, a).empty());
  // A paired rng that sampled nothing must stay in lockstep.
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("freeze is permanent, idempotent, and rejects further offers") {
  ReplayBuffer buf(5);
  Rng rng(65);
  for (int i = 0; i < 12; ++i) buf.offer(make_sample(i), rng);
  const std::uint64_t at_freeze = buf.checksum();
  buf.freeze();
  CHECK(buf.frozen());
  buf.freeze();  // idempotent
  CHECK(buf.frozen());
  CHECK(buf.checksum() == at_freeze);
  CHECK_THROWS_AS(buf.offer(make_sample(99), rng), std::logic_error);
  CHECK(buf.checksum() == at_freeze);
  CHECK(buf.stream_count() == 12);

  // Sampling still works after freeze.
  CHECK(buf.sample_batch(3, rng).size() == 3);
}

TEST_CASE("zero capacity counts the stream but stores nothing") {
  ReplayBuffer buf(0);
  Rng rng(66);
  for (int i = 0; i < 10; ++i) CHECK_FALSE(buf.offer(make_sample(i), rng));
  CHECK(buf.size() == 0);
  CHECK(buf.empty());
  CHECK(buf.stream_count() == 10);
  CHECK(buf.sample_batch(4, rng).empty());
}

TEST_CASE("negative capacity is rejected") {
  CHECK_THROWS_AS(ReplayBuffer(-1), std::invalid_argument);
}

TEST_CASE("checksum is order-sensitive and content-sensitive") {
  Rng rng(67);
  ReplayBuffer a(4), b(4);
  for (int i = 0; i < 4; ++i) {
    a.offer(make_sample(i), rng);
    b.offer(make_sample(i), rng);
  }
  CHECK(a.checksum() == b.checksum());
  ReplayBuffer c(4);
  for (int i = 3; i >= 0; --i) c.offer(make_sample(i), rng);
  CHECK(c.checksum() != a.checksum());
}

TEST_CASE("stream counter persists across epoch-like phases") {
  // Reservoir probabilities depend on the lifetime stream count, not on any
  // per-phase reset: feeding two phases equals one longer stream.
  ReplayBuffer buf(3);
  Rng rng(68);
  for (int i = 0; i < 30; ++i) buf.offer(make_sample(i), rng);
  const std::uint64_t mid = buf.stream_count();
  for (int i = 30; i < 60; ++i) buf.offer(make_sample(i), rng);
  CHECK(mid == 30);
  CHECK(buf.stream_count() == 60);
}
