#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairdd/kernels.hpp"
#include "fairdd/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double run_timed(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_vec(std::size_t n, fairdd::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool bitwise_equal = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel backends: timing and bitwise-equality check"};
  int size = 192;    // square matmul dimension
  int elems_log2 = 20;
  int rows = 4096, cols = 64;
  int reps = 5;
  std::uint64_t seed = 42;
  app.add_option("--size", size, "matmul dimension (n = k = m)");
  app.add_option("--elems-log2", elems_log2, "log2 of elementwise/reduction length");
  app.add_option("--rows", rows, "row count for row-wise kernels");
  app.add_option("--cols", cols, "column count for row-wise kernels");
  app.add_option("--reps", reps, "timed repetitions per kernel");
  app.add_option("--seed", seed, "input rng seed");
  CLI11_PARSE(app, argc, argv);

  namespace k = fairdd::kernels;
  fairdd::Rng rng(seed);
  const std::size_t elems = std::size_t{1} << elems_log2;

  const std::vector<double> a = random_vec(static_cast<std::size_t>(size) * size, rng);
  const std::vector<double> b = random_vec(static_cast<std::size_t>(size) * size, rng);
  const std::vector<double> big = random_vec(elems, rng);
  const std::vector<double> mat = random_vec(static_cast<std::size_t>(rows) * cols, rng);

  std::vector<double> out_s, out_p;
  std::vector<Row> rows_out;
  double sum_s = 0.0, sum_p = 0.0;

  auto compare = [&rows_out](const std::string& name, double ts, double tp,
                             const std::vector<double>& s, const std::vector<double>& p) {
    rows_out.push_back({name, ts, tp,
                        std::memcmp(s.data(), p.data(), s.size() * sizeof(double)) == 0});
  };

  out_s.assign(static_cast<std::size_t>(size) * size, 0.0);
  out_p = out_s;
  {
    const double ts = run_timed(
        [&] { k::serial::matmul_nn(a.data(), b.data(), out_s.data(), size, size, size, false); },
        reps);
    const double tp = run_timed(
        [&] { k::parallel::matmul_nn(a.data(), b.data(), out_p.data(), size, size, size, false); },
        reps);
    compare("matmul_nn " + std::to_string(size) + "^3", ts, tp, out_s, out_p);
  }
  {
    const double ts = run_timed(
        [&] { k::serial::matmul_nt(a.data(), b.data(), out_s.data(), size, size, size, false); },
        reps);
    const double tp = run_timed(
        [&] { k::parallel::matmul_nt(a.data(), b.data(), out_p.data(), size, size, size, false); },
        reps);
    compare("matmul_nt " + std::to_string(size) + "^3", ts, tp, out_s, out_p);
  }
  {
    const double ts = run_timed(
        [&] { k::serial::matmul_tn(a.data(), b.data(), out_s.data(), size, size, size, false); },
        reps);
    const double tp = run_timed(
        [&] { k::parallel::matmul_tn(a.data(), b.data(), out_p.data(), size, size, size, false); },
        reps);
    compare("matmul_tn " + std::to_string(size) + "^3", ts, tp, out_s, out_p);
  }

  out_s.assign(elems, 0.0);
  out_p = out_s;
  {
    const double ts =
        run_timed([&] { k::serial::exp_v(big.data(), out_s.data(), static_cast<int>(elems)); }, reps);
    const double tp = run_timed(
        [&] { k::parallel::exp_v(big.data(), out_p.data(), static_cast<int>(elems)); }, reps);
    compare("exp 2^" + std::to_string(elems_log2), ts, tp, out_s, out_p);
  }
  {
    const double ts = run_timed(
        [&] { k::serial::log_clamped(big.data(), out_s.data(), static_cast<int>(elems)); }, reps);
    const double tp = run_timed(
        [&] { k::parallel::log_clamped(big.data(), out_p.data(), static_cast<int>(elems)); },
        reps);
    compare("log 2^" + std::to_string(elems_log2), ts, tp, out_s, out_p);
  }

  out_s.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  out_p = out_s;
  {
    const double ts = run_timed(
        [&] { k::serial::softmax_rows(mat.data(), out_s.data(), rows, cols); }, reps);
    const double tp = run_timed(
        [&] { k::parallel::softmax_rows(mat.data(), out_p.data(), rows, cols); }, reps);
    compare("softmax " + std::to_string(rows) + "x" + std::to_string(cols), ts, tp, out_s, out_p);
  }
  {
    const double ts = run_timed(
        [&] { k::serial::l2_normalize_rows(mat.data(), out_s.data(), rows, cols); }, reps);
    const double tp = run_timed(
        [&] { k::parallel::l2_normalize_rows(mat.data(), out_p.data(), rows, cols); }, reps);
    compare("l2norm " + std::to_string(rows) + "x" + std::to_string(cols), ts, tp, out_s, out_p);
  }
  {
    const double ts = run_timed([&] { sum_s = k::serial::sum(big.data(), elems); }, reps);
    const double tp = run_timed([&] { sum_p = k::parallel::sum(big.data(), elems); }, reps);
    rows_out.push_back({"sum 2^" + std::to_string(elems_log2), ts, tp,
                        std::memcmp(&sum_s, &sum_p, sizeof(double)) == 0});
  }

  std::printf("threads: %d\n", k::thread_count());
  std::printf("%-18s %12s %12s %9s  %s\n", "kernel", "serial ms", "parallel ms", "speedup",
              "bitwise");
  bool all_equal = true;
  for (const Row& r : rows_out) {
    std::printf("%-18s %12.3f %12.3f %8.2fx  %s\n", r.name.c_str(), r.serial_ms, r.parallel_ms,
                r.parallel_ms > 0.0 ? r.serial_ms / r.parallel_ms : 0.0,
                r.bitwise_equal ? "equal" : "DIFFERS");
    all_equal = all_equal && r.bitwise_equal;
  }
  if (!all_equal) {
    std::printf("FAIL: backends disagree bitwise\n");
    return 1;
  }
  return 0;
}
