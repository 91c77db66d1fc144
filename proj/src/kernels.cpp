#include "fairdd/kernels.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairdd::kernels {

namespace {
Backend g_backend = Backend::Parallel;

// Work thresholds below which the parallel backend stays on one thread.
// They gate scheduling only; arithmetic is identical either way.
constexpr long long kMatmulGrain = 1 << 15;
constexpr int kElemGrain = 1 << 14;
constexpr int kRowGrain = 32;
}  // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------- serial ---

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[i * k + l] * b[l * m + j];
      c[i * m + j] = (acc ? c[i * m + j] : 0.0) + s;
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[i * k + l] * b[j * k + l];
      c[i * m + j] = (acc ? c[i * m + j] : 0.0) + s;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[l * n + i] * b[l * m + j];
      c[i * m + j] = (acc ? c[i * m + j] : 0.0) + s;
    }
  }
}

void add(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void add_row_broadcast(const double* a, const double* row, double* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[r * cols + c] = a[r * cols + c] + row[c];
}

void col_sum_acc(const double* a, double* out, int rows, int cols) {
  for (int c = 0; c < cols; ++c) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r) s += a[r * cols + c];
    out[c] += s;
  }
}

void mul(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* a, double c, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] * c;
}

void axpy(double c, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += c * x[i];
}

void relu(const double* a, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(const double* x, const double* g, double* gx, int n) {
  for (int i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += g[i];
}

void exp_v(const double* a, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = std::exp(a[i]);
}

void log_clamped(const double* a, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = std::log(a[i] > kLogFloor ? a[i] : kLogFloor);
}

void log_clamped_backward(const double* x, const double* g, double* gx, int n) {
  // Derivative of log(max(x, floor)): zero in the clamped region.
  for (int i = 0; i < n; ++i)
    if (x[i] > kLogFloor) gx[i] += g[i] / x[i];
}

void pow_scalar(const double* a, double c, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = std::pow(a[i], c);
}

void pow_scalar_backward(const double* x, double c, const double* g, double* gx, int n) {
  // x^c is used on positive bases (probabilities); a zero base contributes no gradient.
  for (int i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += g[i] * c * std::pow(x[i], c - 1.0);
}

void softmax_rows(const double* a, double* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* x = a + static_cast<std::size_t>(r) * cols;
    double* y = out + static_cast<std::size_t>(r) * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c)
      if (x[c] > mx) mx = x[c];
    double s = 0.0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      s += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= s;
  }
}

void softmax_backward(const double* y, const double* g, double* gx, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* yr = y + static_cast<std::size_t>(r) * cols;
    const double* gr = g + static_cast<std::size_t>(r) * cols;
    double* o = gx + static_cast<std::size_t>(r) * cols;
    double d = 0.0;
    for (int c = 0; c < cols; ++c) d += gr[c] * yr[c];
    for (int c = 0; c < cols; ++c) o[c] += yr[c] * (gr[c] - d);
  }
}

void l2_normalize_rows(const double* a, double* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* x = a + static_cast<std::size_t>(r) * cols;
    double* y = out + static_cast<std::size_t>(r) * cols;
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += x[c] * x[c];
    double norm = std::sqrt(s);
    if (norm < kLogFloor) norm = kLogFloor;
    for (int c = 0; c < cols; ++c) y[c] = x[c] / norm;
  }
}

void l2_normalize_backward(const double* x, const double* g, double* gx, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* xr = x + static_cast<std::size_t>(r) * cols;
    const double* gr = g + static_cast<std::size_t>(r) * cols;
    double* o = gx + static_cast<std::size_t>(r) * cols;
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += xr[c] * xr[c];
    double norm = std::sqrt(s);
    if (norm < kLogFloor) norm = kLogFloor;
    double d = 0.0;
    for (int c = 0; c < cols; ++c) d += gr[c] * xr[c] / norm;
    for (int c = 0; c < cols; ++c) o[c] += (gr[c] - (xr[c] / norm) * d) / norm;
  }
}

void transpose(const double* a, double* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(c) * rows + r] = a[static_cast<std::size_t>(r) * cols + c];
}

double sum(const double* a, std::size_t n) {
  // Fixed-chunk partials combined left-to-right; shared with the parallel backend.
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  double total = 0.0;
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    const std::size_t lo = ch * kChunk;
    const std::size_t hi = lo + kChunk < n ? lo + kChunk : n;
    double partial = 0.0;
    for (std::size_t i = lo; i < hi; ++i) partial += a[i];
    total += partial;
  }
  return total;
}

}  // namespace serial

// -------------------------------------------------------------- parallel ---

namespace parallel {

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  const long long work = 1LL * n * k * m;
#pragma omp parallel for if (work >= kMatmulGrain) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[i * k + l] * b[l * m + j];
      c[i * m + j] = (acc ? c[i * m + j] : 0.0) + s;
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  const long long work = 1LL * n * k * m;
#pragma omp parallel for if (work >= kMatmulGrain) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[i * k + l] * b[j * k + l];
      c[i * m + j] = (acc ? c[i * m + j] : 0.0) + s;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  const long long work = 1LL * n * k * m;
#pragma omp parallel for if (work >= kMatmulGrain) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[l * n + i] * b[l * m + j];
      c[i * m + j] = (acc ? c[i * m + j] : 0.0) + s;
    }
  }
}

void add(const double* a, const double* b, double* out, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void add_row_broadcast(const double* a, const double* row, double* out, int rows, int cols) {
#pragma omp parallel for if (rows >= kRowGrain) schedule(static)
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[r * cols + c] = a[r * cols + c] + row[c];
}

void col_sum_acc(const double* a, double* out, int rows, int cols) {
#pragma omp parallel for if (cols >= kRowGrain) schedule(static)
  for (int c = 0; c < cols; ++c) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r) s += a[r * cols + c];
    out[c] += s;
  }
}

void mul(const double* a, const double* b, double* out, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* a, double c, double* out, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] * c;
}

void axpy(double c, const double* x, double* y, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) y[i] += c * x[i];
}

void relu(const double* a, double* out, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(const double* x, const double* g, double* gx, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += g[i];
}

void exp_v(const double* a, double* out, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = std::exp(a[i]);
}

void log_clamped(const double* a, double* out, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = std::log(a[i] > kLogFloor ? a[i] : kLogFloor);
}

void log_clamped_backward(const double* x, const double* g, double* gx, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i)
    if (x[i] > kLogFloor) gx[i] += g[i] / x[i];
}

void pow_scalar(const double* a, double c, double* out, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = std::pow(a[i], c);
}

void pow_scalar_backward(const double* x, double c, const double* g, double* gx, int n) {
#pragma omp parallel for if (n >= kElemGrain) schedule(static)
  for (int i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += g[i] * c * std::pow(x[i], c - 1.0);
}

void softmax_rows(const double* a, double* out, int rows, int cols) {
#pragma omp parallel for if (rows >= kRowGrain) schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* x = a + static_cast<std::size_t>(r) * cols;
    double* y = out + static_cast<std::size_t>(r) * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c)
      if (x[c] > mx) mx = x[c];
    double s = 0.0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      s += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= s;
  }
}

void softmax_backward(const double* y, const double* g, double* gx, int rows, int cols) {
#pragma omp parallel for if (rows >= kRowGrain) schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* yr = y + static_cast<std::size_t>(r) * cols;
    const double* gr = g + static_cast<std::size_t>(r) * cols;
    double* o = gx + static_cast<std::size_t>(r) * cols;
    double d = 0.0;
    for (int c = 0; c < cols; ++c) d += gr[c] * yr[c];
    for (int c = 0; c < cols; ++c) o[c] += yr[c] * (gr[c] - d);
  }
}

void l2_normalize_rows(const double* a, double* out, int rows, int cols) {
#pragma omp parallel for if (rows >= kRowGrain) schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* x = a + static_cast<std::size_t>(r) * cols;
    double* y = out + static_cast<std::size_t>(r) * cols;
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += x[c] * x[c];
    double norm = std::sqrt(s);
    if (norm < kLogFloor) norm = kLogFloor;
    for (int c = 0; c < cols; ++c) y[c] = x[c] / norm;
  }
}

void l2_normalize_backward(const double* x, const double* g, double* gx, int rows, int cols) {
#pragma omp parallel for if (rows >= kRowGrain) schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* xr = x + static_cast<std::size_t>(r) * cols;
    const double* gr = g + static_cast<std::size_t>(r) * cols;
    double* o = gx + static_cast<std::size_t>(r) * cols;
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += xr[c] * xr[c];
    double norm = std::sqrt(s);
    if (norm < kLogFloor) norm = kLogFloor;
    double d = 0.0;
    for (int c = 0; c < cols; ++c) d += gr[c] * xr[c] / norm;
    for (int c = 0; c < cols; ++c) o[c] += (gr[c] - (xr[c] / norm) * d) / norm;
  }
}

void transpose(const double* a, double* out, int rows, int cols) {
#pragma omp parallel for if (rows >= kRowGrain) schedule(static)
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(c) * rows + r] = a[static_cast<std::size_t>(r) * cols + c];
}

double sum(const double* a, std::size_t n) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  if (chunks <= 1) return serial::sum(a, n);
  std::vector<double> partials(chunks);
  const long long nch = static_cast<long long>(chunks);
#pragma omp parallel for if (chunks >= 4) schedule(static)
  for (long long ch = 0; ch < nch; ++ch) {
    const std::size_t lo = static_cast<std::size_t>(ch) * kChunk;
    const std::size_t hi = lo + kChunk < n ? lo + kChunk : n;
    double partial = 0.0;
    for (std::size_t i = lo; i < hi; ++i) partial += a[i];
    partials[static_cast<std::size_t>(ch)] = partial;
  }
  double total = 0.0;
  for (std::size_t ch = 0; ch < chunks; ++ch) total += partials[ch];
  return total;
}

}  // namespace parallel

// -------------------------------------------------------------- dispatch ---

#define FAIRDD_DISPATCH(fn, ...)                          \
  do {                                                    \
    if (g_backend == Backend::Serial)                     \
      serial::fn(__VA_ARGS__);                            \
    else                                                  \
      parallel::fn(__VA_ARGS__);                          \
  } while (0)

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  FAIRDD_DISPATCH(matmul_nn, a, b, c, n, k, m, acc);
}
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  FAIRDD_DISPATCH(matmul_nt, a, b, c, n, k, m, acc);
}
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m, bool acc) {
  FAIRDD_DISPATCH(matmul_tn, a, b, c, n, k, m, acc);
}
void add(const double* a, const double* b, double* out, int n) { FAIRDD_DISPATCH(add, a, b, out, n); }
void add_row_broadcast(const double* a, const double* row, double* out, int rows, int cols) {
  FAIRDD_DISPATCH(add_row_broadcast, a, row, out, rows, cols);
}
void col_sum_acc(const double* a, double* out, int rows, int cols) {
  FAIRDD_DISPATCH(col_sum_acc, a, out, rows, cols);
}
void mul(const double* a, const double* b, double* out, int n) { FAIRDD_DISPATCH(mul, a, b, out, n); }
void scale(const double* a, double c, double* out, int n) { FAIRDD_DISPATCH(scale, a, c, out, n); }
void axpy(double c, const double* x, double* y, int n) { FAIRDD_DISPATCH(axpy, c, x, y, n); }
void relu(const double* a, double* out, int n) { FAIRDD_DISPATCH(relu, a, out, n); }
void relu_backward(const double* x, const double* g, double* gx, int n) {
  FAIRDD_DISPATCH(relu_backward, x, g, gx, n);
}
void exp_v(const double* a, double* out, int n) { FAIRDD_DISPATCH(exp_v, a, out, n); }
void log_clamped(const double* a, double* out, int n) { FAIRDD_DISPATCH(log_clamped, a, out, n); }
void log_clamped_backward(const double* x, const double* g, double* gx, int n) {
  FAIRDD_DISPATCH(log_clamped_backward, x, g, gx, n);
}
void pow_scalar(const double* a, double c, double* out, int n) { FAIRDD_DISPATCH(pow_scalar, a, c, out, n); }
void pow_scalar_backward(const double* x, double c, const double* g, double* gx, int n) {
  FAIRDD_DISPATCH(pow_scalar_backward, x, c, g, gx, n);
}
void softmax_rows(const double* a, double* out, int rows, int cols) {
  FAIRDD_DISPATCH(softmax_rows, a, out, rows, cols);
}
void softmax_backward(const double* y, const double* g, double* gx, int rows, int cols) {
  FAIRDD_DISPATCH(softmax_backward, y, g, gx, rows, cols);
}
void l2_normalize_rows(const double* a, double* out, int rows, int cols) {
  FAIRDD_DISPATCH(l2_normalize_rows, a, out, rows, cols);
}
void l2_normalize_backward(const double* x, const double* g, double* gx, int rows, int cols) {
  FAIRDD_DISPATCH(l2_normalize_backward, x, g, gx, rows, cols);
}
void transpose(const double* a, double* out, int rows, int cols) {
  FAIRDD_DISPATCH(transpose, a, out, rows, cols);
}

double sum(const double* a, std::size_t n) {
  return g_backend == Backend::Serial ? serial::sum(a, n) : parallel::sum(a, n);
}

#undef FAIRDD_DISPATCH

}  // namespace fairdd::kernels
