#pragma once

#include <cstddef>

// Dense double-precision kernels backing the tensor and autodiff layers.
//
// Two backends share one arithmetic contract:
//   * serial::   - plain reference loops, kept for testing.
//   * parallel:: - OpenMP loops (compiled as serial when OpenMP is absent).
//
// Bitwise determinism contract: for identical inputs, both backends produce
// bitwise-identical outputs, independent of thread count. This holds because
//   * every output element's inner reduction runs left-to-right in one thread,
//   * full reductions are defined as fixed-size chunk partials (kChunk
//     elements) combined left-to-right, in both backends.
// The unit suite asserts serial == parallel bitwise on random inputs.

namespace fairdd::kernels {

inline constexpr int kChunk = 1024;  // reduction chunk size, part of the arithmetic contract
inline constexpr double kLogFloor = 1e-12;  // log() clamps its argument to >= this

enum class Backend { Serial, Parallel };

Backend backend();
void set_backend(Backend b);
int thread_count();

namespace serial {

// c[n x m] = a[n x k] * b[k x m]; accumulates into c when acc is true.
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m, bool acc);
// c[n x m] = a[n x k] * b[m x k]^T
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc);
// c[n x m] = a[k x n]^T * b[k x m]
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m, bool acc);

void add(const double* a, const double* b, double* out, int n);
void add_row_broadcast(const double* a, const double* row, double* out, int rows, int cols);
void col_sum_acc(const double* a, double* out, int rows, int cols);  // out[c] += sum_r a[r,c]
void mul(const double* a, const double* b, double* out, int n);
void scale(const double* a, double c, double* out, int n);
void axpy(double c, const double* x, double* y, int n);  // y += c*x

void relu(const double* a, double* out, int n);
void relu_backward(const double* x, const double* g, double* gx, int n);
void exp_v(const double* a, double* out, int n);
void log_clamped(const double* a, double* out, int n);
void log_clamped_backward(const double* x, const double* g, double* gx, int n);
void pow_scalar(const double* a, double c, double* out, int n);
void pow_scalar_backward(const double* x, double c, const double* g, double* gx, int n);

void softmax_rows(const double* a, double* out, int rows, int cols);
void softmax_backward(const double* y, const double* g, double* gx, int rows, int cols);
void l2_normalize_rows(const double* a, double* out, int rows, int cols);
void l2_normalize_backward(const double* x, const double* g, double* gx, int rows, int cols);

void transpose(const double* a, double* out, int rows, int cols);
double sum(const double* a, std::size_t n);

}  // namespace serial

namespace parallel {

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m, bool acc);
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc);
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m, bool acc);

void add(const double* a, const double* b, double* out, int n);
void add_row_broadcast(const double* a, const double* row, double* out, int rows, int cols);
void col_sum_acc(const double* a, double* out, int rows, int cols);
void mul(const double* a, const double* b, double* out, int n);
void scale(const double* a, double c, double* out, int n);
void axpy(double c, const double* x, double* y, int n);

void relu(const double* a, double* out, int n);
void relu_backward(const double* x, const double* g, double* gx, int n);
void exp_v(const double* a, double* out, int n);
void log_clamped(const double* a, double* out, int n);
void log_clamped_backward(const double* x, const double* g, double* gx, int n);
void pow_scalar(const double* a, double c, double* out, int n);
void pow_scalar_backward(const double* x, double c, const double* g, double* gx, int n);

void softmax_rows(const double* a, double* out, int rows, int cols);
void softmax_backward(const double* y, const double* g, double* gx, int rows, int cols);
void l2_normalize_rows(const double* a, double* out, int rows, int cols);
void l2_normalize_backward(const double* x, const double* g, double* gx, int rows, int cols);

void transpose(const double* a, double* out, int rows, int cols);
double sum(const double* a, std::size_t n);

}  // namespace parallel

// Dispatch through the active backend.
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m, bool acc = false);
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m, bool acc = false);
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m, bool acc = false);
void add(const double* a, const double* b, double* out, int n);
void add_row_broadcast(const double* a, const double* row, double* out, int rows, int cols);
void col_sum_acc(const double* a, double* out, int rows, int cols);
void mul(const double* a, const double* b, double* out, int n);
void scale(const double* a, double c, double* out, int n);
void axpy(double c, const double* x, double* y, int n);
void relu(const double* a, double* out, int n);
void relu_backward(const double* x, const double* g, double* gx, int n);
void exp_v(const double* a, double* out, int n);
void log_clamped(const double* a, double* out, int n);
void log_clamped_backward(const double* x, const double* g, double* gx, int n);
void pow_scalar(const double* a, double c, double* out, int n);
void pow_scalar_backward(const double* x, double c, const double* g, double* gx, int n);
void softmax_rows(const double* a, double* out, int rows, int cols);
void softmax_backward(const double* y, const double* g, double* gx, int rows, int cols);
void l2_normalize_rows(const double* a, double* out, int rows, int cols);
void l2_normalize_backward(const double* x, const double* g, double* gx, int rows, int cols);
void transpose(const double* a, double* out, int rows, int cols);
double sum(const double* a, std::size_t n);

}  // namespace fairdd::kernels
