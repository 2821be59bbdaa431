#pragma once

#include <cstddef>

#include "mp2rec/matrix.hpp"
#include "mp2rec/parallel.hpp"

namespace mp2rec::kernels {

// Dense kernels behind the towers and optimizers. Each kernel has a plain
// serial reference and an OpenMP version; the per-element arithmetic is
// identical in both, so results agree bitwise for any thread count. The
// dispatch wrappers also fall back to serial below a size threshold where
// fork/join overhead dominates.

namespace serial {

// y = W x + b (b may be null)
void affine(const Matrix& w, const double* x, const double* b, double* y);

// gx = W^T g
void matvec_transpose(const Matrix& w, const double* g, double* gx);

// G += g x^T
void rank1_accumulate(Matrix& grad, const double* g, const double* x);

// y += a * x
void axpy(double a, const Matrix& x, Matrix& y);

// m = alpha * m + (1 - alpha) * v
void ema(Matrix& m, const Matrix& v, double alpha);

// Sum of squares, accumulated per row then combined in row order.
double sum_squares(const Matrix& a);

double dot(const double* a, const double* b, std::size_t n);

}  // namespace serial

namespace omp {

void affine(const Matrix& w, const double* x, const double* b, double* y);
void matvec_transpose(const Matrix& w, const double* g, double* gx);
void rank1_accumulate(Matrix& grad, const double* g, const double* x);
void axpy(double a, const Matrix& x, Matrix& y);
void ema(Matrix& m, const Matrix& v, double alpha);
double sum_squares(const Matrix& a);

}  // namespace omp

void affine(const ExecPolicy& policy, const Matrix& w, const double* x, const double* b, double* y);
void matvec_transpose(const ExecPolicy& policy, const Matrix& w, const double* g, double* gx);
void rank1_accumulate(const ExecPolicy& policy, Matrix& grad, const double* g, const double* x);
void axpy(const ExecPolicy& policy, double a, const Matrix& x, Matrix& y);
void ema(const ExecPolicy& policy, Matrix& m, const Matrix& v, double alpha);
double sum_squares(const ExecPolicy& policy, const Matrix& a);

inline double dot(const double* a, const double* b, std::size_t n) { return serial::dot(a, b, n); }

}  // namespace mp2rec::kernels
