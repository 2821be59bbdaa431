#include "mp2rec/kernels.hpp"

#include <vector>

namespace mp2rec::kernels {

namespace serial {

void affine(const Matrix& w, const double* x, const double* b, double* y) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w.row(r);
        double acc = b ? b[r] : 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

void matvec_transpose(const Matrix& w, const double* g, double* gx) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += w(r, c) * g[r];
        gx[c] = acc;
    }
}

void rank1_accumulate(Matrix& grad, const double* g, const double* x) {
    const std::size_t rows = grad.rows();
    const std::size_t cols = grad.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double* gr = grad.row(r);
        const double gi = g[r];
        for (std::size_t c = 0; c < cols; ++c) gr[c] += gi * x[c];
    }
}

void axpy(double a, const Matrix& x, Matrix& y) {
    check_same_shape(x, y, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void ema(Matrix& m, const Matrix& v, double alpha) {
    check_same_shape(m, v, "ema");
    const double one_minus = 1.0 - alpha;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = alpha * m[i] + one_minus * v[i];
}

double sum_squares(const Matrix& a) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* ar = a.row(r);
        double partial = 0.0;
        for (std::size_t c = 0; c < cols; ++c) partial += ar[c] * ar[c];
        total += partial;
    }
    return total;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace serial

namespace omp {

void affine(const Matrix& w, const double* x, const double* b, double* y) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(w.rows());
    const std::size_t cols = w.cols();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const double* wr = w.row(static_cast<std::size_t>(r));
        double acc = b ? b[r] : 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

void matvec_transpose(const Matrix& w, const double* g, double* gx) {
    const std::size_t rows = w.rows();
    const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(w.cols());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += w(r, static_cast<std::size_t>(c)) * g[r];
        gx[c] = acc;
    }
}

void rank1_accumulate(Matrix& grad, const double* g, const double* x) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(grad.rows());
    const std::size_t cols = grad.cols();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        double* gr = grad.row(static_cast<std::size_t>(r));
        const double gi = g[r];
        for (std::size_t c = 0; c < cols; ++c) gr[c] += gi * x[c];
    }
}

void axpy(double a, const Matrix& x, Matrix& y) {
    check_same_shape(x, y, "axpy");
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void ema(Matrix& m, const Matrix& v, double alpha) {
    check_same_shape(m, v, "ema");
    const double one_minus = 1.0 - alpha;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) m[i] = alpha * m[i] + one_minus * v[i];
}

double sum_squares(const Matrix& a) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(a.rows());
    const std::size_t cols = a.cols();
    std::vector<double> partials(static_cast<std::size_t>(rows), 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const double* ar = a.row(static_cast<std::size_t>(r));
        double partial = 0.0;
        for (std::size_t c = 0; c < cols; ++c) partial += ar[c] * ar[c];
        partials[static_cast<std::size_t>(r)] = partial;
    }
    // Row partials combined in row order, matching the serial reference.
    double total = 0.0;
    for (double p : partials) total += p;
    return total;
}

}  // namespace omp

namespace {
// Below this element count the fork/join cost exceeds the loop body.
constexpr std::size_t kParallelThreshold = 16384;
}

void affine(const ExecPolicy& policy, const Matrix& w, const double* x, const double* b, double* y) {
    if (policy.serial() || w.size() < kParallelThreshold) {
        serial::affine(w, x, b, y);
    } else {
        omp::affine(w, x, b, y);
    }
}

void matvec_transpose(const ExecPolicy& policy, const Matrix& w, const double* g, double* gx) {
    if (policy.serial() || w.size() < kParallelThreshold) {
        serial::matvec_transpose(w, g, gx);
    } else {
        omp::matvec_transpose(w, g, gx);
    }
}

void rank1_accumulate(const ExecPolicy& policy, Matrix& grad, const double* g, const double* x) {
    if (policy.serial() || grad.size() < kParallelThreshold) {
        serial::rank1_accumulate(grad, g, x);
    } else {
        omp::rank1_accumulate(grad, g, x);
    }
}

void axpy(const ExecPolicy& policy, double a, const Matrix& x, Matrix& y) {
    if (policy.serial() || y.size() < kParallelThreshold) {
        serial::axpy(a, x, y);
    } else {
        omp::axpy(a, x, y);
    }
}

void ema(const ExecPolicy& policy, Matrix& m, const Matrix& v, double alpha) {
    if (policy.serial() || m.size() < kParallelThreshold) {
        serial::ema(m, v, alpha);
    } else {
        omp::ema(m, v, alpha);
    }
}

double sum_squares(const ExecPolicy& policy, const Matrix& a) {
    if (policy.serial() || a.size() < kParallelThreshold) {
        return serial::sum_squares(a);
    }
    return omp::sum_squares(a);
}

}  // namespace mp2rec::kernels
