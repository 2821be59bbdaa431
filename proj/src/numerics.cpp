#include "mp2rec/numerics.hpp"

#include <cmath>
#include <string>

namespace mp2rec {

Matrix init_matrix(std::size_t rows, std::size_t cols, const InitSpec& spec, RngStream& rng) {
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("init_matrix: zero dimension requested");
    }
    Matrix out(rows, cols);
    switch (spec.scheme) {
        case InitScheme::Zeros:
            break;
        case InitScheme::Uniform: {
            if (spec.uniform_bound <= 0.0) {
                throw std::invalid_argument("init_matrix: uniform bound must be positive");
            }
            const double a = spec.uniform_bound;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform(-a, a);
            break;
        }
        case InitScheme::Xavier: {
            const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform(-a, a);
            break;
        }
    }
    return out;
}

void apply_step(Matrix& params, const Matrix& grads, OptimizerState& state) {
    check_same_shape(params, grads, "apply_step");
    state.step_count += 1;
    switch (state.kind) {
        case OptKind::Sgd: {
            const double lr = state.learning_rate;
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
            break;
        }
        case OptKind::Adam: {
            if (state.m.empty()) {
                state.m = Matrix(params.rows(), params.cols());
                state.v = Matrix(params.rows(), params.cols());
            }
            check_same_shape(params, state.m, "apply_step: adam moment m");
            check_same_shape(params, state.v, "apply_step: adam moment v");
            const double t = static_cast<double>(state.step_count);
            const double b1 = state.beta1;
            const double b2 = state.beta2;
            const double corr1 = 1.0 - std::pow(b1, t);
            const double corr2 = 1.0 - std::pow(b2, t);
            const double lr = state.learning_rate;
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double g = grads[i];
                state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
                state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
                const double mhat = state.m[i] / corr1;
                const double vhat = state.v[i] / corr2;
                params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
            }
            break;
        }
    }
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& loss_fn,
                        const Matrix& params, double eps) {
    Matrix grad(params.rows(), params.cols());
    Matrix probe = params;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + eps;
        const double up = loss_fn(probe);
        probe[i] = saved - eps;
        const double down = loss_fn(probe);
        probe[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("finite_diff_grad: non-finite loss at coordinate " + std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

}  // namespace mp2rec
