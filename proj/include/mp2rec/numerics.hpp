#pragma once

#include <cstdint>
#include <functional>

#include "mp2rec/matrix.hpp"
#include "mp2rec/rng.hpp"

namespace mp2rec {

enum class InitScheme { Zeros, Uniform, Xavier };

struct InitSpec {
    InitScheme scheme = InitScheme::Zeros;
    double uniform_bound = 0.05;  // a in uniform(-a, a)

    static InitSpec zeros() { return {InitScheme::Zeros, 0.0}; }
    static InitSpec uniform(double a) { return {InitScheme::Uniform, a}; }
    static InitSpec xavier() { return {InitScheme::Xavier, 0.0}; }
};

// Fresh parameter matrix. Xavier bound is sqrt(6/(rows+cols)). Deterministic
// given the stream state.
Matrix init_matrix(std::size_t rows, std::size_t cols, const InitSpec& spec, RngStream& rng);

enum class OptKind { Sgd, Adam };

// Per-parameter optimizer state. Adam moments are sized lazily on the
// first step so the state can be declared before shapes are known.
struct OptimizerState {
    OptKind kind = OptKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step_count = 0;
    Matrix m;
    Matrix v;

    static OptimizerState sgd(double lr) {
        OptimizerState s;
        s.kind = OptKind::Sgd;
        s.learning_rate = lr;
        return s;
    }
    static OptimizerState adam(double lr) {
        OptimizerState s;
        s.kind = OptKind::Adam;
        s.learning_rate = lr;
        return s;
    }
};

// In-place first-order update. SGD: p -= lr*g. Adam: bias-corrected update
// with the state's (beta1, beta2, eps).
void apply_step(Matrix& params, const Matrix& grads, OptimizerState& state);

// Central-difference gradient oracle: (f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps)
// per coordinate. Test-side reference; independent of any backward pass.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& loss_fn,
                        const Matrix& params, double eps = 1e-5);

}  // namespace mp2rec
