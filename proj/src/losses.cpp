#include "mp2rec/losses.hpp"

#include <cmath>

#include "mp2rec/kernels.hpp"

namespace mp2rec {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double pointwise_ce(double logit, double label) {
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::fabs(logit)));
}

double pointwise_ce_grad(double logit, double label) {
    return sigmoid(logit) - label;
}

double pairwise_logistic(double logit_preferred, double logit_other) {
    const double d = logit_preferred - logit_other;
    return std::max(-d, 0.0) + std::log1p(std::exp(-std::fabs(d)));
}

double pairwise_logistic_grad(double margin) {
    return sigmoid(margin) - 1.0;
}

double weighted_pointwise_ce(double logit_j, double label_j,
                             double logit_t, double label_t, double w) {
    if (!(w > 0.0 && w <= 1.0)) {
        throw std::invalid_argument("weighted_pointwise_ce: weight must be in (0, 1]");
    }
    return w * pointwise_ce(logit_j, label_j) + w * pointwise_ce(logit_t, label_t);
}

double l2_penalty(std::span<const Matrix* const> params, double lambda) {
    if (lambda < 0.0) {
        throw std::invalid_argument("l2_penalty: lambda must be nonnegative");
    }
    if (lambda == 0.0) return 0.0;
    double acc = 0.0;
    for (const Matrix* m : params) acc += kernels::serial::sum_squares(*m);
    return lambda * acc;
}

LossBreakdown total_loss(double pointwise, double pairwise, double beta, double regularization) {
    if (beta < 0.0) {
        throw std::invalid_argument("total_loss: beta must be nonnegative");
    }
    LossBreakdown out;
    out.pointwise = pointwise;
    out.pairwise = pairwise;
    out.beta = beta;
    out.regularization = regularization;
    out.total = pointwise + beta * pairwise + regularization;
    return out;
}

}  // namespace mp2rec
