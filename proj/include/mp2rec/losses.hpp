#pragma once

#include <span>
#include <vector>

#include "mp2rec/matrix.hpp"

namespace mp2rec {

// Scalar objectives. All stable in the logit form: no evaluation may
// produce NaN/Inf for |logit| <= 700.

struct LossBreakdown {
    double pointwise = 0.0;
    double pairwise = 0.0;
    double regularization = 0.0;
    double beta = 0.0;
    double total = 0.0;  // pointwise + beta * pairwise + regularization
};

double sigmoid(double z);

// Sigmoid cross-entropy against a binary label, computed as
// max(z,0) - z*y + log(1 + exp(-|z|)).
double pointwise_ce(double logit, double label);

// d/dlogit of pointwise_ce: sigmoid(logit) - label.
double pointwise_ce_grad(double logit, double label);

// log(1 + exp(-(logit_preferred - logit_other))); the sample is oriented so
// the first argument scores the preferred item.
double pairwise_logistic(double logit_preferred, double logit_other);

// d/d(margin) of pairwise_logistic: sigmoid(margin) - 1.
double pairwise_logistic_grad(double margin);

// w * ce(j) + w * ce(t); the shared-confidence form. w must be in (0, 1].
double weighted_pointwise_ce(double logit_j, double label_j,
                             double logit_t, double label_t, double w);

// lambda * sum of squared entries over the given (gradient-trained) matrices.
double l2_penalty(std::span<const Matrix* const> params, double lambda);

LossBreakdown total_loss(double pointwise, double pairwise, double beta, double regularization);

}  // namespace mp2rec
