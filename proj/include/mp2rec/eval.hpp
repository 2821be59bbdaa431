#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mp2rec/data.hpp"
#include "mp2rec/model.hpp"
#include "mp2rec/parallel.hpp"

namespace mp2rec {

// Ranked-list evaluation over held-out (target, sampled negatives) cases.

// 1-based rank of the target among target + negatives. Ties count against
// the target: any negative scoring >= the target pushes it down one place.
std::size_t rank_of_target(double target_score, std::span<const double> negative_scores);

double hit_rate_at_k(std::size_t rank, std::size_t k);

// 1 / log2(rank + 1) inside the cutoff, 0 outside. With a single relevant
// item the ideal DCG is 1, so this is already normalized.
double ndcg_at_k(std::size_t rank, std::size_t k);

struct EvalOptions {
    std::vector<std::size_t> ks = {5, 20};
    ExecPolicy policy{};

    void validate() const;
};

struct MetricValue {
    std::string metric;  // "hr" or "ndcg"
    std::size_t k = 0;
    double value = 0.0;
};

struct MetricsReport {
    std::string model;
    std::uint64_t seed = 0;
    std::size_t users = 0;
    std::string snapshot;  // hyperparameter snapshot of the scored model
    std::vector<MetricValue> values;  // hr rows for every k, then ndcg rows

    // Throws std::out_of_range when the pair is absent.
    double value_of(const std::string& metric, std::size_t k) const;
};

using Scorer = std::function<double(std::size_t user, std::size_t item)>;

// Metric averages over the cases with an arbitrary scoring function.
MetricsReport evaluate_scorer(const Scorer& scorer, std::span<const TestCase> cases,
                              const EvalOptions& opts = {});

// Model path: representations are computed once per user and once per item,
// scores are vanilla-tower dot products. Per-user results land in slots and
// are reduced in user order, so the thread count never changes the output.
MetricsReport evaluate(const ModelState& model, std::span<const TestCase> cases,
                       const EvalOptions& opts = {});

// One row per metric: model,metric,k,value,users,seed. Values carry six
// decimals so identical runs emit identical bytes.
void write_metrics_csv(std::ostream& os, const MetricsReport& report);

std::string format_metric_value(double value);

// Aligned human-readable summary for the console.
std::string metrics_table(const MetricsReport& report);

}  // namespace mp2rec
