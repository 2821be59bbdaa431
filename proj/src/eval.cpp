#include "mp2rec/eval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mp2rec/error.hpp"

namespace mp2rec {

std::size_t rank_of_target(double target_score, std::span<const double> negative_scores) {
    std::size_t rank = 1;
    for (double s : negative_scores) {
        if (s >= target_score) ++rank;
    }
    return rank;
}

double hit_rate_at_k(std::size_t rank, std::size_t k) {
    if (k == 0) throw std::invalid_argument("hit_rate_at_k: k must be >= 1");
    return rank <= k ? 1.0 : 0.0;
}

double ndcg_at_k(std::size_t rank, std::size_t k) {
    if (k == 0) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    if (rank > k) return 0.0;
    return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

void EvalOptions::validate() const {
    if (ks.empty()) throw std::invalid_argument("evaluate: need at least one cutoff");
    for (std::size_t k : ks) {
        if (k == 0) throw std::invalid_argument("evaluate: cutoffs must be >= 1");
    }
}

double MetricsReport::value_of(const std::string& metric, std::size_t k) const {
    for (const MetricValue& v : values) {
        if (v.metric == metric && v.k == k) return v.value;
    }
    throw std::out_of_range("metrics report has no " + metric + "@" + std::to_string(k));
}

namespace {

// Per-user metric block: hr for each cutoff, then ndcg for each cutoff.
void fill_slot(std::size_t rank, const std::vector<std::size_t>& ks, double* slot) {
    const std::size_t nk = ks.size();
    for (std::size_t i = 0; i < nk; ++i) slot[i] = hit_rate_at_k(rank, ks[i]);
    for (std::size_t i = 0; i < nk; ++i) slot[nk + i] = ndcg_at_k(rank, ks[i]);
}

MetricsReport reduce_slots(const std::vector<double>& slots, std::size_t n_cases,
                           const std::vector<std::size_t>& ks) {
    const std::size_t width = 2 * ks.size();
    std::vector<double> sums(width, 0.0);
    // User order, not thread order: the reduction is the same for any policy.
    for (std::size_t u = 0; u < n_cases; ++u) {
        for (std::size_t i = 0; i < width; ++i) sums[i] += slots[u * width + i];
    }
    MetricsReport report;
    report.users = n_cases;
    const double inv = 1.0 / static_cast<double>(n_cases);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        report.values.push_back({"hr", ks[i], sums[i] * inv});
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
        report.values.push_back({"ndcg", ks[i], sums[ks.size() + i] * inv});
    }
    return report;
}

std::size_t case_rank(const Scorer& scorer, const TestCase& tc) {
    const double target = scorer(tc.user, tc.item);
    std::vector<double> neg_scores(tc.negatives.size());
    for (std::size_t i = 0; i < tc.negatives.size(); ++i) {
        neg_scores[i] = scorer(tc.user, tc.negatives[i]);
    }
    return rank_of_target(target, neg_scores);
}

}  // namespace

MetricsReport evaluate_scorer(const Scorer& scorer, std::span<const TestCase> cases,
                              const EvalOptions& opts) {
    opts.validate();
    if (!scorer) throw std::invalid_argument("evaluate_scorer: empty scorer");
    if (cases.empty()) throw EmptyDatasetError("evaluate: no test cases");

    const std::size_t width = 2 * opts.ks.size();
    std::vector<double> slots(cases.size() * width, 0.0);
    for (std::size_t u = 0; u < cases.size(); ++u) {
        fill_slot(case_rank(scorer, cases[u]), opts.ks, slots.data() + u * width);
    }
    return reduce_slots(slots, cases.size(), opts.ks);
}

MetricsReport evaluate(const ModelState& model, std::span<const TestCase> cases,
                       const EvalOptions& opts) {
    opts.validate();
    if (cases.empty()) throw EmptyDatasetError("evaluate: no test cases");
    for (const TestCase& tc : cases) {
        if (tc.user >= model.n_users) {
            throw IndexError("evaluate: user id " + std::to_string(tc.user) + " out of range");
        }
        if (tc.item >= model.n_items) {
            throw IndexError("evaluate: item id " + std::to_string(tc.item) + " out of range");
        }
        for (std::size_t v : tc.negatives) {
            if (v >= model.n_items) {
                throw IndexError("evaluate: negative item id " + std::to_string(v) + " out of range");
            }
        }
    }

    // All item representations once (vanilla tower), then one user pass.
    const std::size_t dim = model.representation_dim();
    Matrix item_reps(model.n_items, dim);
    {
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(model.n_items);
        if (opts.policy.serial()) {
            for (std::ptrdiff_t v = 0; v < n; ++v) {
                auto rep = tower_forward(model.item_vanilla, static_cast<std::size_t>(v));
                double* dst = item_reps.row(static_cast<std::size_t>(v));
                for (std::size_t i = 0; i < dim; ++i) dst[i] = rep[i];
            }
        } else {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t v = 0; v < n; ++v) {
                auto rep = tower_forward(model.item_vanilla, static_cast<std::size_t>(v));
                double* dst = item_reps.row(static_cast<std::size_t>(v));
                for (std::size_t i = 0; i < dim; ++i) dst[i] = rep[i];
            }
        }
    }

    const std::size_t width = 2 * opts.ks.size();
    std::vector<double> slots(cases.size() * width, 0.0);
    auto eval_case = [&](std::size_t u) {
        const TestCase& tc = cases[u];
        const auto user_rep = tower_forward(model.user_tower, tc.user);
        const double target = kernels::dot(user_rep.data(), item_reps.row(tc.item), dim);
        std::size_t rank = 1;
        for (std::size_t neg : tc.negatives) {
            const double s = kernels::dot(user_rep.data(), item_reps.row(neg), dim);
            if (s >= target) ++rank;
        }
        fill_slot(rank, opts.ks, slots.data() + u * width);
    };

    const std::ptrdiff_t n_cases = static_cast<std::ptrdiff_t>(cases.size());
    if (opts.policy.serial()) {
        for (std::ptrdiff_t u = 0; u < n_cases; ++u) eval_case(static_cast<std::size_t>(u));
    } else {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t u = 0; u < n_cases; ++u) eval_case(static_cast<std::size_t>(u));
    }

    MetricsReport report = reduce_slots(slots, cases.size(), opts.ks);
    report.model = kind_name(model.kind);
    report.seed = model.hyper.seed;
    report.snapshot = hyper_snapshot(model.hyper);
    return report;
}

std::string format_metric_value(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return std::string(buf);
}

void write_metrics_csv(std::ostream& os, const MetricsReport& report) {
    os << "model,metric,k,value,users,seed\n";
    for (const MetricValue& v : report.values) {
        os << report.model << ',' << v.metric << ',' << v.k << ','
           << format_metric_value(v.value) << ',' << report.users << ',' << report.seed << '\n';
    }
}

std::string metrics_table(const MetricsReport& report) {
    std::ostringstream out;
    out << "model=" << report.model << " users=" << report.users << " seed=" << report.seed
        << '\n';
    for (const MetricValue& v : report.values) {
        char line[64];
        std::snprintf(line, sizeof(line), "  %-4s@%-3zu %s", v.metric.c_str(), v.k,
                      format_metric_value(v.value).c_str());
        out << line << '\n';
    }
    return out.str();
}

}  // namespace mp2rec
