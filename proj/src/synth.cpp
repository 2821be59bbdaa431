#include "mp2rec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "mp2rec/rng.hpp"

namespace mp2rec {

namespace {

std::vector<double> latent_matrix(std::size_t n, std::size_t k, RngStream& rng) {
    std::vector<double> m(n * k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& v : m) v = rng.gaussian() * scale;
    return m;
}

double latent_dot(const std::vector<double>& a, std::size_t i, const std::vector<double>& b,
                  std::size_t j, std::size_t k) {
    double acc = 0.0;
    for (std::size_t d = 0; d < k; ++d) acc += a[i * k + d] * b[j * k + d];
    return acc;
}

}  // namespace

BiasStudy make_bias_study(const BiasStudySpec& spec) {
    if (spec.n_items < spec.negatives_per_user + 1) {
        throw std::invalid_argument("bias study: catalog smaller than the negative pool");
    }
    BiasStudy out;
    out.n_users = spec.n_users;
    out.n_items = spec.n_items;

    RngStream latent_rng(spec.seed, "synth.bias.latent");
    const std::size_t k = spec.latent_dim;
    const auto users = latent_matrix(spec.n_users, k, latent_rng);
    const auto items = latent_matrix(spec.n_items, k, latent_rng);

    auto latent_score = [&](std::size_t u, std::size_t v) {
        // Affinities spread over (0, 1); the 2.5 gain keeps a healthy mass
        // near the 0.5 boundary where labels conflict.
        return 1.0 / (1.0 + std::exp(-2.5 * latent_dot(users, u, items, v, k)));
    };

    for (std::size_t u = 0; u < spec.n_users; ++u) {
        RngStream rng(spec.seed, "synth.bias.user" + std::to_string(u));

        // The user's true best item is the ranking target and never trains.
        std::size_t top = 0;
        double top_score = -1.0;
        for (std::size_t v = 0; v < spec.n_items; ++v) {
            const double s = latent_score(u, v);
            if (s > top_score) {
                top_score = s;
                top = v;
            }
        }

        for (std::size_t p = 0; p < spec.pairs_per_user; ++p) {
            std::size_t a = 0;
            std::size_t b = 0;
            double sa = 0.0;
            double sb = 0.0;
            do {
                a = rng.uniform_below(spec.n_items);
                b = rng.uniform_below(spec.n_items);
                sa = latent_score(u, a);
                sb = latent_score(u, b);
            } while (a == b || a == top || b == top || sa == sb);
            if (sb > sa) {
                std::swap(a, b);
                std::swap(sa, sb);
            }
            TripletSample t;
            t.user = u;
            t.item_j = a;  // true order, noise-free
            t.item_t = b;
            t.y_j = (sa + spec.label_noise * rng.gaussian()) > 0.5 ? 1.0 : 0.0;
            t.y_t = (sb + spec.label_noise * rng.gaussian()) > 0.5 ? 1.0 : 0.0;
            out.triplets.push_back(t);
        }

        TestCase tc;
        tc.user = u;
        tc.item = top;
        std::unordered_set<std::size_t> taken{top};
        while (tc.negatives.size() < spec.negatives_per_user) {
            const std::size_t v = rng.uniform_below(spec.n_items);
            if (taken.insert(v).second) tc.negatives.push_back(v);
        }
        out.test.push_back(std::move(tc));
    }
    return out;
}

void write_synthetic_ratings(const std::string& path, const SyntheticSpec& spec) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");

    RngStream latent_rng(spec.seed, "synth.ratings.latent");
    const std::size_t k = spec.latent_dim;
    const auto users = latent_matrix(spec.n_users, k, latent_rng);
    const auto items = latent_matrix(spec.n_items, k, latent_rng);

    // Per-item quality shifts ratings for every user, and drives exposure:
    // better items are (noisily) more popular, the way real catalogs behave.
    // This coupling is what makes held-out positives separable from sampled
    // unexposed items under leave-latest-out evaluation.
    std::vector<double> quality(spec.n_items);
    for (double& q : quality) q = spec.quality * latent_rng.gaussian();

    // A contentious minority of items draws wildly context-dependent ratings;
    // the rest are rated consistently. Binary labels on contentious items
    // conflict across observations even though their average level is normal.
    std::vector<double> noise_scale(spec.n_items);
    for (double& s : noise_scale) s = latent_rng.uniform() < spec.contention ? 2.2 : 0.55;

    std::vector<std::size_t> by_appeal(spec.n_items);
    for (std::size_t i = 0; i < spec.n_items; ++i) by_appeal[i] = i;
    std::vector<double> appeal(spec.n_items);
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        appeal[i] = quality[i] + spec.exposure_noise * latent_rng.gaussian();
    }
    std::sort(by_appeal.begin(), by_appeal.end(),
              [&](std::size_t a, std::size_t b) { return appeal[a] > appeal[b]; });
    std::vector<std::size_t> pop_rank(spec.n_items);
    for (std::size_t r = 0; r < spec.n_items; ++r) pop_rank[by_appeal[r]] = r;

    std::vector<double> zipf(spec.n_items);
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        zipf[i] = 1.0 / std::pow(static_cast<double>(pop_rank[i]) + 5.0, 0.8);
    }

    // latent_matrix scales rows to unit norm in expectation, so dots have
    // stddev 1/sqrt(k); undo that so the gain/choice knobs are in z units.
    const double root_k = std::sqrt(static_cast<double>(k));

    std::vector<double> aff(spec.n_items);
    std::vector<double> cumulative(spec.n_items);
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        RngStream rng(spec.seed, "synth.ratings.user" + std::to_string(u));
        const double heavy = std::pow(rng.uniform(), 2.5);
        const std::size_t count =
            spec.min_ratings + static_cast<std::size_t>(heavy * static_cast<double>(spec.extra_ratings));
        // Harsh vs generous raters: shifts every rating this user gives, so
        // the same preference level binarizes differently across users while
        // within-user pair orders are untouched.
        const double scale_bias = spec.user_bias * rng.gaussian();

        double total = 0.0;
        for (std::size_t v = 0; v < spec.n_items; ++v) {
            aff[v] = root_k * latent_dot(users, u, items, v, k);
            total += zipf[v] * std::exp(spec.choice * aff[v]);
            cumulative[v] = total;
        }

        std::unordered_set<std::size_t> seen;
        std::int64_t ts = 874000000 + static_cast<std::int64_t>(rng.uniform_below(10000000));
        while (seen.size() < count && seen.size() < spec.n_items) {
            const double draw = rng.uniform() * total;
            const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), draw);
            const std::size_t v = static_cast<std::size_t>(it - cumulative.begin());
            if (!seen.insert(v).second) continue;

            // Selection tilts the exposed set toward high affinity; recenter
            // by the expected tilt so the observed ratings still spread over
            // all five bins.
            const double z = spec.signal_gain * (aff[v] - 0.6 * spec.choice - 1.0) + quality[v] +
                             scale_bias + spec.noise * rng.gaussian();
            int rating = 3;
            if (z < -1.5) rating = 1;
            else if (z < -0.6) rating = 2;
            else if (z < 0.2) rating = 3;
            else if (z < 1.0) rating = 4;
            else rating = 5;

            ts += 1000 + static_cast<std::int64_t>(rng.uniform_below(5000));
            out << (u + 1) << '\t' << (v + 1) << '\t' << rating << '\t' << ts << '\n';
        }
    }
    if (!out) throw ParseError(path + ": write failed");
}

}  // namespace mp2rec
