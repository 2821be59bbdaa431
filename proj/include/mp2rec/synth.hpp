#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mp2rec/data.hpp"

namespace mp2rec {

// Deterministic synthetic datasets with a controlled annotation-bias level:
// each user-item affinity is a latent score, ratings observe it through
// context noise, so binary labels near the decision boundary conflict across
// observations while relative orders of well-separated items survive.

// Pair study for the label-noise experiment: pointwise labels are noisy
// threshold observations of the latent score, pairwise orientations follow
// the true latent order. Each user's true top item is held out for ranking.
struct BiasStudy {
    std::vector<TripletSample> triplets;
    std::vector<TestCase> test;
    std::size_t n_users = 0;
    std::size_t n_items = 500;
};

struct BiasStudySpec {
    std::size_t n_users = 500;
    std::size_t n_items = 500;
    std::size_t latent_dim = 2;
    std::size_t pairs_per_user = 30;
    std::size_t negatives_per_user = 100;
    double label_noise = 0.55;  // stddev added to the latent score before thresholding
    std::uint64_t seed = 1;
};

BiasStudy make_bias_study(const BiasStudySpec& spec);

// Ratings-file generator at MovieLens-100k scale. Exposure is what makes the
// leave-latest-out split learnable: users mostly rate items they were drawn
// to, so the held-out latest item reflects popularity plus personal affinity
// while sampled negatives are uniform. Integer ratings 1..5 come from the
// same affinity plus per-item quality and context noise, with increasing
// per-user timestamps. Written as user<TAB>item<TAB>rating<TAB>timestamp
// rows with 1-based raw ids.
struct SyntheticSpec {
    std::size_t n_users = 943;
    std::size_t n_items = 500;
    std::size_t latent_dim = 2;
    std::size_t min_ratings = 30;
    std::size_t extra_ratings = 160;  // heavy-tailed addition on top of the minimum
    double signal_gain = 1.0;         // latent-affinity weight in rating units
    double noise = 0.55;               // context-noise stddev in rating units
    double quality = 1.0;             // per-item quality stddev in rating units
    double exposure_noise = 0.35;     // quality-to-popularity scatter
    double choice = 1.2;              // affinity pull in what users pick to rate
    double user_bias = 1.0;           // rating-scale spread across users (harsh vs generous)
    double contention = 0.25;         // share of items whose ratings swing with context
    std::uint64_t seed = 77;
};

void write_synthetic_ratings(const std::string& path, const SyntheticSpec& spec);

}  // namespace mp2rec
