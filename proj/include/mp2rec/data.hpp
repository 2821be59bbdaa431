#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mp2rec/error.hpp"
#include "mp2rec/rng.hpp"

namespace mp2rec {

// One rating record with dense, remapped ids.
struct Interaction {
    std::size_t user = 0;
    std::size_t item = 0;
    double rating = 0.0;
    std::int64_t timestamp = 0;
};

// The joint training record: item_j is the pair-preferred item
// (rating(item_j) > rating(item_t) strictly); y labels are binarized.
struct TripletSample {
    std::size_t user = 0;
    std::size_t item_j = 0;
    std::size_t item_t = 0;
    double y_j = 0.0;
    double y_t = 0.0;
};

enum class RatingsFormat { Ml100kTab, Ml1mDoubleColon, Csv };

std::optional<RatingsFormat> format_from_name(const std::string& name);
const char* format_name(RatingsFormat f);

// Ratings plus the raw->dense remap (first-appearance order). The dense->raw
// tables double as decode maps.
struct Dataset {
    std::vector<Interaction> interactions;
    std::vector<std::int64_t> user_ids;  // dense -> raw
    std::vector<std::int64_t> item_ids;

    std::size_t n_users() const { return user_ids.size(); }
    std::size_t n_items() const { return item_ids.size(); }

    // FNV-1a over both remap tables; lets a checkpoint verify it is being
    // evaluated against the split it was trained with.
    std::uint64_t remap_hash() const;
};

Dataset parse_ratings(const std::string& path, RatingsFormat format);
Dataset parse_ratings_stream(std::istream& in, RatingsFormat format, const std::string& name);

// 1 iff rating > threshold (strict).
int binarize(double rating, double threshold);

// Per user, up to pairs_per_user distinct unordered item pairs with strictly
// different ratings, drawn uniformly over the valid pairs and oriented so
// item_j carries the higher rating.
std::vector<TripletSample> sample_pairs(const std::vector<Interaction>& train,
                                        std::size_t pairs_per_user, double threshold,
                                        std::uint64_t seed);

struct TestCase {
    std::size_t user = 0;
    std::size_t item = 0;                  // held-out positive
    std::vector<std::size_t> negatives;    // candidate pool minus the positive
};

struct DatasetSplit {
    std::vector<Interaction> train;
    std::vector<TestCase> test;
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::uint64_t remap_hash = 0;  // from the dataset that produced the split
};

// Holds out each eligible user's most recent positive (rating > threshold;
// timestamp ties broken toward the larger item id) and attaches a pool of
// never-interacted negatives per test user.
DatasetSplit split_leave_latest_out(const Dataset& data, double threshold,
                                    std::size_t negatives_per_user, std::uint64_t seed);

// n distinct items outside `interacted`, uniform without replacement.
std::vector<std::size_t> sample_negatives(const std::vector<bool>& interacted, std::size_t n,
                                          RngStream& rng);

// Epoch-level shuffle, then contiguous chunks; the final short batch is kept.
std::vector<std::vector<TripletSample>> make_batches(const std::vector<TripletSample>& samples,
                                                     std::size_t batch_size, std::uint64_t epoch_seed);

// Split manifest: one line per test user, `user<TAB>test_item<TAB>neg1,neg2,...`
// (dense ids).
void write_split_manifest(const std::string& path, const DatasetSplit& split);
DatasetSplit read_split_manifest(const std::string& path);

// Remap tables, one `raw<TAB>dense` line each.
void write_id_map(const std::string& path, const std::vector<std::int64_t>& dense_to_raw);
std::vector<std::int64_t> read_id_map(const std::string& path);

std::uint64_t remap_hash_of(const std::vector<std::int64_t>& user_ids,
                            const std::vector<std::int64_t>& item_ids);

}  // namespace mp2rec
