#pragma once

#include <functional>
#include <vector>

#include "mp2rec/config.hpp"
#include "mp2rec/data.hpp"
#include "mp2rec/model.hpp"

namespace mp2rec {

// Epoch-level training loop over a fixed triplet set. Losses reported per
// epoch are sample-weighted means over the epoch's batches. A NumericError
// from a diverging batch is rethrown with the epoch attached.
struct TrainResult {
    ModelState model;
    std::vector<LossBreakdown> epochs;
};

using EpochCallback = std::function<void(std::size_t epoch, const LossBreakdown& loss)>;

TrainResult train_on_triplets(ModelKind kind, const Hyperparams& hyper,
                              const std::vector<TripletSample>& triplets, std::size_t n_users,
                              std::size_t n_items, std::uint64_t remap_hash,
                              const ExecPolicy& policy = {}, const EpochCallback& on_epoch = {});

// Dataset -> split -> training triplets, all derived from `data_seed` so a
// multi-run sweep shares one data pipeline while varying only model seeds.
struct PreparedData {
    Dataset dataset;
    DatasetSplit split;
    std::vector<TripletSample> triplets;
};

PreparedData prepare_data(const RunConfig& config, std::uint64_t data_seed);

}  // namespace mp2rec
