#include "mp2rec/trainer.hpp"

namespace mp2rec {

TrainResult train_on_triplets(ModelKind kind, const Hyperparams& hyper,
                              const std::vector<TripletSample>& triplets, std::size_t n_users,
                              std::size_t n_items, std::uint64_t remap_hash,
                              const ExecPolicy& policy, const EpochCallback& on_epoch) {
    if (triplets.empty()) {
        throw EmptyDatasetError("train: no training pairs (every user lacks strictly ordered items)");
    }
    TrainResult result;
    result.model = make_model(kind, hyper, n_users, n_items, remap_hash);

    std::size_t global_batch = 0;
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        // Distinct shuffle stream per (seed, epoch).
        const std::uint64_t epoch_seed = hyper.seed * 1000003ULL + epoch;
        const auto batches = make_batches(triplets, hyper.batch_size, epoch_seed);

        double point = 0.0, pair = 0.0, reg = 0.0, total = 0.0, n = 0.0;
        for (const auto& batch : batches) {
            LossBreakdown loss;
            try {
                loss = train_step(result.model, batch, policy, global_batch);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
            }
            ++global_batch;
            const double w = static_cast<double>(batch.size());
            point += w * loss.pointwise;
            pair += w * loss.pairwise;
            reg += w * loss.regularization;
            total += w * loss.total;
            n += w;
        }
        LossBreakdown epoch_loss;
        epoch_loss.pointwise = point / n;
        epoch_loss.pairwise = pair / n;
        epoch_loss.regularization = reg / n;
        epoch_loss.beta = hyper.beta;
        epoch_loss.total = total / n;
        result.epochs.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    return result;
}

PreparedData prepare_data(const RunConfig& config, std::uint64_t data_seed) {
    PreparedData out;
    out.dataset = parse_ratings(resolve_dataset_path(config.dataset), config.format);
    out.split = split_leave_latest_out(out.dataset, config.threshold, config.negatives_per_user,
                                       data_seed);
    out.triplets = sample_pairs(out.split.train, config.pairs_per_user, config.threshold, data_seed);
    return out;
}

}  // namespace mp2rec
