#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mp2rec/data.hpp"
#include "mp2rec/layers.hpp"
#include "mp2rec/losses.hpp"
#include "mp2rec/numerics.hpp"
#include "mp2rec/parallel.hpp"

namespace mp2rec {

// The six trainable variants behind one scoring/training interface.
//  PointwiseTwoTower  two towers, sigmoid cross-entropy only (NeuMF-lite)
//  BprMf              embedding-only towers, pairwise logistic loss (BPR)
//  PairwiseTwoTower   two towers, pairwise logistic loss (RankNet-NN)
//  ApplTwoTower       two towers, joint pointwise + pairwise loss (APPL)
//  ThreeTower         second item tower, gradient-trained, uniform weights (T3)
//  Mp2                second item tower updated by EMA, discrepancy weights
enum class ModelKind {
    PointwiseTwoTower,
    BprMf,
    PairwiseTwoTower,
    ApplTwoTower,
    ThreeTower,
    Mp2,
};

constexpr ModelKind kAllModelKinds[] = {
    ModelKind::PointwiseTwoTower, ModelKind::BprMf,      ModelKind::PairwiseTwoTower,
    ModelKind::ApplTwoTower,      ModelKind::ThreeTower, ModelKind::Mp2,
};

const char* kind_name(ModelKind kind);  // neumf | bpr | ranknet | appl | t3 | mp2
std::optional<ModelKind> kind_from_name(const std::string& name);

bool uses_pointwise(ModelKind kind);
bool uses_pairwise(ModelKind kind);
// True when pointwise logits read the second item tower (u . v^m).
bool pointwise_reads_second_tower(ModelKind kind);
bool has_second_tower(ModelKind kind);
bool second_tower_is_momentum(ModelKind kind);
bool second_tower_is_trainable(ModelKind kind);

enum class WeightingMode { Joint, Separate, Uniform };

const char* weighting_mode_name(WeightingMode mode);
std::optional<WeightingMode> weighting_mode_from_name(const std::string& name);

struct Hyperparams {
    double alpha = 0.999;          // momentum coefficient
    double beta = 1.0;             // pairwise loss weight
    double lambda = 1e-6;          // L2 coefficient
    double learning_rate = 1e-3;
    std::size_t embedding_dim = 32;
    std::vector<std::size_t> mlp_hidden = {64, 32};  // widths after the embedding
    std::size_t batch_size = 256;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    WeightingMode weighting_mode = WeightingMode::Joint;
    // alpha == 1 freezes the momentum tower outright; it is only accepted
    // when this flag marks the degenerate sweep point on purpose.
    bool allow_degenerate_alpha = false;
    OptKind optimizer = OptKind::Adam;
    Activation activation = Activation::Relu;

    void validate(ModelKind kind) const;  // throws std::invalid_argument
};

std::string hyper_snapshot(const Hyperparams& hyper);

struct ModelState {
    ModelKind kind = ModelKind::Mp2;
    Hyperparams hyper;
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::uint64_t remap_hash = 0;

    TowerParams user_tower;                  // theta_u
    TowerParams item_vanilla;                // theta_v
    std::optional<TowerParams> item_second;  // theta_m (EMA for MP2, trainable for T3)

    // One state per trainable matrix, aligned with TowerParams::matrices().
    std::vector<OptimizerState> opt_user;
    std::vector<OptimizerState> opt_item;
    std::vector<OptimizerState> opt_second;  // T3 only; the EMA tower is never optimized

    std::size_t representation_dim() const { return user_tower.output_dim(); }
};

ModelState make_model(ModelKind kind, const Hyperparams& hyper, std::size_t n_users,
                      std::size_t n_items, std::uint64_t remap_hash = 0);

// Dot-product preference score.
double score(std::span<const double> u, std::span<const double> v);

// Per-sample forward state. For two-tower kinds the v^m fields alias the
// vanilla representations.
struct TripletForward {
    std::vector<double> u, v_j, v_t, v_j_m, v_t_m;
    double y_hat_j = 0.0;     // pointwise logit for item_j
    double y_hat_t = 0.0;     // pointwise logit for item_t
    double y_hat_pair = 0.0;  // u.v_j - u.v_t

    MlpCache user_cache, vj_cache, vt_cache;
    MlpCache mj_cache, mt_cache;  // filled only when the second tower trains
};

TripletForward forward_triplet(const ModelState& model, const TripletSample& sample);

// theta_m <- alpha * theta_m + (1 - alpha) * theta_v over every matrix,
// embeddings included.
void momentum_update(TowerParams& momentum, const TowerParams& vanilla, double alpha,
                     const ExecPolicy& policy = {});

// Mean absolute elementwise gap between the two representations of one item.
double discrepancy(std::span<const double> v, std::span<const double> v_m);

struct PairWeights {
    double w_j = 1.0;
    double w_t = 1.0;
};

// Confidence weights from the two discrepancies. Joint mode shares
// exp(-(d_j + d_t)) across both items of the sample.
PairWeights label_weight(double delta_j, double delta_t, WeightingMode mode);

struct BatchLossResult {
    LossBreakdown loss;
    std::vector<PairWeights> weights;  // per sample; (1,1) unless MP2
};

// Loss of a batch without updating anything. `frozen_weights`, when given,
// replaces the discrepancy weights; the trainer treats weights as constants,
// so gradient checks difference this loss with the weights pinned.
BatchLossResult batch_loss(const ModelState& model, std::span<const TripletSample> batch,
                           const std::vector<PairWeights>* frozen_weights = nullptr);

// One optimization step over a mini-batch: forward, kind-appropriate loss,
// backprop into the trainable towers, optimizer update, then (MP2) the EMA
// update of the momentum tower. Serial and OpenMP policies produce
// bit-identical parameters.
LossBreakdown train_step(ModelState& model, std::span<const TripletSample> batch,
                         const ExecPolicy& policy = {}, std::size_t batch_index = 0);

// Trainable matrices in optimizer order (the EMA tower is excluded).
std::vector<Matrix*> trainable_matrices(ModelState& model);
std::vector<const Matrix*> trainable_matrices(const ModelState& model);

}  // namespace mp2rec
