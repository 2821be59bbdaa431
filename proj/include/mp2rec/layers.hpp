#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mp2rec/kernels.hpp"
#include "mp2rec/matrix.hpp"
#include "mp2rec/numerics.hpp"

namespace mp2rec {

enum class Activation { Relu, Sigmoid, Tanh };

const char* activation_name(Activation a);

// ---------------------------------------------------------------------------
// Feature transforms for numeric inputs.

struct NumericTransform {
    enum class Kind { MinMax, ZScore, SymLog } kind = Kind::SymLog;
    double a = 0.0;  // lo / mu
    double b = 1.0;  // hi / sigma

    static NumericTransform minmax(double lo, double hi) { return {Kind::MinMax, lo, hi}; }
    static NumericTransform zscore(double mu, double sigma) { return {Kind::ZScore, mu, sigma}; }
    static NumericTransform symlog() { return {Kind::SymLog, 0.0, 0.0}; }
};

double transform_numeric(double x, const NumericTransform& t);

// ---------------------------------------------------------------------------
// Embedding lookup.

// One categorical lookup: one-hot when a single index with weight 1,
// multi-hot as a weighted combination of table rows.
struct SparseLookup {
    std::vector<std::size_t> indices;
    std::vector<double> weights;

    static SparseLookup one_hot(std::size_t index) { return {{index}, {1.0}}; }
};

// Weighted sum of the selected table rows; empty lookup gives a zero vector.
std::vector<double> embed_lookup(const SparseLookup& lookup, const Matrix& table);

// ---------------------------------------------------------------------------
// MLP.

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;  // n_0 .. n_k
    Activation activation = Activation::Relu;

    void validate() const;
};

// One tower: an embedding table feeding an MLP. An empty layer list means
// the representation is the embedding row itself (matrix-factorization
// towers).
struct TowerParams {
    Matrix embedding;                  // (ids x d)
    std::vector<Matrix> mlp_weights;   // W_l : n_l x n_{l-1}
    std::vector<Matrix> mlp_biases;    // b_l : n_l x 1
    Activation activation = Activation::Relu;

    std::size_t embedding_dim() const { return embedding.cols(); }
    std::size_t output_dim() const {
        return mlp_weights.empty() ? embedding.cols() : mlp_weights.back().rows();
    }
    std::size_t num_layers() const { return mlp_weights.size(); }

    // All matrices in a fixed order: embedding, W_1, b_1, ..., W_k, b_k.
    std::vector<Matrix*> matrices();
    std::vector<const Matrix*> matrices() const;
};

// Builds a tower with the module defaults: xavier MLP weights, zero biases,
// uniform(-0.05, 0.05) embeddings. `mlp_sizes` lists widths after the
// embedding: {64, 32} means d -> 64 -> 32.
TowerParams make_tower(std::size_t num_ids, std::size_t embedding_dim,
                       const std::vector<std::size_t>& mlp_sizes, Activation activation,
                       RngStream& rng);

// Forward cache: input plus every pre-activation and hidden activation.
struct MlpCache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre_acts;  // z_l, l = 1..k
    std::vector<std::vector<double>> hidden;    // sigma(z_l), l = 1..k-1
    std::size_t layer_count = 0;
    bool valid = false;
};

// Alternating affine/activation pass; output layer has no activation.
// Fills `cache` for the backward pass when non-null.
std::vector<double> mlp_forward(const std::vector<double>& x, const TowerParams& tower,
                                MlpCache* cache = nullptr);

struct MlpGrads {
    std::vector<Matrix> d_weights;
    std::vector<Matrix> d_biases;
    std::vector<double> d_input;
};

// Exact reverse-mode gradients of mlp_forward. The cache must come from a
// forward call on the same tower shape.
MlpGrads mlp_backward(const TowerParams& tower, const MlpCache& cache,
                      const std::vector<double>& upstream);

// Embedding row -> MLP in one go.
std::vector<double> tower_forward(const TowerParams& tower, std::size_t id,
                                  MlpCache* cache = nullptr);

}  // namespace mp2rec
