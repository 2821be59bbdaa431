#include "mp2rec/layers.hpp"

#include <cmath>

namespace mp2rec {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

double transform_numeric(double x, const NumericTransform& t) {
    using Kind = NumericTransform::Kind;
    switch (t.kind) {
        case Kind::MinMax:
            if (t.b <= t.a) throw std::invalid_argument("transform_numeric: minmax needs hi > lo");
            return (x - t.a) / (t.b - t.a);
        case Kind::ZScore:
            if (t.b <= 0.0) throw std::invalid_argument("transform_numeric: zscore needs sigma > 0");
            return (x - t.a) / t.b;
        case Kind::SymLog:
            return (x < 0.0 ? -1.0 : 1.0) * std::log1p(std::fabs(x));
    }
    throw std::invalid_argument("transform_numeric: unknown kind");
}

std::vector<double> embed_lookup(const SparseLookup& lookup, const Matrix& table) {
    if (lookup.indices.size() != lookup.weights.size()) {
        throw ShapeError("embed_lookup: indices/weights length mismatch");
    }
    std::vector<double> out(table.cols(), 0.0);
    for (std::size_t i = 0; i < lookup.indices.size(); ++i) {
        const std::size_t idx = lookup.indices[i];
        if (idx >= table.rows()) {
            throw IndexError("embed_lookup: index " + std::to_string(idx) +
                             " out of range (table has " + std::to_string(table.rows()) + " rows)");
        }
        const double w = lookup.weights[i];
        const double* row = table.row(idx);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * row[c];
    }
    return out;
}

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument("MlpSpec: need at least n_0 and n_1");
    }
    for (std::size_t n : layer_sizes) {
        if (n == 0) throw std::invalid_argument("MlpSpec: zero-width layer");
    }
}

std::vector<Matrix*> TowerParams::matrices() {
    std::vector<Matrix*> out;
    out.push_back(&embedding);
    for (std::size_t l = 0; l < mlp_weights.size(); ++l) {
        out.push_back(&mlp_weights[l]);
        out.push_back(&mlp_biases[l]);
    }
    return out;
}

std::vector<const Matrix*> TowerParams::matrices() const {
    std::vector<const Matrix*> out;
    out.push_back(&embedding);
    for (std::size_t l = 0; l < mlp_weights.size(); ++l) {
        out.push_back(&mlp_weights[l]);
        out.push_back(&mlp_biases[l]);
    }
    return out;
}

TowerParams make_tower(std::size_t num_ids, std::size_t embedding_dim,
                       const std::vector<std::size_t>& mlp_sizes, Activation activation,
                       RngStream& rng) {
    TowerParams tower;
    tower.activation = activation;
    tower.embedding = init_matrix(num_ids, embedding_dim, InitSpec::uniform(0.05), rng);
    std::size_t prev = embedding_dim;
    for (std::size_t width : mlp_sizes) {
        tower.mlp_weights.push_back(init_matrix(width, prev, InitSpec::xavier(), rng));
        tower.mlp_biases.push_back(Matrix(width, 1));
        prev = width;
    }
    return tower;
}

namespace {

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Tanh: return std::tanh(z);
    }
    return z;
}

// Derivative expressed through the activation value where cheap.
inline double activate_grad(Activation a, double z, double act) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return act * (1.0 - act);
        case Activation::Tanh: return 1.0 - act * act;
    }
    return 1.0;
}

}  // namespace

std::vector<double> mlp_forward(const std::vector<double>& x, const TowerParams& tower,
                                MlpCache* cache) {
    const std::size_t k = tower.mlp_weights.size();
    if (cache) {
        cache->input = x;
        cache->pre_acts.assign(k, {});
        cache->hidden.assign(k > 0 ? k - 1 : 0, {});
        cache->layer_count = k;
        cache->valid = true;
    }
    std::vector<double> a = x;
    for (std::size_t l = 0; l < k; ++l) {
        const Matrix& w = tower.mlp_weights[l];
        const Matrix& b = tower.mlp_biases[l];
        if (w.cols() != a.size()) {
            throw ShapeError("mlp_forward: layer " + std::to_string(l + 1) + " expects width " +
                             std::to_string(w.cols()) + ", got " + std::to_string(a.size()));
        }
        std::vector<double> z(w.rows());
        kernels::serial::affine(w, a.data(), b.data(), z.data());
        if (cache) cache->pre_acts[l] = z;
        if (l + 1 < k) {
            for (double& v : z) v = activate(tower.activation, v);
            if (cache) cache->hidden[l] = z;
        }
        a = std::move(z);
    }
    return a;
}

MlpGrads mlp_backward(const TowerParams& tower, const MlpCache& cache,
                      const std::vector<double>& upstream) {
    const std::size_t k = tower.mlp_weights.size();
    if (!cache.valid || cache.layer_count != k) {
        throw ContractError("mlp_backward: cache does not match this tower");
    }
    if (upstream.size() != tower.output_dim()) {
        throw ContractError("mlp_backward: upstream gradient width mismatch");
    }

    MlpGrads grads;
    grads.d_weights.reserve(k);
    grads.d_biases.reserve(k);
    for (std::size_t l = 0; l < k; ++l) {
        grads.d_weights.emplace_back(tower.mlp_weights[l].rows(), tower.mlp_weights[l].cols());
        grads.d_biases.emplace_back(tower.mlp_biases[l].rows(), 1);
    }

    std::vector<double> delta = upstream;  // gradient wrt z_l, starting at the (linear) output
    for (std::size_t l = k; l-- > 0;) {
        const std::vector<double>& layer_in = (l == 0) ? cache.input : cache.hidden[l - 1];
        kernels::serial::rank1_accumulate(grads.d_weights[l], delta.data(), layer_in.data());
        for (std::size_t r = 0; r < delta.size(); ++r) grads.d_biases[l][r] += delta[r];

        std::vector<double> d_in(tower.mlp_weights[l].cols());
        kernels::serial::matvec_transpose(tower.mlp_weights[l], delta.data(), d_in.data());
        if (l > 0) {
            const std::vector<double>& z = cache.pre_acts[l - 1];
            const std::vector<double>& act = cache.hidden[l - 1];
            for (std::size_t i = 0; i < d_in.size(); ++i) {
                d_in[i] *= activate_grad(tower.activation, z[i], act[i]);
            }
        }
        delta = std::move(d_in);
    }
    grads.d_input = std::move(delta);
    return grads;
}

std::vector<double> tower_forward(const TowerParams& tower, std::size_t id, MlpCache* cache) {
    std::vector<double> x = embed_lookup(SparseLookup::one_hot(id), tower.embedding);
    return mlp_forward(x, tower, cache);
}

}  // namespace mp2rec
