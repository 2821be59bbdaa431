#include "mp2rec/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "mp2rec/kernels.hpp"

namespace mp2rec {

const char* kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::PointwiseTwoTower: return "neumf";
        case ModelKind::BprMf: return "bpr";
        case ModelKind::PairwiseTwoTower: return "ranknet";
        case ModelKind::ApplTwoTower: return "appl";
        case ModelKind::ThreeTower: return "t3";
        case ModelKind::Mp2: return "mp2";
    }
    return "?";
}

std::optional<ModelKind> kind_from_name(const std::string& name) {
    for (ModelKind kind : kAllModelKinds) {
        if (name == kind_name(kind)) return kind;
    }
    return std::nullopt;
}

bool uses_pointwise(ModelKind kind) {
    return kind != ModelKind::BprMf && kind != ModelKind::PairwiseTwoTower;
}

bool uses_pairwise(ModelKind kind) { return kind != ModelKind::PointwiseTwoTower; }

bool pointwise_reads_second_tower(ModelKind kind) {
    return kind == ModelKind::ThreeTower || kind == ModelKind::Mp2;
}

bool has_second_tower(ModelKind kind) {
    return kind == ModelKind::ThreeTower || kind == ModelKind::Mp2;
}

bool second_tower_is_momentum(ModelKind kind) { return kind == ModelKind::Mp2; }

bool second_tower_is_trainable(ModelKind kind) { return kind == ModelKind::ThreeTower; }

const char* weighting_mode_name(WeightingMode mode) {
    switch (mode) {
        case WeightingMode::Joint: return "joint";
        case WeightingMode::Separate: return "separate";
        case WeightingMode::Uniform: return "uniform";
    }
    return "?";
}

std::optional<WeightingMode> weighting_mode_from_name(const std::string& name) {
    if (name == "joint") return WeightingMode::Joint;
    if (name == "separate") return WeightingMode::Separate;
    if (name == "uniform") return WeightingMode::Uniform;
    return std::nullopt;
}

void Hyperparams::validate(ModelKind kind) const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("hyperparams: alpha must lie in [0, 1]");
    }
    if (kind == ModelKind::Mp2 && alpha == 1.0 && !allow_degenerate_alpha) {
        throw std::invalid_argument(
            "hyperparams: alpha=1 freezes the momentum tower; pass the degenerate-alpha flag "
            "if this sweep point is intended");
    }
    if (beta < 0.0) throw std::invalid_argument("hyperparams: beta must be nonnegative");
    if (lambda < 0.0) throw std::invalid_argument("hyperparams: lambda must be nonnegative");
    if (learning_rate <= 0.0) throw std::invalid_argument("hyperparams: learning rate must be positive");
    if (embedding_dim == 0) throw std::invalid_argument("hyperparams: embedding_dim must be >= 1");
    if (batch_size == 0) throw std::invalid_argument("hyperparams: batch_size must be >= 1");
    if (epochs == 0) throw std::invalid_argument("hyperparams: epochs must be >= 1");
    if (kind != ModelKind::BprMf && mlp_hidden.empty()) {
        throw std::invalid_argument("hyperparams: MLP model kinds need at least one layer width");
    }
    for (std::size_t w : mlp_hidden) {
        if (w == 0) throw std::invalid_argument("hyperparams: zero-width MLP layer");
    }
}

std::string hyper_snapshot(const Hyperparams& h) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };
    std::string mlp;
    for (std::size_t i = 0; i < h.mlp_hidden.size(); ++i) {
        if (i) mlp += 'x';
        mlp += std::to_string(h.mlp_hidden[i]);
    }
    std::string s;
    s += "alpha=" + num(h.alpha);
    s += ";beta=" + num(h.beta);
    s += ";lambda=" + num(h.lambda);
    s += ";lr=" + num(h.learning_rate);
    s += ";dim=" + std::to_string(h.embedding_dim);
    s += ";mlp=" + (mlp.empty() ? std::string("none") : mlp);
    s += ";batch=" + std::to_string(h.batch_size);
    s += ";epochs=" + std::to_string(h.epochs);
    s += ";weighting=" + std::string(weighting_mode_name(h.weighting_mode));
    s += ";opt=" + std::string(h.optimizer == OptKind::Adam ? "adam" : "sgd");
    s += ";act=" + std::string(activation_name(h.activation));
    return s;
}

namespace {

std::vector<OptimizerState> make_optimizers(const TowerParams& tower, const Hyperparams& hyper) {
    std::vector<OptimizerState> out;
    const std::size_t count = tower.matrices().size();
    for (std::size_t i = 0; i < count; ++i) {
        OptimizerState st;
        st.kind = hyper.optimizer;
        st.learning_rate = hyper.learning_rate;
        out.push_back(std::move(st));
    }
    return out;
}

}  // namespace

ModelState make_model(ModelKind kind, const Hyperparams& hyper, std::size_t n_users,
                      std::size_t n_items, std::uint64_t remap_hash) {
    hyper.validate(kind);
    if (n_users == 0 || n_items == 0) {
        throw std::invalid_argument("make_model: need at least one user and one item");
    }
    ModelState model;
    model.kind = kind;
    model.hyper = hyper;
    model.n_users = n_users;
    model.n_items = n_items;
    model.remap_hash = remap_hash;

    const std::vector<std::size_t> mlp =
        (kind == ModelKind::BprMf) ? std::vector<std::size_t>{} : hyper.mlp_hidden;

    RngStream rng_user(hyper.seed, "init.user_tower");
    RngStream rng_item(hyper.seed, "init.item_vanilla");
    model.user_tower = make_tower(n_users, hyper.embedding_dim, mlp, hyper.activation, rng_user);
    model.item_vanilla = make_tower(n_items, hyper.embedding_dim, mlp, hyper.activation, rng_item);

    if (has_second_tower(kind)) {
        if (second_tower_is_momentum(kind)) {
            // The momentum tower starts as an exact copy of the vanilla tower.
            model.item_second = model.item_vanilla;
        } else {
            RngStream rng_second(hyper.seed, "init.item_second");
            model.item_second = make_tower(n_items, hyper.embedding_dim, mlp, hyper.activation, rng_second);
        }
    }

    model.opt_user = make_optimizers(model.user_tower, hyper);
    model.opt_item = make_optimizers(model.item_vanilla, hyper);
    if (second_tower_is_trainable(kind)) {
        model.opt_second = make_optimizers(*model.item_second, hyper);
    }
    return model;
}

double score(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw ShapeError("score: representation lengths differ (" + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()) + ")");
    }
    return kernels::dot(u.data(), v.data(), u.size());
}

TripletForward forward_triplet(const ModelState& model, const TripletSample& sample) {
    if (sample.user >= model.n_users) {
        throw IndexError("forward_triplet: user id " + std::to_string(sample.user) + " out of range");
    }
    if (sample.item_j >= model.n_items || sample.item_t >= model.n_items) {
        throw IndexError("forward_triplet: item id out of range");
    }

    TripletForward fwd;
    fwd.u = tower_forward(model.user_tower, sample.user, &fwd.user_cache);
    fwd.v_j = tower_forward(model.item_vanilla, sample.item_j, &fwd.vj_cache);
    fwd.v_t = tower_forward(model.item_vanilla, sample.item_t, &fwd.vt_cache);

    if (has_second_tower(model.kind)) {
        if (second_tower_is_trainable(model.kind)) {
            fwd.v_j_m = tower_forward(*model.item_second, sample.item_j, &fwd.mj_cache);
            fwd.v_t_m = tower_forward(*model.item_second, sample.item_t, &fwd.mt_cache);
        } else {
            // Stop-gradient boundary: the momentum path keeps no cache and
            // never takes part in backprop.
            fwd.v_j_m = tower_forward(*model.item_second, sample.item_j, nullptr);
            fwd.v_t_m = tower_forward(*model.item_second, sample.item_t, nullptr);
        }
    } else {
        fwd.v_j_m = fwd.v_j;
        fwd.v_t_m = fwd.v_t;
    }

    const auto& pv_j = pointwise_reads_second_tower(model.kind) ? fwd.v_j_m : fwd.v_j;
    const auto& pv_t = pointwise_reads_second_tower(model.kind) ? fwd.v_t_m : fwd.v_t;
    fwd.y_hat_j = score(fwd.u, pv_j);
    fwd.y_hat_t = score(fwd.u, pv_t);
    fwd.y_hat_pair = score(fwd.u, fwd.v_j) - score(fwd.u, fwd.v_t);
    return fwd;
}

void momentum_update(TowerParams& momentum, const TowerParams& vanilla, double alpha,
                     const ExecPolicy& policy) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("momentum_update: alpha must lie in [0, 1]");
    }
    auto dst = momentum.matrices();
    auto src = vanilla.matrices();
    if (dst.size() != src.size()) {
        throw ShapeError("momentum_update: tower structures differ");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        kernels::ema(policy, *dst[i], *src[i], alpha);
    }
}

double discrepancy(std::span<const double> v, std::span<const double> v_m) {
    if (v.size() != v_m.size() || v.empty()) {
        throw ShapeError("discrepancy: representation lengths differ or are empty");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += std::fabs(v[i] - v_m[i]);
    return acc / static_cast<double>(v.size());
}

PairWeights label_weight(double delta_j, double delta_t, WeightingMode mode) {
    if (delta_j < 0.0 || delta_t < 0.0) {
        throw std::invalid_argument("label_weight: discrepancies must be nonnegative");
    }
    switch (mode) {
        case WeightingMode::Joint: {
            const double w = std::exp(-(delta_j + delta_t));
            return {w, w};
        }
        case WeightingMode::Separate:
            return {std::exp(-delta_j), std::exp(-delta_t)};
        case WeightingMode::Uniform:
            return {1.0, 1.0};
    }
    return {1.0, 1.0};
}

std::vector<Matrix*> trainable_matrices(ModelState& model) {
    std::vector<Matrix*> out = model.user_tower.matrices();
    for (Matrix* m : model.item_vanilla.matrices()) out.push_back(m);
    if (second_tower_is_trainable(model.kind)) {
        for (Matrix* m : model.item_second->matrices()) out.push_back(m);
    }
    return out;
}

std::vector<const Matrix*> trainable_matrices(const ModelState& model) {
    std::vector<const Matrix*> out = model.user_tower.matrices();
    for (const Matrix* m : model.item_vanilla.matrices()) out.push_back(m);
    if (second_tower_is_trainable(model.kind)) {
        for (const Matrix* m : model.item_second->matrices()) out.push_back(m);
    }
    return out;
}

namespace {

PairWeights sample_weights(const ModelState& model, const TripletForward& fwd) {
    if (model.kind != ModelKind::Mp2) return {1.0, 1.0};
    const double dj = discrepancy(fwd.v_j, fwd.v_j_m);
    const double dt = discrepancy(fwd.v_t, fwd.v_t_m);
    return label_weight(dj, dt, model.hyper.weighting_mode);
}

struct SampleLosses {
    double pointwise = 0.0;
    double pairwise = 0.0;
};

SampleLosses sample_losses(const ModelState& model, const TripletSample& sample,
                           const TripletForward& fwd, const PairWeights& w) {
    SampleLosses out;
    if (uses_pointwise(model.kind)) {
        out.pointwise = w.w_j * pointwise_ce(fwd.y_hat_j, sample.y_j) +
                        w.w_t * pointwise_ce(fwd.y_hat_t, sample.y_t);
    }
    if (uses_pairwise(model.kind)) {
        out.pairwise = pairwise_logistic(fwd.y_hat_pair, 0.0);
    }
    return out;
}

// Dense gradient of one tower plus the touched embedding rows.
struct TowerGrad {
    std::vector<Matrix> d_weights;
    std::vector<Matrix> d_biases;
    std::vector<std::pair<std::size_t, std::vector<double>>> embedding_rows;

    void add_mlp(const MlpGrads& g) {
        if (d_weights.empty()) {
            d_weights = g.d_weights;
            d_biases = g.d_biases;
            return;
        }
        for (std::size_t l = 0; l < d_weights.size(); ++l) {
            kernels::serial::axpy(1.0, g.d_weights[l], d_weights[l]);
            kernels::serial::axpy(1.0, g.d_biases[l], d_biases[l]);
        }
    }
};

struct SampleContribution {
    TowerGrad user, item, second;
    SampleLosses losses;
    PairWeights weights;
};

std::vector<double> scale_vec(double a, std::span<const double> v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i];
    return out;
}

void add_scaled(std::vector<double>& acc, double a, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += a * v[i];
}

void backprop_tower(const TowerParams& tower, const MlpCache& cache, std::size_t id,
                    const std::vector<double>& upstream, TowerGrad& grad) {
    MlpGrads g = mlp_backward(tower, cache, upstream);
    grad.add_mlp(g);
    grad.embedding_rows.push_back({id, std::move(g.d_input)});
}

SampleContribution compute_sample(const ModelState& model, const TripletSample& sample,
                                  const PairWeights* frozen_w) {
    SampleContribution out;
    const TripletForward fwd = forward_triplet(model, sample);
    out.weights = frozen_w ? *frozen_w : sample_weights(model, fwd);
    out.losses = sample_losses(model, sample, fwd, out.weights);

    const std::size_t c = fwd.u.size();
    const bool pointwise = uses_pointwise(model.kind);
    const bool pairwise = uses_pairwise(model.kind);
    const bool second_reads_pointwise = pointwise_reads_second_tower(model.kind);

    const double a_j = pointwise ? out.weights.w_j * pointwise_ce_grad(fwd.y_hat_j, sample.y_j) : 0.0;
    const double a_t = pointwise ? out.weights.w_t * pointwise_ce_grad(fwd.y_hat_t, sample.y_t) : 0.0;
    const double g_d = pairwise ? model.hyper.beta * pairwise_logistic_grad(fwd.y_hat_pair) : 0.0;

    // User representation gradient.
    std::vector<double> d_u(c, 0.0);
    if (pointwise) {
        const auto& pv_j = second_reads_pointwise ? fwd.v_j_m : fwd.v_j;
        const auto& pv_t = second_reads_pointwise ? fwd.v_t_m : fwd.v_t;
        add_scaled(d_u, a_j, pv_j);
        add_scaled(d_u, a_t, pv_t);
    }
    if (pairwise) {
        add_scaled(d_u, g_d, fwd.v_j);
        add_scaled(d_u, -g_d, fwd.v_t);
    }
    backprop_tower(model.user_tower, fwd.user_cache, sample.user, d_u, out.user);

    // Vanilla item tower: pairwise path, plus the pointwise path when the
    // pointwise logits read the vanilla representations.
    std::vector<double> d_vj(c, 0.0);
    std::vector<double> d_vt(c, 0.0);
    if (pairwise) {
        add_scaled(d_vj, g_d, fwd.u);
        add_scaled(d_vt, -g_d, fwd.u);
    }
    if (pointwise && !second_reads_pointwise) {
        add_scaled(d_vj, a_j, fwd.u);
        add_scaled(d_vt, a_t, fwd.u);
    }
    backprop_tower(model.item_vanilla, fwd.vj_cache, sample.item_j, d_vj, out.item);
    backprop_tower(model.item_vanilla, fwd.vt_cache, sample.item_t, d_vt, out.item);

    // Trainable second tower (T3): pointwise path only. The MP2 momentum
    // tower is behind the stop-gradient boundary and receives nothing.
    if (second_tower_is_trainable(model.kind) && pointwise) {
        backprop_tower(*model.item_second, fwd.mj_cache, sample.item_j, scale_vec(a_j, fwd.u), out.second);
        backprop_tower(*model.item_second, fwd.mt_cache, sample.item_t, scale_vec(a_t, fwd.u), out.second);
    }
    return out;
}

// Batch gradient accumulator mirroring one tower's matrices.
struct TowerAccum {
    std::vector<Matrix> grads;  // aligned with TowerParams::matrices()

    explicit TowerAccum(const TowerParams& tower) {
        for (const Matrix* m : tower.matrices()) grads.emplace_back(m->rows(), m->cols());
    }

    void add(const TowerGrad& g) {
        // Layout: [0] embedding, then W_1, b_1, ...
        for (const auto& [row, vec] : g.embedding_rows) {
            double* dst = grads[0].row(row);
            for (std::size_t i = 0; i < vec.size(); ++i) dst[i] += vec[i];
        }
        for (std::size_t l = 0; l < g.d_weights.size(); ++l) {
            kernels::serial::axpy(1.0, g.d_weights[l], grads[1 + 2 * l]);
            kernels::serial::axpy(1.0, g.d_biases[l], grads[2 + 2 * l]);
        }
    }

    void scale(double a) {
        for (Matrix& m : grads) {
            for (std::size_t i = 0; i < m.size(); ++i) m[i] *= a;
        }
    }
};

}  // namespace

BatchLossResult batch_loss(const ModelState& model, std::span<const TripletSample> batch,
                           const std::vector<PairWeights>* frozen_weights) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    if (frozen_weights && frozen_weights->size() != batch.size()) {
        throw ContractError("batch_loss: frozen weight count does not match batch size");
    }
    BatchLossResult out;
    double point_sum = 0.0;
    double pair_sum = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const TripletForward fwd = forward_triplet(model, batch[s]);
        const PairWeights w = frozen_weights ? (*frozen_weights)[s] : sample_weights(model, fwd);
        const SampleLosses losses = sample_losses(model, batch[s], fwd, w);
        point_sum += losses.pointwise;
        pair_sum += losses.pairwise;
        out.weights.push_back(w);
    }
    const double n = static_cast<double>(batch.size());
    const double reg = l2_penalty(trainable_matrices(model), model.hyper.lambda);
    out.loss = total_loss(point_sum / n, pair_sum / n, model.hyper.beta, reg);
    return out;
}

LossBreakdown train_step(ModelState& model, std::span<const TripletSample> batch,
                         const ExecPolicy& policy, std::size_t batch_index) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

    TowerAccum acc_user(model.user_tower);
    TowerAccum acc_item(model.item_vanilla);
    std::optional<TowerAccum> acc_second;
    if (second_tower_is_trainable(model.kind)) acc_second.emplace(*model.item_second);

    double point_sum = 0.0;
    double pair_sum = 0.0;

    auto accumulate = [&](const SampleContribution& contrib) {
        acc_user.add(contrib.user);
        acc_item.add(contrib.item);
        if (acc_second) acc_second->add(contrib.second);
        point_sum += contrib.losses.pointwise;
        pair_sum += contrib.losses.pairwise;
    };

    if (policy.serial()) {
        for (const TripletSample& sample : batch) {
            accumulate(compute_sample(model, sample, nullptr));
        }
    } else {
        // Per-sample contributions computed in parallel, folded in sample
        // order; the arithmetic matches the serial path bit for bit.
        constexpr std::size_t kSlab = 64;
        std::vector<SampleContribution> slab(std::min(kSlab, batch.size()));
        for (std::size_t start = 0; start < batch.size(); start += kSlab) {
            const std::ptrdiff_t count =
                static_cast<std::ptrdiff_t>(std::min(kSlab, batch.size() - start));
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < count; ++i) {
                slab[static_cast<std::size_t>(i)] =
                    compute_sample(model, batch[start + static_cast<std::size_t>(i)], nullptr);
            }
            for (std::ptrdiff_t i = 0; i < count; ++i) {
                accumulate(slab[static_cast<std::size_t>(i)]);
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    acc_user.scale(inv_n);
    acc_item.scale(inv_n);
    if (acc_second) acc_second->scale(inv_n);

    const double reg = l2_penalty(trainable_matrices(std::as_const(model)), model.hyper.lambda);
    const LossBreakdown loss =
        total_loss(point_sum * inv_n, pair_sum * inv_n, model.hyper.beta, reg);
    if (!std::isfinite(loss.total)) {
        throw NumericError("train_step: non-finite loss in batch " + std::to_string(batch_index));
    }

    // L2 gradient, then the optimizer step, tower by tower.
    auto step_tower = [&](TowerParams& tower, TowerAccum& acc, std::vector<OptimizerState>& opt) {
        auto params = tower.matrices();
        const double two_lambda = 2.0 * model.hyper.lambda;
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (two_lambda != 0.0) kernels::axpy(policy, two_lambda, *params[i], acc.grads[i]);
            apply_step(*params[i], acc.grads[i], opt[i]);
        }
    };
    step_tower(model.user_tower, acc_user, model.opt_user);
    step_tower(model.item_vanilla, acc_item, model.opt_item);
    if (acc_second) step_tower(*model.item_second, *acc_second, model.opt_second);

    // Algorithm order: the momentum tower moves after the gradient towers.
    if (second_tower_is_momentum(model.kind)) {
        momentum_update(*model.item_second, model.item_vanilla, model.hyper.alpha, policy);
    }
    return loss;
}

}  // namespace mp2rec
