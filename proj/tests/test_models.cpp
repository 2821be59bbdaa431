#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <utility>

#include "mp2rec/model.hpp"

using namespace mp2rec;

namespace {

Hyperparams tiny_hyper() {
    Hyperparams h;
    h.embedding_dim = 3;
    h.mlp_hidden = {3, 2};
    h.learning_rate = 1.0;
    h.optimizer = OptKind::Sgd;
    h.lambda = 0.0;
    h.beta = 0.7;
    h.alpha = 0.9;
    h.activation = Activation::Tanh;  // smooth everywhere, safe to difference
    h.batch_size = 8;
    return h;
}

// Push every parameter off its init value (biases start at zero) so the
// gradient check runs at a generic point.
void jitter(ModelState& model, std::uint64_t seed) {
    RngStream rng(seed, "test.jitter");
    for (Matrix* m : trainable_matrices(model)) {
        for (std::size_t i = 0; i < m->size(); ++i) (*m)[i] += 0.1 * rng.gaussian();
    }
    if (model.item_second && second_tower_is_momentum(model.kind)) {
        for (Matrix* m : model.item_second->matrices()) {
            for (std::size_t i = 0; i < m->size(); ++i) (*m)[i] += 0.1 * rng.gaussian();
        }
    }
}

std::vector<TripletSample> tiny_batch() {
    // All (y_j, y_t) combinations pair sampling can emit.
    return {
        {0, 1, 0, 1.0, 0.0},
        {1, 2, 3, 1.0, 1.0},
        {2, 0, 1, 0.0, 0.0},
        {0, 3, 2, 1.0, 0.0},
    };
}

bool same_bits(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

bool towers_same_bits(const TowerParams& a, const TowerParams& b) {
    auto ma = a.matrices();
    auto mb = b.matrices();
    if (ma.size() != mb.size()) return false;
    for (std::size_t i = 0; i < ma.size(); ++i) {
        if (!same_bits(*ma[i], *mb[i])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("kind names round-trip and predicates match the model zoo") {
    const char* names[] = {"neumf", "bpr", "ranknet", "appl", "t3", "mp2"};
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(kind_name(kAllModelKinds[i]) == doctest::String(names[i]));
        CHECK(kind_from_name(names[i]) == kAllModelKinds[i]);
    }
    CHECK(!kind_from_name("mp3").has_value());
    CHECK(!kind_from_name("").has_value());

    CHECK(uses_pointwise(ModelKind::PointwiseTwoTower));
    CHECK(!uses_pointwise(ModelKind::BprMf));
    CHECK(!uses_pointwise(ModelKind::PairwiseTwoTower));
    CHECK(uses_pointwise(ModelKind::ApplTwoTower));
    CHECK(uses_pointwise(ModelKind::ThreeTower));
    CHECK(uses_pointwise(ModelKind::Mp2));

    CHECK(!uses_pairwise(ModelKind::PointwiseTwoTower));
    for (ModelKind k : {ModelKind::BprMf, ModelKind::PairwiseTwoTower, ModelKind::ApplTwoTower,
                        ModelKind::ThreeTower, ModelKind::Mp2}) {
        CHECK(uses_pairwise(k));
    }

    for (ModelKind k : kAllModelKinds) {
        const bool second = (k == ModelKind::ThreeTower || k == ModelKind::Mp2);
        CHECK(has_second_tower(k) == second);
        CHECK(pointwise_reads_second_tower(k) == second);
    }
    CHECK(second_tower_is_momentum(ModelKind::Mp2));
    CHECK(!second_tower_is_momentum(ModelKind::ThreeTower));
    CHECK(second_tower_is_trainable(ModelKind::ThreeTower));
    CHECK(!second_tower_is_trainable(ModelKind::Mp2));

    CHECK(weighting_mode_from_name("joint") == WeightingMode::Joint);
    CHECK(weighting_mode_from_name("separate") == WeightingMode::Separate);
    CHECK(weighting_mode_from_name("uniform") == WeightingMode::Uniform);
    CHECK(!weighting_mode_from_name("Joint").has_value());
    CHECK(weighting_mode_name(WeightingMode::Joint) == doctest::String("joint"));
}

TEST_CASE("hyperparameter validation rejects out-of-contract values") {
    Hyperparams h;

    Hyperparams bad = h;
    bad.alpha = -0.1;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    bad.alpha = 1.5;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);

    // alpha == 1 is only valid when flagged as a deliberate sweep point.
    bad = h;
    bad.alpha = 1.0;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    bad.allow_degenerate_alpha = true;
    CHECK_NOTHROW(bad.validate(ModelKind::Mp2));
    bad.allow_degenerate_alpha = false;
    CHECK_NOTHROW(bad.validate(ModelKind::ThreeTower));  // alpha is unused elsewhere

    bad = h;
    bad.beta = -1.0;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    bad = h;
    bad.lambda = -1e-9;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    bad = h;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    bad = h;
    bad.embedding_dim = 0;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    bad = h;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    bad = h;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);

    bad = h;
    bad.mlp_hidden = {};
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
    CHECK_NOTHROW(bad.validate(ModelKind::BprMf));  // BPR is embedding-only
    bad.mlp_hidden = {16, 0};
    CHECK_THROWS_AS(bad.validate(ModelKind::Mp2), std::invalid_argument);
}

TEST_CASE("hyper_snapshot is a stable one-line key=value record") {
    Hyperparams h;
    CHECK(hyper_snapshot(h) ==
          std::string("alpha=0.999;beta=1;lambda=1e-06;lr=0.001;dim=32;mlp=64x32;batch=256;"
                      "epochs=10;weighting=joint;opt=adam;act=relu"));
    h.mlp_hidden.clear();
    h.optimizer = OptKind::Sgd;
    h.weighting_mode = WeightingMode::Uniform;
    CHECK(hyper_snapshot(h) ==
          std::string("alpha=0.999;beta=1;lambda=1e-06;lr=0.001;dim=32;mlp=none;batch=256;"
                      "epochs=10;weighting=uniform;opt=sgd;act=relu"));
}

TEST_CASE("make_model builds the right towers per kind") {
    Hyperparams h = tiny_hyper();
    for (ModelKind k : kAllModelKinds) {
        const ModelState m = make_model(k, h, 5, 7);
        CHECK(m.kind == k);
        CHECK(m.n_users == 5);
        CHECK(m.n_items == 7);
        CHECK(m.user_tower.embedding.rows() == 5);
        CHECK(m.item_vanilla.embedding.rows() == 7);
        CHECK(m.user_tower.embedding.cols() == 3);

        if (k == ModelKind::BprMf) {
            CHECK(m.user_tower.num_layers() == 0);
            CHECK(m.representation_dim() == 3);
        } else {
            CHECK(m.user_tower.num_layers() == 2);
            CHECK(m.representation_dim() == 2);
        }

        CHECK(m.item_second.has_value() == has_second_tower(k));
        CHECK(m.opt_user.size() == m.user_tower.matrices().size());
        CHECK(m.opt_item.size() == m.item_vanilla.matrices().size());
        if (k == ModelKind::ThreeTower) {
            CHECK(m.opt_second.size() == m.item_second->matrices().size());
            // Gradient-trained second tower starts from its own fresh init.
            CHECK(!towers_same_bits(*m.item_second, m.item_vanilla));
        } else {
            CHECK(m.opt_second.empty());
        }
        if (k == ModelKind::Mp2) {
            // The momentum tower starts as an exact copy of the vanilla tower.
            CHECK(towers_same_bits(*m.item_second, m.item_vanilla));
        }
        for (const auto& st : m.opt_user) {
            CHECK(st.kind == h.optimizer);
            CHECK(st.learning_rate == h.learning_rate);
            CHECK(st.step_count == 0);
        }
    }

    // Same seed, same bits; a new seed moves the init.
    const ModelState a = make_model(ModelKind::Mp2, h, 5, 7);
    const ModelState b = make_model(ModelKind::Mp2, h, 5, 7);
    CHECK(towers_same_bits(a.user_tower, b.user_tower));
    CHECK(towers_same_bits(a.item_vanilla, b.item_vanilla));
    Hyperparams h2 = h;
    h2.seed = 99;
    const ModelState c = make_model(ModelKind::Mp2, h2, 5, 7);
    CHECK(!towers_same_bits(a.user_tower, c.user_tower));
    // User and item towers draw from distinct streams.
    CHECK(!same_bits(a.user_tower.mlp_weights[0], a.item_vanilla.mlp_weights[0]));

    CHECK_THROWS_AS(make_model(ModelKind::Mp2, h, 0, 7), std::invalid_argument);
    CHECK_THROWS_AS(make_model(ModelKind::Mp2, h, 5, 0), std::invalid_argument);
}

TEST_CASE("score is the dot product and checks shapes") {
    const std::vector<double> u = {1.0, 2.0, -3.0};
    const std::vector<double> v = {0.5, -1.0, 2.0};
    CHECK(score(u, v) == doctest::Approx(0.5 - 2.0 - 6.0).epsilon(1e-15));
    const std::vector<double> w = {1.0, 2.0};
    CHECK_THROWS_AS(score(u, w), ShapeError);
}

TEST_CASE("forward_triplet wires the towers per kind") {
    Hyperparams h = tiny_hyper();
    const TripletSample s{1, 2, 4, 1.0, 0.0};

    for (ModelKind k : kAllModelKinds) {
        ModelState m = make_model(k, h, 3, 5);
        jitter(m, 11);
        const TripletForward fwd = forward_triplet(m, s);
        CHECK(fwd.u.size() == m.representation_dim());

        if (has_second_tower(k)) {
            CHECK(fwd.v_j_m != fwd.v_j);  // distinct second representation
            CHECK(fwd.y_hat_j == score(fwd.u, fwd.v_j_m));
            CHECK(fwd.y_hat_t == score(fwd.u, fwd.v_t_m));
        } else {
            CHECK(fwd.v_j_m == fwd.v_j);
            CHECK(fwd.v_t_m == fwd.v_t);
            CHECK(fwd.y_hat_j == score(fwd.u, fwd.v_j));
        }
        // The pairwise margin always reads the vanilla path.
        CHECK(fwd.y_hat_pair == score(fwd.u, fwd.v_j) - score(fwd.u, fwd.v_t));
    }

    ModelState m = make_model(ModelKind::Mp2, h, 3, 5);
    CHECK_THROWS_AS(forward_triplet(m, TripletSample{3, 0, 1, 1, 0}), IndexError);
    CHECK_THROWS_AS(forward_triplet(m, TripletSample{0, 5, 1, 1, 0}), IndexError);
    CHECK_THROWS_AS(forward_triplet(m, TripletSample{0, 0, 5, 1, 0}), IndexError);
}

TEST_CASE("momentum_update is a convex elementwise blend") {
    Hyperparams h = tiny_hyper();
    ModelState m = make_model(ModelKind::Mp2, h, 4, 6);
    jitter(m, 21);  // separates theta_m from theta_v

    const TowerParams momentum0 = *m.item_second;
    const TowerParams& vanilla = m.item_vanilla;

    SUBCASE("alpha=1 freezes, alpha=0 copies, both bitwise") {
        TowerParams frozen = momentum0;
        momentum_update(frozen, vanilla, 1.0);
        CHECK(towers_same_bits(frozen, momentum0));

        TowerParams copied = momentum0;
        momentum_update(copied, vanilla, 0.0);
        CHECK(towers_same_bits(copied, vanilla));
    }

    SUBCASE("interior alpha stays inside the elementwise envelope") {
        RngStream rng(5, "test.alpha");
        for (int rep = 0; rep < 50; ++rep) {
            const double alpha = rng.uniform();
            TowerParams blend = momentum0;
            momentum_update(blend, vanilla, alpha);
            auto mm = blend.matrices();
            auto m0 = momentum0.matrices();
            auto mv = vanilla.matrices();
            for (std::size_t i = 0; i < mm.size(); ++i) {
                for (std::size_t p = 0; p < mm[i]->size(); ++p) {
                    const double lo = std::min((*m0[i])[p], (*mv[i])[p]);
                    const double hi = std::max((*m0[i])[p], (*mv[i])[p]);
                    CHECK((*mm[i])[p] >= lo - 1e-15);
                    CHECK((*mm[i])[p] <= hi + 1e-15);
                }
            }
        }
    }

    SUBCASE("alpha bounds are enforced") {
        TowerParams t = momentum0;
        CHECK_THROWS_AS(momentum_update(t, vanilla, -0.01), std::invalid_argument);
        CHECK_THROWS_AS(momentum_update(t, vanilla, 1.01), std::invalid_argument);
    }
}

TEST_CASE("discrepancy and label_weight") {
    const std::vector<double> v = {1.0, 2.0, 3.0};
    const std::vector<double> vm = {1.5, 2.0, 1.0};
    CHECK(discrepancy(v, vm) == doctest::Approx((0.5 + 0.0 + 2.0) / 3.0).epsilon(1e-15));
    CHECK(discrepancy(v, v) == 0.0);
    const std::vector<double> short_v = {1.0};
    CHECK_THROWS_AS(discrepancy(v, short_v), ShapeError);
    const std::vector<double> empty;
    CHECK_THROWS_AS(discrepancy(empty, empty), ShapeError);

    const PairWeights joint = label_weight(0.3, 0.2, WeightingMode::Joint);
    CHECK(joint.w_j == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(joint.w_j == joint.w_t);
    const PairWeights sep = label_weight(0.3, 0.2, WeightingMode::Separate);
    CHECK(sep.w_j == doctest::Approx(std::exp(-0.3)).epsilon(1e-15));
    CHECK(sep.w_t == doctest::Approx(std::exp(-0.2)).epsilon(1e-15));
    const PairWeights uni = label_weight(0.3, 0.2, WeightingMode::Uniform);
    CHECK(uni.w_j == 1.0);
    CHECK(uni.w_t == 1.0);
    CHECK_THROWS_AS(label_weight(-0.1, 0.0, WeightingMode::Joint), std::invalid_argument);

    // Zero discrepancy means full confidence in every mode.
    for (WeightingMode mode : {WeightingMode::Joint, WeightingMode::Separate, WeightingMode::Uniform}) {
        const PairWeights w = label_weight(0.0, 0.0, mode);
        CHECK(w.w_j == 1.0);
        CHECK(w.w_t == 1.0);
    }
}

TEST_CASE("batch_loss composes the per-sample objectives") {
    Hyperparams h = tiny_hyper();
    h.lambda = 1e-3;
    const auto batch = tiny_batch();

    SUBCASE("mp2: weighted pointwise + pairwise + L2") {
        h.weighting_mode = WeightingMode::Joint;
        ModelState m = make_model(ModelKind::Mp2, h, 3, 5);
        jitter(m, 31);

        const BatchLossResult got = batch_loss(m, batch);
        REQUIRE(got.weights.size() == batch.size());

        double point = 0.0, pair = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const TripletForward fwd = forward_triplet(m, batch[i]);
            const double dj = discrepancy(fwd.v_j, fwd.v_j_m);
            const double dt = discrepancy(fwd.v_t, fwd.v_t_m);
            const PairWeights w = label_weight(dj, dt, h.weighting_mode);
            CHECK(got.weights[i].w_j == doctest::Approx(w.w_j).epsilon(1e-15));
            CHECK(w.w_j > 0.0);
            CHECK(w.w_j < 1.0);  // jitter separated the towers
            point += w.w_j * pointwise_ce(fwd.y_hat_j, batch[i].y_j) +
                     w.w_t * pointwise_ce(fwd.y_hat_t, batch[i].y_t);
            pair += pairwise_logistic(fwd.y_hat_pair, 0.0);
        }
        point /= static_cast<double>(batch.size());
        pair /= static_cast<double>(batch.size());
        const double reg = l2_penalty(trainable_matrices(std::as_const(m)), h.lambda);
        CHECK(got.loss.pointwise == doctest::Approx(point).epsilon(1e-12));
        CHECK(got.loss.pairwise == doctest::Approx(pair).epsilon(1e-12));
        CHECK(got.loss.regularization == doctest::Approx(reg).epsilon(1e-12));
        CHECK(got.loss.total ==
              doctest::Approx(point + h.beta * pair + reg).epsilon(1e-12));
    }

    SUBCASE("neumf has no pairwise term, bpr and ranknet no pointwise term") {
        ModelState neumf = make_model(ModelKind::PointwiseTwoTower, h, 3, 5);
        const BatchLossResult r1 = batch_loss(neumf, batch);
        CHECK(r1.loss.pairwise == 0.0);
        CHECK(r1.loss.pointwise > 0.0);
        for (const PairWeights& w : r1.weights) {
            CHECK(w.w_j == 1.0);  // weights stay uniform outside mp2
            CHECK(w.w_t == 1.0);
        }

        for (ModelKind k : {ModelKind::BprMf, ModelKind::PairwiseTwoTower}) {
            ModelState m = make_model(k, h, 3, 5);
            const BatchLossResult r = batch_loss(m, batch);
            CHECK(r.loss.pointwise == 0.0);
            CHECK(r.loss.pairwise > 0.0);
        }
    }

    SUBCASE("contract checks") {
        ModelState m = make_model(ModelKind::Mp2, h, 3, 5);
        CHECK_THROWS_AS(batch_loss(m, std::span<const TripletSample>{}), std::invalid_argument);
        const std::vector<PairWeights> wrong(batch.size() + 1);
        CHECK_THROWS_AS(batch_loss(m, batch, &wrong), ContractError);
    }
}

// The central oracle: analytic gradients recovered from one SGD step with
// lr=1 must match central finite differences of the frozen-weight batch
// loss, for every trainable matrix of every model kind.
TEST_CASE("train_step gradients match finite differences for all kinds") {
    const auto batch = tiny_batch();

    for (ModelKind kind : kAllModelKinds) {
        CAPTURE(kind_name(kind));
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            CAPTURE(seed);
            Hyperparams h = tiny_hyper();
            h.seed = seed;
            if (kind == ModelKind::ApplTwoTower) h.lambda = 1e-3;  // exercise the L2 path

            ModelState model = make_model(kind, h, 3, 4);
            jitter(model, seed * 17 + 5);

            // Weights at the evaluation point; the trainer holds them constant.
            const std::vector<PairWeights> frozen = batch_loss(model, batch).weights;

            ModelState stepped = model;
            train_step(stepped, batch);

            const auto before = trainable_matrices(std::as_const(model));
            const auto after = trainable_matrices(std::as_const(stepped));
            REQUIRE(before.size() == after.size());

            for (std::size_t k = 0; k < before.size(); ++k) {
                CAPTURE(k);
                auto loss_at = [&](const Matrix& cand) {
                    ModelState probe = model;
                    *trainable_matrices(probe)[k] = cand;
                    return batch_loss(probe, batch, &frozen).loss.total;
                };
                const Matrix fd = finite_diff_grad(loss_at, *before[k], 1e-5);

                double max_ref = 0.0;
                for (std::size_t i = 0; i < fd.size(); ++i) max_ref = std::max(max_ref, std::fabs(fd[i]));
                double max_diff = 0.0;
                for (std::size_t i = 0; i < fd.size(); ++i) {
                    const double analytic = (*before[k])[i] - (*after[k])[i];  // sgd, lr=1
                    max_diff = std::max(max_diff, std::fabs(analytic - fd[i]));
                }
                CHECK(max_diff <= 1e-4 * std::max(1.0, max_ref));
            }
        }
    }
}

TEST_CASE("mp2 momentum tower follows the EMA recurrence, never the optimizer") {
    Hyperparams h = tiny_hyper();
    h.alpha = 0.9;
    const auto batch = tiny_batch();

    ModelState model = make_model(ModelKind::Mp2, h, 3, 4);
    jitter(model, 41);
    const TowerParams momentum_before = *model.item_second;

    ModelState stepped = model;
    train_step(stepped, batch);

    // Expected: EMA of (old momentum, new vanilla), applied after the step.
    TowerParams expected = momentum_before;
    momentum_update(expected, stepped.item_vanilla, h.alpha);
    CHECK(towers_same_bits(*stepped.item_second, expected));

    SUBCASE("alpha=0 locks the towers together and restores full confidence") {
        Hyperparams h0 = h;
        h0.alpha = 0.0;
        ModelState m0 = make_model(ModelKind::Mp2, h0, 3, 4);
        jitter(m0, 43);
        train_step(m0, batch);
        CHECK(towers_same_bits(*m0.item_second, m0.item_vanilla));
        for (const PairWeights& w : batch_loss(m0, batch).weights) {
            CHECK(w.w_j == 1.0);
            CHECK(w.w_t == 1.0);
        }
    }

    SUBCASE("alpha=1 freezes the momentum tower bitwise") {
        Hyperparams h1 = h;
        h1.alpha = 1.0;
        h1.allow_degenerate_alpha = true;
        ModelState m1 = make_model(ModelKind::Mp2, h1, 3, 4);
        const TowerParams init = *m1.item_second;
        for (int step = 0; step < 3; ++step) train_step(m1, batch);
        CHECK(towers_same_bits(*m1.item_second, init));
        CHECK(!towers_same_bits(m1.item_vanilla, init));  // the vanilla tower moved
    }
}

TEST_CASE("serial and parallel train_step produce identical bytes") {
    RngStream rng(9, "test.parbatch");
    std::vector<TripletSample> batch;
    for (int i = 0; i < 130; ++i) {  // spans multiple parallel slabs
        TripletSample s;
        s.user = rng.uniform_below(6);
        s.item_j = rng.uniform_below(9);
        do {
            s.item_t = rng.uniform_below(9);
        } while (s.item_t == s.item_j);
        s.y_j = 1.0;
        s.y_t = rng.uniform() < 0.5 ? 1.0 : 0.0;
        batch.push_back(s);
    }

    for (ModelKind kind : {ModelKind::Mp2, ModelKind::ThreeTower, ModelKind::PointwiseTwoTower,
                           ModelKind::BprMf}) {
        CAPTURE(kind_name(kind));
        Hyperparams h = tiny_hyper();
        h.optimizer = OptKind::Adam;
        h.learning_rate = 0.01;
        h.lambda = 1e-4;

        ModelState serial = make_model(kind, h, 6, 9);
        ModelState parallel = serial;
        for (int step = 0; step < 3; ++step) {
            const LossBreakdown ls = train_step(serial, batch, ExecPolicy::serial_policy(), step);
            const LossBreakdown lp = train_step(parallel, batch, ExecPolicy::parallel_policy(4), step);
            CHECK(ls.total == lp.total);  // bitwise, not approx
        }
        const auto a = trainable_matrices(std::as_const(serial));
        const auto b = trainable_matrices(std::as_const(parallel));
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_bits(*a[i], *b[i]));
        if (has_second_tower(kind)) {
            CHECK(towers_same_bits(*serial.item_second, *parallel.item_second));
        }
    }
}

TEST_CASE("train_step reports non-finite loss as a numeric error") {
    Hyperparams h = tiny_hyper();
    ModelState m = make_model(ModelKind::Mp2, h, 3, 4);
    m.user_tower.embedding[0] = std::numeric_limits<double>::quiet_NaN();
    const auto batch = tiny_batch();
    CHECK_THROWS_AS(train_step(m, batch, ExecPolicy::serial_policy(), 7), NumericError);
    try {
        train_step(m, batch, ExecPolicy::serial_policy(), 7);
    } catch (const NumericError& e) {
        CHECK(doctest::String(e.what()) == doctest::String("train_step: non-finite loss in batch 7"));
    }
    CHECK_THROWS_AS(train_step(m, std::span<const TripletSample>{}), std::invalid_argument);
}

TEST_CASE("training moves the loss downhill on a separable toy problem") {
    // One user strongly prefers item 0 over item 1; a few steps of the full
    // pipeline must reduce the objective for every kind.
    std::vector<TripletSample> batch = {{0, 0, 1, 1.0, 0.0}, {1, 0, 1, 1.0, 0.0},
                                        {2, 0, 1, 1.0, 0.0}, {0, 2, 3, 1.0, 0.0}};
    for (ModelKind kind : kAllModelKinds) {
        CAPTURE(kind_name(kind));
        Hyperparams h = tiny_hyper();
        h.optimizer = OptKind::Adam;
        h.learning_rate = 0.02;
        ModelState m = make_model(kind, h, 3, 4);
        const double first = batch_loss(m, batch).loss.total;
        for (int step = 0; step < 40; ++step) train_step(m, batch, {}, step);
        const double last = batch_loss(m, batch).loss.total;
        CHECK(last < first);
    }
}
