#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "doctest.h"
#include "mp2rec/numerics.hpp"
#include "mp2rec/rng.hpp"

using namespace mp2rec;

TEST_CASE("rng streams are deterministic and label-separated") {
    RngStream a(42, "test.stream");
    RngStream b(42, "test.stream");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, "test.stream");
    RngStream d(42, "test.other");
    bool all_equal = true;
    for (int i = 0; i < 20; ++i) all_equal = all_equal && (c.next_u64() == d.next_u64());
    CHECK_FALSE(all_equal);

    RngStream e(43, "test.stream");
    RngStream f(42, "test.stream");
    bool seeds_equal = true;
    for (int i = 0; i < 20; ++i) seeds_equal = seeds_equal && (e.next_u64() == f.next_u64());
    CHECK_FALSE(seeds_equal);
}

TEST_CASE("uniform stays in [0,1) and uniform_below in range") {
    RngStream rng(7, "test.uniform");
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 10000; ++i) {
        CHECK(rng.uniform_below(13) < 13);
    }
    // All residues of a small modulus appear (sanity against bias bugs).
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(rng.uniform_below(7));
    CHECK(seen.size() == 7);
}

TEST_CASE("gaussian moments") {
    RngStream rng(11, "test.gaussian");
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("shuffle is a permutation and deterministic") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    RngStream rng(5, "test.shuffle");
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);

    std::vector<int> w(50);
    for (int i = 0; i < 50; ++i) w[i] = i;
    RngStream rng2(5, "test.shuffle");
    rng2.shuffle(w);
    CHECK(v == w);
}

TEST_CASE("init_matrix schemes") {
    RngStream rng(3, "test.init");
    const Matrix z = init_matrix(4, 5, InitSpec::zeros(), rng);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);

    const Matrix u = init_matrix(10, 10, InitSpec::uniform(0.05), rng);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(u[i] >= -0.05);
        CHECK(u[i] <= 0.05);
    }

    const Matrix x = init_matrix(30, 20, InitSpec::xavier(), rng);
    const double bound = std::sqrt(6.0 / (30 + 20));
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x[i] >= -bound);
        CHECK(x[i] <= bound);
    }

    CHECK_THROWS_AS(init_matrix(0, 3, InitSpec::zeros(), rng), std::invalid_argument);
    CHECK_THROWS_AS(init_matrix(3, 3, InitSpec::uniform(0.0), rng), std::invalid_argument);
    CHECK_THROWS_AS(init_matrix(3, 3, InitSpec::uniform(-1.0), rng), std::invalid_argument);

    RngStream r1(9, "test.init.det");
    RngStream r2(9, "test.init.det");
    CHECK(init_matrix(6, 6, InitSpec::xavier(), r1) == init_matrix(6, 6, InitSpec::xavier(), r2));
}

TEST_CASE("sgd step") {
    Matrix theta(1, 1);
    theta[0] = 1.0;
    Matrix grad(1, 1);
    grad[0] = 0.5;
    OptimizerState opt = OptimizerState::sgd(0.1);
    apply_step(theta, grad, opt);
    CHECK(theta[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(opt.step_count == 1);
}

TEST_CASE("adam first two steps against hand-computed values") {
    // lr 0.01, g=10 each step, fresh moments:
    //   step 1: m_hat=10, v_hat=100 -> theta = -0.01*10/(10+1e-8)
    //   step 2: m_hat=10, v_hat=100 again -> same displacement
    Matrix theta(1, 1);
    Matrix grad(1, 1);
    grad[0] = 10.0;
    OptimizerState opt = OptimizerState::adam(0.01);

    apply_step(theta, grad, opt);
    CHECK(theta[0] == doctest::Approx(-0.009999999990).epsilon(1e-12));

    apply_step(theta, grad, opt);
    CHECK(theta[0] == doctest::Approx(-0.019999999980).epsilon(1e-12));
    CHECK(opt.step_count == 2);
}

TEST_CASE("adam state shape mismatch is rejected") {
    Matrix theta(2, 2);
    Matrix grad(2, 3);
    OptimizerState opt = OptimizerState::adam(0.01);
    CHECK_THROWS_AS(apply_step(theta, grad, opt), ShapeError);
}

TEST_CASE("finite differences recover an analytic gradient") {
    Matrix x(2, 3);
    RngStream rng(17, "test.fd");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);

    auto f = [](const Matrix& m) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) acc += std::sin(m[i]);
        return acc;
    };
    const Matrix g = finite_diff_grad(f, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(g[i] == doctest::Approx(std::cos(x[i])).epsilon(1e-8));
    }
}

TEST_CASE("finite differences reject a non-finite objective") {
    Matrix x(1, 1);
    auto f = [](const Matrix&) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(finite_diff_grad(f, x), NumericError);
}
