#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "airtime/adam.hpp"
#include "airtime/rng.hpp"
#include "airtime/tensor.hpp"

using namespace airtime;
using nn::Tensor;
using nn::Var;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(lo, hi);
    return t;
}

double loss_value(const std::function<Var()>& build) { return build()->value.at(0); }

/// Central finite differences (h=1e-5) against the analytic gradient on
/// every coordinate of every leaf. `build` must construct the scalar loss
/// from the leaves' current values.
void check_gradients(const std::vector<Var>& leaves, const std::function<Var()>& build, double tol = 1e-6) {
    for (const Var& l : leaves) {
        l->requires_grad = true;
        l->grad_ready = false;
    }
    nn::backward(build());
    const double h = 1e-5;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        const Var& l = leaves[li];
        REQUIRE(l->grad_ready);
        for (std::size_t k = 0; k < l->value.numel(); ++k) {
            const double orig = l->value.at(k);
            l->value.at(k) = orig + h;
            const double above = loss_value(build);
            l->value.at(k) = orig - h;
            const double below = loss_value(build);
            l->value.at(k) = orig;
            const double fd = (above - below) / (2.0 * h);
            const double an = l->grad.at(k);
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1.0});
            CAPTURE(li);
            CAPTURE(k);
            CAPTURE(an);
            CAPTURE(fd);
            CHECK(rel <= tol);
        }
    }
}

/// Weighted sum turns any output into a scalar with distinct per-entry
/// output gradients, so transposes and permutations cannot cancel out.
Var weighted(const Var& y, const Tensor& w) { return nn::sum_all(nn::mul(y, nn::leaf(w))); }

} // namespace

TEST_CASE("softmax of a uniform row splits evenly") {
    Var y = nn::softmax_rows(nn::leaf(Tensor(1, 2)));
    CHECK(y->value(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y->value(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and ignore constant shifts") {
    CounterRng rng(11);
    const Tensor x = random_tensor(5, 7, rng, -4.0, 4.0);
    const Var y = nn::softmax_rows(nn::leaf(x));
    Tensor shifted = x;
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 7; ++c) shifted(r, c) += 3.25;
    const Var ys = nn::softmax_rows(nn::leaf(shifted));
    for (std::size_t r = 0; r < 5; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 7; ++c) {
            sum += y->value(r, c);
            CHECK(y->value(r, c) == doctest::Approx(ys->value(r, c)).epsilon(1e-12));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("logsumexp of [0,0] is ln 2") {
    Var y = nn::logsumexp_rows(nn::leaf(Tensor(1, 2)));
    CHECK(y->value(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logsumexp dominates the max and commutes with shifts") {
    CounterRng rng(12);
    const Tensor x = random_tensor(4, 6, rng, -30.0, 30.0);
    const Var y = nn::logsumexp_rows(nn::leaf(x));
    Tensor shifted = x;
    for (std::size_t i = 0; i < x.numel(); ++i) shifted.at(i) += 100.0;
    const Var ys = nn::logsumexp_rows(nn::leaf(shifted));
    for (std::size_t r = 0; r < 4; ++r) {
        double mx = x(r, 0);
        for (std::size_t c = 1; c < 6; ++c) mx = std::max(mx, x(r, c));
        CHECK(y->value(r, 0) >= mx);
        CHECK(ys->value(r, 0) == doctest::Approx(y->value(r, 0) + 100.0).epsilon(1e-12));
    }
}

TEST_CASE("logsumexp stays finite at extreme magnitudes") {
    Tensor x(1, 3);
    x.at(0) = 1000.0;
    x.at(1) = -1000.0;
    x.at(2) = 999.0;
    const double v = nn::logsumexp_rows(nn::leaf(x))->value(0, 0);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1000.0 + std::log1p(std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("matmul by the identity reproduces the input") {
    CounterRng rng(13);
    Tensor eye(3, 3);
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    const Tensor a = random_tensor(3, 5, rng);
    const Var y = nn::matmul(nn::leaf(eye), nn::leaf(a));
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(y->value.at(i) == a.at(i));
}

TEST_CASE("shape mismatches name the failing operation") {
    CHECK_THROWS_WITH_AS(nn::matmul(nn::leaf(Tensor(2, 3)), nn::leaf(Tensor(2, 3))),
                         doctest::Contains("matmul"), ShapeError);
    CHECK_THROWS_AS(nn::add(nn::leaf(Tensor(2, 3)), nn::leaf(Tensor(3, 2))), ShapeError);
    CHECK_THROWS_AS(nn::add_rowvec(nn::leaf(Tensor(2, 3)), nn::leaf(Tensor(1, 4))), ShapeError);
    CHECK_THROWS_AS(nn::block(nn::leaf(Tensor(2, 3)), 1, 2, 0, 3), ShapeError);
}

TEST_CASE("backward of sum is all ones") {
    Var p = nn::leaf(Tensor(2, 3, 0.5), true);
    nn::backward(nn::sum_all(p));
    for (std::size_t i = 0; i < 6; ++i) CHECK(p->grad.at(i) == 1.0);
}

TEST_CASE("backward of sum of squares doubles the input") {
    Tensor t(1, 2);
    t.at(0) = 1.0;
    t.at(1) = 2.0;
    Var p = nn::leaf(t, true);
    nn::backward(nn::sum_all(nn::mul(p, p)));
    CHECK(p->grad.at(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p->grad.at(1) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("backward rejects a non-scalar loss") {
    CHECK_THROWS_AS(nn::backward(nn::leaf(Tensor(2, 2), true)), UsageError);
}

TEST_CASE("gradients accumulate across backward calls until reset") {
    Var p = nn::leaf(Tensor(1, 2, 1.0), true);
    nn::backward(nn::sum_all(p));
    nn::backward(nn::sum_all(p));
    CHECK(p->grad.at(0) == 2.0);
    p->grad_ready = false;
    nn::backward(nn::sum_all(p));
    CHECK(p->grad.at(0) == 1.0);
}

TEST_CASE("finite differences confirm every elementwise and shape op") {
    CounterRng rng(21);
    const Tensor w45 = random_tensor(4, 5, rng);
    const Tensor w43 = random_tensor(4, 3, rng);
    const Tensor w35 = random_tensor(3, 5, rng);
    const Tensor w41 = random_tensor(4, 1, rng);
    const Tensor w15 = random_tensor(1, 5, rng);
    const Tensor w11 = random_tensor(1, 1, rng);
    const Tensor w54 = random_tensor(5, 4, rng);
    const Tensor w85 = random_tensor(8, 5, rng);

    SUBCASE("matmul all transpose variants") {
        Var a = nn::leaf(random_tensor(4, 3, rng));
        Var b = nn::leaf(random_tensor(3, 5, rng));
        check_gradients({a, b}, [&] { return weighted(nn::matmul(a, b), w45); });
        Var at = nn::leaf(random_tensor(3, 4, rng));
        check_gradients({at, b}, [&] { return weighted(nn::matmul(at, b, true, false), w45); });
        Var bt = nn::leaf(random_tensor(5, 3, rng));
        check_gradients({a, bt}, [&] { return weighted(nn::matmul(a, bt, false, true), w45); });
        check_gradients({at, bt}, [&] { return weighted(nn::matmul(at, bt, true, true), w45); });
    }
    SUBCASE("add sub mul affine") {
        Var a = nn::leaf(random_tensor(4, 5, rng));
        Var b = nn::leaf(random_tensor(4, 5, rng));
        check_gradients({a, b}, [&] { return weighted(nn::add(a, b), w45); });
        check_gradients({a, b}, [&] { return weighted(nn::sub(a, b), w45); });
        check_gradients({a, b}, [&] { return weighted(nn::mul(a, b), w45); });
        check_gradients({a}, [&] { return weighted(nn::affine(a, -1.7, 0.4), w45); });
    }
    SUBCASE("add_rowvec") {
        Var a = nn::leaf(random_tensor(4, 5, rng));
        Var v = nn::leaf(random_tensor(1, 5, rng));
        check_gradients({a, v}, [&] { return weighted(nn::add_rowvec(a, v), w45); });
    }
    SUBCASE("relu away from the kink") {
        Tensor t = random_tensor(4, 5, rng);
        for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) += t.at(i) >= 0.0 ? 0.5 : -0.5;
        Var a = nn::leaf(t);
        check_gradients({a}, [&] { return weighted(nn::relu(a), w45); });
    }
    SUBCASE("tanh") {
        Var a = nn::leaf(random_tensor(4, 5, rng));
        check_gradients({a}, [&] { return weighted(nn::tanh_act(a), w45); });
    }
    SUBCASE("rsqrt_shift") {
        Var a = nn::leaf(random_tensor(4, 5, rng, 0.5, 2.0));
        check_gradients({a}, [&] { return weighted(nn::rsqrt_shift(a, 0.3), w45); });
    }
    SUBCASE("softmax and logsumexp") {
        Var a = nn::leaf(random_tensor(4, 5, rng, -2.0, 2.0));
        check_gradients({a}, [&] { return weighted(nn::softmax_rows(a), w45); });
        check_gradients({a}, [&] { return weighted(nn::logsumexp_rows(a), w41); });
        check_gradients({a}, [&] { return weighted(nn::logsumexp_cols(a), w15); });
    }
    SUBCASE("means and sum") {
        Var a = nn::leaf(random_tensor(4, 5, rng));
        check_gradients({a}, [&] { return weighted(nn::mean_rows(a), w15); });
        check_gradients({a}, [&] { return weighted(nn::mean_cols(a), w41); });
        check_gradients({a}, [&] { return weighted(nn::sum_all(a), w11); });
    }
    SUBCASE("broadcasts") {
        Var v = nn::leaf(random_tensor(1, 5, rng));
        check_gradients({v}, [&] { return weighted(nn::broadcast_rows(v, 4), w45); });
        Var c = nn::leaf(random_tensor(4, 1, rng));
        check_gradients({c}, [&] { return weighted(nn::broadcast_cols(c, 5), w45); });
    }
    SUBCASE("block and concat and transpose") {
        Var a = nn::leaf(random_tensor(6, 7, rng));
        check_gradients({a}, [&] { return weighted(nn::block(a, 1, 4, 2, 5), w45); });
        Var l = nn::leaf(random_tensor(4, 2, rng));
        Var r = nn::leaf(random_tensor(4, 3, rng));
        check_gradients({l, r}, [&] { return weighted(nn::concat_cols({l, r}), w45); });
        Var top = nn::leaf(random_tensor(1, 5, rng));
        Var bot = nn::leaf(random_tensor(3, 5, rng));
        check_gradients({top, bot}, [&] { return weighted(nn::concat_rows({top, bot}), w45); });
        Var t = nn::leaf(random_tensor(4, 5, rng));
        check_gradients({t}, [&] { return weighted(nn::transpose(t), w54); });
    }
    SUBCASE("select_sum") {
        Var a = nn::leaf(random_tensor(4, 5, rng));
        std::vector<std::pair<std::size_t, std::size_t>> idx{{0, 0}, {1, 3}, {3, 4}, {1, 3}};
        check_gradients({a}, [&] { return weighted(nn::select_sum(a, idx), w11); });
    }
    SUBCASE("block_diag_matmul") {
        auto blocks = std::make_shared<std::vector<Tensor>>();
        for (int t = 0; t < 2; ++t) blocks->push_back(random_tensor(4, 4, rng));
        Var x = nn::leaf(random_tensor(8, 5, rng));
        check_gradients({x}, [&] { return weighted(nn::block_diag_matmul(blocks, x), w85); });
    }
    SUBCASE("block_mean_rows") {
        Var x = nn::leaf(random_tensor(8, 5, rng));
        const Tensor w25 = random_tensor(2, 5, rng);
        check_gradients({x}, [&] { return weighted(nn::block_mean_rows(x, 4), w25); });
    }
    SUBCASE("layer_norm_rows") {
        Var x = nn::leaf(random_tensor(4, 5, rng));
        Var gain = nn::leaf(random_tensor(1, 5, rng, 0.5, 1.5));
        Var bias = nn::leaf(random_tensor(1, 5, rng));
        check_gradients({x, gain, bias}, [&] { return weighted(nn::layer_norm_rows(x, gain, bias), w45); });
    }
}

TEST_CASE("finite differences confirm a three-layer composite") {
    CounterRng rng(22);
    Var x = nn::leaf(random_tensor(3, 4, rng));
    Var w1 = nn::leaf(random_tensor(4, 6, rng));
    Var b1 = nn::leaf(random_tensor(1, 6, rng));
    Var w2 = nn::leaf(random_tensor(6, 6, rng));
    Var w3 = nn::leaf(random_tensor(6, 2, rng));
    const Tensor w32 = random_tensor(3, 2, rng);
    check_gradients({x, w1, b1, w2, w3}, [&] {
        Var h1 = nn::tanh_act(nn::add_rowvec(nn::matmul(x, w1), b1));
        Var h2 = nn::softmax_rows(nn::matmul(h1, w2));
        return weighted(nn::matmul(h2, w3), w32);
    });
}

TEST_CASE("adam first step moves by roughly lr times the gradient sign") {
    nn::AdamConfig cfg;
    cfg.lr = 1e-3;
    nn::Adam adam(cfg);
    Tensor t(1, 3);
    t.at(0) = 0.2;
    t.at(1) = -0.4;
    t.at(2) = 0.9;
    std::vector<nn::Parameter> params{{"p", nn::leaf(t, true)}};
    Tensor& g = params[0].var->ensure_grad();
    g.at(0) = 0.7;
    g.at(1) = -1.3;
    g.at(2) = 0.002;
    adam.step(params);
    const Tensor& w = params[0].value();
    CHECK(w.at(0) == doctest::Approx(0.2 - 1e-3).epsilon(1e-4));
    CHECK(w.at(1) == doctest::Approx(-0.4 + 1e-3).epsilon(1e-4));
    CHECK(w.at(2) == doctest::Approx(0.9 - 1e-3).epsilon(1e-2));
}

TEST_CASE("adam leaves parameters alone on a zero gradient") {
    nn::Adam adam({});
    std::vector<nn::Parameter> params{{"p", nn::leaf(Tensor(2, 2, 0.3), true)}};
    params[0].var->ensure_grad();
    adam.step(params);
    CHECK(adam.step_count() == 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(params[0].value().at(i) == 0.3);
}

TEST_CASE("adam matches the hand-run recurrence after two steps") {
    nn::AdamConfig cfg;
    cfg.lr = 0.01;
    nn::Adam adam(cfg);
    const double g = 0.6, w0 = 1.5;
    std::vector<nn::Parameter> params{{"p", nn::leaf(Tensor::scalar(w0), true)}};

    double m = 0.0, v = 0.0, w = w0;
    for (int step = 1; step <= 2; ++step) {
        params[0].var->ensure_grad().at(0) = g;
        adam.step(params);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double mhat = m / (1.0 - std::pow(cfg.beta1, step));
        const double vhat = v / (1.0 - std::pow(cfg.beta2, step));
        w -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        CHECK(params[0].value().at(0) == doctest::Approx(w).epsilon(1e-12));
    }
}

TEST_CASE("adam refuses a parameter with no gradient buffer") {
    nn::Adam adam({});
    std::vector<nn::Parameter> params{{"p", nn::leaf(Tensor(1, 1), true)}};
    CHECK_THROWS_AS(adam.step(params), UsageError);
}

TEST_CASE("counter rng streams are reproducible and independent") {
    CounterRng a = CounterRng::stream(42, "init/w");
    CounterRng b = CounterRng::stream(42, "init/w");
    CounterRng c = CounterRng::stream(42, "init/b");
    bool diverged = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t x = a.next_u64();
        CHECK(x == b.next_u64());
        diverged |= x != c.next_u64();
    }
    CHECK(diverged);
}

TEST_CASE("counter rng draws stay in range and look standard normal") {
    CounterRng rng(5);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform(2.0, 3.0);
        CHECK(u >= 2.0);
        CHECK(u < 3.0);
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.03));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
    CounterRng ints(6);
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t v = ints.uniform_int(-2, 5);
        CHECK(v >= -2);
        CHECK(v <= 5);
    }
}
