#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "coldsan/error.hpp"
#include "coldsan/gradcheck.hpp"
#include "coldsan/ops.hpp"
#include "coldsan/params.hpp"
#include "coldsan/rng.hpp"
#include "coldsan/tape.hpp"

using namespace coldsan;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.values())
        v = rng.uniform(-1.0, 1.0);
    return t;
}

// Reduces an op output to a scalar through a fixed random projection so every
// output entry gets a distinct upstream gradient.
using Build = std::function<Var(GradTape&, const std::vector<Var>&)>;

double check_op(const std::vector<Tensor>& inputs, const Build& build, std::uint64_t seed) {
    ParamSets params;
    std::vector<ParamId> ids;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        ids.push_back(params.add(ParamGroupKind::encoder, "in" + std::to_string(i), inputs[i]));

    auto forward = [&, seed](GradTape& t, const ParamSets& p) {
        std::vector<Var> vars;
        for (auto id : ids)
            vars.push_back(t.parameter(p, id));
        Var out = build(t, vars);
        const Tensor& ov = t.value(out);
        Rng rng(seed, 99);
        Tensor proj({ov.cols(), 1});
        for (auto& v : proj.values())
            v = rng.uniform(-1.0, 1.0);
        Var flat = ov.rank() == 1 ? t.push(Tensor({1, ov.size()}, std::vector<double>(ov.values().begin(), ov.values().end())),
                                           [out](GradTape& tt, std::size_t self) {
                                               auto& g = tt.grad(out);
                                               const auto& up = tt.grad(self);
                                               for (std::size_t k = 0; k < g.size(); ++k)
                                                   g[k] += up[k];
                                           })
                                  : out;
        return sum(t, matmul(t, flat, t.constant(proj)));
    };

    Objective obj;
    obj.gradient = [&](const ParamSets& p) {
        GradTape t;
        t.backward(forward(t, p));
        return t.parameter_gradients();
    };
    obj.value = [&](const ParamSets& p, ParamId) {
        GradTape t(false);
        return t.value(forward(t, p))[0];
    };
    return finite_difference_check(obj, params, 1e-5).max_relative_error;
}

}  // namespace

TEST_CASE("affine examples") {
    GradTape t;
    auto x = t.constant(Tensor::matrix({{1, 2}}));
    auto w = t.constant(Tensor::matrix({{1, 0}, {0, 1}}));
    auto b = t.constant(Tensor::vector({0, 0}));
    CHECK(t.value(affine(t, x, w, b)) == Tensor::matrix({{1, 2}}));

    auto x2 = t.constant(Tensor::matrix({{1, 1}}));
    auto w2 = t.constant(Tensor::matrix({{2, 0}, {0, 3}}));
    auto b2 = t.constant(Tensor::vector({1, -1}));
    CHECK(t.value(affine(t, x2, w2, b2)) == Tensor::matrix({{3, 2}}));
}

TEST_CASE("bias gradient counts rows") {
    ParamSets p;
    auto bid = p.add(ParamGroupKind::encoder, "b", Tensor::vector({0.3, -0.2}));
    GradTape t;
    auto x = t.constant(Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
    auto w = t.constant(Tensor::matrix({{1, 0}, {0, 1}}));
    t.backward(sum(t, affine(t, x, w, t.parameter(p, bid))));
    CHECK(t.parameter_gradients().at(bid) == Tensor::vector({3, 3}));
}

TEST_CASE("affine rejects mismatched shapes") {
    GradTape t;
    auto x = t.constant(Tensor::matrix({{1, 2, 3}}));
    auto w = t.constant(Tensor::matrix({{1, 0}, {0, 1}}));
    auto b = t.constant(Tensor::vector({0, 0}));
    CHECK_THROWS_AS(affine(t, x, w, b), DimensionError);
}

TEST_CASE("relu examples") {
    GradTape t;
    CHECK(t.value(relu(t, t.constant(Tensor::vector({-1, 0, 2})))) == Tensor::vector({0, 0, 2}));

    ParamSets p;
    auto neg = p.add(ParamGroupKind::encoder, "neg", Tensor::vector({-1, -2, -0.5}));
    auto mixed = p.add(ParamGroupKind::encoder, "mixed", Tensor::vector({3, -3}));
    GradTape t2;
    auto a = relu(t2, t2.parameter(p, neg));
    auto b = relu(t2, t2.parameter(p, mixed));
    CHECK(t2.value(a) == Tensor::vector({0, 0, 0}));
    t2.backward(add(t2, sum(t2, a), sum(t2, b)));
    const auto g = t2.parameter_gradients();
    CHECK(g.at(neg) == Tensor::vector({0, 0, 0}));
    CHECK(g.at(mixed) == Tensor::vector({1, 0}));
}

TEST_CASE("softmax cross-entropy examples") {
    const int zero[] = {0};
    GradTape t;
    CHECK(t.value(softmax_cross_entropy(t, t.constant(Tensor::matrix({{0, 0}})), zero))[0] ==
          doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(t.value(softmax_cross_entropy(t, t.constant(Tensor::matrix({{2, 0}})), zero))[0] ==
          doctest::Approx(0.126928).epsilon(1e-6));
    const double big = t.value(softmax_cross_entropy(t, t.constant(Tensor::matrix({{1000, 0}})), zero))[0];
    CHECK(std::isfinite(big));
    CHECK(big == doctest::Approx(0.0));
    const int bad[] = {2};
    CHECK_THROWS_AS(softmax_cross_entropy(t, t.constant(Tensor::matrix({{1, 0}})), bad), IndexError);
}

TEST_CASE("softmax rows normalise and cross-entropy is nonnegative") {
    Rng rng(11, 0);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor logits({4, 3});
        for (auto& v : logits.values())
            v = rng.uniform(-50, 50);
        const Tensor p = softmax_rows(logits);
        for (std::size_t r = 0; r < 4; ++r) {
            const auto row = p.row(r);
            CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-12);
        }
        const int targets[] = {0, 1, 2, 1};
        for (double ce : cross_entropy_rows(logits, targets))
            CHECK(ce >= 0.0);
    }
}

TEST_CASE("grl examples") {
    ParamSets p;
    auto id = p.add(ParamGroupKind::encoder, "x", Tensor::vector({1.5, -2.0}));
    for (double coeff : {1.0, 0.5}) {
        GradTape t;
        auto x = t.parameter(p, id);
        auto y = grl(t, x, coeff);
        CHECK(t.value(y) == Tensor::vector({1.5, -2.0}));
        // upstream [0.3, -0.1] via a dot product with constant weights
        auto w = t.constant(Tensor::matrix({{0.3}, {-0.1}}));
        auto flat = t.push(Tensor({1, 2}, std::vector<double>{1.5, -2.0}), [y](GradTape& tt, std::size_t self) {
            auto& g = tt.grad(y);
            g[0] += tt.grad(self)[0];
            g[1] += tt.grad(self)[1];
        });
        t.backward(sum(t, matmul(t, flat, w)));
        const auto g = t.parameter_gradients().at(id);
        CHECK(g[0] == doctest::Approx(-0.3 * coeff));
        CHECK(g[1] == doctest::Approx(0.1 * coeff));
    }
    GradTape t;
    CHECK_THROWS_AS(grl(t, t.constant(Tensor::vector({1})), -1.0), ConfigError);
}

TEST_CASE("grl forward is bitwise identity") {
    Rng rng(3, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor x = random_tensor(rng, {3, 5});
        GradTape t;
        CHECK(t.value(grl(t, t.constant(x), rng.uniform(0.0, 10.0))) == x);
    }
}

TEST_CASE("sgd_step examples") {
    ParamSets p;
    auto a = p.add(ParamGroupKind::encoder, "a", Tensor::vector({1.0}));
    auto b = p.add(ParamGroupKind::classifier, "b", Tensor::vector({2.0}));
    Gradients g{{a, Tensor::vector({0.5})}, {b, Tensor::vector({0.0})}};
    sgd_step(p, g, 0.1);
    CHECK(p.at(a)[0] == doctest::Approx(0.95));
    CHECK(p.at(b)[0] == 2.0);

    Gradients missing{{a, Tensor::vector({0.5})}};
    CHECK_THROWS_AS(sgd_step(p, missing, 0.1), ConsistencyError);
    Gradients wrong{{a, Tensor::vector({0.5, 1.0})}, {b, Tensor::vector({0.0})}};
    CHECK_THROWS_AS(sgd_step(p, wrong, 0.1), ConsistencyError);
}

TEST_CASE("accumulated uses add up before the step") {
    ParamSets p;
    auto id = p.add(ParamGroupKind::encoder, "p", Tensor::vector({1.0}));
    GradTape t;
    // two uses, each contributing 0.2
    auto u1 = scale(t, t.parameter(p, id), 0.2);
    auto u2 = scale(t, t.parameter(p, id), 0.2);
    t.backward(sum(t, add(t, u1, u2)));
    sgd_step(p, t.parameter_gradients(), 1.0);
    CHECK(p.at(id)[0] == doctest::Approx(0.6));
}

TEST_CASE("sgd_step with zero rate is bitwise a no-op") {
    Rng rng(5, 0);
    ParamSets p;
    Gradients g;
    for (int i = 0; i < 3; ++i) {
        auto id = p.add(ParamGroupKind::encoder, "w" + std::to_string(i), random_tensor(rng, {4, 3}));
        g[id] = random_tensor(rng, {4, 3});
    }
    const ParamSets before = p;
    sgd_step(p, g, 0.0);
    CHECK(p == before);
}

TEST_CASE("mean gradient of 2n equals average of two halves") {
    Rng rng(8, 0);
    ParamSets p;
    auto w = p.add(ParamGroupKind::encoder, "w", random_tensor(rng, {3, 2}));
    auto b = p.add(ParamGroupKind::encoder, "b", random_tensor(rng, {2}));
    const std::size_t n = 5;
    const Tensor x = random_tensor(rng, {2 * n, 3});
    std::vector<int> y(2 * n);
    for (auto& v : y)
        v = static_cast<int>(rng.index(2));

    auto grads = [&](std::size_t from, std::size_t count) {
        Tensor xs({count, 3});
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                xs.at(i, j) = x.at(from + i, j);
        GradTape t;
        auto logits = affine(t, relu(t, t.constant(xs)), t.parameter(p, w), t.parameter(p, b));
        t.backward(softmax_cross_entropy(t, logits, std::span<const int>(y).subspan(from, count)));
        return t.parameter_gradients();
    };
    const auto whole = grads(0, 2 * n);
    const auto h1 = grads(0, n);
    const auto h2 = grads(n, n);
    for (const auto& [id, g] : whole)
        for (std::size_t k = 0; k < g.size(); ++k)
            CHECK(std::abs(g[k] - 0.5 * (h1.at(id)[k] + h2.at(id)[k])) <= 1e-10);
}

TEST_CASE("finite differences agree with every op on random instances") {
    Rng rng(2024, 0);
    const double tol = 1e-4;
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t s = 1000 + trial;
        const std::size_t n = 2 + rng.index(3), k = 1 + rng.index(3), m = 1 + rng.index(3);
        CAPTURE(trial);

        CHECK(check_op({random_tensor(rng, {n, k}), random_tensor(rng, {k, m})},
                       [](GradTape& t, const auto& v) { return matmul(t, v[0], v[1]); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, m}), random_tensor(rng, {m})},
                       [](GradTape& t, const auto& v) { return add_bias(t, v[0], v[1]); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, k}), random_tensor(rng, {k, m}), random_tensor(rng, {m})},
                       [](GradTape& t, const auto& v) { return affine(t, v[0], v[1], v[2]); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, m})}, [](GradTape& t, const auto& v) { return relu(t, v[0]); }, s) <=
              tol);
        CHECK(check_op({random_tensor(rng, {n, m})},
                       [](GradTape& t, const auto& v) { return leaky_relu(t, v[0], 0.2); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, m})}, [](GradTape& t, const auto& v) { return scale(t, v[0], -1.7); },
                       s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, m}), random_tensor(rng, {n, m})},
                       [](GradTape& t, const auto& v) { return add(t, v[0], v[1]); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, m})}, [](GradTape& t, const auto& v) { return sum(t, v[0]); }, s) <=
              tol);

        SparseMatrix sp{n, n, {}};
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                if (r == c || rng.uniform() < 0.4)
                    sp.entries.push_back({r, c, rng.uniform(-1, 1)});
        CHECK(check_op({random_tensor(rng, {n, m})}, [&](GradTape& t, const auto& v) { return spmm(t, sp, v[0]); },
                       s) <= tol);

        const std::vector<std::size_t> offsets{0, 1, n};
        CHECK(check_op({random_tensor(rng, {n, m})},
                       [&](GradTape& t, const auto& v) { return segment_mean(t, v[0], offsets); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, k}), random_tensor(rng, {n, m})},
                       [](GradTape& t, const auto& v) { return concat_cols(t, v); }, s) <= tol);

        std::vector<Edge> edges;
        for (std::size_t i = 0; i < n; ++i) {
            edges.push_back({i, i});
            if (i > 0)
                edges.push_back({i, rng.index(i)});
            if (i + 1 < n && rng.uniform() < 0.5)
                edges.push_back({i, i + 1});
        }
        const std::size_t ne = edges.size();
        CHECK(check_op({random_tensor(rng, {n, 1}), random_tensor(rng, {n, 1})},
                       [&](GradTape& t, const auto& v) { return edge_scores(t, v[0], v[1], edges); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {ne, 1})},
                       [&](GradTape& t, const auto& v) { return edge_softmax(t, v[0], edges, n); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {ne, 1}), random_tensor(rng, {n, m})},
                       [&](GradTape& t, const auto& v) { return edge_aggregate(t, v[0], v[1], edges); }, s) <= tol);

        std::vector<int> targets(n);
        std::vector<double> weights(n);
        for (std::size_t i = 0; i < n; ++i) {
            targets[i] = static_cast<int>(rng.index(2));
            weights[i] = rng.uniform(0.1, 2.0);
        }
        CHECK(check_op({random_tensor(rng, {n, 2})},
                       [&](GradTape& t, const auto& v) { return softmax_cross_entropy(t, v[0], targets); }, s) <= tol);
        CHECK(check_op({random_tensor(rng, {n, 2})},
                       [&](GradTape& t, const auto& v) {
                           return weighted_softmax_cross_entropy(t, v[0], targets, weights);
                       },
                       s) <= tol);
    }
}

TEST_CASE("finite_difference_check on p squared") {
    ParamSets p;
    auto id = p.add(ParamGroupKind::encoder, "p", Tensor::vector({3.0}));
    Objective obj;
    obj.gradient = [id](const ParamSets& ps) { return Gradients{{id, Tensor::vector({2.0 * ps.at(id)[0]})}}; };
    obj.value = [id](const ParamSets& ps, ParamId) { return ps.at(id)[0] * ps.at(id)[0]; };
    const auto r = finite_difference_check(obj, p, 1e-5);
    CHECK(r.max_relative_error < 1e-7);
    CHECK(r.worst_analytic == 6.0);

    CHECK_THROWS_AS(finite_difference_check(obj, p, 1e-2), ConfigError);
    CHECK_THROWS_AS(finite_difference_check(obj, p, 1e-9), ConfigError);
}

TEST_CASE("finite_difference_check on affine, relu and cross-entropy") {
    Rng rng(77, 0);
    ParamSets p;
    auto w = p.add(ParamGroupKind::encoder, "w", random_tensor(rng, {4, 3}));
    auto b = p.add(ParamGroupKind::encoder, "b", random_tensor(rng, {3}));
    auto w2 = p.add(ParamGroupKind::classifier, "w2", random_tensor(rng, {3, 2}));
    auto b2 = p.add(ParamGroupKind::classifier, "b2", random_tensor(rng, {2}));
    const Tensor x = random_tensor(rng, {5, 4});
    const int y[] = {0, 1, 1, 0, 1};
    auto build = [&](GradTape& t, const ParamSets& ps) {
        auto h = relu(t, affine(t, t.constant(x), t.parameter(ps, w), t.parameter(ps, b)));
        return softmax_cross_entropy(t, affine(t, h, t.parameter(ps, w2), t.parameter(ps, b2)), y);
    };
    Objective obj;
    obj.gradient = [&](const ParamSets& ps) {
        GradTape t;
        t.backward(build(t, ps));
        return t.parameter_gradients();
    };
    obj.value = [&](const ParamSets& ps, ParamId) {
        GradTape t(false);
        return t.value(build(t, ps))[0];
    };
    const auto r = finite_difference_check(obj, p, 1e-5);
    CHECK(r.checked == p.scalar_count());
    CHECK(r.max_relative_error < 1e-5);
}

TEST_CASE("non-finite loss is reported") {
    ParamSets p;
    p.add(ParamGroupKind::encoder, "p", Tensor::vector({1.0}));
    Objective obj;
    obj.gradient = [](const ParamSets&) { return Gradients{{ParamId{}, Tensor::vector({0.0})}}; };
    obj.value = [](const ParamSets&, ParamId) { return std::nan(""); };
    CHECK_THROWS_AS(finite_difference_check(obj, p, 1e-5), NumericError);
}

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(42, stream::init), b(42, stream::init), c(42, stream::split);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        CHECK(x == b.next());
        differs = differs || x != c.next();
    }
    CHECK(differs);
}

TEST_CASE("tensor rejects zero dimensions") {
    CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{0, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}
