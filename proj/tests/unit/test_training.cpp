#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "coldsan/error.hpp"
#include "coldsan/losses.hpp"
#include "coldsan/ops.hpp"
#include "coldsan/split.hpp"
#include "coldsan/synthetic.hpp"
#include "coldsan/trainer.hpp"

using namespace coldsan;

namespace {

DatasetSplit synthetic_split(std::size_t n, std::size_t d_in, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n_samples = n;
    cfg.d_in = d_in;
    return split_general(generate_synthetic(cfg, seed), 0.75, seed);
}

struct Mat {
    std::size_t r, c;
    std::vector<double> v;
    double& at(std::size_t i, std::size_t j) { return v[i * c + j]; }
};

Mat mat(const Tensor& t) { return {t.rows(), t.cols(), std::vector<double>(t.values().begin(), t.values().end())}; }

}  // namespace

TEST_CASE("classification loss examples") {
    CHECK(loss_cls({0.5, 0.5}, Label::fake) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(loss_cls({0.5, 0.5}, Label::real) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(loss_cls({1.0, 0.0}, Label::fake) == doctest::Approx(0.0));
    CHECK(loss_cls({0.9, 0.1}, Label::fake) == doctest::Approx(0.105361).epsilon(1e-6));
    CHECK(std::isfinite(loss_cls({0.0, 1.0}, Label::fake)));
}

TEST_CASE("discriminator loss examples") {
    CHECK(loss_disc(0.5, 1) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(loss_disc(0.5, 0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(loss_disc(1.0, 1) == doctest::Approx(0.0));
    CHECK(loss_disc(0.2, 0) == doctest::Approx(0.223144).epsilon(1e-6));
    CHECK_THROWS_AS(loss_disc(1.2, 1), NumericError);
    CHECK_THROWS_AS(loss_disc(0.5, 2), IndexError);
}

TEST_CASE("san and total loss examples") {
    CHECK(loss_san(0.7, 0.6) == doctest::Approx(0.1));
    CHECK(loss_san(0.4, 0.0) == 0.4);
    CHECK(total_loss(0.1, 0.2, 2.0) == doctest::Approx(0.5));
    CHECK(total_loss(0.3, 0.9, 0.0) == 0.3);
    CHECK(total_loss(0.3, 0.9, 1.0) == total_loss(0.9, 0.3, 1.0));
    CHECK_THROWS_AS(total_loss(0.3, 0.9, -1.0), ConfigError);
}

TEST_CASE("total loss is affine in lambda with the stripped loss as slope") {
    LossBundle b;
    b.cls_full = 0.8;
    b.disc_full = 0.3;
    b.cls_stripped = 0.9;
    b.disc_stripped = 0.4;
    const double c = b.san_stripped();
    for (double l : {0.0, 0.5, 1.0, 2.0, 10.0})
        CHECK(b.total(l) == doctest::Approx(b.san_full() + l * c).epsilon(1e-15));
}

TEST_CASE("reversal negates the discriminator gradient at the encoder only") {
    SyntheticConfig cfg;
    cfg.n_samples = 4;
    cfg.d_in = 5;
    const Corpus c = generate_synthetic(cfg, 3);
    for (auto kind : kAllEncoders) {
        CAPTURE(to_string(kind));
        const ModelConfig mc{kind, 5, 16, 4};
        const ParamSets p = init_params(mc, 9);
        std::vector<SampleGraph> graphs;
        for (const auto& s : c)
            graphs.push_back(to_graph(s));
        for (const auto& s : strip_propagation(c))
            graphs.push_back(to_graph(s));
        const GraphBatch batch = make_batch(graphs);
        const std::vector<int> structure{1, 1, 1, 1, 0, 0, 0, 0};

        auto disc_grads = [&](bool reverse) {
            GradTape t;
            Var h = encode(t, mc, p, batch);
            t.backward(softmax_cross_entropy(t, discriminator_logits(t, p, h, 1.0, reverse), structure));
            return t.parameter_gradients();
        };
        const auto with = disc_grads(true);
        const auto without = disc_grads(false);
        for (const auto& [id, g] : without) {
            const Tensor& r = with.at(id);
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (id.group == ParamGroupKind::encoder)
                    CHECK(std::abs(r[k] + g[k]) <= 1e-12);
                else
                    CHECK(r[k] == g[k]);
            }
        }
    }
}

TEST_CASE("full objective passes the gradient check on random batches") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        SyntheticConfig cfg;
        cfg.n_samples = 4;
        cfg.d_in = 4;
        cfg.max_depth = 3;
        const Corpus c = generate_synthetic(cfg, 100 + seed);
        for (auto kind : kAllEncoders) {
            CAPTURE(seed);
            CAPTURE(to_string(kind));
            SanBatch batch{{kind, 4, 8, 2}, c, 0.5 + static_cast<double>(seed), 1.0, true};
            const auto r = finite_difference_check(san_objective(batch), init_params(batch.model, seed), 1e-5);
            CHECK(r.max_relative_error <= 1e-4);
        }
    }
}

TEST_CASE("without adversary and lambda zero the trainer reduces to the baseline") {
    const DatasetSplit split = synthetic_split(120, 6, 1);
    TrainingConfig cfg;
    cfg.epochs = 50;
    cfg.patience = 0;
    cfg.d_h = 8;
    cfg.seed = 5;
    cfg.adversarial = false;
    cfg.lambda = 0.0;
    for (auto kind : {EncoderKind::gcn, EncoderKind::gat}) {
        cfg.encoder = kind;
        const auto san = train_san(split, cfg);
        const auto van = train_vanilla(split, cfg);
        CHECK(san.model == van.model);
        REQUIRE(san.trace.epochs.size() == van.trace.epochs.size());
        for (std::size_t e = 0; e < san.trace.epochs.size(); ++e) {
            CHECK(san.trace.epochs[e].losses.cls_full == van.trace.epochs[e].losses.cls_full);
            CHECK(san.trace.epochs[e].validation_accuracy == van.trace.epochs[e].validation_accuracy);
        }
    }
}

TEST_CASE("one step on a two-dimensional model matches hand differentiation") {
    // One training sample, batch 1, no validation: one SGD step on the paired objective.
    NewsSample s;
    s.id = "only";
    s.x = {0.8, 0.3};
    s.label = Label::real;
    PropagationTree tree;
    tree.root_id = "r";
    tree.nodes = {{"r", 0, s.x}, {"c", 1, {0.1, 0.9}}};
    tree.edges = {{"r", "c"}};
    s.tree = tree;
    DatasetSplit split;
    split.train = {s};

    TrainingConfig cfg;
    cfg.encoder = EncoderKind::content;
    cfg.d_h = 2;
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.validation_fraction = 0.0;
    cfg.patience = 0;
    cfg.eta = 0.5;
    cfg.lambda = 1.5;
    cfg.grl_coeff = 0.7;
    cfg.seed = 21;

    const ParamSets init = init_params(cfg.model(2), cfg.seed);
    auto get = [&](ParamGroupKind g, const char* n) { return mat(init.at(init.find(g, n))); };
    Mat w1 = get(ParamGroupKind::encoder, "mlp.w1"), b1 = get(ParamGroupKind::encoder, "mlp.b1");
    Mat w2 = get(ParamGroupKind::encoder, "mlp.w2"), b2 = get(ParamGroupKind::encoder, "mlp.b2");
    Mat wf = get(ParamGroupKind::classifier, "cls.w"), bf = get(ParamGroupKind::classifier, "cls.b");
    Mat wd = get(ParamGroupKind::discriminator, "disc.w"), bd = get(ParamGroupKind::discriminator, "disc.b");

    // Forward. The content encoder ignores the tree, so both copies share h.
    double z1[2], a1[2], z2[2], h[2];
    for (int j = 0; j < 2; ++j) {
        z1[j] = b1.v[j] + s.x[0] * w1.at(0, j) + s.x[1] * w1.at(1, j);
        a1[j] = std::max(z1[j], 0.0);
    }
    for (int j = 0; j < 2; ++j) {
        z2[j] = b2.v[j] + a1[0] * w2.at(0, j) + a1[1] * w2.at(1, j);
        h[j] = std::max(z2[j], 0.0);
    }
    auto softmax2 = [](double l0, double l1) {
        const double m = std::max(l0, l1);
        const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
        return std::array<double, 2>{e0 / (e0 + e1), e1 / (e0 + e1)};
    };
    const auto pf = softmax2(bf.v[0] + h[0] * wf.at(0, 0) + h[1] * wf.at(1, 0),
                             bf.v[1] + h[0] * wf.at(0, 1) + h[1] * wf.at(1, 1));
    const auto pd = softmax2(bd.v[0] + h[0] * wd.at(0, 0) + h[1] * wd.at(1, 0),
                             bd.v[1] + h[0] * wd.at(0, 1) + h[1] * wd.at(1, 1));

    const double L = cfg.lambda;
    // d/dlogits: classifier (1 + lambda)(p - onehot(real)); discriminator (p - e1) + lambda (p - e0)
    const double gf[2] = {(1 + L) * pf[0], (1 + L) * (pf[1] - 1)};
    const double gd[2] = {(pd[0]) + L * (pd[0] - 1), (pd[1] - 1) + L * pd[1]};

    double gh[2];
    for (int i = 0; i < 2; ++i)
        gh[i] = gf[0] * wf.at(i, 0) + gf[1] * wf.at(i, 1) - cfg.grl_coeff * (gd[0] * wd.at(i, 0) + gd[1] * wd.at(i, 1));
    double gz2[2], ga1[2] = {0, 0}, gz1[2];
    for (int j = 0; j < 2; ++j)
        gz2[j] = z2[j] > 0 ? gh[j] : 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            ga1[i] += gz2[j] * w2.at(i, j);
    for (int j = 0; j < 2; ++j)
        gz1[j] = z1[j] > 0 ? ga1[j] : 0.0;

    const double eta = cfg.eta;
    Mat ew1 = w1, eb1 = b1, ew2 = w2, eb2 = b2, ewf = wf, ebf = bf, ewd = wd, ebd = bd;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            ew1.at(i, j) -= eta * s.x[i] * gz1[j];
            ew2.at(i, j) -= eta * a1[i] * gz2[j];
            ewf.at(i, j) -= eta * h[i] * gf[j];
            ewd.at(i, j) -= eta * h[i] * gd[j];
        }
    for (int j = 0; j < 2; ++j) {
        eb1.v[j] -= eta * gz1[j];
        eb2.v[j] -= eta * gz2[j];
        ebf.v[j] -= eta * gf[j];
        ebd.v[j] -= eta * gd[j];
    }

    const auto trained = train_san(split, cfg).model.params;
    auto expect = [&](ParamGroupKind g, const char* n, const Mat& m) {
        const Tensor& got = trained.at(trained.find(g, n));
        for (std::size_t k = 0; k < m.v.size(); ++k)
            CHECK(got[k] == doctest::Approx(m.v[k]).epsilon(1e-12));
    };
    expect(ParamGroupKind::encoder, "mlp.w1", ew1);
    expect(ParamGroupKind::encoder, "mlp.b1", eb1);
    expect(ParamGroupKind::encoder, "mlp.w2", ew2);
    expect(ParamGroupKind::encoder, "mlp.b2", eb2);
    expect(ParamGroupKind::classifier, "cls.w", ewf);
    expect(ParamGroupKind::classifier, "cls.b", ebf);
    expect(ParamGroupKind::discriminator, "disc.w", ewd);
    expect(ParamGroupKind::discriminator, "disc.b", ebd);
}

TEST_CASE("training is deterministic per seed") {
    const DatasetSplit split = synthetic_split(80, 4, 2);
    TrainingConfig cfg;
    cfg.epochs = 5;
    cfg.d_h = 8;
    for (auto kind : kAllEncoders) {
        cfg.encoder = kind;
        CHECK(train_san(split, cfg).model == train_san(split, cfg).model);
    }
}

TEST_CASE("baseline loss decreases on a separable set") {
    Corpus c;
    for (int i = 0; i < 20; ++i) {
        NewsSample s;
        s.id = "s" + std::to_string(i);
        const double sign = i % 2 ? 1.0 : -1.0;
        s.x = {sign * (1.0 + 0.05 * i), 0.3 * std::sin(i)};
        s.label = i % 2 ? Label::real : Label::fake;
        c.push_back(s);
    }
    DatasetSplit split;
    split.train = c;
    TrainingConfig cfg;
    cfg.eta = 0.01;
    cfg.epochs = 40;
    cfg.batch_size = 20;
    cfg.validation_fraction = 0.0;
    cfg.patience = 0;
    cfg.d_h = 8;
    const auto r = train_vanilla(split, cfg);
    for (std::size_t e = 1; e < r.trace.epochs.size(); ++e)
        CHECK(r.trace.epochs[e].losses.cls_full <= r.trace.epochs[e - 1].losses.cls_full);
}

TEST_CASE("zero rate leaves the initial parameters") {
    const DatasetSplit split = synthetic_split(40, 4, 3);
    TrainingConfig cfg;
    cfg.eta = 0.0;
    cfg.epochs = 3;
    cfg.d_h = 8;
    CHECK(train_san(split, cfg).model.params == init_params(cfg.model(4), cfg.seed));
    CHECK(train_vanilla(split, cfg).model.params == init_params(cfg.model(4), cfg.seed));
}

TEST_CASE("training config validation") {
    const DatasetSplit split = synthetic_split(40, 4, 3);
    TrainingConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_vanilla(split, cfg), ConfigError);
    cfg = {};
    cfg.lambda = -1;
    CHECK_THROWS_AS(train_san(split, cfg), ConfigError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train_san(split, cfg), ConfigError);
    CHECK_THROWS_AS(train_san(DatasetSplit{}, TrainingConfig{}), InsufficientDataError);
}

TEST_CASE("non-finite loss stops training") {
    const DatasetSplit split = synthetic_split(40, 4, 3);
    TrainingConfig cfg;
    cfg.eta = 1e300;
    cfg.epochs = 20;
    cfg.d_h = 8;
    CHECK_THROWS_AS(train_san(split, cfg), NumericError);
}

TEST_CASE("prediction examples") {
    CHECK(argmax_label({0.5, 0.5}) == Label::fake);
    CHECK(argmax_label({0.4, 0.6}) == Label::real);

    SyntheticConfig sc;
    sc.n_samples = 10;
    sc.d_in = 3;
    const Corpus c = generate_synthetic(sc, 4);
    Model m = make_model({EncoderKind::gcn, 3, 8}, 0);
    const auto cold = predict(m, strip_propagation(c));
    CHECK(cold.labels.size() == 10);

    // zero message-passing weights: h no longer depends on the graph
    for (auto name : {"gcn.w1", "gcn.w2"})
        m.params.at(m.params.find(ParamGroupKind::encoder, name)).fill(0.0);
    m.params.at(m.params.find(ParamGroupKind::encoder, "gcn.b1")).fill(0.3);
    m.params.at(m.params.find(ParamGroupKind::encoder, "gcn.b2")).fill(0.2);
    const auto warm = predict(m, c), stripped = predict(m, strip_propagation(c));
    CHECK(warm.labels == stripped.labels);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(warm.probabilities[i][0] == doctest::Approx(stripped.probabilities[i][0]).epsilon(1e-12));
}

TEST_CASE("trace file has one record per epoch") {
    const DatasetSplit split = synthetic_split(60, 4, 6);
    TrainingConfig cfg;
    cfg.epochs = 4;
    cfg.patience = 0;
    cfg.d_h = 8;
    const auto r = train_san(split, cfg);
    const auto path = std::filesystem::temp_directory_path() / "coldsan_trace.jsonl";
    save_trace(r.trace, cfg, path);
    std::ifstream in(path);
    std::string line;
    std::vector<nlohmann::json> lines;
    while (std::getline(in, line))
        lines.push_back(nlohmann::json::parse(line));
    REQUIRE(lines.size() == 6);
    for (std::size_t e = 1; e <= 4; ++e) {
        const auto& j = lines[e];
        CHECK(j.at("epoch") == e);
        for (auto key : {"cls_full", "cls_stripped", "disc_full", "disc_stripped", "total", "validation_accuracy"})
            CHECK(j.contains(key));
        CHECK(j.at("total").get<double>() == r.trace.epochs[e - 1].total);
    }
    std::filesystem::remove(path);
}

TEST_CASE("both copies of every batch reach the discriminator") {
    SyntheticConfig sc;
    sc.n_samples = 6;
    sc.d_in = 3;
    SanBatch b{{EncoderKind::gcn, 3, 8}, generate_synthetic(sc, 1), 1.0, 1.0, true};
    ParamSets p = init_params(b.model, 0);
    for (auto& param : p.discriminator)
        param.value.fill(0.0);
    const auto ev = evaluate_san_batch(b, p, false);
    CHECK(*ev.losses.disc_full == doctest::Approx(std::log(2.0)));
    CHECK(*ev.losses.disc_stripped == doctest::Approx(std::log(2.0)));
    // a discriminator that always answers "with structure" is right on the full half only
    p.discriminator[1].value = Tensor::vector({-20, 20});
    const auto biased = evaluate_san_batch(b, p, false);
    CHECK(*biased.losses.disc_full < 1e-6);
    CHECK(*biased.losses.disc_stripped > 10.0);
}
