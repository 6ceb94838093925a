#include "coldsan/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coldsan/config.hpp"
#include "coldsan/error.hpp"
#include "coldsan/graph_batch.hpp"
#include "coldsan/ops.hpp"
#include "coldsan/rng.hpp"

namespace coldsan {

void TrainingConfig::validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw ConfigError("learning rate must be finite and nonnegative");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ConfigError("lambda must be finite and nonnegative");
    if (epochs == 0)
        throw ConfigError("epochs must be at least 1");
    if (batch_size == 0)
        throw ConfigError("batch size must be at least 1");
    if (!(grl_coeff >= 0.0))
        throw ConfigError("gradient reversal coefficient must be nonnegative");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation fraction must lie in [0, 1)");
    if (d_h == 0)
        throw ConfigError("d_h must be positive");
}

Label argmax_label(const std::array<double, 2>& p) { return p[0] >= p[1] ? Label::fake : Label::real; }

namespace {

struct StepOutcome {
    LossBundle losses;
    Var objective;
};

double mean_of(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
        s += v[i];
    return s / static_cast<double>(hi - lo);
}

// Records one batch on the tape. Without stripped graphs this is exactly the
// vanilla classification objective.
StepOutcome record_step(GradTape& t, const ModelConfig& mc, const ParamSets& p,
                        std::span<const SampleGraph* const> full, std::span<const SampleGraph* const> stripped,
                        std::span<const Label> labels, double lambda, bool adversarial, double coeff,
                        bool reverse) {
    const std::size_t B = full.size();
    std::vector<int> targets;
    for (auto l : labels)
        targets.push_back(static_cast<int>(l));

    StepOutcome out;
    if (stripped.empty()) {
        const GraphBatch batch = make_batch(full);
        Var h = encode(t, mc, p, batch);
        Var logits = classifier_logits(t, p, h);
        out.objective = softmax_cross_entropy(t, logits, targets);
        out.losses.cls_full = t.value(out.objective)[0];
        return out;
    }

    std::vector<const SampleGraph*> both(full.begin(), full.end());
    both.insert(both.end(), stripped.begin(), stripped.end());
    const GraphBatch batch = make_batch(std::span<const SampleGraph* const>(both));
    Var h = encode(t, mc, p, batch);

    std::vector<int> cls_targets = targets;
    cls_targets.insert(cls_targets.end(), targets.begin(), targets.end());
    std::vector<double> weights(2 * B, 1.0 / static_cast<double>(B));
    for (std::size_t i = B; i < 2 * B; ++i)
        weights[i] = lambda / static_cast<double>(B);

    Var cls_logits = classifier_logits(t, p, h);
    Var cls = weighted_softmax_cross_entropy(t, cls_logits, cls_targets, weights);
    const auto cls_rows = cross_entropy_rows(t.value(cls_logits), cls_targets);
    out.losses.cls_full = mean_of(cls_rows, 0, B);
    out.losses.cls_stripped = mean_of(cls_rows, B, 2 * B);
    out.objective = cls;

    if (adversarial) {
        std::vector<int> structure(2 * B, 0);
        for (std::size_t i = 0; i < B; ++i)
            structure[i] = 1;
        Var d_logits = discriminator_logits(t, p, h, coeff, reverse);
        Var disc = weighted_softmax_cross_entropy(t, d_logits, structure, weights);
        const auto d_rows = cross_entropy_rows(t.value(d_logits), structure);
        out.losses.disc_full = mean_of(d_rows, 0, B);
        out.losses.disc_stripped = mean_of(d_rows, B, 2 * B);
        out.objective = add(t, cls, disc);
    }
    return out;
}

double accuracy_on(const ModelConfig& mc, const ParamSets& p, const std::vector<SampleGraph>& graphs,
                   const std::vector<Label>& labels) {
    std::size_t correct = 0;
    constexpr std::size_t chunk = 128;
    for (std::size_t lo = 0; lo < graphs.size(); lo += chunk) {
        const std::size_t hi = std::min(graphs.size(), lo + chunk);
        const GraphBatch batch = make_batch(std::span<const SampleGraph>(graphs.data() + lo, hi - lo));
        GradTape t(false);
        const Tensor& logits = t.value(classifier_logits(t, p, encode(t, mc, p, batch)));
        for (std::size_t r = 0; r < logits.rows(); ++r) {
            const Label pred = logits.at(r, 0) >= logits.at(r, 1) ? Label::fake : Label::real;
            correct += pred == labels[lo + r];
        }
    }
    return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

double mean_cls_loss(const ModelConfig& mc, const ParamSets& p, const std::vector<SampleGraph>& graphs,
                     const std::vector<std::size_t>& idx, const std::vector<Label>& labels) {
    double total = 0.0;
    constexpr std::size_t chunk = 128;
    for (std::size_t lo = 0; lo < idx.size(); lo += chunk) {
        const std::size_t hi = std::min(idx.size(), lo + chunk);
        std::vector<const SampleGraph*> part;
        std::vector<int> targets;
        for (std::size_t k = lo; k < hi; ++k) {
            part.push_back(&graphs[idx[k]]);
            targets.push_back(static_cast<int>(labels[idx[k]]));
        }
        const GraphBatch batch = make_batch(std::span<const SampleGraph* const>(part));
        GradTape t(false);
        const Tensor& logits = t.value(classifier_logits(t, p, encode(t, mc, p, batch)));
        for (double v : cross_entropy_rows(logits, targets))
            total += v;
    }
    return total / static_cast<double>(idx.size());
}

enum class Mode { san, vanilla };

TrainResult train_impl(const DatasetSplit& split, const TrainingConfig& config, Mode mode) {
    config.validate();
    const Corpus& train = split.train;
    if (train.empty())
        throw InsufficientDataError("training set is empty");
    const std::size_t d_in = train.front().x.size();
    const ModelConfig mc = config.model(d_in);

    // Seeded validation hold-out.
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    Rng val_rng(config.seed, stream::validation);
    val_rng.shuffle(order);
    std::size_t n_val =
        static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(train.size()) + 0.5));
    if (n_val >= train.size())
        n_val = train.size() - 1;
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(fit_idx.begin(), fit_idx.end());

    std::vector<SampleGraph> full, stripped;
    std::vector<Label> labels;
    for (const auto& s : train) {
        full.push_back(to_graph(s));
        NewsSample cold = s;
        cold.tree.reset();
        stripped.push_back(to_graph(cold));
        labels.push_back(s.label);
    }
    std::vector<SampleGraph> val_graphs;
    std::vector<Label> val_labels;
    for (auto i : val_idx) {
        val_graphs.push_back(config.validation_view == ValidationView::full ? full[i] : stripped[i]);
        val_labels.push_back(labels[i]);
    }

    Model model = make_model(mc, config.seed);
    const bool reduced = mode == Mode::vanilla || (!config.adversarial && config.lambda == 0.0);
    const bool uses_disc = mode == Mode::san && config.adversarial;
    const GroupSet groups = uses_disc ? GroupSet::all() : GroupSet::without_discriminator();

    TrainingTrace trace;
    ParamSets best = model.params;
    double best_acc = -1.0;
    std::size_t since_best = 0;
    Rng shuffle_rng(config.seed, stream::shuffle);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double coeff = config.grl_schedule ? config.grl_schedule(epoch) : config.grl_coeff;
        std::vector<std::size_t> perm = fit_idx;
        shuffle_rng.shuffle(perm);

        EpochRecord rec;
        rec.epoch = epoch;
        double cls_f = 0.0, cls_s = 0.0, disc_f = 0.0, disc_s = 0.0;
        bool have_s = false, have_d = false;
        for (std::size_t lo = 0; lo < perm.size(); lo += config.batch_size) {
            const std::size_t hi = std::min(perm.size(), lo + config.batch_size);
            std::vector<const SampleGraph*> bf, bs;
            std::vector<Label> bl;
            for (std::size_t k = lo; k < hi; ++k) {
                bf.push_back(&full[perm[k]]);
                bs.push_back(&stripped[perm[k]]);
                bl.push_back(labels[perm[k]]);
            }
            GradTape tape;
            const auto step = record_step(tape, mc, model.params, bf,
                                          reduced ? std::span<const SampleGraph* const>{} : bs, bl,
                                          config.lambda, uses_disc, coeff, true);
            const double objective = tape.value(step.objective)[0];
            if (!std::isfinite(objective)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << ", batch starting at " << lo;
                for (const auto& r : trace.epochs)
                    msg << "\n  epoch " << r.epoch << " total " << r.total;
                throw NumericError(msg.str());
            }
            tape.backward(step.objective);
            sgd_step(model.params, tape.parameter_gradients(), config.eta, groups);

            const double w = static_cast<double>(hi - lo);
            cls_f += w * step.losses.cls_full;
            if (step.losses.cls_stripped) {
                cls_s += w * *step.losses.cls_stripped;
                have_s = true;
            }
            if (step.losses.disc_full) {
                disc_f += w * *step.losses.disc_full;
                disc_s += w * *step.losses.disc_stripped;
                have_d = true;
            }
        }
        const double n_fit = static_cast<double>(perm.size());
        rec.losses.cls_full = cls_f / n_fit;
        if (have_s)
            rec.losses.cls_stripped = cls_s / n_fit;
        else if (mode == Mode::san)  // reporting only; the update never saw the stripped copy
            rec.losses.cls_stripped = mean_cls_loss(mc, model.params, stripped, fit_idx, labels);
        if (have_d) {
            rec.losses.disc_full = disc_f / n_fit;
            rec.losses.disc_stripped = disc_s / n_fit;
        }
        rec.total = mode == Mode::san ? rec.losses.total(config.lambda) : rec.losses.cls_full;
        if (!std::isfinite(rec.total))
            throw NumericError("non-finite epoch loss at epoch " + std::to_string(epoch));

        if (!val_graphs.empty()) {
            const double acc = accuracy_on(mc, model.params, val_graphs, val_labels);
            rec.validation_accuracy = acc;
            if (acc > best_acc) {
                best_acc = acc;
                best = model.params;
                trace.best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        } else {
            best = model.params;
            trace.best_epoch = epoch;
        }
        trace.epochs.push_back(std::move(rec));
        if (config.patience > 0 && since_best >= config.patience) {
            trace.stopped_early = true;
            break;
        }
    }
    model.params = std::move(best);
    return {std::move(model), std::move(trace)};
}

}  // namespace

TrainResult train_san(const DatasetSplit& split, const TrainingConfig& config) {
    return train_impl(split, config, Mode::san);
}

TrainResult train_vanilla(const DatasetSplit& split, const TrainingConfig& config) {
    return train_impl(split, config, Mode::vanilla);
}

PredictResult predict(const Model& model, std::span<const NewsSample> samples) {
    PredictResult out;
    out.hidden = encode_samples(model, samples);
    for (const auto& h : out.hidden) {
        out.probabilities.push_back(classify(model.params, h.h));
        out.labels.push_back(argmax_label(out.probabilities.back()));
    }
    return out;
}

SanEvaluation evaluate_san_batch(const SanBatch& batch, const ParamSets& params, bool with_gradients,
                                 bool reverse) {
    std::vector<SampleGraph> full, stripped;
    std::vector<Label> labels;
    for (const auto& s : batch.samples) {
        full.push_back(to_graph(s));
        NewsSample cold = s;
        cold.tree.reset();
        stripped.push_back(to_graph(cold));
        labels.push_back(s.label);
    }
    std::vector<const SampleGraph*> bf, bs;
    for (std::size_t i = 0; i < full.size(); ++i) {
        bf.push_back(&full[i]);
        bs.push_back(&stripped[i]);
    }
    GradTape tape(with_gradients);
    const auto step = record_step(tape, batch.model, params, bf, bs, labels, batch.lambda, batch.adversarial,
                                  batch.grl_coeff, reverse);
    SanEvaluation ev;
    ev.losses = step.losses;
    ev.classification = step.losses.cls_full + batch.lambda * step.losses.cls_stripped.value_or(0.0);
    ev.discrimination =
        step.losses.disc_full.value_or(0.0) + batch.lambda * step.losses.disc_stripped.value_or(0.0);
    if (with_gradients) {
        tape.backward(step.objective);
        ev.gradients = tape.parameter_gradients();
        // Parameters the objective never reached still get (zero) gradients.
        for (const auto& id : params.ids())
            ev.gradients.try_emplace(id, Tensor(params.at(id).shape(), 0.0));
    }
    return ev;
}

Objective san_objective(const SanBatch& batch) {
    Objective o;
    o.gradient = [batch](const ParamSets& p) { return evaluate_san_batch(batch, p, true).gradients; };
    o.value = [batch](const ParamSets& p, ParamId id) {
        const auto ev = evaluate_san_batch(batch, p, false);
        if (!batch.adversarial)
            return ev.classification;
        const double sign = id.group == ParamGroupKind::encoder ? -batch.grl_coeff : 1.0;
        return ev.classification + sign * ev.discrimination;
    };
    return o;
}

void save_trace(const TrainingTrace& trace, const TrainingConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write trace " + path.string());
    out << nlohmann::json{{"format", "coldsan-trace"}, {"config", to_json(config)}}.dump() << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    for (const auto& r : trace.epochs) {
        out << nlohmann::json{{"epoch", r.epoch},
                              {"cls_full", r.losses.cls_full},
                              {"cls_stripped", opt(r.losses.cls_stripped)},
                              {"disc_full", opt(r.losses.disc_full)},
                              {"disc_stripped", opt(r.losses.disc_stripped)},
                              {"total", r.total},
                              {"validation_accuracy", opt(r.validation_accuracy)}}
                   .dump()
            << '\n';
    }
    out << nlohmann::json{{"best_epoch", trace.best_epoch}, {"stopped_early", trace.stopped_early}}.dump() << '\n';
}

}  // namespace coldsan
