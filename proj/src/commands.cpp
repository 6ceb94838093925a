#include "coldsan/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "coldsan/corpus_io.hpp"
#include "coldsan/error.hpp"
#include "coldsan/experiment.hpp"
#include "coldsan/split.hpp"
#include "coldsan/synthetic.hpp"
#include "coldsan/trainer.hpp"

namespace coldsan {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::data:
    case ErrorKind::io: return exit_data;
    case ErrorKind::numeric: return exit_numeric;
    }
    return exit_failure;
}

std::vector<GradcheckRow> run_gradcheck(const RunConfig& config, std::uint64_t seed, double epsilon, bool corrupt) {
    SyntheticConfig sc = config.synthetic;
    sc.n_samples = kGradcheckBatch;
    sc.max_depth = std::min<std::size_t>(sc.max_depth, 3);
    sc.n_events = 1;
    sc.validate();
    const Corpus batch_samples = generate_synthetic(sc, seed);

    std::vector<GradcheckRow> rows;
    for (auto kind : kAllEncoders) {
        TrainingConfig tc = config.training;
        tc.encoder = kind;
        SanBatch batch{tc.model(sc.d_in), batch_samples, tc.lambda, tc.grl_coeff, true};
        batch.model.validate();
        Objective objective = san_objective(batch);
        if (corrupt) {
            auto inner = objective.gradient;
            objective.gradient = [inner](const ParamSets& p) {
                Gradients g = inner(p);
                auto& first = g.begin()->second;
                first[0] += 1e-2 + std::abs(first[0]);
                return g;
            };
        }
        const ParamSets params = init_params(batch.model, seed);
        GradcheckRow row;
        row.encoder = kind;
        row.result = finite_difference_check(objective, params, epsilon);
        row.passed = row.result.max_relative_error <= kGradcheckTolerance;
        rows.push_back(row);
    }
    return rows;
}

namespace {

/// Flags that override values from the config file.
struct Overrides {
    std::optional<std::string> encoder, mode, protocol, validation_view;
    std::optional<std::size_t> d_h, epochs, batch_size, patience;
    std::optional<double> eta, lambda, grl_coeff, train_ratio, validation_fraction;
    std::optional<bool> adversarial, stratified;
    std::vector<std::uint64_t> seeds;

    void attach(CLI::App& app) {
        app.add_option("--encoder", encoder, "content | gcn | gat | bigcn");
        app.add_option("--mode", mode, "san | vanilla");
        app.add_option("--protocol", protocol, "general | event-aware");
        app.add_option("--validation-view", validation_view, "full | stripped");
        app.add_option("--d-h", d_h);
        app.add_option("--epochs", epochs);
        app.add_option("--batch-size", batch_size);
        app.add_option("--patience", patience);
        app.add_option("--eta", eta);
        app.add_option("--lambda", lambda);
        app.add_option("--grl-coeff", grl_coeff);
        app.add_option("--train-ratio", train_ratio);
        app.add_option("--validation-fraction", validation_fraction);
        app.add_option("--adversarial", adversarial);
        app.add_option("--stratified", stratified);
        app.add_option("--seeds", seeds, "seed list")->delimiter(',');
    }

    void apply(RunConfig& c) const {
        if (encoder)
            c.training.encoder = parse_encoder_kind(*encoder);
        if (mode)
            c.mode = parse_train_mode(*mode);
        if (protocol)
            c.protocol = parse_protocol(*protocol);
        if (validation_view) {
            if (*validation_view == "full")
                c.training.validation_view = ValidationView::full;
            else if (*validation_view == "stripped")
                c.training.validation_view = ValidationView::stripped;
            else
                throw ConfigError("unknown validation view '" + *validation_view + "' (expected full or stripped)");
        }
        if (d_h)
            c.training.d_h = *d_h;
        if (epochs)
            c.training.epochs = *epochs;
        if (batch_size)
            c.training.batch_size = *batch_size;
        if (patience)
            c.training.patience = *patience;
        if (eta)
            c.training.eta = *eta;
        if (lambda)
            c.training.lambda = *lambda;
        if (grl_coeff)
            c.training.grl_coeff = *grl_coeff;
        if (train_ratio)
            c.train_ratio = *train_ratio;
        if (validation_fraction)
            c.training.validation_fraction = *validation_fraction;
        if (adversarial)
            c.training.adversarial = *adversarial;
        if (stratified)
            c.stratified = *stratified;
        if (!seeds.empty())
            c.seeds = seeds;
    }
};

RunConfig resolve(const std::optional<std::string>& path, const Overrides& o) {
    RunConfig c = path ? load_run_config(*path) : RunConfig{};
    o.apply(c);
    c.training.validate();
    c.synthetic.validate();
    return c;
}

void warn_off_grid(const RunConfig& c, std::ostream& err) {
    if (c.mode != TrainMode::san)
        return;
    const double l = c.training.lambda;
    if (std::find(c.lambda_grid.begin(), c.lambda_grid.end(), l) == c.lambda_grid.end())
        err << "warning: lambda " << l << " is not on the search grid\n";
}

std::string fixed(double v, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void print_summary(const CorpusSummary& s, std::ostream& out) {
    out << "fake " << s.fake << ", real " << s.real << ", with tree " << s.with_tree << "\n";
    for (const auto& [event, n] : s.per_event)
        out << "  " << event << ": " << n << "\n";
    out << "mean depth fake " << fixed(s.mean_depth_fake) << ", real " << fixed(s.mean_depth_real) << "\n";
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path() && !fs::exists(p.parent_path()))
        throw IoError("directory does not exist: " + p.parent_path().string());
}

// ---- generate

struct GenerateArgs {
    std::optional<std::string> config;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<std::size_t> n;
    std::optional<double> fake_ratio, content_sep, structure_sep;
    std::optional<std::size_t> d_in, events;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    RunConfig c = a.config ? load_run_config(*a.config) : RunConfig{};
    if (a.n)
        c.synthetic.n_samples = *a.n;
    if (a.fake_ratio)
        c.synthetic.fake_ratio = *a.fake_ratio;
    if (a.content_sep)
        c.synthetic.content_separation = *a.content_sep;
    if (a.structure_sep)
        c.synthetic.structure_separation = *a.structure_sep;
    if (a.d_in)
        c.synthetic.d_in = *a.d_in;
    if (a.events)
        c.synthetic.n_events = *a.events;
    c.synthetic.validate();
    ensure_parent(a.out);
    const Corpus corpus = generate_synthetic(c.synthetic, a.seed);
    save_dataset(corpus, a.out);
    out << "wrote " << corpus.size() << " samples to " << a.out << "\n";
    print_summary(summarize(corpus), out);
    return exit_ok;
}

// ---- train

struct TrainArgs {
    std::optional<std::string> config;
    std::string corpus;
    std::string out;
    std::optional<std::string> trace, split_out, held_out_event;
    std::uint64_t seed = 0;
    Overrides overrides;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig c = resolve(a.config, a.overrides);
    c.training.seed = a.seed;
    warn_off_grid(c, err);
    const Corpus corpus = load_dataset(a.corpus);
    if (corpus.empty())
        throw InsufficientDataError("corpus " + a.corpus + " has no samples");

    DatasetSplit split;
    if (c.protocol == Protocol::event_aware) {
        if (!a.held_out_event)
            throw ConfigError("event-aware training needs --held-out-event");
        for (const auto& s : corpus)
            if (!s.event)
                throw ConfigError("event-aware protocol needs event tags; sample '" + s.id + "' has none");
        split = split_event_aware(corpus, *a.held_out_event);
    } else {
        split = split_general(corpus, c.train_ratio, a.seed, c.stratified);
    }

    ensure_parent(a.out);
    TrainResult r = c.mode == TrainMode::san ? train_san(split, c.training) : train_vanilla(split, c.training);
    save_checkpoint(r.model, a.out);
    if (a.trace)
        save_trace(r.trace, c.training, *a.trace);
    if (a.split_out)
        save_split_descriptor(split.provenance, *a.split_out);

    out << to_string(c.mode) << " " << to_string(c.training.encoder) << " trained on " << split.train.size()
        << " samples, " << r.trace.epochs.size() << " epoch(s), best epoch " << r.trace.best_epoch << "\n";
    out << "checkpoint " << a.out << "\n";
    return exit_ok;
}

// ---- eval

struct EvalArgs {
    std::optional<std::string> config, checkpoint, split, dump_embeddings, baseline_out;
    std::string corpus;
    std::string out;
    bool compare_baseline = false;
    bool sweep = false;
    bool dump_train = false;
    Overrides overrides;
};

int eval_checkpoint(const EvalArgs& a, std::ostream& out) {
    const Model model = load_checkpoint(*a.checkpoint);
    const Corpus corpus = load_dataset(a.corpus);
    if (corpus.empty())
        throw InsufficientDataError("corpus " + a.corpus + " has no samples");
    const std::size_t d = corpus_dimension(corpus);
    if (d != model.config.d_in)
        throw DataError("checkpoint expects " + std::to_string(model.config.d_in) + "-dim features but " + a.corpus +
                        " has " + std::to_string(d));

    DatasetSplit split;
    if (a.split) {
        split = apply_split(corpus, load_split_descriptor(*a.split));
    } else {
        split.test = corpus;
    }

    ExperimentReport report;
    report.config = {{"checkpoint", fs::path(*a.checkpoint).filename().string()},
                     {"encoder", std::string(to_string(model.config.encoder))},
                     {"d_in", model.config.d_in},
                     {"d_h", model.config.d_h},
                     {"seed", model.seed},
                     {"corpus", fs::path(a.corpus).filename().string()},
                     {"test_size", split.test.size()}};
    report.fingerprint = fingerprint(report.config);
    report.seeds.push_back(evaluate_model(model, split.test, model.seed));
    ensure_parent(a.out);
    write_report(report, a.out);
    if (a.dump_embeddings) {
        std::vector<TaggedSample> tagged;
        if (a.dump_train)
            tagged = tag_split(split);
        else
            for (const auto& s : split.test)
                tagged.push_back({&s, EmbeddingTag::test});
        dump_embeddings(model, tagged, *a.dump_embeddings);
        out << "embeddings: " << tagged.size() << " records\n";
    }
    out << format_table(report);
    return exit_ok;
}

int eval_experiment(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig c = resolve(a.config, a.overrides);
    const Corpus corpus = load_dataset(a.corpus);
    ensure_parent(a.out);

    if (a.sweep) {
        const LambdaSweep sweep = sweep_lambda(corpus, c, c.lambda_grid);
        RunConfig base = c;
        base.mode = TrainMode::vanilla;
        const ExperimentReport baseline = run_experiment(corpus, base);
        for (std::size_t i = 0; i < sweep.grid.size(); ++i)
            out << "lambda " << sweep.grid[i] << ": cold accuracy "
                << fixed(sweep.reports[i].summary().at("accuracy").mean) << "\n";
        const auto& best = sweep.reports[sweep.best];
        const double p = compare_reports(best, baseline);
        write_report(best, a.out, p);
        if (a.baseline_out)
            write_report(baseline, *a.baseline_out);
        out << "best lambda " << sweep.grid[sweep.best] << "\n" << format_table(best);
        out << "baseline (no SAN)\n" << format_table(baseline);
        out << "paired p-value " << fixed(p, 6) << "\n";
        return exit_ok;
    }

    warn_off_grid(c, err);
    const ExperimentReport report = run_experiment(corpus, c);
    std::optional<double> p;
    if (a.compare_baseline) {
        RunConfig base = c;
        base.mode = TrainMode::vanilla;
        const ExperimentReport baseline = run_experiment(corpus, base);
        p = compare_reports(report, baseline);
        if (a.baseline_out)
            write_report(baseline, *a.baseline_out);
        out << "baseline (no SAN)\n" << format_table(baseline);
    }
    write_report(report, a.out, p);
    out << format_table(report);
    if (p)
        out << "paired p-value " << fixed(*p, 6) << "\n";
    return exit_ok;
}

// ---- gradcheck

struct GradcheckArgs {
    std::optional<std::string> config;
    std::uint64_t seed = 0;
    double epsilon = kGradcheckEpsilon;
    bool corrupt = false;
    Overrides overrides;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    const RunConfig c = resolve(a.config, a.overrides);
    const auto rows = run_gradcheck(c, a.seed, a.epsilon, a.corrupt);
    bool ok = true;
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-8s max_rel_err %.3e  params %zu  %s\n",
                      std::string(to_string(r.encoder)).c_str(), r.result.max_relative_error, r.result.checked,
                      r.passed ? "ok" : "FAIL");
        out << line;
        ok = ok && r.passed;
    }
    return ok ? exit_ok : exit_numeric;
}

// ---- report

struct ReportArgs {
    std::vector<std::string> inputs;
    std::optional<std::string> out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    std::vector<ExperimentReport> parts;
    for (const auto& p : a.inputs)
        parts.push_back(read_report(p));
    const auto merged = merge_reports(parts);
    if (a.out) {
        if (merged.size() != 1) {
            std::string fps;
            for (const auto& m : merged)
                fps += " " + m.fingerprint;
            throw ConfigError("inputs come from " + std::to_string(merged.size()) +
                              " different configurations:" + fps);
        }
        ensure_parent(*a.out);
        write_report(merged.front(), *a.out);
    }
    for (const auto& m : merged)
        out << format_table(m);
    return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cold-start fake news detection with structure-adversarial training"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "write a synthetic corpus");
    g->add_option("--config", gen.config)->check(CLI::ExistingFile);
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out)->required();
    g->add_option("--n", gen.n);
    g->add_option("--fake-ratio", gen.fake_ratio);
    g->add_option("--content-separation", gen.content_sep);
    g->add_option("--structure-separation", gen.structure_sep);
    g->add_option("--d-in", gen.d_in);
    g->add_option("--events", gen.events);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train one model");
    t->add_option("--config", tr.config)->check(CLI::ExistingFile);
    t->add_option("--corpus", tr.corpus)->required();
    t->add_option("--out", tr.out, "checkpoint path")->required();
    t->add_option("--trace", tr.trace, "per-epoch loss trace path");
    t->add_option("--split-out", tr.split_out, "write the split descriptor here");
    t->add_option("--held-out-event", tr.held_out_event);
    t->add_option("--seed", tr.seed);
    tr.overrides.attach(*t);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "evaluate a checkpoint or run a multi-seed experiment");
    e->add_option("--config", ev.config)->check(CLI::ExistingFile);
    e->add_option("--checkpoint", ev.checkpoint);
    e->add_option("--split", ev.split, "split descriptor written by train");
    e->add_option("--corpus", ev.corpus)->required();
    e->add_option("--out", ev.out, "report path")->required();
    e->add_option("--dump-embeddings", ev.dump_embeddings);
    e->add_flag("--dump-train", ev.dump_train, "also dump train-full and train-stripped embeddings");
    e->add_option("--baseline-out", ev.baseline_out);
    e->add_flag("--compare-baseline", ev.compare_baseline);
    e->add_flag("--sweep-lambda", ev.sweep);
    ev.overrides.attach(*e);

    GradcheckArgs gc;
    auto* c = app.add_subcommand("gradcheck", "finite-difference check of every encoder");
    c->add_option("--config", gc.config)->check(CLI::ExistingFile);
    c->add_option("--seed", gc.seed);
    c->add_option("--epsilon", gc.epsilon);
    c->add_flag("--corrupt-gradient", gc.corrupt)->group("");
    gc.overrides.attach(*c);

    ReportArgs rp;
    auto* r = app.add_subcommand("report", "merge per-seed reports");
    r->add_option("inputs", rp.inputs)->required();
    r->add_option("--out", rp.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        const int rc = pe.get_exit_code();
        if (rc == 0) {
            out << app.help();
            return exit_ok;
        }
        err << "error: " << pe.what() << "\n";
        return exit_config;
    }

    try {
        if (*g)
            return cmd_generate(gen, out);
        if (*t)
            return cmd_train(tr, out, err);
        if (*e) {
            if (ev.checkpoint) {
                if (ev.config || ev.sweep || ev.compare_baseline)
                    throw ConfigError("--checkpoint cannot be combined with --config, --sweep-lambda or --compare-baseline");
                return eval_checkpoint(ev, out);
            }
            if (ev.dump_embeddings || ev.split)
                throw ConfigError("--dump-embeddings and --split need --checkpoint");
            return eval_experiment(ev, out, err);
        }
        if (*c)
            return cmd_gradcheck(gc, out);
        if (*r)
            return cmd_report(rp, out);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_code_for(ex.kind());
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_failure;
    }
    return exit_failure;
}

}  // namespace coldsan
