#include "coldsan/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "coldsan/error.hpp"
#include "coldsan/stats.hpp"

namespace coldsan {

using nlohmann::json;

namespace {

TrainResult train_with(const DatasetSplit& split, const RunConfig& config, std::uint64_t seed) {
    TrainingConfig tc = config.training;
    tc.seed = seed;
    return config.mode == TrainMode::san ? train_san(split, tc) : train_vanilla(split, tc);
}

std::vector<Label> labels_of(const Corpus& c) {
    std::vector<Label> out;
    for (const auto& s : c)
        out.push_back(s.label);
    return out;
}

void require_cold(const Corpus& test) {
    for (const auto& s : test)
        if (s.tree)
            throw ConsistencyError("test sample '" + s.id + "' still carries a propagation tree");
}

MetricSummary summarize_values(const std::vector<double>& v) {
    MetricSummary s;
    if (v.empty())
        return s;
    double sum = 0.0;
    for (double x : v)
        sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    // Rounding can push the mean of identical values a hair outside [min, max].
    s.mean = std::clamp(s.mean, s.min, s.max);
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v)
            ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

json metrics_json(const Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"macro_f1", m.macro_f1},
            {"f1_fake", m.f1_fake},
            {"f1_real", m.f1_real},
            {"weighted_f1", m.weighted_f1}};
}

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    m.f1_fake = j.at("f1_fake").get<double>();
    m.f1_real = j.at("f1_real").get<double>();
    m.weighted_f1 = j.at("weighted_f1").get<double>();
    return m;
}

}  // namespace

std::vector<double> ExperimentReport::values(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : seeds) {
        if (key == "accuracy")
            out.push_back(s.cold.accuracy);
        else if (key == "macro_f1")
            out.push_back(s.cold.macro_f1);
        else if (key == "f1_fake")
            out.push_back(s.cold.f1_fake);
        else if (key == "f1_real")
            out.push_back(s.cold.f1_real);
        else if (key == "weighted_f1")
            out.push_back(s.cold.weighted_f1);
        else if (key == "warm_accuracy") {
            if (s.warm)
                out.push_back(s.warm->accuracy);
        } else if (key == "event_average") {
            if (s.event_average)
                out.push_back(*s.event_average);
        } else if (key.starts_with("wf1:")) {
            for (const auto& [e, v] : s.event_weighted_f1)
                if (e == key.substr(4))
                    out.push_back(v);
        } else {
            throw LookupError("unknown report metric '" + key + "'");
        }
    }
    return out;
}

std::map<std::string, MetricSummary> ExperimentReport::summary() const {
    std::map<std::string, MetricSummary> out;
    std::vector<std::string> keys{"accuracy", "macro_f1", "f1_fake", "f1_real", "weighted_f1", "warm_accuracy",
                                  "event_average"};
    for (const auto& e : events)
        keys.push_back("wf1:" + e);
    for (const auto& k : keys) {
        const auto v = values(k);
        if (!v.empty())
            out[k] = summarize_values(v);
    }
    return out;
}

SeedResult evaluate_model(const Model& model, const Corpus& test, std::uint64_t seed) {
    if (test.empty())
        throw InsufficientDataError("empty test set");
    SeedResult r;
    r.seed = seed;
    const Corpus cold = strip_propagation(test);
    require_cold(cold);
    const auto labels = labels_of(test);
    r.cold = metrics(confusion(predict(model, cold).labels, labels));
    const bool any_tree = std::any_of(test.begin(), test.end(), [](const NewsSample& s) { return s.tree.has_value(); });
    if (any_tree)
        r.warm = metrics(confusion(predict(model, test).labels, labels));
    return r;
}

ExperimentReport run_experiment(const Corpus& corpus, const RunConfig& config) {
    config.training.validate();
    if (corpus.empty())
        throw InsufficientDataError("corpus is empty");
    if (config.seeds.empty())
        throw ConfigError("no seeds configured");

    ExperimentReport report;
    report.config = to_json(config);
    // seeds are left out so partial runs of one configuration can be merged
    auto identity = report.config;
    identity.erase("seeds");
    report.fingerprint = fingerprint(identity);
    report.protocol = config.protocol;

    if (config.protocol == Protocol::general) {
        for (auto seed : config.seeds) {
            const DatasetSplit split = split_general(corpus, config.train_ratio, seed, config.stratified);
            const auto trained = train_with(split, config, seed);
            report.seeds.push_back(evaluate_model(trained.model, split.test, seed));
        }
        return report;
    }

    for (const auto& s : corpus)
        if (!s.event)
            throw ConfigError("event-aware protocol needs an event tag on every sample ('" + s.id + "' has none)");
    report.events = list_events(corpus);
    for (auto seed : config.seeds) {
        SeedResult r;
        r.seed = seed;
        std::vector<Label> pooled_pred, pooled_true;
        double sum = 0.0;
        for (const auto& event : report.events) {
            const DatasetSplit split = split_event_aware(corpus, event);
            const auto trained = train_with(split, config, seed);
            const Corpus cold = strip_propagation(split.test);
            require_cold(cold);
            const auto pred = predict(trained.model, cold).labels;
            const auto truth = labels_of(split.test);
            const double wf1 = metrics(confusion(pred, truth)).weighted_f1;
            r.event_weighted_f1.emplace_back(event, wf1);
            sum += wf1;
            pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
            pooled_true.insert(pooled_true.end(), truth.begin(), truth.end());
        }
        r.cold = metrics(confusion(pooled_pred, pooled_true));
        r.event_average = sum / static_cast<double>(report.events.size());
        report.seeds.push_back(std::move(r));
    }
    return report;
}

LambdaSweep sweep_lambda(const Corpus& corpus, RunConfig config, std::span<const double> grid) {
    if (grid.empty())
        throw ConfigError("empty lambda grid");
    LambdaSweep sweep;
    sweep.grid.assign(grid.begin(), grid.end());
    config.mode = TrainMode::san;
    double best = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        config.training.lambda = grid[i];
        sweep.reports.push_back(run_experiment(corpus, config));
        const double acc = sweep.reports.back().summary().at("accuracy").mean;
        if (acc > best) {
            best = acc;
            sweep.best = i;
        }
    }
    return sweep;
}

double compare_reports(const ExperimentReport& treatment, const ExperimentReport& baseline, const std::string& key) {
    std::vector<double> a, b;
    for (const auto& t : treatment.seeds) {
        auto it = std::find_if(baseline.seeds.begin(), baseline.seeds.end(),
                               [&](const SeedResult& s) { return s.seed == t.seed; });
        if (it == baseline.seeds.end())
            continue;
        ExperimentReport one_t{.seeds = {t}}, one_b{.seeds = {*it}};
        one_t.events = treatment.events;
        one_b.events = baseline.events;
        const auto vt = one_t.values(key);
        const auto vb = one_b.values(key);
        if (vt.empty() || vb.empty())
            continue;
        a.push_back(vt[0]);
        b.push_back(vb[0]);
    }
    if (a.size() < 2)
        throw InsufficientDataError("fewer than two shared seeds to compare on '" + key + "'");
    return paired_t_test(a, b).p_value;
}

std::string serialize_report(const ExperimentReport& report, std::optional<double> p_value) {
    std::string out = json{{"format", "coldsan-report"},
                           {"fingerprint", report.fingerprint},
                           {"protocol", std::string(to_string(report.protocol))},
                           {"events", report.events},
                           {"config", report.config}}
                          .dump();
    out += '\n';
    for (const auto& s : report.seeds) {
        json events = json::array();
        for (const auto& [e, v] : s.event_weighted_f1)
            events.push_back(json::array({e, v}));
        out += json{{"type", "seed"},
                    {"seed", s.seed},
                    {"cold", metrics_json(s.cold)},
                    {"warm", s.warm ? metrics_json(*s.warm) : json(nullptr)},
                    {"event_weighted_f1", std::move(events)},
                    {"event_average", s.event_average ? json(*s.event_average) : json(nullptr)}}
                   .dump();
        out += '\n';
    }
    const auto sum = report.summary();
    json columns = json::array(), mean = json::array(), sd = json::array();
    auto col = [&](const std::string& name, const std::string& key) {
        if (!sum.contains(key))
            return;
        columns.push_back(name);
        mean.push_back(sum.at(key).mean);
        sd.push_back(sum.at(key).stddev);
    };
    if (report.protocol == Protocol::general) {
        col("Acc", "accuracy");
        col("ma-F1", "macro_f1");
        col("F1 fake", "f1_fake");
        col("F1 real", "f1_real");
    } else {
        col("Acc.", "accuracy");
        for (const auto& e : report.events)
            col(e, "wf1:" + e);
        col("Avg.", "event_average");
    }
    json table{{"type", "table"},
               {"layout", report.protocol == Protocol::general ? "general" : "event-aware"},
               {"columns", columns},
               {"mean", mean},
               {"std", sd},
               {"seeds", report.seeds.size()}};
    if (sum.contains("warm_accuracy"))
        table["warm_accuracy"] = sum.at("warm_accuracy").mean;
    if (p_value)
        table["p_value"] = *p_value;
    out += table.dump();
    out += '\n';
    return out;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& path, std::optional<double> p_value) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write report " + path.string());
    out << serialize_report(report, p_value);
}

ExperimentReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open report " + path.string());
    ExperimentReport r;
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty())
                continue;
            const auto j = json::parse(line);
            if (!header) {
                if (j.value("format", "") != "coldsan-report")
                    throw ParseError(path.string() + ": not a report file");
                r.fingerprint = j.at("fingerprint").get<std::string>();
                r.protocol = parse_protocol(j.at("protocol").get<std::string>());
                r.events = j.at("events").get<std::vector<std::string>>();
                r.config = j.at("config");
                header = true;
                continue;
            }
            if (j.value("type", "") != "seed")
                continue;
            SeedResult s;
            s.seed = j.at("seed").get<std::uint64_t>();
            s.cold = metrics_from_json(j.at("cold"));
            if (!j.at("warm").is_null())
                s.warm = metrics_from_json(j.at("warm"));
            for (const auto& e : j.at("event_weighted_f1"))
                s.event_weighted_f1.emplace_back(e[0].get<std::string>(), e[1].get<double>());
            if (!j.at("event_average").is_null())
                s.event_average = j.at("event_average").get<double>();
            r.seeds.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!header)
        throw ParseError(path.string() + ": empty report");
    return r;
}

std::vector<ExperimentReport> merge_reports(std::span<const ExperimentReport> parts) {
    std::vector<ExperimentReport> out;
    for (const auto& p : parts) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const ExperimentReport& r) { return r.fingerprint == p.fingerprint; });
        if (it == out.end()) {
            out.push_back(p);
            out.back().seeds.clear();
            it = out.end() - 1;
        }
        for (const auto& s : p.seeds)
            if (std::none_of(it->seeds.begin(), it->seeds.end(),
                             [&](const SeedResult& e) { return e.seed == s.seed; }))
                it->seeds.push_back(s);
    }
    for (auto& r : out) {
        std::sort(r.seeds.begin(), r.seeds.end(),
                  [](const SeedResult& a, const SeedResult& b) { return a.seed < b.seed; });
        if (r.config.contains("seeds")) {
            r.config["seeds"] = json::array();
            for (const auto& s : r.seeds)
                r.config["seeds"].push_back(s.seed);
        }
    }
    return out;
}

std::string format_table(const ExperimentReport& report) {
    const auto sum = report.summary();
    std::ostringstream os;
    char buf[64];
    auto cell = [&](const std::string& key) {
        if (!sum.contains(key))
            return std::string("    -   ");
        std::snprintf(buf, sizeof buf, " %.3f  ", sum.at(key).mean);
        return std::string(buf);
    };
    os << "config " << report.fingerprint << ", " << report.seeds.size() << " seed(s)\n";
    if (report.protocol == Protocol::general) {
        os << "  Acc     ma-F1   F1-fake F1-real\n";
        os << cell("accuracy") << cell("macro_f1") << cell("f1_fake") << cell("f1_real") << "\n";
        if (sum.contains("warm_accuracy"))
            os << "  warm-test accuracy " << cell("warm_accuracy") << "\n";
    } else {
        os << "  Acc.   ";
        for (const auto& e : report.events)
            os << " " << e.substr(0, 7) << std::string(e.size() < 7 ? 7 - e.size() : 0, ' ');
        os << " Avg.\n";
        os << cell("accuracy");
        for (const auto& e : report.events)
            os << cell("wf1:" + e);
        os << cell("event_average") << "\n";
    }
    return os.str();
}

std::string_view to_string(EmbeddingTag t) {
    switch (t) {
    case EmbeddingTag::train_full: return "train-full";
    case EmbeddingTag::train_stripped: return "train-stripped";
    case EmbeddingTag::test: return "test";
    }
    return "?";
}

namespace {

EmbeddingTag parse_embedding_tag(std::string_view s) {
    for (auto t : {EmbeddingTag::train_full, EmbeddingTag::train_stripped, EmbeddingTag::test})
        if (to_string(t) == s)
            return t;
    throw ParseError("unknown embedding split tag '" + std::string(s) + "'");
}

}  // namespace

std::vector<TaggedSample> tag_split(const DatasetSplit& split) {
    std::vector<TaggedSample> out;
    for (const auto& s : split.train)
        out.push_back({&s, EmbeddingTag::train_full});
    for (const auto& s : split.train)
        out.push_back({&s, EmbeddingTag::train_stripped});
    for (const auto& s : split.test)
        out.push_back({&s, EmbeddingTag::test});
    return out;
}

void dump_embeddings(const Model& model, std::span<const TaggedSample> samples, const std::filesystem::path& path) {
    Corpus inputs;
    inputs.reserve(samples.size());
    for (const auto& t : samples) {
        inputs.push_back(*t.sample);
        if (t.tag != EmbeddingTag::train_full)
            inputs.back().tree.reset();
    }
    const auto reps = encode_samples(model, inputs);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write embeddings " + path.string());
    out << json{{"format", "coldsan-embeddings"}, {"d_h", model.config.d_h}, {"count", samples.size()}}.dump()
        << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i)
        out << json{{"id", samples[i].sample->id},
                    {"split", std::string(to_string(samples[i].tag))},
                    {"label", std::string(to_string(samples[i].sample->label))},
                    {"h", reps[i].h}}
                   .dump()
            << '\n';
    if (!out)
        throw IoError("write failed for " + path.string());
}

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open embeddings " + path.string());
    std::vector<EmbeddingRecord> out;
    std::string line;
    bool header = false;
    try {
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            const auto j = json::parse(line);
            if (!header) {
                if (j.value("format", "") != "coldsan-embeddings")
                    throw ParseError(path.string() + ": not an embedding dump");
                header = true;
                continue;
            }
            out.push_back({j.at("id").get<std::string>(), parse_embedding_tag(j.at("split").get<std::string>()),
                           parse_label(j.at("label").get<std::string>()), j.at("h").get<std::vector<double>>()});
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace coldsan
