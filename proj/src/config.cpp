#include "coldsan/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "coldsan/error.hpp"
#include "coldsan/featurizer.hpp"

namespace coldsan {

using nlohmann::json;

std::string_view to_string(Protocol p) { return p == Protocol::general ? "general" : "event-aware"; }
std::string_view to_string(TrainMode m) { return m == TrainMode::san ? "san" : "vanilla"; }

Protocol parse_protocol(std::string_view s) {
    if (s == "general")
        return Protocol::general;
    if (s == "event-aware" || s == "event")
        return Protocol::event_aware;
    throw ConfigError("unknown protocol '" + std::string(s) + "' (expected general or event-aware)");
}

TrainMode parse_train_mode(std::string_view s) {
    if (s == "san")
        return TrainMode::san;
    if (s == "vanilla")
        return TrainMode::vanilla;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected san or vanilla)");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
    if (!j.is_object())
        throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [k, _] : j.items())
        if (!known.contains(k))
            throw ConfigError("unknown config key '" + section + (section.empty() ? "" : ".") + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + section + "." + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const TrainingConfig& c) {
    return {{"encoder", std::string(to_string(c.encoder))},
            {"d_h", c.d_h},
            {"gat_heads", c.gat_heads},
            {"eta", c.eta},
            {"lambda", c.lambda},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"adversarial", c.adversarial},
            {"grl_coeff", c.grl_coeff},
            {"validation_fraction", c.validation_fraction},
            {"patience", c.patience},
            {"validation_view", c.validation_view == ValidationView::full ? "full" : "stripped"}};
}

json to_json(const SyntheticConfig& c) {
    return {{"n_samples", c.n_samples},
            {"fake_ratio", c.fake_ratio},
            {"d_in", c.d_in},
            {"content_separation", c.content_separation},
            {"structure_separation", c.structure_separation},
            {"max_depth", c.max_depth},
            {"max_branching", c.max_branching},
            {"n_events", c.n_events}};
}

json to_json(const RunConfig& c) {
    return {{"mode", std::string(to_string(c.mode))},
            {"protocol", std::string(to_string(c.protocol))},
            {"seeds", c.seeds},
            {"lambda_grid", c.lambda_grid},
            {"train_ratio", c.train_ratio},
            {"stratified", c.stratified},
            {"training", to_json(c.training)},
            {"synthetic", to_json(c.synthetic)}};
}

void apply_json(TrainingConfig& c, const json& j) {
    const std::string sec = "training";
    reject_unknown(j,
                   {"encoder", "d_h", "gat_heads", "eta", "lambda", "epochs", "batch_size", "seed", "adversarial",
                    "grl_coeff", "validation_fraction", "patience", "validation_view"},
                   sec);
    if (j.contains("encoder"))
        c.encoder = parse_encoder_kind(j["encoder"].get<std::string>());
    read(j, "d_h", c.d_h, sec);
    read(j, "gat_heads", c.gat_heads, sec);
    read(j, "eta", c.eta, sec);
    read(j, "lambda", c.lambda, sec);
    read(j, "epochs", c.epochs, sec);
    read(j, "batch_size", c.batch_size, sec);
    read(j, "seed", c.seed, sec);
    read(j, "adversarial", c.adversarial, sec);
    read(j, "grl_coeff", c.grl_coeff, sec);
    read(j, "validation_fraction", c.validation_fraction, sec);
    read(j, "patience", c.patience, sec);
    if (j.contains("validation_view")) {
        const auto v = j["validation_view"].get<std::string>();
        if (v != "full" && v != "stripped")
            throw ConfigError("training.validation_view must be full or stripped");
        c.validation_view = v == "full" ? ValidationView::full : ValidationView::stripped;
    }
}

void apply_json(SyntheticConfig& c, const json& j) {
    const std::string sec = "synthetic";
    reject_unknown(j,
                   {"n_samples", "fake_ratio", "d_in", "content_separation", "structure_separation", "max_depth",
                    "max_branching", "n_events"},
                   sec);
    read(j, "n_samples", c.n_samples, sec);
    read(j, "fake_ratio", c.fake_ratio, sec);
    read(j, "d_in", c.d_in, sec);
    read(j, "content_separation", c.content_separation, sec);
    read(j, "structure_separation", c.structure_separation, sec);
    read(j, "max_depth", c.max_depth, sec);
    read(j, "max_branching", c.max_branching, sec);
    read(j, "n_events", c.n_events, sec);
}

void apply_json(RunConfig& c, const json& j) {
    reject_unknown(j, {"mode", "protocol", "seeds", "lambda_grid", "train_ratio", "stratified", "training", "synthetic"},
                   "");
    if (j.contains("mode"))
        c.mode = parse_train_mode(j["mode"].get<std::string>());
    if (j.contains("protocol"))
        c.protocol = parse_protocol(j["protocol"].get<std::string>());
    read(j, "seeds", c.seeds, "run");
    read(j, "lambda_grid", c.lambda_grid, "run");
    read(j, "train_ratio", c.train_ratio, "run");
    read(j, "stratified", c.stratified, "run");
    if (j.contains("training"))
        apply_json(c.training, j["training"]);
    if (j.contains("synthetic"))
        apply_json(c.synthetic, j["synthetic"]);
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig c;
    try {
        apply_json(c, json::parse(buf.str()));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return c;
}

std::string fingerprint(const json& j) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

}  // namespace coldsan
