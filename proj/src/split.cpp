#include "coldsan/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coldsan/error.hpp"
#include "coldsan/rng.hpp"

namespace coldsan {

namespace {

std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

DatasetSplit partition(const Corpus& samples, const std::vector<bool>& is_test, SplitDescriptor d) {
    DatasetSplit out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (is_test[i]) {
            out.test.push_back(samples[i]);
            d.test_ids.push_back(samples[i].id);
        } else {
            out.train.push_back(samples[i]);
        }
    }
    out.provenance = std::move(d);
    return out;
}

}  // namespace

DatasetSplit split_general(const Corpus& samples, double train_ratio, std::uint64_t seed, bool stratified) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
        throw ConfigError("train ratio must lie strictly between 0 and 1");
    const std::size_t n = samples.size();
    if (n < 2)
        throw InsufficientDataError("general split needs at least 2 samples, got " + std::to_string(n));

    Rng rng(seed, stream::split);
    std::vector<bool> is_test(n, true);
    std::vector<std::vector<std::size_t>> pools;
    if (stratified) {
        pools.resize(2);
        for (std::size_t i = 0; i < n; ++i)
            pools[static_cast<int>(samples[i].label)].push_back(i);
    } else {
        pools.emplace_back(n);
        for (std::size_t i = 0; i < n; ++i)
            pools[0][i] = i;
    }
    std::size_t n_train = 0;
    for (auto& pool : pools) {
        rng.shuffle(pool);
        const std::size_t k = round_half_up(train_ratio * static_cast<double>(pool.size()));
        for (std::size_t i = 0; i < k; ++i)
            is_test[pool[i]] = false;
        n_train += k;
    }
    if (n_train == 0 || n_train == n)
        throw InsufficientDataError("train ratio " + std::to_string(train_ratio) + " leaves an empty side for " +
                                    std::to_string(n) + " samples");

    SplitDescriptor d;
    d.kind = SplitKind::general;
    d.seed = seed;
    d.train_ratio = train_ratio;
    d.stratified = stratified;
    return partition(samples, is_test, std::move(d));
}

std::vector<std::string> list_events(const Corpus& samples) {
    std::vector<std::string> events;
    std::set<std::string> seen;
    for (const auto& s : samples) {
        if (!s.event)
            throw DataError("sample '" + s.id + "' has no event tag");
        if (seen.insert(*s.event).second)
            events.push_back(*s.event);
    }
    return events;
}

DatasetSplit split_event_aware(const Corpus& samples, const std::string& held_out_event) {
    const auto events = list_events(samples);
    if (std::find(events.begin(), events.end(), held_out_event) == events.end()) {
        std::string avail;
        for (const auto& e : events)
            avail += (avail.empty() ? "" : ", ") + e;
        throw LookupError("unknown event '" + held_out_event + "'; available: " + (avail.empty() ? "(none)" : avail));
    }
    std::vector<bool> is_test(samples.size());
    std::size_t n_train = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        is_test[i] = *samples[i].event == held_out_event;
        n_train += !is_test[i];
    }
    if (n_train == 0)
        throw InsufficientDataError("holding out '" + held_out_event + "' leaves no training samples");
    SplitDescriptor d;
    d.kind = SplitKind::event;
    d.held_out_event = held_out_event;
    return partition(samples, is_test, std::move(d));
}

Corpus strip_propagation(Corpus samples) {
    for (auto& s : samples)
        s.tree.reset();
    return samples;
}

std::pair<Corpus, Corpus> make_training_copies(const Corpus& train) { return {train, strip_propagation(train)}; }

DatasetSplit apply_split(const Corpus& samples, const SplitDescriptor& descriptor) {
    std::set<std::string> test(descriptor.test_ids.begin(), descriptor.test_ids.end());
    std::vector<bool> is_test(samples.size());
    std::size_t found = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        is_test[i] = test.contains(samples[i].id);
        found += is_test[i];
    }
    if (found != test.size())
        throw DataError("split descriptor names " + std::to_string(test.size() - found) +
                        " test ids absent from the corpus");
    SplitDescriptor d = descriptor;
    d.test_ids.clear();
    return partition(samples, is_test, std::move(d));
}

void save_split_descriptor(const SplitDescriptor& d, const std::filesystem::path& path) {
    nlohmann::json header{{"format", "coldsan-split"},
                          {"kind", d.kind == SplitKind::general ? "general" : "event"},
                          {"seed", d.seed},
                          {"train_ratio", d.train_ratio},
                          {"stratified", d.stratified},
                          {"held_out_event", d.held_out_event},
                          {"test_count", d.test_ids.size()}};
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write split descriptor " + path.string());
    out << header.dump() << '\n' << nlohmann::json{{"test_ids", d.test_ids}}.dump() << '\n';
}

SplitDescriptor load_split_descriptor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open split descriptor " + path.string());
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    try {
        const auto h = nlohmann::json::parse(l1);
        if (h.value("format", "") != "coldsan-split")
            throw ParseError(path.string() + ": not a split descriptor");
        SplitDescriptor d;
        d.kind = h.at("kind").get<std::string>() == "event" ? SplitKind::event : SplitKind::general;
        d.seed = h.at("seed").get<std::uint64_t>();
        d.train_ratio = h.at("train_ratio").get<double>();
        d.stratified = h.at("stratified").get<bool>();
        d.held_out_event = h.at("held_out_event").get<std::string>();
        d.test_ids = nlohmann::json::parse(l2).at("test_ids").get<std::vector<std::string>>();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace coldsan
