#include "coldsan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "coldsan/error.hpp"
#include "coldsan/rng.hpp"

namespace coldsan {

void SyntheticConfig::validate() const {
    if (n_samples == 0)
        throw ConfigError("synthetic n_samples must be positive");
    if (!(fake_ratio > 0.0 && fake_ratio < 1.0))
        throw ConfigError("synthetic fake_ratio must lie in (0, 1)");
    if (d_in < 2)
        throw ConfigError("synthetic d_in must be at least 2");
    if (!(content_separation >= 0.0) || !(structure_separation >= 0.0))
        throw ConfigError("synthetic separations must be nonnegative");
    if (max_depth == 0 || max_branching == 0 || n_events == 0)
        throw ConfigError("synthetic max_depth, max_branching and n_events must be positive");
}

namespace {

std::string padded(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
    return buf;
}

long clamp_round(double v, long lo, long hi) { return std::clamp(std::lround(v), lo, hi); }

PropagationTree grow_tree(const std::vector<double>& x, bool fake, const SyntheticConfig& c, Rng& rng) {
    const double sign = fake ? 1.0 : -1.0;
    const double depth_center = (static_cast<double>(c.max_depth) + 1.0) / 2.0;
    const long height = clamp_round(depth_center + sign * c.structure_separation / 2.0 + rng.normal(), 1,
                                    static_cast<long>(c.max_depth));
    const long branching = clamp_round(static_cast<double>(c.max_branching) / 2.0 + sign * c.structure_separation / 2.0,
                                       0, static_cast<long>(c.max_branching));
    const double reaction_shift = fake ? c.structure_separation : 0.0;

    PropagationTree t;
    t.root_id = "n0";
    std::vector<std::size_t> level{0};
    t.nodes.push_back({"n0", 0, x});
    auto add_child = [&](std::size_t parent) {
        std::vector<double> f(x.size());
        for (std::size_t k = 0; k < f.size(); ++k)
            f[k] = x[k] + rng.normal();
        f[1] += reaction_shift;
        const std::size_t id = t.nodes.size();
        t.nodes.push_back({"n" + std::to_string(id), 0, std::move(f)});
        t.edges.push_back({t.nodes[parent].id, t.nodes[id].id});
        level.push_back(level[parent] + 1);
        return id;
    };

    std::size_t spine = 0;
    for (long d = 0; d < height; ++d) {
        const auto extra = static_cast<std::size_t>(rng.index(static_cast<std::size_t>(branching) + 1));
        for (std::size_t k = 0; k < extra; ++k)
            add_child(spine);
        spine = add_child(spine);
    }
    // Timestamps follow breadth-first arrival: shallower reactions come first.
    std::vector<std::size_t> idx(t.nodes.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return level[a] < level[b]; });
    for (std::size_t rank = 0; rank < idx.size(); ++rank)
        t.nodes[idx[rank]].order = static_cast<long long>(rank);
    return t;
}

}  // namespace

Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed, stream::synthetic);

    const auto n_fake = static_cast<std::size_t>(std::floor(config.fake_ratio * static_cast<double>(config.n_samples) + 0.5));
    std::vector<bool> fake(config.n_samples, false);
    for (std::size_t i = 0; i < n_fake; ++i)
        fake[i] = true;
    rng.shuffle(fake);

    Corpus out;
    out.reserve(config.n_samples);
    for (std::size_t i = 0; i < config.n_samples; ++i) {
        NewsSample s;
        s.id = padded("s", i);
        s.label = fake[i] ? Label::fake : Label::real;
        s.event = "event" + std::to_string(i % config.n_events);
        s.x.resize(config.d_in);
        for (auto& v : s.x)
            v = rng.normal();
        s.x[0] += (fake[i] ? 0.5 : -0.5) * config.content_separation;
        s.tree = grow_tree(s.x, fake[i], config, rng);
        out.push_back(std::move(s));
    }
    return out;
}

CorpusSummary summarize(const Corpus& corpus) {
    CorpusSummary s;
    double depth_fake = 0.0, depth_real = 0.0;
    std::size_t trees_fake = 0, trees_real = 0;
    for (const auto& n : corpus) {
        (n.label == Label::fake ? s.fake : s.real) += 1;
        if (n.event)
            ++s.per_event[*n.event];
        if (n.tree) {
            ++s.with_tree;
            const auto d = static_cast<double>(n.tree->depth());
            if (n.label == Label::fake) {
                depth_fake += d;
                ++trees_fake;
            } else {
                depth_real += d;
                ++trees_real;
            }
        }
    }
    s.mean_depth_fake = trees_fake ? depth_fake / static_cast<double>(trees_fake) : 0.0;
    s.mean_depth_real = trees_real ? depth_real / static_cast<double>(trees_real) : 0.0;
    return s;
}

}  // namespace coldsan
