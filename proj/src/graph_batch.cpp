#include "coldsan/graph_batch.hpp"

#include <cmath>
#include <map>

#include "coldsan/error.hpp"

namespace coldsan {

SampleGraph to_graph(const NewsSample& sample) {
    SampleGraph g;
    g.content = sample.x;
    if (!sample.tree) {
        g.features = sample.x;
        return g;
    }
    const auto order = sample.tree->canonical_order();
    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < order.size(); ++i)
        index.emplace(order[i]->id, i);
    g.num_nodes = order.size();
    g.root = index.at(sample.tree->root_id);
    g.features.reserve(order.size() * sample.x.size());
    for (const auto* n : order) {
        if (n->features.size() != sample.x.size())
            throw DimensionError("sample '" + sample.id + "': node '" + n->id + "' has " +
                                 std::to_string(n->features.size()) + " features, content has " +
                                 std::to_string(sample.x.size()));
        g.features.insert(g.features.end(), n->features.begin(), n->features.end());
    }
    for (const auto& e : sample.tree->edges)
        g.edges.emplace_back(index.at(e.parent), index.at(e.child));
    g.has_structure = true;
    return g;
}

GraphBatch make_batch(std::span<const SampleGraph* const> graphs) {
    if (graphs.empty())
        throw DimensionError("empty batch");
    GraphBatch b;
    b.num_graphs = graphs.size();
    b.d_in = graphs[0]->content.size();
    b.offsets.push_back(0);
    for (const auto* g : graphs) {
        if (g->content.size() != b.d_in)
            throw DimensionError("batch mixes feature dimensions " + std::to_string(b.d_in) + " and " +
                                 std::to_string(g->content.size()));
        b.num_nodes += g->num_nodes;
        b.offsets.push_back(b.num_nodes);
    }

    std::vector<double> feats;
    std::vector<double> content;
    feats.reserve(b.num_nodes * b.d_in);
    content.reserve(b.num_graphs * b.d_in);
    for (const auto* g : graphs) {
        feats.insert(feats.end(), g->features.begin(), g->features.end());
        content.insert(content.end(), g->content.begin(), g->content.end());
        b.has_structure.push_back(g->has_structure);
    }
    b.features = Tensor({b.num_nodes, b.d_in}, std::move(feats));
    b.content = Tensor({b.num_graphs, b.d_in}, std::move(content));

    for (auto* m : {&b.symmetric, &b.top_down, &b.bottom_up}) {
        m->rows = b.num_nodes;
        m->cols = b.num_nodes;
    }
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const auto& g = *graphs[gi];
        const std::size_t base = b.offsets[gi];
        std::vector<double> deg(g.num_nodes, 1.0);          // undirected + self
        std::vector<double> children(g.num_nodes, 0.0);
        std::vector<double> parents(g.num_nodes, 0.0);
        for (auto [p, c] : g.edges) {
            deg[p] += 1.0;
            deg[c] += 1.0;
            children[p] += 1.0;
            parents[c] += 1.0;
        }
        for (std::size_t i = 0; i < g.num_nodes; ++i) {
            b.symmetric.entries.push_back({base + i, base + i, 1.0 / deg[i]});
            b.top_down.entries.push_back({base + i, base + i, 1.0 / (1.0 + parents[i])});
            b.bottom_up.entries.push_back({base + i, base + i, 1.0 / (1.0 + children[i])});
            b.attention_edges.push_back({base + i, base + i});
        }
        for (auto [p, c] : g.edges) {
            const double w = 1.0 / std::sqrt(deg[p] * deg[c]);
            b.symmetric.entries.push_back({base + p, base + c, w});
            b.symmetric.entries.push_back({base + c, base + p, w});
            b.top_down.entries.push_back({base + c, base + p, 1.0 / (1.0 + parents[c])});
            b.bottom_up.entries.push_back({base + p, base + c, 1.0 / (1.0 + children[p])});
            b.attention_edges.push_back({base + c, base + p});
            b.attention_edges.push_back({base + p, base + c});
        }
    }
    return b;
}

GraphBatch make_batch(std::span<const SampleGraph> graphs) {
    std::vector<const SampleGraph*> ptrs;
    ptrs.reserve(graphs.size());
    for (const auto& g : graphs)
        ptrs.push_back(&g);
    return make_batch(std::span<const SampleGraph* const>(ptrs));
}

}  // namespace coldsan
