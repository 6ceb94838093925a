#include "coldsan/sample.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "coldsan/error.hpp"

namespace coldsan {

std::string_view to_string(Label l) { return l == Label::fake ? "fake" : "real"; }

Label parse_label(std::string_view s) {
    if (s == "fake")
        return Label::fake;
    if (s == "real")
        return Label::real;
    throw ParseError("label must be \"fake\" or \"real\", got \"" + std::string(s) + "\"");
}

void PropagationTree::validate(std::string_view sample_id, std::span<const double> x) const {
    const std::string who = "sample '" + std::string(sample_id) + "': ";
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!index.emplace(nodes[i].id, i).second)
            throw StructureError(who + "duplicate node id '" + nodes[i].id + "'");
        if (nodes[i].features.size() != x.size())
            throw StructureError(who + "node '" + nodes[i].id + "' has " + std::to_string(nodes[i].features.size()) +
                                 " features, expected " + std::to_string(x.size()));
    }
    auto root = index.find(root_id);
    if (root == index.end())
        throw StructureError(who + "root '" + root_id + "' is not a node");
    if (!std::equal(x.begin(), x.end(), nodes[root->second].features.begin(), nodes[root->second].features.end()))
        throw StructureError(who + "root features differ from content features");

    std::vector<int> parents(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> children(nodes.size());
    for (const auto& e : edges) {
        auto p = index.find(e.parent);
        auto c = index.find(e.child);
        if (p == index.end() || c == index.end())
            throw StructureError(who + "edge " + e.parent + "->" + e.child + " references an unknown node");
        ++parents[c->second];
        children[p->second].push_back(c->second);
    }
    std::size_t roots = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (parents[i] > 1)
            throw StructureError(who + "node '" + nodes[i].id + "' has more than one parent");
        if (parents[i] == 0)
            ++roots;
    }
    if (parents[root->second] != 0)
        throw StructureError(who + "root '" + root_id + "' has a parent (cycle)");
    if (roots != 1)
        throw StructureError(who + "tree has " + std::to_string(roots) + " roots");

    // One root and one parent per other node; a cycle would leave nodes unreachable.
    std::vector<bool> seen(nodes.size(), false);
    std::queue<std::size_t> q;
    q.push(root->second);
    seen[root->second] = true;
    std::size_t reached = 1;
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (auto v : children[u])
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                q.push(v);
            }
    }
    if (reached != nodes.size())
        throw StructureError(who + "tree contains a cycle or disconnected nodes");
}

std::vector<const TreeNode*> PropagationTree::canonical_order() const {
    std::vector<const TreeNode*> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes)
        out.push_back(&n);
    std::sort(out.begin(), out.end(), [](const TreeNode* a, const TreeNode* b) {
        return a->order != b->order ? a->order < b->order : a->id < b->id;
    });
    return out;
}

std::size_t PropagationTree::depth() const {
    std::map<std::string_view, std::vector<std::string_view>> children;
    for (const auto& e : edges)
        children[e.parent].push_back(e.child);
    std::size_t best = 0;
    std::vector<std::pair<std::string_view, std::size_t>> stack{{root_id, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (auto it = children.find(id); it != children.end())
            for (auto c : it->second)
                stack.emplace_back(c, d + 1);
    }
    return best;
}

}  // namespace coldsan
