#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coldsan {

/// Veracity label. The index doubles as the classifier output column.
enum class Label : int { fake = 0, real = 1 };

std::string_view to_string(Label l);
Label parse_label(std::string_view s);

struct TreeNode {
    std::string id;
    long long order = 0;  ///< timestamp rank
    std::vector<double> features;

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeEdge {
    std::string parent;
    std::string child;

    friend bool operator==(const TreeEdge&, const TreeEdge&) = default;
};

/// Rooted tree of reaction posts. Edges point parent -> child.
struct PropagationTree {
    std::vector<TreeNode> nodes;
    std::vector<TreeEdge> edges;
    std::string root_id;

    /// Throws StructureError (naming `sample_id`) unless the edges form a
    /// single rooted tree over the nodes, all features have `x.size()`
    /// dimensions and the root carries exactly `x`.
    void validate(std::string_view sample_id, std::span<const double> x) const;

    /// Nodes sorted by (order, id).
    std::vector<const TreeNode*> canonical_order() const;

    /// Height in edges (0 for a lone root).
    std::size_t depth() const;

    friend bool operator==(const PropagationTree&, const PropagationTree&) = default;
};

struct NewsSample {
    std::string id;
    std::vector<double> x;
    std::optional<PropagationTree> tree;  ///< absent for content-only samples
    Label label = Label::fake;
    std::optional<std::string> event;

    bool cold_start() const noexcept { return !tree.has_value(); }

    friend bool operator==(const NewsSample&, const NewsSample&) = default;
};

using Corpus = std::vector<NewsSample>;

}  // namespace coldsan
