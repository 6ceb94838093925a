#pragma once

#include <span>
#include <vector>

#include "coldsan/ops.hpp"
#include "coldsan/sample.hpp"
#include "coldsan/tensor.hpp"

namespace coldsan {

/// One sample as a graph in canonical node order. A sample without a tree
/// becomes the single-node graph holding its content features.
struct SampleGraph {
    std::size_t num_nodes = 1;
    std::size_t root = 0;
    std::vector<double> features;  ///< num_nodes x d_in, row-major
    std::vector<std::pair<std::size_t, std::size_t>> edges;  ///< (parent, child)
    std::vector<double> content;  ///< x
    bool has_structure = false;
};

SampleGraph to_graph(const NewsSample& sample);

/// Several sample graphs stacked block-diagonally.
struct GraphBatch {
    std::size_t num_graphs = 0;
    std::size_t num_nodes = 0;
    std::size_t d_in = 0;
    Tensor features;                   ///< [num_nodes x d_in]
    Tensor content;                    ///< [num_graphs x d_in], the x of each sample
    std::vector<std::size_t> offsets;  ///< node range of graph g: [offsets[g], offsets[g+1])
    SparseMatrix symmetric;            ///< D^-1/2 (A + A^T + I) D^-1/2
    SparseMatrix top_down;             ///< each node averages itself and its parent
    SparseMatrix bottom_up;            ///< each node averages itself and its children
    std::vector<Edge> attention_edges; ///< both edge directions plus self-loops
    std::vector<bool> has_structure;
};

GraphBatch make_batch(std::span<const SampleGraph* const> graphs);
GraphBatch make_batch(std::span<const SampleGraph> graphs);

}  // namespace coldsan
