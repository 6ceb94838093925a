#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coldsan/tape.hpp"

namespace coldsan {

/// Constant sparse matrix in coordinate form.
struct SparseMatrix {
    struct Entry {
        std::size_t row;
        std::size_t col;
        double weight;
    };
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Entry> entries;
};

/// Directed message edges: `dst` receives from `src`.
struct Edge {
    std::size_t dst;
    std::size_t src;
};

// Differentiable ops. Each records its exact analytic gradient on the tape.

Var matmul(GradTape& t, Var a, Var b);
Var add_bias(GradTape& t, Var x, Var bias);
/// input[n x d_in] . weights[d_in x d_out] + bias[d_out]
Var affine(GradTape& t, Var input, Var weights, Var bias);
Var relu(GradTape& t, Var x);
Var leaky_relu(GradTape& t, Var x, double slope);
/// Forward identity; backward multiplies the upstream gradient by -coeff.
Var grl(GradTape& t, Var x, double coeff);
Var scale(GradTape& t, Var x, double factor);
Var add(GradTape& t, Var a, Var b);
Var sum(GradTape& t, Var x);

/// out = S . x for a constant sparse S.
Var spmm(GradTape& t, const SparseMatrix& s, Var x);
/// Mean of row blocks [offsets[g], offsets[g+1]) -> one row per block.
Var segment_mean(GradTape& t, Var x, std::span<const std::size_t> offsets);
Var concat_cols(GradTape& t, std::span<const Var> parts);

/// score[k] = dst_scores[edges[k].dst] + src_scores[edges[k].src]; inputs are [n x 1].
Var edge_scores(GradTape& t, Var dst_scores, Var src_scores, std::span<const Edge> edges);
/// Softmax of edge scores [E x 1] among edges sharing a destination.
Var edge_softmax(GradTape& t, Var scores, std::span<const Edge> edges, std::size_t num_nodes);
/// out[dst] += weight[k] * x[src] for every edge k.
Var edge_aggregate(GradTape& t, Var weights, Var x, std::span<const Edge> edges);

/// sum_i weight_i * -log softmax(logits_i)[target_i], evaluated in log-sum-exp form.
Var weighted_softmax_cross_entropy(GradTape& t, Var logits, std::span<const int> targets,
                                   std::span<const double> weights);
/// Mean over rows of the cross-entropy; gradient (softmax - onehot)/n.
Var softmax_cross_entropy(GradTape& t, Var logits, std::span<const int> targets);

// Plain helpers (no tape).

/// Row-wise softmax.
Tensor softmax_rows(const Tensor& logits);
/// Per-row -log softmax(logits)[target].
std::vector<double> cross_entropy_rows(const Tensor& logits, std::span<const int> targets);

}  // namespace coldsan
