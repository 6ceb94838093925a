#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "coldsan/graph_batch.hpp"
#include "coldsan/params.hpp"
#include "coldsan/tape.hpp"

namespace coldsan {

enum class EncoderKind { content, gcn, gat, bigcn };

std::string_view to_string(EncoderKind k);
EncoderKind parse_encoder_kind(std::string_view s);
inline constexpr EncoderKind kAllEncoders[] = {EncoderKind::content, EncoderKind::gcn, EncoderKind::gat,
                                               EncoderKind::bigcn};

struct ModelConfig {
    EncoderKind encoder = EncoderKind::gcn;
    std::size_t d_in = 0;
    std::size_t d_h = 64;
    std::size_t gat_heads = 4;  ///< first GAT layer; the second has one head

    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Glorot-uniform weights, zero biases, drawn in a fixed order (encoder,
/// classifier, discriminator) so the same (config, seed) gives identical sets.
ParamSets init_params(const ModelConfig& config, std::uint64_t seed);

/// Attention coefficients recorded while encoding, for inspection.
struct EncodeTrace {
    std::vector<Var> attention;  ///< one [E x 1] per GAT head, layer by layer
};

// Encoders return one row of d_h per graph in the batch.

/// relu(relu(x W1 + b1) W2 + b2); ignores any tree.
Var encode_content(GradTape& t, const ParamSets& p, const GraphBatch& batch);
/// Two symmetric-normalised GCN layers, mean readout.
Var encode_gcn(GradTape& t, const ParamSets& p, const GraphBatch& batch);
/// Two attention layers (multi-head concat, then one head), mean readout.
Var encode_gat(GradTape& t, const ParamSets& p, const GraphBatch& batch, std::size_t heads,
               EncodeTrace* trace = nullptr);
/// Top-down and bottom-up GCN stacks, each mean-pooled, projected to d_h.
Var encode_bigcn(GradTape& t, const ParamSets& p, const GraphBatch& batch);

Var encode(GradTape& t, const ModelConfig& config, const ParamSets& p, const GraphBatch& batch,
           EncodeTrace* trace = nullptr);

/// relu(S . H . W + b)
Var gcn_layer(GradTape& t, const SparseMatrix& s, Var h, Var w, Var b);

struct AttentionHead {
    Var out;        ///< [n x F]
    Var attention;  ///< [E x 1]
};
/// One attention head: z = H W, e_ij = leaky_relu(a_dst . z_i + a_src . z_j),
/// alpha = softmax over each node's incoming edges, out_i = sum_j alpha_ij z_j.
AttentionHead attention_head(GradTape& t, Var h, Var w, Var a_src, Var a_dst, std::span<const Edge> edges,
                             std::size_t num_nodes);

inline constexpr double kAttentionSlope = 0.2;

/// Classifier logits [B x 2]; column 0 is fake.
Var classifier_logits(GradTape& t, const ParamSets& p, Var h);
/// Structure discriminator logits [B x 2] behind a reversal layer with `coeff`;
/// column 1 is "computed with structure". coeff 0 blocks gradient to the encoder.
/// With reverse=false the reversal layer is left out entirely (plain head).
Var discriminator_logits(GradTape& t, const ParamSets& p, Var h, double coeff, bool reverse = true);

}  // namespace coldsan
