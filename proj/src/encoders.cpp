#include "coldsan/encoders.hpp"

#include <cmath>
#include <string>

#include "coldsan/error.hpp"
#include "coldsan/ops.hpp"
#include "coldsan/rng.hpp"

namespace coldsan {

std::string_view to_string(EncoderKind k) {
    switch (k) {
    case EncoderKind::content: return "content";
    case EncoderKind::gcn: return "gcn";
    case EncoderKind::gat: return "gat";
    case EncoderKind::bigcn: return "bigcn";
    }
    return "?";
}

EncoderKind parse_encoder_kind(std::string_view s) {
    for (auto k : kAllEncoders)
        if (to_string(k) == s)
            return k;
    throw ConfigError("unknown encoder '" + std::string(s) + "' (expected content, gcn, gat or bigcn)");
}

void ModelConfig::validate() const {
    if (d_in == 0 || d_h == 0)
        throw ConfigError("model dimensions must be positive");
    if (encoder == EncoderKind::gat && (gat_heads == 0 || d_h % gat_heads != 0))
        throw ConfigError("d_h " + std::to_string(d_h) + " is not divisible by " + std::to_string(gat_heads) +
                          " attention heads");
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (auto& v : w.values())
        v = rng.uniform(-limit, limit);
    return w;
}

void add_dense(ParamSets& p, ParamGroupKind g, const std::string& prefix, std::size_t in, std::size_t out,
               Rng& rng, const char* w_name = "w", const char* b_name = "b") {
    p.add(g, prefix + "." + w_name, glorot(in, out, rng));
    p.add(g, prefix + "." + b_name, Tensor({out}, 0.0));
}

Var param(GradTape& t, const ParamSets& p, ParamGroupKind g, const std::string& name) {
    return t.parameter(p, p.find(g, name));
}

Var enc(GradTape& t, const ParamSets& p, const std::string& name) {
    return param(t, p, ParamGroupKind::encoder, name);
}

Var gcn_stack(GradTape& t, const ParamSets& p, const std::string& prefix, const SparseMatrix& s, Var x) {
    Var h = gcn_layer(t, s, x, enc(t, p, prefix + ".w1"), enc(t, p, prefix + ".b1"));
    return gcn_layer(t, s, h, enc(t, p, prefix + ".w2"), enc(t, p, prefix + ".b2"));
}

}  // namespace

ParamSets init_params(const ModelConfig& c, std::uint64_t seed) {
    c.validate();
    Rng rng(seed, stream::init);
    ParamSets p;
    const auto E = ParamGroupKind::encoder;
    switch (c.encoder) {
    case EncoderKind::content:
        p.add(E, "mlp.w1", glorot(c.d_in, c.d_h, rng));
        p.add(E, "mlp.b1", Tensor({c.d_h}, 0.0));
        p.add(E, "mlp.w2", glorot(c.d_h, c.d_h, rng));
        p.add(E, "mlp.b2", Tensor({c.d_h}, 0.0));
        break;
    case EncoderKind::gcn:
        p.add(E, "gcn.w1", glorot(c.d_in, c.d_h, rng));
        p.add(E, "gcn.b1", Tensor({c.d_h}, 0.0));
        p.add(E, "gcn.w2", glorot(c.d_h, c.d_h, rng));
        p.add(E, "gcn.b2", Tensor({c.d_h}, 0.0));
        break;
    case EncoderKind::gat: {
        const std::size_t f = c.d_h / c.gat_heads;
        for (std::size_t k = 0; k < c.gat_heads; ++k) {
            const std::string h = "gat1.h" + std::to_string(k);
            p.add(E, h + ".w", glorot(c.d_in, f, rng));
            p.add(E, h + ".a_src", glorot(f, 1, rng));
            p.add(E, h + ".a_dst", glorot(f, 1, rng));
        }
        p.add(E, "gat1.b", Tensor({c.d_h}, 0.0));
        p.add(E, "gat2.w", glorot(c.d_h, c.d_h, rng));
        p.add(E, "gat2.a_src", glorot(c.d_h, 1, rng));
        p.add(E, "gat2.a_dst", glorot(c.d_h, 1, rng));
        p.add(E, "gat2.b", Tensor({c.d_h}, 0.0));
        break;
    }
    case EncoderKind::bigcn:
        for (const char* branch : {"td", "bu"}) {
            const std::string b = branch;
            p.add(E, b + ".w1", glorot(c.d_in, c.d_h, rng));
            p.add(E, b + ".b1", Tensor({c.d_h}, 0.0));
            p.add(E, b + ".w2", glorot(c.d_h, c.d_h, rng));
            p.add(E, b + ".b2", Tensor({c.d_h}, 0.0));
        }
        add_dense(p, E, "proj", 2 * c.d_h, c.d_h, rng);
        break;
    }
    add_dense(p, ParamGroupKind::classifier, "cls", c.d_h, 2, rng);
    add_dense(p, ParamGroupKind::discriminator, "disc", c.d_h, 2, rng);
    return p;
}

Var gcn_layer(GradTape& t, const SparseMatrix& s, Var h, Var w, Var b) {
    return relu(t, affine(t, spmm(t, s, h), w, b));
}

AttentionHead attention_head(GradTape& t, Var h, Var w, Var a_src, Var a_dst, std::span<const Edge> edges,
                             std::size_t num_nodes) {
    Var z = matmul(t, h, w);
    Var s_src = matmul(t, z, a_src);
    Var s_dst = matmul(t, z, a_dst);
    Var e = leaky_relu(t, edge_scores(t, s_dst, s_src, edges), kAttentionSlope);
    Var alpha = edge_softmax(t, e, edges, num_nodes);
    return {edge_aggregate(t, alpha, z, edges), alpha};
}

Var encode_content(GradTape& t, const ParamSets& p, const GraphBatch& batch) {
    Var x = t.constant(batch.content);
    Var h = relu(t, affine(t, x, enc(t, p, "mlp.w1"), enc(t, p, "mlp.b1")));
    return relu(t, affine(t, h, enc(t, p, "mlp.w2"), enc(t, p, "mlp.b2")));
}

Var encode_gcn(GradTape& t, const ParamSets& p, const GraphBatch& batch) {
    Var x = t.constant(batch.features);
    return segment_mean(t, gcn_stack(t, p, "gcn", batch.symmetric, x), batch.offsets);
}

Var encode_gat(GradTape& t, const ParamSets& p, const GraphBatch& batch, std::size_t heads, EncodeTrace* trace) {
    Var x = t.constant(batch.features);
    std::vector<Var> outs;
    for (std::size_t k = 0; k < heads; ++k) {
        const std::string h = "gat1.h" + std::to_string(k);
        auto head = attention_head(t, x, enc(t, p, h + ".w"), enc(t, p, h + ".a_src"), enc(t, p, h + ".a_dst"),
                                   batch.attention_edges, batch.num_nodes);
        outs.push_back(head.out);
        if (trace)
            trace->attention.push_back(head.attention);
    }
    Var h1 = relu(t, add_bias(t, concat_cols(t, outs), enc(t, p, "gat1.b")));
    auto head2 = attention_head(t, h1, enc(t, p, "gat2.w"), enc(t, p, "gat2.a_src"), enc(t, p, "gat2.a_dst"),
                                batch.attention_edges, batch.num_nodes);
    if (trace)
        trace->attention.push_back(head2.attention);
    Var h2 = relu(t, add_bias(t, head2.out, enc(t, p, "gat2.b")));
    return segment_mean(t, h2, batch.offsets);
}

Var encode_bigcn(GradTape& t, const ParamSets& p, const GraphBatch& batch) {
    Var x = t.constant(batch.features);
    Var td = segment_mean(t, gcn_stack(t, p, "td", batch.top_down, x), batch.offsets);
    Var bu = segment_mean(t, gcn_stack(t, p, "bu", batch.bottom_up, x), batch.offsets);
    const Var both[] = {td, bu};
    return affine(t, concat_cols(t, both), enc(t, p, "proj.w"), enc(t, p, "proj.b"));
}

Var encode(GradTape& t, const ModelConfig& config, const ParamSets& p, const GraphBatch& batch,
           EncodeTrace* trace) {
    if (batch.d_in != config.d_in)
        throw DimensionError("model expects d_in " + std::to_string(config.d_in) + ", batch has " +
                             std::to_string(batch.d_in));
    switch (config.encoder) {
    case EncoderKind::content: return encode_content(t, p, batch);
    case EncoderKind::gcn: return encode_gcn(t, p, batch);
    case EncoderKind::gat: return encode_gat(t, p, batch, config.gat_heads, trace);
    case EncoderKind::bigcn: return encode_bigcn(t, p, batch);
    }
    throw ConfigError("unhandled encoder kind");
}

Var classifier_logits(GradTape& t, const ParamSets& p, Var h) {
    return affine(t, h, param(t, p, ParamGroupKind::classifier, "cls.w"),
                  param(t, p, ParamGroupKind::classifier, "cls.b"));
}

Var discriminator_logits(GradTape& t, const ParamSets& p, Var h, double coeff, bool reverse) {
    return affine(t, reverse ? grl(t, h, coeff) : h, param(t, p, ParamGroupKind::discriminator, "disc.w"),
                  param(t, p, ParamGroupKind::discriminator, "disc.b"));
}

}  // namespace coldsan
