#include "coldsan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coldsan/error.hpp"

namespace coldsan {

namespace {

void require_matrix(const Tensor& x, const char* op) {
    if (x.rank() != 2)
        throw DimensionError(std::string(op) + " expects a matrix, got shape " + shape_string(x.shape()));
}

void accumulate(Tensor& into, const Tensor& from) {
    for (std::size_t i = 0; i < into.size(); ++i)
        into[i] += from[i];
}

// c += a . b, with a [n x k], b [k x m]
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = &c.at(i, 0);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a.at(i, p);
            if (aip == 0.0)
                continue;
            const double* bp = b.row(p).data();
            for (std::size_t j = 0; j < m; ++j)
                ci[j] += aip * bp[j];
        }
    }
}

// c += a . b^T, with a [n x m], b [k x m]
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.row(i).data();
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b.row(p).data();
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                s += ai[j] * bp[j];
            c.at(i, p) += s;
        }
    }
}

// c += a^T . b, with a [n x k], b [n x m]
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double* bi = b.row(i).data();
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a.at(i, p);
            if (aip == 0.0)
                continue;
            double* cp = &c.at(p, 0);
            for (std::size_t j = 0; j < m; ++j)
                cp[j] += aip * bi[j];
        }
    }
}

double log_sum_exp(std::span<const double> row) {
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row)
        s += std::exp(v - mx);
    return mx + std::log(s);
}

}  // namespace

Var matmul(GradTape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require_matrix(av, "matmul");
    require_matrix(bv, "matmul");
    if (av.cols() != bv.rows())
        throw DimensionError("matmul shape mismatch: " + shape_string(av.shape()) + " . " +
                             shape_string(bv.shape()));
    Tensor out({av.rows(), bv.cols()}, 0.0);
    gemm_nn(av, bv, out);
    return t.push(std::move(out), [a, b](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        gemm_nt(g, tp.value(b), tp.grad(a));
        gemm_tn(tp.value(a), g, tp.grad(b));
    });
}

Var add_bias(GradTape& t, Var x, Var bias) {
    const Tensor& xv = t.value(x);
    const Tensor& bv = t.value(bias);
    require_matrix(xv, "add_bias");
    if (bv.rank() != 1 || bv.size() != xv.cols())
        throw DimensionError("bias shape " + shape_string(bv.shape()) + " does not match input " +
                             shape_string(xv.shape()));
    Tensor out = xv;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out.at(i, j) += bv[j];
    return t.push(std::move(out), [x, bias](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        accumulate(tp.grad(x), g);
        Tensor& gb = tp.grad(bias);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j)
                gb[j] += g.at(i, j);
    });
}

Var affine(GradTape& t, Var input, Var weights, Var bias) {
    const Tensor& iv = t.value(input);
    const Tensor& wv = t.value(weights);
    const Tensor& bv = t.value(bias);
    if (iv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || iv.cols() != wv.rows() ||
        bv.size() != wv.cols())
        throw DimensionError("affine shape mismatch: input " + shape_string(iv.shape()) + ", weights " +
                             shape_string(wv.shape()) + ", bias " + shape_string(bv.shape()));
    return add_bias(t, matmul(t, input, weights), bias);
}

Var relu(GradTape& t, Var x) {
    Tensor out = t.value(x);
    for (auto& v : out.values())
        v = v > 0.0 ? v : 0.0;
    return t.push(std::move(out), [x](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& in = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in[i] > 0.0)
                gx[i] += g[i];
    });
}

Var leaky_relu(GradTape& t, Var x, double slope) {
    Tensor out = t.value(x);
    for (auto& v : out.values())
        v = v > 0.0 ? v : slope * v;
    return t.push(std::move(out), [x, slope](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& in = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            gx[i] += in[i] > 0.0 ? g[i] : slope * g[i];
    });
}

Var grl(GradTape& t, Var x, double coeff) {
    if (!(coeff >= 0.0))
        throw ConfigError("gradient reversal coefficient must be nonnegative");
    return t.push(t.value(x), [x, coeff](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            gx[i] += -coeff * g[i];
    });
}

Var scale(GradTape& t, Var x, double factor) {
    Tensor out = t.value(x);
    for (auto& v : out.values())
        v *= factor;
    return t.push(std::move(out), [x, factor](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            gx[i] += factor * g[i];
    });
}

Var add(GradTape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (av.shape() != bv.shape())
        throw DimensionError("add shape mismatch: " + shape_string(av.shape()) + " + " + shape_string(bv.shape()));
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] += bv[i];
    return t.push(std::move(out), [a, b](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        accumulate(tp.grad(a), g);
        accumulate(tp.grad(b), g);
    });
}

Var sum(GradTape& t, Var x) {
    double s = 0.0;
    for (double v : t.value(x).values())
        s += v;
    return t.push(Tensor::scalar(s), [x](GradTape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        for (auto& v : tp.grad(x).values())
            v += g;
    });
}

Var spmm(GradTape& t, const SparseMatrix& s, Var x) {
    const Tensor& xv = t.value(x);
    require_matrix(xv, "spmm");
    if (s.cols != xv.rows())
        throw DimensionError("sparse operator with " + std::to_string(s.cols) + " columns applied to " +
                             shape_string(xv.shape()));
    const std::size_t m = xv.cols();
    Tensor out({s.rows, m}, 0.0);
    for (const auto& e : s.entries)
        for (std::size_t j = 0; j < m; ++j)
            out.at(e.row, j) += e.weight * xv.at(e.col, j);
    // The matrix is copied so the closure does not depend on caller lifetime.
    return t.push(std::move(out), [s, x, m](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (const auto& e : s.entries)
            for (std::size_t j = 0; j < m; ++j)
                gx.at(e.col, j) += e.weight * g.at(e.row, j);
    });
}

Var segment_mean(GradTape& t, Var x, std::span<const std::size_t> offsets) {
    const Tensor& xv = t.value(x);
    require_matrix(xv, "segment_mean");
    if (offsets.size() < 2 || offsets.back() != xv.rows())
        throw DimensionError("segment offsets do not cover " + shape_string(xv.shape()));
    const std::size_t groups = offsets.size() - 1, m = xv.cols();
    Tensor out({groups, m}, 0.0);
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t lo = offsets[g], hi = offsets[g + 1];
        if (hi <= lo)
            throw DimensionError("empty segment in segment_mean");
        for (std::size_t r = lo; r < hi; ++r)
            for (std::size_t j = 0; j < m; ++j)
                out.at(g, j) += xv.at(r, j);
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (std::size_t j = 0; j < m; ++j)
            out.at(g, j) *= inv;
    }
    std::vector<std::size_t> offs(offsets.begin(), offsets.end());
    return t.push(std::move(out), [x, offs = std::move(offs), m](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
            const double inv = 1.0 / static_cast<double>(offs[s + 1] - offs[s]);
            for (std::size_t r = offs[s]; r < offs[s + 1]; ++r)
                for (std::size_t j = 0; j < m; ++j)
                    gx.at(r, j) += inv * g.at(s, j);
        }
    });
}

Var concat_cols(GradTape& t, std::span<const Var> parts) {
    if (parts.empty())
        throw DimensionError("concat_cols needs at least one input");
    const std::size_t n = t.value(parts[0]).rows();
    std::size_t total = 0;
    for (Var p : parts) {
        const Tensor& v = t.value(p);
        require_matrix(v, "concat_cols");
        if (v.rows() != n)
            throw DimensionError("concat_cols row mismatch: " + shape_string(t.value(parts[0]).shape()) + " vs " +
                                 shape_string(v.shape()));
        total += v.cols();
    }
    Tensor out({n, total}, 0.0);
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& v = t.value(p);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < v.cols(); ++j)
                out.at(i, off + j) = v.at(i, j);
        off += v.cols();
    }
    std::vector<Var> ins(parts.begin(), parts.end());
    return t.push(std::move(out), [ins = std::move(ins)](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        std::size_t col = 0;
        for (Var p : ins) {
            Tensor& gp = tp.grad(p);
            for (std::size_t i = 0; i < gp.rows(); ++i)
                for (std::size_t j = 0; j < gp.cols(); ++j)
                    gp.at(i, j) += g.at(i, col + j);
            col += gp.cols();
        }
    });
}

Var edge_scores(GradTape& t, Var dst_scores, Var src_scores, std::span<const Edge> edges) {
    const Tensor& dv = t.value(dst_scores);
    const Tensor& sv = t.value(src_scores);
    if (dv.shape() != sv.shape() || dv.cols() != 1)
        throw DimensionError("edge_scores expects two [n x 1] inputs, got " + shape_string(dv.shape()) + " and " +
                             shape_string(sv.shape()));
    Tensor out({edges.size(), 1}, 0.0);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (edges[k].dst >= dv.rows() || edges[k].src >= sv.rows())
            throw IndexError("edge endpoint out of range");
        out[k] = dv[edges[k].dst] + sv[edges[k].src];
    }
    std::vector<Edge> es(edges.begin(), edges.end());
    return t.push(std::move(out), [dst_scores, src_scores, es = std::move(es)](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gd = tp.grad(dst_scores);
        Tensor& gs = tp.grad(src_scores);
        for (std::size_t k = 0; k < es.size(); ++k) {
            gd[es[k].dst] += g[k];
            gs[es[k].src] += g[k];
        }
    });
}

Var edge_softmax(GradTape& t, Var scores, std::span<const Edge> edges, std::size_t num_nodes) {
    const Tensor& sv = t.value(scores);
    if (sv.size() != edges.size())
        throw DimensionError("edge_softmax: " + std::to_string(edges.size()) + " edges but scores " +
                             shape_string(sv.shape()));
    std::vector<double> mx(num_nodes, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < edges.size(); ++k)
        mx[edges[k].dst] = std::max(mx[edges[k].dst], sv[k]);
    std::vector<double> denom(num_nodes, 0.0);
    Tensor out({edges.size(), 1}, 0.0);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        out[k] = std::exp(sv[k] - mx[edges[k].dst]);
        denom[edges[k].dst] += out[k];
    }
    for (std::size_t k = 0; k < edges.size(); ++k)
        out[k] /= denom[edges[k].dst];
    std::vector<Edge> es(edges.begin(), edges.end());
    return t.push(std::move(out), [scores, es = std::move(es), num_nodes](GradTape& tp, std::size_t self) {
        // d s_k = a_k (g_k - sum_{l in group} a_l g_l)
        const Tensor& g = tp.grad(self);
        const Tensor& a = tp.value(Var{self});
        std::vector<double> dot(num_nodes, 0.0);
        for (std::size_t k = 0; k < es.size(); ++k)
            dot[es[k].dst] += a[k] * g[k];
        Tensor& gs = tp.grad(scores);
        for (std::size_t k = 0; k < es.size(); ++k)
            gs[k] += a[k] * (g[k] - dot[es[k].dst]);
    });
}

Var edge_aggregate(GradTape& t, Var weights, Var x, std::span<const Edge> edges) {
    const Tensor& wv = t.value(weights);
    const Tensor& xv = t.value(x);
    require_matrix(xv, "edge_aggregate");
    if (wv.size() != edges.size())
        throw DimensionError("edge_aggregate: " + std::to_string(edges.size()) + " edges but weights " +
                             shape_string(wv.shape()));
    const std::size_t m = xv.cols();
    Tensor out({xv.rows(), m}, 0.0);
    for (std::size_t k = 0; k < edges.size(); ++k)
        for (std::size_t j = 0; j < m; ++j)
            out.at(edges[k].dst, j) += wv[k] * xv.at(edges[k].src, j);
    std::vector<Edge> es(edges.begin(), edges.end());
    return t.push(std::move(out), [weights, x, es = std::move(es), m](GradTape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& w = tp.value(weights);
        const Tensor& xv = tp.value(x);
        Tensor& gw = tp.grad(weights);
        Tensor& gx = tp.grad(x);
        for (std::size_t k = 0; k < es.size(); ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                s += g.at(es[k].dst, j) * xv.at(es[k].src, j);
                gx.at(es[k].src, j) += w[k] * g.at(es[k].dst, j);
            }
            gw[k] += s;
        }
    });
}

Var weighted_softmax_cross_entropy(GradTape& t, Var logits, std::span<const int> targets,
                                   std::span<const double> weights) {
    const Tensor& lv = t.value(logits);
    require_matrix(lv, "softmax_cross_entropy");
    if (lv.cols() < 2)
        throw DimensionError("softmax_cross_entropy needs at least 2 classes, got " + shape_string(lv.shape()));
    if (targets.size() != lv.rows() || weights.size() != lv.rows())
        throw DimensionError("softmax_cross_entropy: " + std::to_string(lv.rows()) + " rows but " +
                             std::to_string(targets.size()) + " targets and " + std::to_string(weights.size()) +
                             " weights");
    const auto per_row = cross_entropy_rows(lv, targets);
    double loss = 0.0;
    for (std::size_t i = 0; i < per_row.size(); ++i)
        loss += weights[i] * per_row[i];
    std::vector<int> tg(targets.begin(), targets.end());
    std::vector<double> wt(weights.begin(), weights.end());
    return t.push(Tensor::scalar(loss), [logits, tg = std::move(tg), wt = std::move(wt)](GradTape& tp,
                                                                                        std::size_t self) {
        const double g = tp.grad(self)[0];
        const Tensor p = softmax_rows(tp.value(logits));
        Tensor& gl = tp.grad(logits);
        for (std::size_t i = 0; i < p.rows(); ++i)
            for (std::size_t c = 0; c < p.cols(); ++c) {
                const double onehot = static_cast<int>(c) == tg[i] ? 1.0 : 0.0;
                gl.at(i, c) += g * wt[i] * (p.at(i, c) - onehot);
            }
    });
}

Var softmax_cross_entropy(GradTape& t, Var logits, std::span<const int> targets) {
    const std::size_t n = t.value(logits).rows();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    return weighted_softmax_cross_entropy(t, logits, targets, w);
}

Tensor softmax_rows(const Tensor& logits) {
    Tensor out = logits;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        const double lse = log_sum_exp(row);
        for (auto& v : row)
            v = std::exp(v - lse);
    }
    return out;
}

std::vector<double> cross_entropy_rows(const Tensor& logits, std::span<const int> targets) {
    std::vector<double> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const int c = targets[i];
        if (c < 0 || static_cast<std::size_t>(c) >= logits.cols())
            throw IndexError("target " + std::to_string(c) + " out of range for " + std::to_string(logits.cols()) +
                             " classes");
        const auto row = logits.row(i);
        out[i] = log_sum_exp(row) - row[static_cast<std::size_t>(c)];
    }
    return out;
}

}  // namespace coldsan
