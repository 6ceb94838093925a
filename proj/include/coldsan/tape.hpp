#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "coldsan/params.hpp"
#include "coldsan/tensor.hpp"

namespace coldsan {

/// Handle to a value recorded on a GradTape.
struct Var {
    std::size_t id = 0;
};

/// Reverse-mode tape. Every op appends a node holding its forward value and a
/// closure that pushes the node's gradient into its inputs. A tape is owned by
/// a single training step and discarded afterwards.
class GradTape {
public:
    using Backward = std::function<void(GradTape&, std::size_t self)>;

    /// With record=false no closures are kept (inference only).
    explicit GradTape(bool record = true) : record_(record) {}

    bool recording() const noexcept { return record_; }

    Var constant(Tensor value);

    /// Leaf bound to a parameter. Repeated requests for the same id return the
    /// same node, so gradients from every use accumulate there.
    Var parameter(const ParamSets& params, ParamId id);

    Var push(Tensor value, Backward backward);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradient buffer for node v, zero-initialised on first access.
    Tensor& grad(Var v);
    Tensor& grad(std::size_t id) { return grad(Var{id}); }
    bool has_grad(Var v) const { return nodes_[v.id].has_grad; }

    /// Seeds d(loss)/d(loss) = 1 and runs every closure in reverse order.
    void backward(Var loss);

    /// Gradient of every parameter recorded on this tape (zeros when unreached).
    Gradients parameter_gradients() const;

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool has_grad = false;
        Backward backward;
    };

    bool record_;
    std::vector<Node> nodes_;
    std::map<ParamId, std::size_t> param_nodes_;
};

}  // namespace coldsan
