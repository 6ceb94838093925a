#include "coldsan/tape.hpp"

#include "coldsan/error.hpp"

namespace coldsan {

Var GradTape::constant(Tensor value) {
    nodes_.push_back({std::move(value), {}, false, {}});
    return {nodes_.size() - 1};
}

Var GradTape::parameter(const ParamSets& params, ParamId id) {
    if (auto it = param_nodes_.find(id); it != param_nodes_.end())
        return {it->second};
    nodes_.push_back({params.at(id), {}, false, {}});
    param_nodes_.emplace(id, nodes_.size() - 1);
    return {nodes_.size() - 1};
}

Var GradTape::push(Tensor value, Backward backward) {
    nodes_.push_back({std::move(value), {}, false, record_ ? std::move(backward) : Backward{}});
    return {nodes_.size() - 1};
}

Tensor& GradTape::grad(Var v) {
    auto& n = nodes_[v.id];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape(), 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

void GradTape::backward(Var loss) {
    if (!record_)
        throw ConsistencyError("backward called on a tape that does not record");
    if (value(loss).size() != 1)
        throw DimensionError("backward needs a scalar loss, got shape " + shape_string(value(loss).shape()));
    grad(loss)[0] += 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (n.has_grad && n.backward)
            n.backward(*this, i);
    }
}

Gradients GradTape::parameter_gradients() const {
    Gradients out;
    for (const auto& [id, node] : param_nodes_) {
        const auto& n = nodes_[node];
        out.emplace(id, n.has_grad ? n.grad : Tensor(n.value.shape(), 0.0));
    }
    return out;
}

}  // namespace coldsan
