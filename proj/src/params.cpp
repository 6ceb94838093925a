#include "coldsan/params.hpp"

#include "coldsan/error.hpp"

namespace coldsan {

std::string_view to_string(ParamGroupKind g) {
    switch (g) {
    case ParamGroupKind::encoder: return "encoder";
    case ParamGroupKind::classifier: return "classifier";
    case ParamGroupKind::discriminator: return "discriminator";
    }
    return "?";
}

ParamGroupKind parse_param_group(std::string_view s) {
    if (s == "encoder") return ParamGroupKind::encoder;
    if (s == "classifier") return ParamGroupKind::classifier;
    if (s == "discriminator") return ParamGroupKind::discriminator;
    throw ParseError("unknown parameter group '" + std::string(s) + "'");
}

bool GroupSet::contains(ParamGroupKind g) const noexcept {
    switch (g) {
    case ParamGroupKind::encoder: return encoder;
    case ParamGroupKind::classifier: return classifier;
    case ParamGroupKind::discriminator: return discriminator;
    }
    return false;
}

std::vector<Parameter>& ParamSets::group(ParamGroupKind g) {
    switch (g) {
    case ParamGroupKind::classifier: return classifier;
    case ParamGroupKind::discriminator: return discriminator;
    default: return encoder;
    }
}

const std::vector<Parameter>& ParamSets::group(ParamGroupKind g) const {
    return const_cast<ParamSets*>(this)->group(g);
}

Tensor& ParamSets::at(ParamId id) {
    auto& g = group(id.group);
    if (id.index >= g.size())
        throw IndexError("no parameter " + std::to_string(id.index) + " in group " +
                         std::string(to_string(id.group)));
    return g[id.index].value;
}

const Tensor& ParamSets::at(ParamId id) const { return const_cast<ParamSets*>(this)->at(id); }

ParamId ParamSets::add(ParamGroupKind g, std::string name, Tensor value) {
    auto& grp = group(g);
    grp.push_back({std::move(name), std::move(value)});
    return {g, grp.size() - 1};
}

ParamId ParamSets::find(ParamGroupKind g, std::string_view name) const {
    const auto& grp = group(g);
    for (std::size_t i = 0; i < grp.size(); ++i)
        if (grp[i].name == name)
            return {g, i};
    throw LookupError("no parameter '" + std::string(name) + "' in group " + std::string(to_string(g)));
}

std::vector<ParamId> ParamSets::ids() const {
    std::vector<ParamId> out;
    for (auto g : {ParamGroupKind::encoder, ParamGroupKind::classifier, ParamGroupKind::discriminator})
        for (std::size_t i = 0; i < group(g).size(); ++i)
            out.push_back({g, i});
    return out;
}

std::size_t ParamSets::scalar_count() const {
    std::size_t n = 0;
    for (const auto& id : ids())
        n += at(id).size();
    return n;
}

void sgd_step(ParamSets& params, const Gradients& grads, double eta, GroupSet groups) {
    for (const auto& id : params.ids()) {
        if (!groups.contains(id.group))
            continue;
        auto it = grads.find(id);
        const auto& p = params.group(id.group)[id.index];
        if (it == grads.end())
            throw ConsistencyError("missing gradient for " + std::string(to_string(id.group)) + "." + p.name);
        if (it->second.shape() != p.value.shape())
            throw ConsistencyError("gradient shape " + shape_string(it->second.shape()) + " does not match " +
                                   std::string(to_string(id.group)) + "." + p.name + " " +
                                   shape_string(p.value.shape()));
    }
    for (const auto& id : params.ids()) {
        if (!groups.contains(id.group))
            continue;
        auto& value = params.at(id);
        const auto& g = grads.at(id);
        for (std::size_t i = 0; i < value.size(); ++i)
            value[i] -= eta * g[i];
    }
}

}  // namespace coldsan
