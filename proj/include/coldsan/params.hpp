#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "coldsan/tensor.hpp"

namespace coldsan {

/// The three trainable groups: encoder, fake-news classifier, structure discriminator.
enum class ParamGroupKind : std::uint8_t { encoder = 0, classifier = 1, discriminator = 2 };

std::string_view to_string(ParamGroupKind g);
ParamGroupKind parse_param_group(std::string_view s);

struct ParamId {
    ParamGroupKind group = ParamGroupKind::encoder;
    std::size_t index = 0;

    friend auto operator<=>(const ParamId&, const ParamId&) = default;
};

struct Parameter {
    std::string name;
    Tensor value;

    friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Which groups an update touches.
struct GroupSet {
    bool encoder = true;
    bool classifier = true;
    bool discriminator = true;

    bool contains(ParamGroupKind g) const noexcept;
    static GroupSet all() { return {}; }
    static GroupSet without_discriminator() { return {true, true, false}; }
};

struct ParamSets {
    std::vector<Parameter> encoder;
    std::vector<Parameter> classifier;
    std::vector<Parameter> discriminator;

    std::vector<Parameter>& group(ParamGroupKind g);
    const std::vector<Parameter>& group(ParamGroupKind g) const;

    Tensor& at(ParamId id);
    const Tensor& at(ParamId id) const;

    ParamId add(ParamGroupKind g, std::string name, Tensor value);
    ParamId find(ParamGroupKind g, std::string_view name) const;

    std::vector<ParamId> ids() const;
    std::size_t scalar_count() const;

    friend bool operator==(const ParamSets&, const ParamSets&) = default;
};

using Gradients = std::map<ParamId, Tensor>;

/// Plain descent p <- p - eta * grad(p) over every parameter in `groups`.
/// Throws ConsistencyError when a parameter in those groups has no gradient
/// or a gradient of the wrong shape.
void sgd_step(ParamSets& params, const Gradients& grads, double eta,
              GroupSet groups = GroupSet::all());

}  // namespace coldsan
