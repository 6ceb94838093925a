#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "coldsan/sample.hpp"

namespace coldsan {

/// counts[true][predicted], indexed by Label.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 2>, 2> counts{};

    std::size_t total() const noexcept;
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels);

struct Metrics {
    double accuracy = 0.0;
    double f1_fake = 0.0;
    double f1_real = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Per-class F1 = 2PR/(P+R), taken as 0 when P+R = 0; macro is the plain
/// mean of the two, weighted uses the true-class supports.
Metrics metrics(const ConfusionMatrix& cm);

}  // namespace coldsan
