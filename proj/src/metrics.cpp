#include "coldsan/metrics.hpp"

#include "coldsan/error.hpp"

namespace coldsan {

std::size_t ConfusionMatrix::total() const noexcept {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size())
        throw DimensionError("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    if (labels.empty())
        throw InsufficientDataError("confusion: no samples");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i)
        ++cm.counts[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
    return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
    const auto total = static_cast<double>(cm.total());
    if (total == 0.0)
        throw InsufficientDataError("metrics of an empty confusion matrix");
    std::array<double, 2> f1{}, support{};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto tp = static_cast<double>(cm.counts[c][c]);
        const auto predicted = static_cast<double>(cm.counts[0][c] + cm.counts[1][c]);
        const auto actual = static_cast<double>(cm.counts[c][0] + cm.counts[c][1]);
        const double precision = predicted > 0.0 ? tp / predicted : 0.0;
        const double recall = actual > 0.0 ? tp / actual : 0.0;
        f1[c] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        support[c] = actual;
    }
    Metrics m;
    m.accuracy = static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / total;
    m.f1_fake = f1[0];
    m.f1_real = f1[1];
    m.macro_f1 = (f1[0] + f1[1]) / 2.0;
    m.weighted_f1 = (support[0] * f1[0] + support[1] * f1[1]) / total;
    return m;
}

}  // namespace coldsan
