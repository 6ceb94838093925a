#pragma once

#include <array>
#include <optional>
#include <span>

#include "coldsan/sample.hpp"

namespace coldsan {

inline constexpr double kProbabilityClamp = 1e-12;

/// Cross-entropy of predicted (fake, real) probabilities against the label,
/// mean over the batch. Probabilities are clamped to [1e-12, 1-1e-12].
double loss_cls(std::span<const std::array<double, 2>> y_hat, std::span<const Label> y);
double loss_cls(const std::array<double, 2>& y_hat, Label y);

/// Binary cross-entropy -y_d log p - (1-y_d) log(1-p), mean over the batch.
double loss_disc(std::span<const double> y_d_hat, std::span<const int> y_d);
double loss_disc(double y_d_hat, int y_d);

/// L_cls - L_d.
double loss_san(double l_cls, double l_d);
/// san_full + lambda * san_stripped.
double total_loss(double san_full, double san_stripped, double lambda);

/// Loss components for one batch or one epoch.
struct LossBundle {
    double cls_full = 0.0;
    std::optional<double> cls_stripped;
    std::optional<double> disc_full;
    std::optional<double> disc_stripped;

    double san_full() const { return loss_san(cls_full, disc_full.value_or(0.0)); }
    double san_stripped() const { return loss_san(cls_stripped.value_or(0.0), disc_stripped.value_or(0.0)); }
    double total(double lambda) const { return total_loss(san_full(), san_stripped(), lambda); }
};

}  // namespace coldsan
