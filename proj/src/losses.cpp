#include "coldsan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coldsan/error.hpp"

namespace coldsan {

namespace {

double clamp_prob(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw NumericError("probability " + std::to_string(p) + " outside [0, 1]");
    return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

}  // namespace

double loss_cls(const std::array<double, 2>& y_hat, Label y) {
    return -std::log(clamp_prob(y_hat[static_cast<std::size_t>(y)]));
}

double loss_cls(std::span<const std::array<double, 2>> y_hat, std::span<const Label> y) {
    if (y_hat.size() != y.size() || y.empty())
        throw DimensionError("loss_cls needs equal, nonzero numbers of predictions and labels");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        s += loss_cls(y_hat[i], y[i]);
    return s / static_cast<double>(y.size());
}

double loss_disc(double y_d_hat, int y_d) {
    if (y_d != 0 && y_d != 1)
        throw IndexError("discriminator target must be 0 or 1");
    const double p = clamp_prob(y_d_hat);
    return y_d ? -std::log(p) : -std::log(1.0 - p);
}

double loss_disc(std::span<const double> y_d_hat, std::span<const int> y_d) {
    if (y_d_hat.size() != y_d.size() || y_d.empty())
        throw DimensionError("loss_disc needs equal, nonzero numbers of predictions and labels");
    double s = 0.0;
    for (std::size_t i = 0; i < y_d.size(); ++i)
        s += loss_disc(y_d_hat[i], y_d[i]);
    return s / static_cast<double>(y_d.size());
}

double loss_san(double l_cls, double l_d) { return l_cls - l_d; }

double total_loss(double san_full, double san_stripped, double lambda) {
    if (!(lambda >= 0.0))
        throw ConfigError("lambda must be nonnegative");
    return san_full + lambda * san_stripped;
}

}  // namespace coldsan
