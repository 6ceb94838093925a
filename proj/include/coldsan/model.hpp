#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "coldsan/encoders.hpp"
#include "coldsan/sample.hpp"

namespace coldsan {

struct Model {
    ModelConfig config;
    std::uint64_t seed = 0;
    ParamSets params;

    friend bool operator==(const Model&, const Model&) = default;
};

Model make_model(const ModelConfig& config, std::uint64_t seed);

struct HiddenRep {
    std::vector<double> h;
    bool has_structure = false;
};

struct Prediction {
    std::array<double, 2> y_hat{};  ///< (fake, real)
    double y_d = 0.5;               ///< probability that h was computed with structure
};

/// Forward pass for one sample; a missing tree is read as the lone root x.
HiddenRep encode_sample(const Model& model, const NewsSample& sample);
/// Hidden representations for many samples, forward only.
std::vector<HiddenRep> encode_samples(const Model& model, std::span<const NewsSample> samples,
                                      std::size_t batch_size = 64);

/// softmax(h W_f + b_f).
std::array<double, 2> classify(const ParamSets& params, std::span<const double> h);
/// Probability of the "has structure" class from the discriminator head.
/// The reversal layer is the identity in the forward pass, so coeff does not
/// change this value; it only matters for gradients.
double discriminate(const ParamSets& params, std::span<const double> h, double coeff = 1.0);

/// JSON Lines: a header {"format":"coldsan-checkpoint","encoder",..,"d_in","d_h",
/// "gat_heads","seed"} then one line per parameter {"group","name","shape","values"}.
/// Values round-trip bit-exactly.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Model& model);
Model parse_checkpoint(const std::string& text, const std::string& source = "<memory>");

}  // namespace coldsan
