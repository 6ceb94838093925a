#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coldsan/gradcheck.hpp"
#include "coldsan/losses.hpp"
#include "coldsan/model.hpp"
#include "coldsan/split.hpp"

namespace coldsan {

inline constexpr std::array<double, 6> kLambdaGrid{0.1, 1.0, 1.5, 2.0, 5.0, 10.0};

/// Which form of the held-out training samples drives model selection.
enum class ValidationView { full, stripped };

struct TrainingConfig {
    EncoderKind encoder = EncoderKind::gcn;
    std::size_t d_h = 64;
    std::size_t gat_heads = 4;
    double eta = 0.05;
    double lambda = 1.0;
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    bool adversarial = true;
    double grl_coeff = 1.0;
    /// Optional per-epoch reversal coefficient; overrides grl_coeff when set.
    std::function<double(std::size_t epoch)> grl_schedule;
    double validation_fraction = 0.1;
    std::size_t patience = 30;  ///< 0 disables early stopping
    ValidationView validation_view = ValidationView::stripped;

    void validate() const;
    ModelConfig model(std::size_t d_in) const { return {encoder, d_in, d_h, gat_heads}; }
};

struct EpochRecord {
    std::size_t epoch = 0;
    LossBundle losses;
    double total = 0.0;
    std::optional<double> validation_accuracy;
};

struct TrainingTrace {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

struct TrainResult {
    Model model;
    TrainingTrace trace;
};

/// Adversarial training on paired full / stripped copies of split.train:
/// objective L_san(full) + lambda * L_san(stripped), one backward pass with
/// the reversal layer flipping the discriminator gradient at the encoder.
/// The test side of the split is never read.
TrainResult train_san(const DatasetSplit& split, const TrainingConfig& config);

/// Classification loss on the full training copy only.
TrainResult train_vanilla(const DatasetSplit& split, const TrainingConfig& config);

struct PredictResult {
    std::vector<Label> labels;
    std::vector<std::array<double, 2>> probabilities;
    std::vector<HiddenRep> hidden;
};

/// argmax of the classifier output; ties go to fake (class 0).
PredictResult predict(const Model& model, std::span<const NewsSample> samples);
Label argmax_label(const std::array<double, 2>& p);

/// The paired objective on one fixed batch, exposed for gradient checks.
struct SanBatch {
    ModelConfig model;
    Corpus samples;  ///< full copies; the stripped twins are derived
    double lambda = 1.0;
    double grl_coeff = 1.0;
    bool adversarial = true;
};

struct SanEvaluation {
    LossBundle losses;
    double classification = 0.0;  ///< cls_full + lambda * cls_stripped
    double discrimination = 0.0;  ///< disc_full + lambda * disc_stripped
    Gradients gradients;          ///< empty unless requested
};

/// With reverse=false the discriminator sits directly on h (no reversal).
SanEvaluation evaluate_san_batch(const SanBatch& batch, const ParamSets& params, bool with_gradients,
                                 bool reverse = true);

/// Objective for finite_difference_check: the encoder follows
/// classification - coeff * discrimination, the heads follow
/// classification + discrimination.
Objective san_objective(const SanBatch& batch);

void save_trace(const TrainingTrace& trace, const TrainingConfig& config, const std::filesystem::path& path);

}  // namespace coldsan
