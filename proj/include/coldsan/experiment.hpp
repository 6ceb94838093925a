#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coldsan/config.hpp"
#include "coldsan/metrics.hpp"
#include "coldsan/model.hpp"
#include "coldsan/split.hpp"

namespace coldsan {

struct SeedResult {
    std::uint64_t seed = 0;
    Metrics cold;                 ///< on the propagation-stripped test set
    std::optional<Metrics> warm;  ///< same test samples with trees intact (general protocol)
    std::vector<std::pair<std::string, double>> event_weighted_f1;  ///< event-aware protocol
    std::optional<double> event_average;

    friend bool operator==(const SeedResult&, const SeedResult&) = default;
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;  ///< sample standard deviation (0 for one seed)
    double min = 0.0;
    double max = 0.0;
};

struct ExperimentReport {
    nlohmann::json config;
    std::string fingerprint;
    Protocol protocol = Protocol::general;
    std::vector<std::string> events;
    std::vector<SeedResult> seeds;

    /// Keys: accuracy, macro_f1, f1_fake, f1_real, weighted_f1, and when present
    /// warm_accuracy, event_average, wf1:<event>.
    std::map<std::string, MetricSummary> summary() const;
    /// Per-seed values of a summary key, in seed order.
    std::vector<double> values(const std::string& key) const;
};

/// For every seed: split (general: seeded 75/25; event-aware: each event held
/// out in turn), strip test propagation, train, evaluate cold. Refuses to
/// evaluate a test sample that still carries a tree.
ExperimentReport run_experiment(const Corpus& corpus, const RunConfig& config);

/// One trained model evaluated on the cold (and, if trees are present, warm) test set.
SeedResult evaluate_model(const Model& model, const Corpus& test, std::uint64_t seed = 0);

struct LambdaSweep {
    std::vector<double> grid;
    std::vector<ExperimentReport> reports;
    std::size_t best = 0;  ///< highest mean cold accuracy; ties keep the smaller lambda
};

/// SAN runs over a lambda grid.
LambdaSweep sweep_lambda(const Corpus& corpus, RunConfig config, std::span<const double> grid);

/// Paired two-sided p-value of treatment vs baseline on `key`, pairing by seed.
double compare_reports(const ExperimentReport& treatment, const ExperimentReport& baseline,
                       const std::string& key = "accuracy");

/// JSON Lines report: header (config + fingerprint), one record per seed, then a
/// table record in the usual results-table layout (general: Acc, ma-F1, F1 fake,
/// F1 real; event-aware: Acc., one weighted-F1 per event, Avg.).
void write_report(const ExperimentReport& report, const std::filesystem::path& path,
                  std::optional<double> p_value = std::nullopt);
std::string serialize_report(const ExperimentReport& report, std::optional<double> p_value = std::nullopt);
ExperimentReport read_report(const std::filesystem::path& path);

/// Groups seed records by fingerprint, deduplicates by seed and rebuilds each summary.
std::vector<ExperimentReport> merge_reports(std::span<const ExperimentReport> parts);

/// Plain-text table for terminals.
std::string format_table(const ExperimentReport& report);

enum class EmbeddingTag { train_full, train_stripped, test };
std::string_view to_string(EmbeddingTag t);

struct TaggedSample {
    const NewsSample* sample;
    EmbeddingTag tag;
};

/// train-full, train-stripped and test entries for a split.
std::vector<TaggedSample> tag_split(const DatasetSplit& split);

struct EmbeddingRecord {
    std::string id;
    EmbeddingTag tag = EmbeddingTag::test;
    Label label = Label::fake;
    std::vector<double> h;
};

/// One record per tagged sample. train-stripped and test samples are encoded
/// without their trees.
void dump_embeddings(const Model& model, std::span<const TaggedSample> samples, const std::filesystem::path& path);
std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path);

}  // namespace coldsan
