#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "coldsan/sample.hpp"

namespace coldsan {

enum class SplitKind { general, event };

struct SplitDescriptor {
    SplitKind kind = SplitKind::general;
    std::uint64_t seed = 0;
    double train_ratio = 0.75;
    bool stratified = false;
    std::string held_out_event;
    std::vector<std::string> test_ids;
};

struct DatasetSplit {
    Corpus train;
    Corpus test;
    SplitDescriptor provenance;
};

/// Uniform random split; train size is round-half-up(train_ratio * n).
/// With `stratified`, each label is split separately at the same ratio.
DatasetSplit split_general(const Corpus& samples, double train_ratio, std::uint64_t seed, bool stratified = false);

/// Leave-one-event-out: test is every sample of `held_out_event`.
DatasetSplit split_event_aware(const Corpus& samples, const std::string& held_out_event);

/// Distinct event tags in first-appearance order. Throws DataError if any sample is untagged.
std::vector<std::string> list_events(const Corpus& samples);

/// Same samples with the propagation tree removed.
Corpus strip_propagation(Corpus samples);

/// (full copy, stripped copy), aligned by position.
std::pair<Corpus, Corpus> make_training_copies(const Corpus& train);

/// Rebuilds a split from a descriptor (test ids), for audit and re-evaluation.
DatasetSplit apply_split(const Corpus& samples, const SplitDescriptor& descriptor);

void save_split_descriptor(const SplitDescriptor& d, const std::filesystem::path& path);
SplitDescriptor load_split_descriptor(const std::filesystem::path& path);

}  // namespace coldsan
