#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "coldsan/sample.hpp"

namespace coldsan {

struct SyntheticConfig {
    std::size_t n_samples = 2000;
    double fake_ratio = 0.5;
    std::size_t d_in = 16;
    /// Distance between the class means of the content features.
    double content_separation = 0.5;
    /// Shifts tree depth, branching and reaction features between classes.
    double structure_separation = 2.0;
    std::size_t max_depth = 6;
    std::size_t max_branching = 3;
    std::size_t n_events = 5;

    void validate() const;
};

/// Labelled cascades. Content features are unit-variance Gaussians with class
/// means +-content_separation/2 along the first axis. Each tree is a spine of
/// sampled length (the height) with extra leaves hanging off spine nodes; fake
/// items get taller and bushier trees as structure_separation grows. Reaction
/// features are the source features plus unit noise, and fake reactions are
/// shifted by structure_separation along the second axis. Events are assigned
/// round-robin. Deterministic per seed.
Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

struct CorpusSummary {
    std::size_t fake = 0;
    std::size_t real = 0;
    std::size_t with_tree = 0;
    std::map<std::string, std::size_t> per_event;
    double mean_depth_fake = 0.0;
    double mean_depth_real = 0.0;
};

CorpusSummary summarize(const Corpus& corpus);

}  // namespace coldsan
