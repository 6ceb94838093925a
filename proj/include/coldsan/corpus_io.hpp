#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coldsan/sample.hpp"

namespace coldsan {

/// Corpus files are JSON Lines. The first line is a manifest
///   {"format":"coldsan-corpus","version":1,"d_in":D,"count":N}
/// followed by one record per sample:
///   {"id":..,"label":"fake"|"real","event":..,"x":[..],
///    "tree":{"root_id":..,"nodes":[[id,order,[..]],..],"edges":[[parent,child],..]}}
/// "event" and "tree" are optional. A record may carry "text" instead of "x",
/// and a node may carry a string instead of its feature array; those are
/// featurized with the hashed bag-of-words featurizer (seed from the
/// manifest key "featurizer_seed", default 0).
Corpus load_dataset(const std::filesystem::path& path);
void save_dataset(const Corpus& corpus, const std::filesystem::path& path);

/// In-memory variants used by the loader and tests.
Corpus parse_corpus(const std::string& text, const std::string& source = "<memory>");
std::string serialize_corpus(const Corpus& corpus);

/// Feature dimension shared by the corpus (0 when empty).
std::size_t corpus_dimension(const Corpus& corpus);

}  // namespace coldsan
