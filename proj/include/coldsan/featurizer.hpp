#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace coldsan {

/// Signed hashed bag of words, L2-normalised. Tokens are maximal runs of
/// ASCII letters/digits, lowercased. Empty text gives the zero vector.
std::vector<double> hash_features(std::string_view text, std::size_t dim, std::uint64_t seed = 0);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace coldsan
