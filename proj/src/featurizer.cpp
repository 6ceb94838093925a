#include "coldsan/featurizer.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "coldsan/error.hpp"

namespace coldsan {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> hash_features(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim == 0)
        throw ConfigError("featurizer dimension must be positive");
    std::vector<double> out(dim, 0.0);
    const std::uint64_t basis = fnv1a(std::to_string(seed));
    std::string token;
    auto flush = [&] {
        if (token.empty())
            return;
        const std::uint64_t h = fnv1a(token, basis);
        out[h % dim] += (h >> 63) ? -1.0 : 1.0;
        token.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c))
            token.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    double norm = 0.0;
    for (double v : out)
        norm += v * v;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& v : out)
            v /= norm;
    }
    return out;
}

}  // namespace coldsan
