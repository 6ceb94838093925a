#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace coldsan {

/// Seeded generator. The transforms below are written out so that streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    double normal();

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Independent sub-streams derived from one user seed.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t shuffle = 3;
inline constexpr std::uint64_t validation = 4;
inline constexpr std::uint64_t synthetic = 5;
inline constexpr std::uint64_t gradcheck = 6;
}  // namespace stream

}  // namespace coldsan
