#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace pnd {

// Counter-based generator (splitmix64 over a seed/stream/counter triple).
// Same seed gives the same mask/init/shuffle sequence on every platform,
// and split() hands out independent streams for parallel runs.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), counter_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_ + 1));
        z += 0x9e3779b97f4a7c15ULL * ++counter_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Independent child stream; advancing the child never touches the parent.
    RngStream split() {
        return RngStream(next_u64(), stream_ + 0x632be59bd9b4e019ULL);
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny relative to 2^64.
        return next_u64() % n;
    }

    double normal() {
        // Box-Muller; one value per call keeps the stream counter simple.
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_;
};

}  // namespace pnd
