#pragma once

#include <cstdint>
#include <random>

namespace benes {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Identifies an independent random stream. Streams form a tree: child(k) derives a
// sub-stream deterministically, so work can be split without depending on worker count.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    RngSeed child(std::uint64_t k) const {
        return {seed, splitmix64(stream_id ^ splitmix64(k + 0x632be59bd9b4e019ULL))};
    }

    friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

// Engine for the `index`-th block of work inside a stream.
inline Engine make_engine(const RngSeed& s, std::uint64_t index = 0) {
    std::uint64_t k = splitmix64(s.seed);
    k = splitmix64(k ^ s.stream_id);
    k = splitmix64(k ^ index);
    return Engine(k);
}

}  // namespace benes
