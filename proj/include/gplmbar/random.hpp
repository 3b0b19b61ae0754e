#pragma once

#include <boost/random/uniform_int_distribution.hpp>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace gplmbar {

/// The engine's output sequence is fixed by the standard; distributions come
/// from Boost.Random so draws are identical across standard libraries.
using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream keyed by (base seed, a, b), e.g. (seed, replication, block).
inline Engine make_stream(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    const std::uint64_t key = splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
    return Engine(key);
}

/// Fisher-Yates with a portable index distribution.
template <class T>
void shuffle_in_place(std::vector<T>& values, Engine& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(values[i - 1], values[pick(rng)]);
    }
}

}  // namespace gplmbar
