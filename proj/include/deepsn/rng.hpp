#pragma once
#include <cstdint>
#include <random>

namespace deepsn {

// splitmix64; used to derive independent child seeds from a master seed so
// parallel workers get order-independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child stream i of a master seed. Stable across thread counts and run order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64(s);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream) {
    return std::mt19937_64(derive_seed(master, stream));
}

} // namespace deepsn
