// SPDX-License-Identifier: Apache-2.0
//
// Deterministic RNG plumbing. Every consumer derives its own stream from
// (master_seed, round, client, purpose), so results do not depend on the
// order in which clients are evaluated or on the number of worker threads.
#pragma once

#include <cstdint>
#include <random>

namespace fedopt {

struct SeedSpec {
    std::uint64_t master = 0;
};

enum class StreamPurpose : std::uint64_t {
    client_sampling = 1,
    gradient = 2,
    init = 3,
    task_data = 4,
    partition = 5,
    noise = 6,
    ou_sim = 7,
    probe = 8,
};

namespace detail {
// splitmix64 finalizer, used as the mixing function for stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

// Pure function of the tuple; collision-resistant via repeated 64-bit mixing.
inline std::uint64_t derive_seed(const SeedSpec& seed, std::int64_t round, std::int64_t client,
                                 StreamPurpose purpose) {
    std::uint64_t h = detail::mix64(seed.master ^ 0xA3C59AC2F0E1D7B5ULL);
    h = detail::mix64(h ^ static_cast<std::uint64_t>(round));
    h = detail::mix64(h ^ static_cast<std::uint64_t>(client));
    h = detail::mix64(h ^ static_cast<std::uint64_t>(purpose));
    return h;
}

// A self-contained random stream. Streams never share state.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    double uniform() { return uniform_(gen_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(gen_); }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen_);
    }

    double normal() { return normal_(gen_); }

    double gamma(double shape) {
        return std::gamma_distribution<double>(shape, 1.0)(gen_);
    }

    std::mt19937_64& generator() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline RngStream derive_rng(const SeedSpec& seed, std::int64_t round, std::int64_t client,
                            StreamPurpose purpose) {
    return RngStream(derive_seed(seed, round, client, purpose));
}

}  // namespace fedopt
