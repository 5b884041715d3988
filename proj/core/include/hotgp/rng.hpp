#pragma once

#include <cstdint>
#include <string_view>

namespace hotgp {

// Counter-mode pseudo-random stream: every output is an avalanche hash of
// (key, counter). Substreams are keyed by (seed, purpose, episode, step) so
// draws are reproducible regardless of how work is interleaved, and the
// entire generator state is two integers.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    static Rng substream(std::uint64_t seed, std::string_view purpose,
                         std::uint64_t episode = 0, std::uint64_t step = 0);
    static Rng from_state(std::uint64_t key, std::uint64_t counter);

    std::uint64_t next_u64();

    double uniform01();      // [0, 1)
    double uniform_pos01();  // (0, 1)
    double uniform(double lo, double hi);

    /// Standard normal via inverse-transform sampling (one u64 per draw).
    double normal();
    double normal(double mu, double sigma);

    /// Uniform integer in [0, n); n must be positive.
    std::int64_t uniform_index(std::int64_t n);

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace hotgp
