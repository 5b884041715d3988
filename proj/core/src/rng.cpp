#include "hotgp/rng.hpp"

#include "hotgp/normal.hpp"

#include <stdexcept>

namespace hotgp {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
std::uint64_t avalanche(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return avalanche(h + v * kGolden + 0x632be59bd9b4e019ULL);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(hash_combine(0x48a7f2c1d3e5b907ULL, seed)) {}

Rng Rng::substream(std::uint64_t seed, std::string_view purpose,
                   std::uint64_t episode, std::uint64_t step) {
    std::uint64_t k = hash_combine(0x48a7f2c1d3e5b907ULL, seed);
    k = hash_combine(k, fnv1a(purpose));
    k = hash_combine(k, episode);
    k = hash_combine(k, step);
    return Rng(k, 0);
}

Rng Rng::from_state(std::uint64_t key, std::uint64_t counter) { return Rng(key, counter); }

std::uint64_t Rng::next_u64() {
    counter_ += 1;
    return avalanche(key_ + counter_ * kGolden);
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double Rng::normal() { return std_normal_quantile(uniform_pos01()); }

double Rng::normal(double mu, double sigma) { return mu + sigma * normal(); }

std::int64_t Rng::uniform_index(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("uniform_index: n must be positive");
    const unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<std::int64_t>(m >> 64);
}

}  // namespace hotgp
