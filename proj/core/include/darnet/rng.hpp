#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace darnet {

// Seeded generator with distribution transforms written out by hand so the
// sequence is identical under every standard library (std::*_distribution is
// implementation-defined). One instance per caller; never share across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in the closed range [lo, hi], unbiased (rejection).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // Standard normal via Box-Muller; caches the second variate.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over the bytes of s.
std::uint64_t hash_string(std::string_view s);

// Deterministic child seed from a base seed and any number of integer keys.
template <typename... Keys>
std::uint64_t derive_seed(std::uint64_t base, Keys... keys)
{
    std::uint64_t h = mix64(base ^ 0x5d4e3c2b1a0f9e8dULL);
    ((h = mix64(h ^ static_cast<std::uint64_t>(keys))), ...);
    return h;
}

} // namespace darnet
