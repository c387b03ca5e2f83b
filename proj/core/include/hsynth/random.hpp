#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hsynth {

/// Stable 64-bit hash of a byte string (FNV-1a followed by a finalizer).
std::uint64_t hash_bytes(std::string_view bytes);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Child seed for user @p user_index of a cohort rooted at @p root_seed.
std::uint64_t derive_user_seed(std::uint64_t root_seed, std::uint64_t user_index);

/// Key of a child random stream. Every stochastic draw in the engine comes
/// from a stream addressed by (user seed, module tag, day, indicator), so
/// results do not depend on evaluation order.
struct StreamKey {
    std::uint64_t seed = 0;
    std::string_view tag;
    std::int64_t day = -1;
    std::string_view indicator;

    [[nodiscard]] std::uint64_t digest() const;
};

/// A deterministic random stream seeded from a StreamKey digest.
class Stream {
public:
    using result_type = std::mt19937_64::result_type;

    explicit Stream(std::uint64_t seed) : engine_(seed) {}
    explicit Stream(const StreamKey& key) : engine_(key.digest()) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi);
    double normal();
    bool bernoulli(double p);
    /// Standard normal truncated to [-bound, bound] by rejection.
    double truncated_normal(double bound);

private:
    std::mt19937_64 engine_;
};

/// Convenience: a stream for (seed, tag, day, indicator).
inline Stream make_stream(std::uint64_t seed, std::string_view tag, std::int64_t day = -1,
                          std::string_view indicator = {}) {
    return Stream(StreamKey{seed, tag, day, indicator});
}

} // namespace hsynth
