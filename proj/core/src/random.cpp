#include "hsynth/random.hpp"

#include <cmath>

namespace hsynth {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_bytes(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

std::uint64_t derive_user_seed(std::uint64_t root_seed, std::uint64_t user_index) {
    return mix64(mix64(root_seed) ^ mix64(user_index + 0x5bd1e995ULL));
}

std::uint64_t StreamKey::digest() const {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ hash_bytes(tag));
    h = mix64(h ^ static_cast<std::uint64_t>(day));
    h = mix64(h ^ hash_bytes(indicator));
    return h;
}

double Stream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double Stream::uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

int Stream::uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

double Stream::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

bool Stream::bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
}

double Stream::truncated_normal(double bound) {
    for (;;) {
        double z = normal();
        if (std::abs(z) <= bound) return z;
    }
}

} // namespace hsynth
