#include "homsync/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace homsync {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed) {
    // splitmix64 expansion of the seed into the xoshiro256++ state.
    std::uint64_t x = seed;
    for (auto& s : state_) {
        x += kGolden;
        s = mix64(x);
    }
}

std::uint64_t RandomStream::next_u64() {
    auto& s = state_;
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double RandomStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_gaussian(double sigma) {
    // Box-Muller; u1 is shifted into (0,1] so the log never sees zero.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::next_exponential(double mean) {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    return -mean * std::log(u1);
}

bool RandomStream::next_bernoulli(double p) {
    return next_unit() < p;
}

std::uint64_t RandomStream::next_binomial(std::uint64_t n, double p) {
    std::uint64_t successes = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        if (next_unit() < p) ++successes;
    }
    return successes;
}

std::uint64_t RandomStream::next_poisson(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson lambda must be >= 0");
    // Poisson(a + b) = Poisson(a) + Poisson(b); chunks keep exp(-chunk)
    // comfortably above the double underflow threshold.
    std::uint64_t total = 0;
    while (lambda > 0.0) {
        const double chunk = lambda > 500.0 ? 500.0 : lambda;
        lambda -= chunk;
        const double limit = std::exp(-chunk);
        double product = 1.0;
        std::uint64_t k = 0;
        do {
            ++k;
            product *= next_unit();
        } while (product > limit);
        total += k - 1;
    }
    return total;
}

RandomStream RandomStream::substream(std::uint64_t key) const {
    return RandomStream(mix64(seed_ + (key + 1) * kGolden));
}

} // namespace homsync
