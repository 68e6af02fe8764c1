#pragma once

#include <array>
#include <cstdint>

namespace homsync {

/// Deterministic random stream used for all simulation draws.
///
/// Generator: xoshiro256++ with its state filled by four successive
/// outputs of splitmix64 run on the 64-bit seed. Both algorithms are
/// fixed here so that seeded runs reproduce bit-exactly and so tests can
/// check against independent reimplementations.
///
/// Derived draws (each consumes the stated number of raw 64-bit words):
///   next_unit          (x >> 11) * 2^-53                 in [0,1)   1 word
///   next_gaussian      sqrt(-2 ln u1) * cos(2 pi u2),
///                      u1 = ((x >> 11) + 1) * 2^-53      (0,1]      2 words
///   next_exponential   -mean * ln(u1), u1 as above                  1 word
///   next_bernoulli     next_unit() < p                              1 word
///   next_binomial      n bernoulli draws                            n words
///   next_poisson       Knuth product method on chunks of
///                      lambda <= 500                                variable
///
/// Substream rule: child seed = mix64(parent_seed + (key + 1) *
/// 0x9E3779B97F4A7C15), where mix64 is the splitmix64 finalizer. Children
/// depend only on the parent's seed and the key, never on how far the
/// parent has been consumed.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53 significant bits.
    double next_unit();

    /// Gaussian with mean 0 and the given sigma (>= 0). Always consumes
    /// exactly two words.
    double next_gaussian(double sigma);

    /// Exponential with the given mean (> 0).
    double next_exponential(double mean);

    bool next_bernoulli(double p);

    /// Number of successes in n independent trials of probability p.
    std::uint64_t next_binomial(std::uint64_t n, double p);

    /// Poisson sample; exact for any lambda >= 0 via chunk splitting.
    std::uint64_t next_poisson(double lambda);

    /// Independent stream derived from this stream's seed and a key.
    [[nodiscard]] RandomStream substream(std::uint64_t key) const;

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_;
};

/// splitmix64 finalizer, exposed for tests of the substream rule.
[[nodiscard]] std::uint64_t mix64(std::uint64_t z);

} // namespace homsync
