#pragma once

#include <cstdint>
#include <vector>

#include "homsync/timebase.hpp"

namespace homsync {

class RandomStream;

enum class EmissionMode { FixedInterval, Poisson };

/// Entangled-pair source. Poisson emission is the default for
/// synchronization runs; FixedInterval creates periodic correlation
/// sidelobes and is kept for pedagogical tests.
struct SourceModel {
    EmissionMode emission_mode = EmissionMode::Poisson;
    FsDuration mean_interval_fs{0};
    double pair_jitter_sigma_fs = 0.0;
    FsDuration session_length_fs{0};

    void validate() const;
};

/// One arm of the apparatus: fixed propagation delay plus the adjustable
/// delay line, with a power transmission factor.
struct OpticalPath {
    FsDuration base_delay_fs{0};
    FsDuration delay_line_fs{0};
    double transmission = 1.0;

    [[nodiscard]] FsDuration total_delay() const { return base_delay_fs + delay_line_fs; }

    void validate() const;
};

/// Phenomenological coincidence dip: a Gaussian of width dip_sigma_fs in
/// the path imbalance, depth set by visibility, plateau p_max.
struct HomModel {
    double visibility = 1.0;
    double dip_sigma_fs = 0.0;
    double p_max = 0.5;

    void validate() const;
};

struct PairEmission {
    std::uint64_t pair_id = 0;
    FsTime t_emit_fs{0};
    FsDuration delta_pair_fs{0}; // signed intra-pair emission skew
};

/// Emission times for one session, strictly increasing.
///
/// FixedInterval mode places pairs on the grid k * mean_interval_fs while
/// below session_length; Poisson mode accumulates exponential gaps
/// (rounded to fs, clamped to >= 1 fs to keep times strictly increasing).
/// Draw order per pair: gap (Poisson mode only), then the intra-pair skew
/// when pair_jitter_sigma_fs > 0. No skew draw happens when the sigma is
/// zero.
std::vector<PairEmission> emit_pairs(const SourceModel& src, RandomStream& rng);

/// (path_b total delay) - (path_a total delay); zero when balanced.
[[nodiscard]] FsDuration path_imbalance(const OpticalPath& path_a, const OpticalPath& path_b);

/// p_max * (1 - visibility * exp(-imbalance^2 / (2 dip_sigma^2))).
[[nodiscard]] double coincidence_probability(const HomModel& hom, FsDuration imbalance_fs);

/// Coincidence count for n_pairs pairs at the given imbalance: a binomial
/// sample at the dip probability. Consumes exactly n_pairs draws.
std::uint64_t simulate_hom_run(const HomModel& hom, FsDuration imbalance_fs,
                               std::uint64_t n_pairs, RandomStream& rng);

} // namespace homsync
