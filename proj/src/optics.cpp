#include "homsync/optics.hpp"

#include <cmath>

#include "homsync/random.hpp"

namespace homsync {

void SourceModel::validate() const {
    if (mean_interval_fs.count() <= 0) throw InvalidConfig("mean_interval_fs must be > 0");
    if (session_length_fs.count() <= 0) throw InvalidConfig("session_length_fs must be > 0");
    if (!(pair_jitter_sigma_fs >= 0.0)) throw InvalidConfig("pair_jitter_sigma_fs must be >= 0");
}

void OpticalPath::validate() const {
    if (base_delay_fs.count() < 0 || delay_line_fs.count() < 0)
        throw InvalidConfig("optical path delays must be >= 0");
    if (!(transmission >= 0.0 && transmission <= 1.0))
        throw InvalidConfig("transmission must be in [0, 1]");
}

void HomModel::validate() const {
    if (!(visibility > 0.0 && visibility <= 1.0))
        throw InvalidConfig("visibility must be in (0, 1]");
    if (!(dip_sigma_fs > 0.0)) throw InvalidConfig("dip_sigma_fs must be > 0");
    if (!(p_max > 0.0 && p_max <= 1.0)) throw InvalidConfig("p_max must be in (0, 1]");
}

std::vector<PairEmission> emit_pairs(const SourceModel& src, RandomStream& rng) {
    src.validate();
    std::vector<PairEmission> pairs;
    const std::int64_t session = src.session_length_fs.count();
    const std::int64_t interval = src.mean_interval_fs.count();

    auto draw_skew = [&]() -> FsDuration {
        if (src.pair_jitter_sigma_fs == 0.0) return FsDuration(0);
        return FsDuration(std::llround(rng.next_gaussian(src.pair_jitter_sigma_fs)));
    };

    if (src.emission_mode == EmissionMode::FixedInterval) {
        for (std::int64_t t = 0; t < session; t = checked::add(t, interval)) {
            pairs.push_back({pairs.size(), FsTime(t), draw_skew()});
        }
    } else {
        std::int64_t t = 0;
        for (;;) {
            const double g = rng.next_exponential(static_cast<double>(interval));
            std::int64_t gap = std::llround(g);
            if (gap < 1) gap = 1;
            t = checked::add(t, gap);
            if (t >= session) break;
            pairs.push_back({pairs.size(), FsTime(t), draw_skew()});
        }
    }
    return pairs;
}

FsDuration path_imbalance(const OpticalPath& path_a, const OpticalPath& path_b) {
    return path_b.total_delay() - path_a.total_delay();
}

double coincidence_probability(const HomModel& hom, FsDuration imbalance_fs) {
    const double d = static_cast<double>(imbalance_fs.count());
    const double arg = d * d / (2.0 * hom.dip_sigma_fs * hom.dip_sigma_fs);
    return hom.p_max * (1.0 - hom.visibility * std::exp(-arg));
}

std::uint64_t simulate_hom_run(const HomModel& hom, FsDuration imbalance_fs,
                               std::uint64_t n_pairs, RandomStream& rng) {
    return rng.next_binomial(n_pairs, coincidence_probability(hom, imbalance_fs));
}

} // namespace homsync
