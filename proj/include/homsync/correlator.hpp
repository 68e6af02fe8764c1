#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "homsync/timebase.hpp"
#include "homsync/timetag.hpp"

namespace homsync {

struct CorrelationConfig {
    FsDuration bin_width_fs{10};
    FsDuration search_halfwidth_fs{10'000'000}; // W: differences searched in [-W, W)
    std::optional<FsDuration> coarse_bin_width_fs; // enables the two-pass path

    void validate() const;
};

/// Binned counts of timestamp differences d = a_j - b_i. Bin k covers
/// [origin + k*bin_width, origin + (k+1)*bin_width); its center is
/// origin + (k + 1/2)*bin_width. For a single-pass correlation the origin
/// is -W. Counts are exact integers; the 1/sqrt(n_a*n_b) normalization is
/// applied only at reporting time.
struct CorrelationHistogram {
    std::int64_t origin_fs = 0;
    std::int64_t bin_width_fs = 1;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_a = 0;
    std::uint64_t n_b = 0;

    [[nodiscard]] double bin_center(std::size_t k) const {
        return static_cast<double>(origin_fs) +
               (static_cast<double>(k) + 0.5) * static_cast<double>(bin_width_fs);
    }
};

struct OffsetEstimate {
    FsDuration tau0_fs{0};  // add to clock B to synchronize it to A
    double peak_height_normalized = 0.0;
    double background_level = 0.0;
    double significance = 0.0;
    std::uint64_t n_contributing = 0; // differences in the peak bin
};

/// Histogram of all differences a_j - b_i falling in [-W, W), computed by
/// a sliding window over the sorted series (never materializing all
/// n_a * n_b pairs). Throws EmptySeries if either input has no events.
CorrelationHistogram correlate(const ArrivalSeries& a, const ArrivalSeries& b,
                               const CorrelationConfig& cfg);

/// Same contract as correlate, by exhaustive double loop. Test oracle;
/// refuses inputs with n_a * n_b > 10^7.
CorrelationHistogram oracle_correlate(const ArrivalSeries& a, const ArrivalSeries& b,
                                      const CorrelationConfig& cfg);

/// Locate the peak bin (ties: smallest |center|, then smaller center) and
/// refine it with a three-point parabola. The vertex shift
/// delta = (c[k-1] - c[k+1]) / (2 * (c[k-1] - 2 c[k] + c[k+1])) in bins is
/// applied only when the denominator is negative and |delta| <= 1.
/// Throws AmbiguousPeak when several bins tie for the maximum and the
/// peak significance is below 5.
OffsetEstimate estimate_offset(const CorrelationHistogram& h);

/// Coarse pass over the full window locates the peak region; a fine pass
/// at bin_width over the coarse peak +/- 3 coarse bins produces the
/// returned histogram and estimate. Requires coarse_bin_width_fs.
std::pair<CorrelationHistogram, OffsetEstimate> correlate_twopass(
    const ArrivalSeries& a, const ArrivalSeries& b, const CorrelationConfig& cfg);

} // namespace homsync
