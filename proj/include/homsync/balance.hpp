#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "homsync/timebase.hpp"

namespace homsync {

struct BalanceConfig {
    FsDuration scan_min_fs{0};
    FsDuration scan_max_fs{0};
    FsDuration coarse_step_fs{0};
    std::uint64_t pairs_per_setting = 0;
    FsDuration refine_tolerance_fs{1}; // caller's acceptance tolerance, not a search knob
    double min_contrast = 0.3;

    void validate() const; // throws InvalidScanRange
};

struct BalanceResult {
    FsDuration delay_setting_fs{0};
    double min_rate = 0.0;  // coincidence fraction re-probed at the returned setting
    double contrast = 0.0;  // 1 - (scan minimum) / (plateau estimate)
    std::vector<std::pair<FsDuration, std::uint64_t>> scan_trace;
};

/// Coincidence counts as a function of the candidate delay-line setting.
using BalanceProbe = std::function<std::uint64_t(FsDuration)>;

/// Locate the delay setting that minimizes the coincidence rate.
///
/// Uniform coarse scan over [scan_min, scan_max], then a three-point
/// parabolic refinement around the best grid point (skipped at the scan
/// edges or when the fit is not a minimum), then one re-probe at the
/// refined setting. The plateau used for the contrast check is the median
/// of the top quartile of scan counts, which tolerates the dip occupying
/// part of the scan. Ties on the minimum count go to the point closer to
/// the scan center, then to the smaller delay.
BalanceResult balance_search(const BalanceProbe& probe, const BalanceConfig& cfg);

} // namespace homsync
