#include "homsync/balance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace homsync {

namespace {

/// Nearest integer, exact halves toward negative infinity (same rounding
/// rule as the clock quantizer).
std::int64_t round_half_down(double x) {
    return static_cast<std::int64_t>(std::ceil(x - 0.5));
}

} // namespace

void BalanceConfig::validate() const {
    if (scan_min_fs >= scan_max_fs)
        throw InvalidScanRange("balance scan_min must be < scan_max");
    if (coarse_step_fs.count() <= 0)
        throw InvalidScanRange("balance coarse_step must be > 0");
    if (coarse_step_fs.count() > (scan_max_fs - scan_min_fs).count() / 4)
        throw InvalidScanRange("balance coarse_step must be <= (scan_max - scan_min) / 4");
    if (pairs_per_setting == 0)
        throw InvalidScanRange("balance pairs_per_setting must be >= 1");
    if (refine_tolerance_fs.count() <= 0)
        throw InvalidScanRange("balance refine_tolerance must be > 0");
    if (!(min_contrast > 0.0 && min_contrast < 1.0))
        throw InvalidScanRange("balance min_contrast must be in (0, 1)");
}

BalanceResult balance_search(const BalanceProbe& probe, const BalanceConfig& cfg) {
    cfg.validate();

    const std::int64_t lo = cfg.scan_min_fs.count();
    const std::int64_t hi = cfg.scan_max_fs.count();
    const std::int64_t step = cfg.coarse_step_fs.count();

    BalanceResult result;
    const std::int64_t points = (hi - lo) / step + 1; // hi - lo checked in validate()
    for (std::int64_t k = 0; k < points; ++k) {
        const std::int64_t d = lo + k * step;
        result.scan_trace.emplace_back(FsDuration(d), probe(FsDuration(d)));
    }
    const auto& trace = result.scan_trace;

    // Minimum-count grid point; ties resolved toward the scan center,
    // then toward the smaller delay.
    const std::int64_t center2 = lo + hi; // 2 * scan center, avoids halving
    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const std::uint64_t c = trace[i].second;
        const std::uint64_t cb = trace[best].second;
        if (c > cb) continue;
        if (c < cb) { best = i; continue; }
        const std::int64_t di = std::abs(2 * trace[i].first.count() - center2);
        const std::int64_t db = std::abs(2 * trace[best].first.count() - center2);
        if (di < db || (di == db && trace[i].first < trace[best].first)) best = i;
    }

    // Plateau: median of the top quartile of scan counts.
    std::vector<std::uint64_t> counts;
    counts.reserve(trace.size());
    for (const auto& [d, c] : trace) counts.push_back(c);
    std::sort(counts.begin(), counts.end(), std::greater<>());
    const std::size_t quartile = (counts.size() + 3) / 4;
    const double plateau = static_cast<double>(counts[(quartile - 1) / 2]);

    const double min_count = static_cast<double>(trace[best].second);
    result.contrast = plateau > 0.0 ? 1.0 - min_count / plateau : 0.0;
    if (result.contrast < cfg.min_contrast) {
        std::vector<std::pair<std::int64_t, std::uint64_t>> raw;
        raw.reserve(trace.size());
        for (const auto& [d, c] : trace) raw.emplace_back(d.count(), c);
        throw NoDipFound("no coincidence dip above the contrast threshold",
                         result.contrast, std::move(raw));
    }

    // Three-point parabolic refinement, valid only for an interior grid
    // minimum with positive curvature and a vertex within one step.
    std::int64_t refined = trace[best].first.count();
    if (best > 0 && best + 1 < trace.size()) {
        const auto cm = static_cast<double>(trace[best - 1].second);
        const auto c0 = static_cast<double>(trace[best].second);
        const auto cp = static_cast<double>(trace[best + 1].second);
        const double denom = cm - 2.0 * c0 + cp;
        if (denom > 0.0) {
            const double shift = 0.5 * (cm - cp) / denom; // in units of step
            if (std::abs(shift) <= 1.0) {
                refined = checked::add(refined,
                                       round_half_down(shift * static_cast<double>(step)));
            }
        }
    }
    refined = std::clamp(refined, lo, hi);

    const std::uint64_t refined_count = probe(FsDuration(refined));
    result.delay_setting_fs = FsDuration(refined);
    result.min_rate =
        static_cast<double>(refined_count) / static_cast<double>(cfg.pairs_per_setting);
    return result;
}

} // namespace homsync
