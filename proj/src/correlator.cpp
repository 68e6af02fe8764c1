#include "homsync/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homsync {

void CorrelationConfig::validate() const {
    if (bin_width_fs.count() < 1) throw InvalidConfig("bin_width_fs must be >= 1");
    if (search_halfwidth_fs < bin_width_fs)
        throw InvalidConfig("search_halfwidth_fs must be >= bin_width_fs");
    if (coarse_bin_width_fs &&
        coarse_bin_width_fs->count() < 10 * bin_width_fs.count())
        throw InvalidConfig("coarse_bin_width_fs must be >= 10 * bin_width_fs");
}

namespace {

std::size_t bin_count(std::int64_t lo, std::int64_t hi, std::int64_t width) {
    // ceil((hi - lo) / width)
    const std::int64_t span = checked::sub(hi, lo);
    return static_cast<std::size_t>((span + width - 1) / width);
}

/// Shared binning core: histogram of differences a_j - b_i in [lo, hi)
/// with the given bin width, sliding a window over sorted b.
CorrelationHistogram histogram_range(const ArrivalSeries& a, const ArrivalSeries& b,
                                     std::int64_t lo, std::int64_t hi,
                                     std::int64_t width) {
    CorrelationHistogram h;
    h.origin_fs = lo;
    h.bin_width_fs = width;
    h.n_a = a.timestamps.size();
    h.n_b = b.timestamps.size();
    h.counts.assign(bin_count(lo, hi, width), 0);

    // d = a_j - b_i in [lo, hi)  <=>  b_i in (a_j - hi, a_j - lo]. The
    // bounds are taken in 128 bits: decoded wire data may carry arbitrary
    // int64 timestamps, and a_j - hi must not be allowed to wrap.
    const auto& ta = a.timestamps;
    const auto& tb = b.timestamps;
    std::size_t start = 0; // first b with b > a_j - hi
    std::size_t stop = 0;  // first b with b > a_j - lo
    for (const FsTime aj : ta) {
        const auto av = static_cast<__int128>(aj.count());
        while (start < tb.size() && tb[start].count() <= av - hi) ++start;
        while (stop < tb.size() && tb[stop].count() <= av - lo) ++stop;
        for (std::size_t i = start; i < stop; ++i) {
            const auto d = static_cast<std::int64_t>(av - tb[i].count());
            ++h.counts[static_cast<std::size_t>((d - lo) / width)];
        }
    }
    return h;
}

void require_nonempty(const ArrivalSeries& a, const ArrivalSeries& b) {
    if (a.timestamps.empty() || b.timestamps.empty())
        throw EmptySeries("correlation requires at least one event per series");
}

/// Peak bin index: argmax of counts, ties broken by smaller |center| and
/// then smaller center. Also reports whether a tie existed at all.
std::pair<std::size_t, bool> peak_bin(const CorrelationHistogram& h) {
    std::size_t best = 0;
    bool tied = false;
    for (std::size_t k = 1; k < h.counts.size(); ++k) {
        if (h.counts[k] < h.counts[best]) continue;
        if (h.counts[k] > h.counts[best]) {
            best = k;
            tied = false;
            continue;
        }
        tied = true;
        const double ck = std::abs(h.bin_center(k));
        const double cb = std::abs(h.bin_center(best));
        if (ck < cb || (ck == cb && h.bin_center(k) < h.bin_center(best))) best = k;
    }
    return {best, tied};
}

std::int64_t round_half_down(double x) {
    return static_cast<std::int64_t>(std::ceil(x - 0.5));
}

} // namespace

CorrelationHistogram correlate(const ArrivalSeries& a, const ArrivalSeries& b,
                               const CorrelationConfig& cfg) {
    cfg.validate();
    require_nonempty(a, b);
    const std::int64_t w = cfg.search_halfwidth_fs.count();
    return histogram_range(a, b, -w, w, cfg.bin_width_fs.count());
}

CorrelationHistogram oracle_correlate(const ArrivalSeries& a, const ArrivalSeries& b,
                                      const CorrelationConfig& cfg) {
    cfg.validate();
    require_nonempty(a, b);
    if (a.timestamps.size() * b.timestamps.size() > 10'000'000ULL)
        throw OracleTooLarge("oracle_correlate guard: n_a * n_b > 1e7");

    const std::int64_t w = cfg.search_halfwidth_fs.count();
    const std::int64_t width = cfg.bin_width_fs.count();
    CorrelationHistogram h;
    h.origin_fs = -w;
    h.bin_width_fs = width;
    h.n_a = a.timestamps.size();
    h.n_b = b.timestamps.size();
    h.counts.assign(bin_count(-w, w, width), 0);
    for (const FsTime aj : a.timestamps) {
        for (const FsTime bi : b.timestamps) {
            const __int128 d = static_cast<__int128>(aj.count()) - bi.count();
            if (d < -w || d >= w) continue;
            ++h.counts[static_cast<std::size_t>(static_cast<std::int64_t>(d + w) / width)];
        }
    }
    return h;
}

OffsetEstimate estimate_offset(const CorrelationHistogram& h) {
    if (h.counts.empty()) throw EmptySeries("estimate_offset: empty histogram");

    const auto [k, tied] = peak_bin(h);
    const double ck = static_cast<double>(h.counts[k]);

    // Background statistics over all bins outside peak +/- 2.
    double sum = 0.0, sumsq = 0.0;
    std::size_t n_bg = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        if (i + 2 >= k && i <= k + 2) continue;
        const double c = static_cast<double>(h.counts[i]);
        sum += c;
        sumsq += c * c;
        ++n_bg;
    }
    const double mean_bg = n_bg > 0 ? sum / static_cast<double>(n_bg) : 0.0;
    const double var_bg =
        n_bg > 0 ? std::max(0.0, sumsq / static_cast<double>(n_bg) - mean_bg * mean_bg)
                 : 0.0;
    const double std_bg = std::sqrt(var_bg);
    // A zero-variance background gives no scale; fall back to raw excess
    // counts so the value stays finite and serializable.
    const double significance =
        std_bg > 0.0 ? (ck - mean_bg) / std_bg : ck - mean_bg;

    if (tied && significance < 5.0)
        throw AmbiguousPeak("several bins share the maximum and the peak is weak");

    double shift_bins = 0.0;
    if (k > 0 && k + 1 < h.counts.size()) {
        const double cm = static_cast<double>(h.counts[k - 1]);
        const double cp = static_cast<double>(h.counts[k + 1]);
        const double denom = cm - 2.0 * ck + cp;
        if (denom < 0.0) {
            const double delta = 0.5 * (cm - cp) / denom;
            if (std::abs(delta) <= 1.0) shift_bins = delta;
        }
    }

    const double norm = std::sqrt(static_cast<double>(h.n_a) * static_cast<double>(h.n_b));
    OffsetEstimate est;
    est.tau0_fs = FsDuration(round_half_down(
        h.bin_center(k) + shift_bins * static_cast<double>(h.bin_width_fs)));
    est.peak_height_normalized = norm > 0.0 ? ck / norm : 0.0;
    est.background_level = norm > 0.0 ? mean_bg / norm : 0.0;
    est.significance = significance;
    est.n_contributing = h.counts[k];
    return est;
}

std::pair<CorrelationHistogram, OffsetEstimate> correlate_twopass(
    const ArrivalSeries& a, const ArrivalSeries& b, const CorrelationConfig& cfg) {
    cfg.validate();
    if (!cfg.coarse_bin_width_fs)
        throw InvalidConfig("correlate_twopass requires coarse_bin_width_fs");
    require_nonempty(a, b);

    const std::int64_t w = cfg.search_halfwidth_fs.count();
    const std::int64_t coarse = cfg.coarse_bin_width_fs->count();
    const CorrelationHistogram coarse_hist = histogram_range(a, b, -w, w, coarse);
    const auto [k, tied] = peak_bin(coarse_hist);
    (void)tied; // ambiguity is judged on the fine histogram

    const auto ki = static_cast<std::int64_t>(k);
    const std::int64_t lo = std::max(-w, coarse_hist.origin_fs + (ki - 3) * coarse);
    const std::int64_t hi = std::min(w, coarse_hist.origin_fs + (ki + 4) * coarse);
    CorrelationHistogram fine = histogram_range(a, b, lo, hi, cfg.bin_width_fs.count());
    OffsetEstimate est = estimate_offset(fine);
    return {std::move(fine), est};
}

} // namespace homsync
