#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "homsync/correlator.hpp"
#include "homsync/random.hpp"

using namespace homsync;

TEST_SUITE_BEGIN("correlator");

namespace {

ArrivalSeries series(std::vector<std::int64_t> stamps, ClockSide side = ClockSide::A) {
    ArrivalSeries s;
    s.clock_id = side;
    for (const std::int64_t t : stamps) s.timestamps.emplace_back(t);
    std::sort(s.timestamps.begin(), s.timestamps.end());
    s.session_length_fs = FsDuration(1'000'000'000);
    return s;
}

ArrivalSeries random_series(RandomStream& rng, std::size_t n, std::int64_t span) {
    std::vector<std::int64_t> stamps;
    stamps.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        stamps.push_back(static_cast<std::int64_t>(rng.next_u64() % span));
    return series(std::move(stamps));
}

CorrelationConfig cfg_of(std::int64_t bin, std::int64_t w) {
    CorrelationConfig cfg;
    cfg.bin_width_fs = FsDuration(bin);
    cfg.search_halfwidth_fs = FsDuration(w);
    return cfg;
}

std::size_t bin_of(const CorrelationHistogram& h, std::int64_t d) {
    return static_cast<std::size_t>((d - h.origin_fs) / h.bin_width_fs);
}

} // namespace

TEST_CASE("single pair lands in the bin containing its difference") {
    const auto h = correlate(series({10}), series({3}), cfg_of(1, 100));
    CHECK(h.counts.size() == 200);
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        CHECK(h.counts[k] == (k == bin_of(h, 7) ? 1u : 0u));
    }
    CHECK(h.n_a == 1);
    CHECK(h.n_b == 1);
}

TEST_CASE("identical series: only the diagonal falls inside the window") {
    const auto s = series({0, 5'000'000, 9'000'000, 20'000'000});
    const auto h = correlate(s, s, cfg_of(1, 1'000));
    std::uint64_t total = 0;
    for (const auto c : h.counts) total += c;
    CHECK(total == 4);
    CHECK(h.counts[bin_of(h, 0)] == 4);
}

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(correlate(series({}), series({1}), cfg_of(1, 100)), EmptySeries);
    CHECK_THROWS_AS(correlate(series({1}), series({}), cfg_of(1, 100)), EmptySeries);
    CHECK_THROWS_AS(oracle_correlate(series({}), series({1}), cfg_of(1, 100)),
                    EmptySeries);
}

TEST_CASE("oracle window exclusion") {
    const auto h = oracle_correlate(series({0}), series({1'000'000}), cfg_of(1, 1'000));
    for (const auto c : h.counts) CHECK(c == 0);
}

TEST_CASE("oracle guard") {
    RandomStream rng(0);
    const auto a = random_series(rng, 4'000, 1'000'000);
    const auto b = random_series(rng, 4'000, 1'000'000);
    CHECK_THROWS_AS(oracle_correlate(a, b, cfg_of(10, 1'000)), OracleTooLarge);
}

TEST_CASE("correlate equals the exhaustive oracle bin for bin") {
    for (const std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) {
        RandomStream rng(seed);
        const std::size_t na = 50 + rng.next_u64() % 250;
        const std::size_t nb = 50 + rng.next_u64() % 250;
        const auto a = random_series(rng, na, 10'000'000);
        const auto b = random_series(rng, nb, 10'000'000);
        // Bin width deliberately not dividing 2W evenly sometimes.
        const std::int64_t bin = 1 + static_cast<std::int64_t>(rng.next_u64() % 37);
        const auto cfg = cfg_of(bin, 100'000);
        const auto fast = correlate(a, b, cfg);
        const auto slow = oracle_correlate(a, b, cfg);
        REQUIRE(fast.counts.size() == slow.counts.size());
        CHECK(fast.counts == slow.counts);
        CHECK(fast.origin_fs == slow.origin_fs);
    }
}

TEST_CASE("histogram bin count and total follow the contract") {
    RandomStream rng(11);
    const auto a = random_series(rng, 300, 1'000'000);
    const auto b = random_series(rng, 300, 1'000'000);
    const auto cfg = cfg_of(7, 5'000);
    const auto h = correlate(a, b, cfg);
    CHECK(h.counts.size() == static_cast<std::size_t>((10'000 + 6) / 7));
    std::uint64_t total = 0;
    for (const auto c : h.counts) total += c;
    std::uint64_t expected = 0;
    for (const auto ta : a.timestamps)
        for (const auto tb : b.timestamps) {
            const std::int64_t d = (ta - tb).count();
            if (d >= -5'000 && d < 5'000) ++expected;
        }
    CHECK(total == expected);
}

TEST_CASE("shift covariance: translating A by whole bins translates the histogram") {
    RandomStream rng(21);
    const auto a = random_series(rng, 200, 1'000'000);
    const auto b = random_series(rng, 200, 1'000'000);
    const std::int64_t bin = 10;
    const std::int64_t shift = 40; // multiple of the bin width
    std::vector<std::int64_t> shifted;
    for (const auto t : a.timestamps) shifted.push_back(t.count() + shift);

    // Window wide enough that no difference crosses a boundary.
    const auto cfg = cfg_of(bin, 2'000'000);
    const auto h0 = correlate(a, b, cfg);
    const auto h1 = correlate(series(std::move(shifted)), b, cfg);
    const std::size_t delta = static_cast<std::size_t>(shift / bin);
    for (std::size_t k = 0; k + delta < h0.counts.size(); ++k) {
        CHECK(h1.counts[k + delta] == h0.counts[k]);
    }
}

TEST_CASE("estimate_offset on an isolated peak") {
    // Single nonzero bin (count 7) whose center is exactly +1000:
    // origin -2050, width 100 puts bin 30 at [950, 1050). The parabola
    // denominator is -14 < 0 with a zero numerator, so no shift applies.
    CorrelationHistogram h;
    h.origin_fs = -2'050;
    h.bin_width_fs = 100;
    h.counts.assign(41, 0);
    h.n_a = 7;
    h.n_b = 7;
    h.counts[30] = 7;
    CHECK(h.bin_center(30) == 1'000.0);
    const auto est = estimate_offset(h);
    CHECK(est.tau0_fs.count() == 1'000);
    CHECK(est.n_contributing == 7);
    CHECK(est.peak_height_normalized == doctest::Approx(1.0));
    CHECK(est.background_level == 0.0);
}

TEST_CASE("estimate_offset symmetric neighbors keep the bin center") {
    CorrelationHistogram h;
    h.origin_fs = -500;
    h.bin_width_fs = 100;
    h.counts.assign(10, 1);
    h.n_a = 100;
    h.n_b = 100;
    // Peak at bin 7, center 250, neighbors h-1.
    h.counts[6] = 9;
    h.counts[7] = 10;
    h.counts[8] = 9;
    const auto est = estimate_offset(h);
    CHECK(est.tau0_fs.count() == 250);
}

TEST_CASE("estimate_offset parabolic vertex: counts (2,5,3), bin width 10") {
    CorrelationHistogram h;
    h.origin_fs = -15; // bins [-15,-5), [-5,5), [5,15); peak center 0
    h.bin_width_fs = 10;
    h.counts = {2, 5, 3};
    h.n_a = 10;
    h.n_b = 10;
    const auto est = estimate_offset(h);
    // delta = (2-3) / (2*(2-10+3)) = 0.1 bins -> +1 fs
    CHECK(est.tau0_fs.count() == 1);
}

TEST_CASE("peak in the first or last bin skips refinement") {
    CorrelationHistogram h;
    h.origin_fs = -50;
    h.bin_width_fs = 10;
    h.counts = {40, 3, 1, 0, 2, 0, 1, 2, 1, 0};
    h.n_a = 50;
    h.n_b = 50;
    CHECK(estimate_offset(h).tau0_fs.count() == -45);
    std::reverse(h.counts.begin(), h.counts.end());
    CHECK(estimate_offset(h).tau0_fs.count() == 45);
}

TEST_CASE("ambiguous peak: two maxima and weak significance") {
    CorrelationHistogram h;
    h.origin_fs = -50;
    h.bin_width_fs = 10;
    h.counts = {1, 3, 1, 0, 1, 3, 0, 1, 1, 2};
    h.n_a = 5;
    h.n_b = 5;
    CHECK_THROWS_AS(estimate_offset(h), AmbiguousPeak);
}

TEST_CASE("tied maxima with strong significance pick the tie-break bin") {
    CorrelationHistogram h;
    h.origin_fs = -500;
    h.bin_width_fs = 10;
    h.counts.assign(100, 0);
    h.counts[10] = 400; // center -395
    h.counts[60] = 400; // center 105 -> closer to zero wins
    h.n_a = 800;
    h.n_b = 800;
    const auto est = estimate_offset(h);
    CHECK(est.tau0_fs.count() == 105);
}

TEST_CASE("swapping the series negates tau0 for isolated peaks") {
    RandomStream rng(33);
    std::vector<std::int64_t> base;
    std::int64_t t = 0;
    for (int i = 0; i < 400; ++i) {
        t += 1'000'000 + static_cast<std::int64_t>(rng.next_u64() % 50'000'000);
        base.push_back(t);
    }
    for (const std::int64_t off : {7'777, -12'340, 1'000'001}) {
        std::vector<std::int64_t> shifted;
        for (const std::int64_t x : base) shifted.push_back(x + off);
        const auto sa = series(base);
        const auto sb = series(shifted);
        // 1 fs bins: the isolated peak is exact, so antisymmetry is too.
        const auto cfg = cfg_of(1, 2'000'000);
        const auto ab = estimate_offset(correlate(sa, sb, cfg));
        const auto ba = estimate_offset(correlate(sb, sa, cfg));
        CHECK(ab.tau0_fs.count() == -off); // d = a - b
        CHECK(ba.tau0_fs.count() == off);
        CHECK(ab.tau0_fs.count() == -ba.tau0_fs.count());

        const auto coarse = estimate_offset(correlate(sa, sb, cfg_of(10, 2'000'000)));
        CHECK(std::abs(coarse.tau0_fs.count() + off) <= 10); // within one bin
    }
}

TEST_CASE("known shift is recovered to within half a bin") {
    RandomStream rng(44);
    std::vector<std::int64_t> base;
    std::int64_t t = 0;
    for (int i = 0; i < 1'000; ++i) {
        t += 1 + static_cast<std::int64_t>(rng.next_u64() % 2'000'000);
        base.push_back(t);
    }
    for (const std::int64_t shift : {123'456, -987, 40}) {
        std::vector<std::int64_t> moved;
        for (const std::int64_t x : base) moved.push_back(x + shift);
        const auto est =
            estimate_offset(correlate(series(moved), series(base), cfg_of(10, 1'000'000)));
        CHECK(std::abs(est.tau0_fs.count() - shift) <= 5);
    }
}

TEST_CASE("two-pass agrees with single-pass") {
    SUBCASE("identical-series toy case") {
        const auto s = series({0, 5'000'000, 9'000'000, 20'000'000});
        auto cfg = cfg_of(1, 1'000);
        cfg.coarse_bin_width_fs = FsDuration(100);
        const auto [fine, est] = correlate_twopass(s, s, cfg);
        CHECK(est.tau0_fs.count() == 0);
        CHECK(est.n_contributing == 4);
    }
    SUBCASE("large window, injected offset") {
        RandomStream rng(55);
        std::vector<std::int64_t> base;
        std::int64_t t = 0;
        for (int i = 0; i < 10'000; ++i) {
            t += 1 + static_cast<std::int64_t>(rng.next_u64() % 200'000'000);
            base.push_back(t);
        }
        const std::int64_t off = 1'234'567;
        std::vector<std::int64_t> moved;
        for (const std::int64_t x : base) moved.push_back(x + off);

        auto cfg = cfg_of(10, 10'000'000);
        const auto single = estimate_offset(correlate(series(moved), series(base), cfg));
        cfg.coarse_bin_width_fs = FsDuration(10'000);
        const auto [fine, two] = correlate_twopass(series(moved), series(base), cfg);
        CHECK(std::abs(two.tau0_fs.count() - single.tau0_fs.count()) <= 10);
    }
    SUBCASE("empty input propagates") {
        auto cfg = cfg_of(1, 1'000);
        cfg.coarse_bin_width_fs = FsDuration(100);
        CHECK_THROWS_AS(correlate_twopass(series({1}), series({}), cfg), EmptySeries);
    }
    SUBCASE("missing coarse bin width is a config error") {
        CHECK_THROWS_AS(correlate_twopass(series({1}), series({2}), cfg_of(1, 1'000)),
                        InvalidConfig);
    }
}

TEST_CASE("extreme timestamps near the int64 range stay well-defined") {
    // Decoded wire data can carry any int64 values; the window walk must
    // not wrap. Matching extremes correlate, the rest fall outside W.
    const std::int64_t lo = std::numeric_limits<std::int64_t>::min() + 5;
    const std::int64_t hi = std::numeric_limits<std::int64_t>::max() - 5;
    const auto a = series({lo, 0, hi});
    const auto b = series({lo + 3, 0, hi - 2});
    const auto h = correlate(a, b, cfg_of(1, 1'000));
    std::uint64_t total = 0;
    for (const auto c : h.counts) total += c;
    CHECK(total == 3);
    CHECK(h.counts[bin_of(h, -3)] == 1);
    CHECK(h.counts[bin_of(h, 0)] == 1);
    CHECK(h.counts[bin_of(h, 2)] == 1);
}

TEST_CASE("normalized peak is 1 for matched lossless series") {
    RandomStream rng(66);
    std::vector<std::int64_t> base;
    std::int64_t t = 0;
    for (int i = 0; i < 2'000; ++i) {
        t += 1 + static_cast<std::int64_t>(rng.next_u64() % 1'000'000'000);
        base.push_back(t);
    }
    std::vector<std::int64_t> moved;
    for (const std::int64_t x : base) moved.push_back(x + 5'000);
    const auto est =
        estimate_offset(correlate(series(moved), series(base), cfg_of(10, 1'000'000)));
    CHECK(est.peak_height_normalized == 1.0);
    CHECK(est.n_contributing == 2'000);
}

TEST_SUITE_END();
