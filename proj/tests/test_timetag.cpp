#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "homsync/random.hpp"
#include "homsync/timetag.hpp"

using namespace homsync;

TEST_SUITE_BEGIN("timetag");

namespace {

ClockModel ideal_clock(std::int64_t offset) {
    return ClockModel{FsDuration(offset), 0.0, 0.0, 1};
}

// Straight-line reimplementation of the documented tagging pipeline:
// build the full coordinate-time event list with no dead time, filter it,
// then timestamp. Used to cross-check propagate_and_detect event by event.
std::vector<std::int64_t> oracle_side(const std::vector<PairEmission>& pairs,
                                      bool side_b, const OpticalPath& path,
                                      const ClockModel& clock, const DetectorModel& det,
                                      std::int64_t session, RandomStream survival,
                                      RandomStream darks_rng, RandomStream jitter,
                                      const std::vector<bool>& keep) {
    std::vector<std::int64_t> coord;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!keep[i]) continue;
        const std::int64_t skew = pairs[i].delta_pair_fs.count();
        std::int64_t t = pairs[i].t_emit_fs.count() - floor_div(skew, 2);
        if (side_b) t += skew;
        coord.push_back(t + path.total_delay().count());
    }
    (void)survival;
    if (det.dark_rate_per_s > 0.0) {
        const double lambda = det.dark_rate_per_s * static_cast<double>(session) * 1e-15;
        const std::uint64_t n = darks_rng.next_poisson(lambda);
        for (std::uint64_t i = 0; i < n; ++i) {
            coord.push_back(static_cast<std::int64_t>(
                std::floor(darks_rng.next_unit() * static_cast<double>(session))));
        }
    }
    std::sort(coord.begin(), coord.end());

    std::vector<std::int64_t> filtered;
    std::int64_t last = 0;
    bool have_last = false;
    for (const std::int64_t t : coord) {
        if (have_last && det.dead_time_fs.count() > 0 &&
            t - last < det.dead_time_fs.count())
            continue;
        filtered.push_back(t);
        last = t;
        have_last = true;
    }

    std::vector<std::int64_t> local;
    for (const std::int64_t t : filtered)
        local.push_back(clock_read(clock, FsTime(t), jitter).count());
    std::sort(local.begin(), local.end());
    return local;
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> oracle(
    const std::vector<PairEmission>& pairs, const OpticalPath& pa, const OpticalPath& pb,
    const ClockModel& ca, const ClockModel& cb, const DetectorModel& da,
    const DetectorModel& db, std::int64_t session, const RandomStream& rng) {
    RandomStream survival = rng.substream(detect_stream::kSurvival);
    std::vector<bool> keep_a, keep_b;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        keep_a.push_back(survival.next_bernoulli(da.efficiency * pa.transmission));
        keep_b.push_back(survival.next_bernoulli(db.efficiency * pb.transmission));
    }
    auto a = oracle_side(pairs, false, pa, ca, da, session, survival,
                         rng.substream(detect_stream::kDarksA),
                         rng.substream(detect_stream::kJitterA), keep_a);
    auto b = oracle_side(pairs, true, pb, cb, db, session, survival,
                         rng.substream(detect_stream::kDarksB),
                         rng.substream(detect_stream::kJitterB), keep_b);
    return {a, b};
}

std::vector<std::int64_t> raw(const ArrivalSeries& s) {
    std::vector<std::int64_t> out;
    for (const FsTime t : s.timestamps) out.push_back(t.count());
    return out;
}

} // namespace

TEST_CASE("single pair, equal delays: arrival difference is the offset difference") {
    const std::vector<PairEmission> pairs = {{0, FsTime(0), FsDuration(0)}};
    const OpticalPath path{FsDuration(5'000'000), FsDuration(0), 1.0};
    RandomStream rng(0);
    const auto [a, b] =
        propagate_and_detect(pairs, path, path, ideal_clock(0), ideal_clock(777),
                             DetectorModel{}, DetectorModel{}, FsDuration(1'000'000'000),
                             rng);
    REQUIRE(a.timestamps.size() == 1);
    REQUIRE(b.timestamps.size() == 1);
    CHECK(a.timestamps[0].count() == 5'000'000);
    CHECK(b.timestamps[0].count() == 5'000'777);
    CHECK(a.clock_id == ClockSide::A);
    CHECK(b.clock_id == ClockSide::B);
}

TEST_CASE("zero efficiency detects nothing") {
    const std::vector<PairEmission> pairs = {{0, FsTime(0), FsDuration(0)},
                                             {1, FsTime(100), FsDuration(0)}};
    DetectorModel dead;
    dead.efficiency = 0.0;
    RandomStream rng(3);
    const auto [a, b] = propagate_and_detect(pairs, {}, {}, ideal_clock(0), ideal_clock(0),
                                             dead, dead, FsDuration(1'000), rng);
    CHECK(a.timestamps.empty());
    CHECK(b.timestamps.empty());
}

TEST_CASE("matches the straight-line oracle: losses and darks, seed 5") {
    std::vector<PairEmission> pairs;
    for (int i = 0; i < 10; ++i)
        pairs.push_back({static_cast<std::uint64_t>(i), FsTime(i * 1'000'000'000'000),
                         FsDuration(0)});
    const OpticalPath pa{FsDuration(2'000'000), FsDuration(0), 1.0};
    const OpticalPath pb{FsDuration(1'500'000), FsDuration(500'000), 1.0};
    DetectorModel det;
    det.efficiency = 0.8; // 20% loss
    det.dark_rate_per_s = 1'000.0;
    const std::int64_t session = 10'000'000'000'000; // 10 ms

    const ClockModel ca = ideal_clock(0);
    const ClockModel cb = ideal_clock(-250);
    RandomStream rng(5);
    const auto [a, b] = propagate_and_detect(pairs, pa, pb, ca, cb, det, det,
                                             FsDuration(session), rng);
    const auto [oa, ob] =
        oracle(pairs, pa, pb, ca, cb, det, det, session, RandomStream(5));
    CHECK(raw(a) == oa);
    CHECK(raw(b) == ob);
    CHECK(a.timestamps.size() >= 1);
}

TEST_CASE("matches the oracle with jitter, skew, dead time and quantization") {
    std::vector<PairEmission> pairs;
    RandomStream gen(31);
    std::int64_t t = 0;
    for (int i = 0; i < 500; ++i) {
        t += 1'000'000 + static_cast<std::int64_t>(gen.next_u64() % 4'000'000);
        pairs.push_back({static_cast<std::uint64_t>(i), FsTime(t),
                         FsDuration(static_cast<std::int64_t>(gen.next_u64() % 161) - 80)});
    }
    const OpticalPath pa{FsDuration(7'000'000), FsDuration(0), 0.9};
    const OpticalPath pb{FsDuration(3'000'000), FsDuration(4'000'100), 0.95};
    ClockModel ca{FsDuration(1'234), 0.0, 120.0, 4};
    ClockModel cb{FsDuration(-9'876), 0.0, 80.0, 1};
    DetectorModel da;
    da.efficiency = 0.75;
    da.dark_rate_per_s = 2e5;
    da.dead_time_fs = FsDuration(500'000);
    DetectorModel db;
    db.efficiency = 0.85;
    db.dark_rate_per_s = 1e5;
    const std::int64_t session = t + 10'000'000;

    RandomStream rng(77);
    const auto [a, b] = propagate_and_detect(pairs, pa, pb, ca, cb, da, db,
                                             FsDuration(session), rng);
    const auto [oa, ob] =
        oracle(pairs, pa, pb, ca, cb, da, db, session, RandomStream(77));
    CHECK(raw(a) == oa);
    CHECK(raw(b) == ob);
    CHECK(a.is_sorted());
    CHECK(b.is_sorted());
}

TEST_CASE("noiseless matched difference is constant: offsets plus imbalance") {
    // Noiseless means zero intra-pair skew as well; the skew is emission
    // noise and would enter the per-pair difference directly.
    std::vector<PairEmission> pairs;
    RandomStream gen(13);
    std::int64_t t = 0;
    for (int i = 0; i < 200; ++i) {
        t += 1 + static_cast<std::int64_t>(gen.next_u64() % 1'000'000);
        pairs.push_back({static_cast<std::uint64_t>(i), FsTime(t), FsDuration(0)});
    }
    const OpticalPath pa{FsDuration(5'000'000), FsDuration(0), 1.0};
    const OpticalPath pb{FsDuration(5'000'000), FsDuration(123), 1.0};
    RandomStream rng(1);
    const auto [a, b] =
        propagate_and_detect(pairs, pa, pb, ideal_clock(17), ideal_clock(-40),
                             DetectorModel{}, DetectorModel{}, FsDuration(t + 1), rng);
    REQUIRE(a.timestamps.size() == pairs.size());
    REQUIRE(b.timestamps.size() == pairs.size());
    const std::int64_t expected = (-40 - 17) + path_imbalance(pa, pb).count();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK((b.timestamps[i] - a.timestamps[i]).count() == expected);
    }
}

TEST_CASE("count conservation") {
    std::vector<PairEmission> pairs;
    for (int i = 0; i < 50; ++i)
        pairs.push_back({static_cast<std::uint64_t>(i), FsTime(i * 1'000), FsDuration(0)});

    SUBCASE("lossless, no darks, no dead time: exactly N") {
        RandomStream rng(2);
        const auto [a, b] =
            propagate_and_detect(pairs, {}, {}, ideal_clock(0), ideal_clock(0),
                                 DetectorModel{}, DetectorModel{}, FsDuration(100'000),
                                 rng);
        CHECK(a.timestamps.size() == 50);
        CHECK(b.timestamps.size() == 50);
    }
    SUBCASE("dead time never increases the count") {
        DetectorModel det;
        det.dead_time_fs = FsDuration(2'500);
        RandomStream rng(2);
        const auto [a, b] = propagate_and_detect(pairs, {}, {}, ideal_clock(0),
                                                 ideal_clock(0), det, det,
                                                 FsDuration(100'000), rng);
        CHECK(a.timestamps.size() <= 50);
        CHECK(a.timestamps.size() == 17); // 1000 fs grid, 2500 fs dead time: every third
        for (std::size_t i = 1; i < a.timestamps.size(); ++i)
            CHECK((a.timestamps[i] - a.timestamps[i - 1]).count() >= 2'500);
    }
}

TEST_CASE("dark draws do not depend on how many pairs were emitted") {
    DetectorModel det;
    det.efficiency = 0.0; // only darks come through
    det.dark_rate_per_s = 5e4;
    auto darks_only = [&](int n_pairs) {
        std::vector<PairEmission> pairs;
        for (int i = 0; i < n_pairs; ++i)
            pairs.push_back({static_cast<std::uint64_t>(i), FsTime(i), FsDuration(0)});
        RandomStream rng(9);
        auto [a, b] = propagate_and_detect(pairs, {}, {}, ideal_clock(0), ideal_clock(0),
                                           det, det, FsDuration(10'000'000'000'000), rng);
        return raw(a);
    };
    CHECK(darks_only(2) == darks_only(2'000));
}

TEST_SUITE_END();
