#include "homsync/timetag.hpp"

#include <algorithm>
#include <cmath>

#include "homsync/random.hpp"

namespace homsync {

void DetectorModel::validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
        throw InvalidConfig("detector efficiency must be in [0, 1]");
    if (!(dark_rate_per_s >= 0.0))
        throw InvalidConfig("detector dark_rate_per_s must be >= 0");
    if (dead_time_fs.count() < 0)
        throw InvalidConfig("detector dead_time_fs must be >= 0");
}

bool ArrivalSeries::is_sorted() const {
    return std::is_sorted(timestamps.begin(), timestamps.end());
}

namespace {

std::vector<std::int64_t> dark_arrivals(const DetectorModel& det,
                                        std::int64_t session_fs, RandomStream& rng) {
    std::vector<std::int64_t> darks;
    if (det.dark_rate_per_s <= 0.0) return darks;
    const double lambda = det.dark_rate_per_s * static_cast<double>(session_fs) * 1e-15;
    const std::uint64_t n = rng.next_poisson(lambda);
    darks.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        darks.push_back(static_cast<std::int64_t>(
            std::floor(rng.next_unit() * static_cast<double>(session_fs))));
    }
    return darks;
}

ArrivalSeries tag_one_side(ClockSide side, std::vector<std::int64_t> photon_arrivals,
                           std::vector<std::int64_t> darks, const ClockModel& clock,
                           const DetectorModel& det, std::int64_t session_fs,
                           RandomStream& jitter) {
    auto& events = photon_arrivals;
    events.insert(events.end(), darks.begin(), darks.end());
    std::sort(events.begin(), events.end());

    // Dead time in coordinate-time order, before clock jitter: an event is
    // dropped iff it falls strictly within dead_time of the last accepted.
    const std::int64_t dead = det.dead_time_fs.count();
    ArrivalSeries series{side, {}, FsDuration(session_fs)};
    series.timestamps.reserve(events.size());
    bool have_last = false;
    std::int64_t last_accepted = 0;
    for (const std::int64_t t : events) {
        if (have_last && dead > 0 && t - last_accepted < dead) continue;
        last_accepted = t;
        have_last = true;
        series.timestamps.push_back(clock_read(clock, FsTime(t), jitter));
    }
    std::sort(series.timestamps.begin(), series.timestamps.end());
    return series;
}

} // namespace

std::pair<ArrivalSeries, ArrivalSeries> propagate_and_detect(
    const std::vector<PairEmission>& pairs, const OpticalPath& path_a,
    const OpticalPath& path_b, const ClockModel& clock_a, const ClockModel& clock_b,
    const DetectorModel& det_a, const DetectorModel& det_b, FsDuration session_length_fs,
    RandomStream& rng) {
    path_a.validate();
    path_b.validate();
    clock_a.validate();
    clock_b.validate();
    det_a.validate();
    det_b.validate();
    if (session_length_fs.count() <= 0) throw InvalidConfig("session length must be > 0");

    RandomStream survival = rng.substream(detect_stream::kSurvival);
    RandomStream darks_a_rng = rng.substream(detect_stream::kDarksA);
    RandomStream darks_b_rng = rng.substream(detect_stream::kDarksB);
    RandomStream jitter_a = rng.substream(detect_stream::kJitterA);
    RandomStream jitter_b = rng.substream(detect_stream::kJitterB);

    const std::int64_t delay_a = path_a.total_delay().count();
    const std::int64_t delay_b = path_b.total_delay().count();
    const double p_a = det_a.efficiency * path_a.transmission;
    const double p_b = det_b.efficiency * path_b.transmission;

    std::vector<std::int64_t> arrivals_a;
    std::vector<std::int64_t> arrivals_b;
    arrivals_a.reserve(pairs.size());
    arrivals_b.reserve(pairs.size());
    for (const PairEmission& pair : pairs) {
        const std::int64_t skew = pair.delta_pair_fs.count();
        const std::int64_t half = floor_div(skew, 2);
        const std::int64_t t_a = checked::sub(pair.t_emit_fs.count(), half);
        const std::int64_t t_b = checked::add(t_a, skew);
        const bool keep_a = survival.next_bernoulli(p_a);
        const bool keep_b = survival.next_bernoulli(p_b);
        if (keep_a) arrivals_a.push_back(checked::add(t_a, delay_a));
        if (keep_b) arrivals_b.push_back(checked::add(t_b, delay_b));
    }

    const std::int64_t session = session_length_fs.count();
    ArrivalSeries series_a =
        tag_one_side(ClockSide::A, std::move(arrivals_a),
                     dark_arrivals(det_a, session, darks_a_rng), clock_a, det_a, session,
                     jitter_a);
    ArrivalSeries series_b =
        tag_one_side(ClockSide::B, std::move(arrivals_b),
                     dark_arrivals(det_b, session, darks_b_rng), clock_b, det_b, session,
                     jitter_b);
    return {std::move(series_a), std::move(series_b)};
}

} // namespace homsync
