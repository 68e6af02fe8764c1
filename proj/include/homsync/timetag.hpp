#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "homsync/optics.hpp"
#include "homsync/timebase.hpp"

namespace homsync {

class RandomStream;

struct DetectorModel {
    double efficiency = 1.0;
    double dark_rate_per_s = 0.0;
    FsDuration dead_time_fs{0};

    void validate() const;
};

enum class ClockSide : std::uint8_t { A = 0, B = 1 };

/// Local photon arrival timestamps of one clock, sorted ascending.
/// Duplicates are legal when quantization collapses distinct events.
struct ArrivalSeries {
    ClockSide clock_id = ClockSide::A;
    std::vector<FsTime> timestamps;
    FsDuration session_length_fs{0};

    [[nodiscard]] bool is_sorted() const;
};

/// Substream keys used inside propagate_and_detect, fixed so that the
/// dark-count draws are independent of how many pairs were emitted.
namespace detect_stream {
inline constexpr std::uint64_t kSurvival = 0;
inline constexpr std::uint64_t kDarksA = 1;
inline constexpr std::uint64_t kDarksB = 2;
inline constexpr std::uint64_t kJitterA = 3;
inline constexpr std::uint64_t kJitterB = 4;
} // namespace detect_stream

/// Send every pair down both paths and tag what the detectors accept.
///
/// Per pair: coordinate arrivals are t_emit - floor(skew/2) + delay_A and
/// that plus skew on the B side (integer split that keeps the difference
/// exact). Each photon survives with probability efficiency *
/// transmission (one draw per photon, consumed even when the probability
/// is 1). Dark counts are Poisson(dark_rate * session) placed uniformly
/// over the session. Per detector, photons and darks merge in coordinate
/// order, dead time drops any event closer than dead_time_fs to the last
/// accepted one, and the survivors are read through the clock (jitter and
/// quantization) and sorted.
std::pair<ArrivalSeries, ArrivalSeries> propagate_and_detect(
    const std::vector<PairEmission>& pairs, const OpticalPath& path_a,
    const OpticalPath& path_b, const ClockModel& clock_a, const ClockModel& clock_b,
    const DetectorModel& det_a, const DetectorModel& det_b, FsDuration session_length_fs,
    RandomStream& rng);

} // namespace homsync
