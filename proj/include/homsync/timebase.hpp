#pragma once

#include <compare>
#include <cstdint>

#include "homsync/errors.hpp"

namespace homsync {

class RandomStream;

namespace checked {

/// Overflow-checked int64 helpers. Time arithmetic must reject overflow
/// rather than wrap, so every operator below routes through these.
[[nodiscard]] inline std::int64_t add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw OverflowError("int64 add overflow");
    return r;
}

[[nodiscard]] inline std::int64_t sub(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("int64 sub overflow");
    return r;
}

[[nodiscard]] inline std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("int64 mul overflow");
    return r;
}

[[nodiscard]] inline std::int64_t neg(std::int64_t a) { return sub(0, a); }

} // namespace checked

/// Floor division (quotient rounded toward negative infinity). b > 0.
[[nodiscard]] constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

/// A signed interval in femtoseconds.
class FsDuration {
public:
    constexpr FsDuration() = default;
    constexpr explicit FsDuration(std::int64_t fs) : fs_(fs) {}

    [[nodiscard]] constexpr std::int64_t count() const { return fs_; }

    friend constexpr auto operator<=>(FsDuration, FsDuration) = default;

    friend FsDuration operator+(FsDuration a, FsDuration b) {
        return FsDuration(checked::add(a.fs_, b.fs_));
    }
    friend FsDuration operator-(FsDuration a, FsDuration b) {
        return FsDuration(checked::sub(a.fs_, b.fs_));
    }
    friend FsDuration operator-(FsDuration a) { return FsDuration(checked::neg(a.fs_)); }
    friend FsDuration operator*(FsDuration a, std::int64_t k) {
        return FsDuration(checked::mul(a.fs_, k));
    }
    friend FsDuration operator*(std::int64_t k, FsDuration a) { return a * k; }

    FsDuration& operator+=(FsDuration b) { fs_ = checked::add(fs_, b.fs_); return *this; }
    FsDuration& operator-=(FsDuration b) { fs_ = checked::sub(fs_, b.fs_); return *this; }

private:
    std::int64_t fs_ = 0;
};

/// A point in time: femtoseconds since the session epoch. The signed
/// 64-bit representation covers about +/-2.5 hours, ample for desk-scale
/// sessions; overflowing arithmetic throws instead of wrapping.
class FsTime {
public:
    constexpr FsTime() = default;
    constexpr explicit FsTime(std::int64_t fs) : fs_(fs) {}

    [[nodiscard]] constexpr std::int64_t count() const { return fs_; }

    friend constexpr auto operator<=>(FsTime, FsTime) = default;

    friend FsDuration operator-(FsTime a, FsTime b) {
        return FsDuration(checked::sub(a.fs_, b.fs_));
    }
    friend FsTime operator+(FsTime t, FsDuration d) {
        return FsTime(checked::add(t.fs_, d.count()));
    }
    friend FsTime operator+(FsDuration d, FsTime t) { return t + d; }
    friend FsTime operator-(FsTime t, FsDuration d) {
        return FsTime(checked::sub(t.fs_, d.count()));
    }

private:
    std::int64_t fs_ = 0;
};

/// Round `value_fs` to the nearest multiple of `quantum_fs` (>= 1).
/// Exact halves round toward negative infinity; the rule is fixed so that
/// quantized readings are bit-exact across runs.
[[nodiscard]] std::int64_t quantize_fs(std::int64_t value_fs, std::int64_t quantum_fs);

/// Quantize the real-valued reading `base_fs + perturbation_fs` without
/// ever materializing it as a double (the integer part may exceed double
/// precision). Same nearest-multiple, ties-toward-negative-infinity rule.
[[nodiscard]] std::int64_t quantize_fs(std::int64_t base_fs, double perturbation_fs,
                                       std::int64_t quantum_fs);

/// An imperfect clock: reading = quantize((1 + rate_deviation) * t
/// + offset_fs + jitter). offset_fs is the clock reading minus coordinate
/// time; rate_deviation = 0 models two clocks ticking at the same rate.
struct ClockModel {
    FsDuration offset_fs{0};
    double rate_deviation = 0.0;
    double jitter_sigma_fs = 0.0;
    std::int64_t quantization_fs = 1;

    void validate() const;
};

/// Local clock reading for a coordinate time. Draws one Gaussian jitter
/// sample from `noise` when jitter_sigma_fs > 0, no draws otherwise; with
/// rate_deviation and jitter both zero the result is exact integer
/// arithmetic.
[[nodiscard]] FsTime clock_read(const ClockModel& clock, FsTime t, RandomStream& noise);

/// Returns the clock with `tau0` added to its offset; everything else
/// unchanged.
[[nodiscard]] ClockModel apply_correction(ClockModel clock, FsDuration tau0);

} // namespace homsync
