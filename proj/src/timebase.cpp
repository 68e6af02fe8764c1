#include "homsync/timebase.hpp"

#include <cmath>
#include <limits>

#include "homsync/random.hpp"

namespace homsync {

std::int64_t quantize_fs(std::int64_t value_fs, std::int64_t quantum_fs) {
    if (quantum_fs < 1) throw InvalidConfig("quantization must be >= 1 fs");
    if (quantum_fs == 1) return value_fs;
    std::int64_t q = floor_div(value_fs, quantum_fs);
    const std::int64_t r = value_fs - q * quantum_fs; // 0 <= r < quantum
    if (r > quantum_fs - r) q = checked::add(q, 1);   // tie (2r == quantum) stays down
    return checked::mul(q, quantum_fs);
}

std::int64_t quantize_fs(std::int64_t base_fs, double perturbation_fs,
                         std::int64_t quantum_fs) {
    if (quantum_fs < 1) throw InvalidConfig("quantization must be >= 1 fs");
    if (!std::isfinite(perturbation_fs))
        throw OverflowError("non-finite clock perturbation");
    const double pfloor = std::floor(perturbation_fs);
    if (pfloor < -9.2e18 || pfloor > 9.2e18)
        throw OverflowError("clock perturbation exceeds representable range");
    const auto pint = static_cast<std::int64_t>(pfloor);
    const double frac = perturbation_fs - pfloor; // in [0, 1)
    const std::int64_t whole = checked::add(base_fs, pint);
    std::int64_t q = floor_div(whole, quantum_fs);
    const std::int64_t rem = whole - q * quantum_fs; // 0 <= rem < quantum
    // Round up iff the fractional remainder strictly exceeds quantum/2.
    if ((static_cast<double>(rem) + frac) * 2.0 > static_cast<double>(quantum_fs))
        q = checked::add(q, 1);
    return checked::mul(q, quantum_fs);
}

void ClockModel::validate() const {
    if (quantization_fs < 1) throw InvalidConfig("clock quantization_fs must be >= 1");
    if (!(jitter_sigma_fs >= 0.0)) throw InvalidConfig("clock jitter_sigma_fs must be >= 0");
    if (!std::isfinite(rate_deviation)) throw InvalidConfig("clock rate_deviation must be finite");
}

FsTime clock_read(const ClockModel& clock, FsTime t, RandomStream& noise) {
    const std::int64_t base = checked::add(t.count(), clock.offset_fs.count());
    if (clock.rate_deviation == 0.0 && clock.jitter_sigma_fs == 0.0) {
        return FsTime(quantize_fs(base, clock.quantization_fs));
    }
    double perturbation = clock.rate_deviation * static_cast<double>(t.count());
    if (clock.jitter_sigma_fs > 0.0) {
        perturbation += noise.next_gaussian(clock.jitter_sigma_fs);
    }
    return FsTime(quantize_fs(base, perturbation, clock.quantization_fs));
}

ClockModel apply_correction(ClockModel clock, FsDuration tau0) {
    clock.offset_fs += tau0;
    return clock;
}

} // namespace homsync
