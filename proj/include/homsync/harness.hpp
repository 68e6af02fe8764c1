#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "homsync/balance.hpp"
#include "homsync/correlator.hpp"
#include "homsync/optics.hpp"
#include "homsync/protocol.hpp"
#include "homsync/timebase.hpp"
#include "homsync/timetag.hpp"

namespace homsync {

/// Stage keys for deriving per-stage random substreams from the master
/// seed. Fixed so that, for example, a longer emission never perturbs the
/// balancing draws.
namespace stage {
inline constexpr std::uint64_t kBalance = 0;
inline constexpr std::uint64_t kEmission = 1;
inline constexpr std::uint64_t kDetection = 2;
} // namespace stage

struct ExperimentConfig {
    SourceModel source;
    OpticalPath path_a;
    OpticalPath path_b;
    HomModel hom;
    ClockModel clock_a;
    ClockModel clock_b;
    DetectorModel detector_a;
    DetectorModel detector_b;
    BalanceConfig balance;
    CorrelationConfig correlation;
    std::uint64_t seed = 0;
    bool skip_balancing = false;

    void validate() const;

    static ExperimentConfig from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;

    static ExperimentConfig load(const std::string& path);
};

/// Wall-clock milliseconds per stage. Diagnostic only; deliberately kept
/// out of the serialized report so that reports stay byte-reproducible.
struct StageTiming {
    double balance_ms = 0.0;
    double emit_ms = 0.0;
    double detect_ms = 0.0;
    double transfer_ms = 0.0;
    double correlate_ms = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure_reason; // empty on success
    SyncState final_state = SyncState::Idle;

    std::optional<BalanceResult> balance;
    FsDuration residual_imbalance_fs{0};
    FsDuration truth_tau0_fs{0};
    std::optional<OffsetEstimate> estimate;
    std::optional<FsDuration> residual_fs; // estimated - truth

    std::uint64_t pairs_emitted = 0;
    std::uint64_t events_a = 0;
    std::uint64_t events_b = 0;

    StageTiming timing; // not serialized

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Full protocol for one seeded session: balance (unless skipped), emit,
/// tag, transfer A's series over the wire format, correlate at B, apply
/// the correction. Typed failures are folded into the report rather than
/// thrown; the partial data collected before the failure is retained.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// The correlation histogram the run_experiment pipeline would feed the
/// estimator (same staged streams, same wire round trip).
CorrelationHistogram run_histogram(const ExperimentConfig& cfg);

/// Axes accepted by run_sweep.
extern const std::vector<std::string> kSweepAxes;

/// One run per (value, trial), trial seeds base.seed + trial, reports
/// ordered by (value, trial). Throws UnknownAxis for anything not listed
/// in kSweepAxes.
std::vector<ExperimentReport> run_sweep(const ExperimentConfig& base,
                                        const std::string& axis,
                                        const std::vector<double>& values,
                                        std::uint64_t trials_per_value);

void write_report(std::ostream& out, const ExperimentReport& report);
void write_sweep_csv(std::ostream& out, const std::string& axis,
                     const std::vector<double>& values, std::uint64_t trials_per_value,
                     const std::vector<ExperimentReport>& reports);
void write_histogram_csv(std::ostream& out, const CorrelationHistogram& h);
void write_scan_trace_csv(std::ostream& out,
                          const std::vector<std::pair<FsDuration, std::uint64_t>>& trace);

} // namespace homsync
