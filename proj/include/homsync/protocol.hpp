#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "homsync/correlator.hpp"
#include "homsync/timebase.hpp"
#include "homsync/timetag.hpp"

namespace homsync {

/// CRC-32 (polynomial 0xEDB88320, reflected, init and final XOR
/// 0xFFFFFFFF), the variant used by zlib and PNG.
[[nodiscard]] std::uint32_t crc32_ieee(std::span<const std::uint8_t> data);

/// Wire format for arrival-series transfer, version 1. All integers are
/// little-endian. Layout:
///
///   offset  size  field
///        0     4  magic "HOMS"
///        4     2  version (= 1)
///        6     1  clock_id (0 = A, 1 = B)
///        7     1  reserved (= 0)
///        8     8  session_id
///       16     4  count
///       20   8*n  timestamps, signed femtoseconds, sorted ascending
///   20+8*n     4  CRC-32 over all preceding bytes
struct ArrivalDataMessage {
    std::uint16_t version = 1;
    std::uint8_t clock_id = 0;
    std::uint64_t session_id = 0;
    std::vector<std::int64_t> timestamps_fs;
};

inline constexpr std::uint8_t kWireMagic[4] = {'H', 'O', 'M', 'S'};
inline constexpr std::uint16_t kWireVersion = 1;

/// Serialize a series. Throws MessageTooLarge beyond 2^32 - 1 events.
[[nodiscard]] std::vector<std::uint8_t> encode(const ArrivalSeries& series,
                                               std::uint64_t session_id);

/// Parse and validate a message. Throws BadMagic, UnsupportedVersion,
/// Truncated (also for trailing bytes), ChecksumMismatch or
/// UnsortedTimestamps; each carries the byte offset of the problem.
[[nodiscard]] ArrivalDataMessage decode(std::span<const std::uint8_t> bytes);

[[nodiscard]] ArrivalSeries to_series(const ArrivalDataMessage& msg,
                                      FsDuration session_length_fs);

enum class SyncState {
    Idle,
    Balancing,
    Collecting,
    AwaitingData,
    Correlating,
    Corrected,
    Failed,
};

enum class FailureReason {
    None,
    NoDip,
    EmptySeries,
    AmbiguousPeak,
    DecodeFailed,
    Overflow,
    InvalidConfig,
};

[[nodiscard]] const char* to_string(SyncState s);
[[nodiscard]] const char* to_string(FailureReason r);

/// Two-node synchronization state machine. Legal forward path:
/// Idle -> Balancing -> Collecting -> AwaitingData -> Correlating ->
/// Corrected; Failed is reachable from every non-terminal state. Illegal
/// transitions throw IllegalTransition.
class SyncSession {
public:
    explicit SyncSession(std::uint64_t session_id) : session_id_(session_id) {}

    [[nodiscard]] SyncState state() const { return state_; }
    [[nodiscard]] std::uint64_t session_id() const { return session_id_; }
    [[nodiscard]] FailureReason failure_reason() const { return reason_; }
    [[nodiscard]] const std::optional<OffsetEstimate>& result() const { return result_; }

    void begin_balancing();
    void begin_collecting();
    void begin_awaiting_data();
    void begin_correlating();
    void complete(const OffsetEstimate& estimate);
    void fail(FailureReason reason);

private:
    void expect(SyncState from, const char* op) const;

    std::uint64_t session_id_;
    SyncState state_ = SyncState::Idle;
    FailureReason reason_ = FailureReason::None;
    std::optional<OffsetEstimate> result_;
};

/// Node B's correlation step: estimate tau0 from the two series (two-pass
/// when the config carries a coarse bin width) and return clock B with
/// tau0 added to its offset, plus the estimate itself.
std::pair<ClockModel, OffsetEstimate> synchronize(const ArrivalSeries& node_a_series,
                                                  const ArrivalSeries& node_b_series,
                                                  const CorrelationConfig& corr_cfg,
                                                  const ClockModel& clock_b);

} // namespace homsync
