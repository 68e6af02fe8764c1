#include "homsync/protocol.hpp"

#include <algorithm>
#include <array>
#include <cstring>

namespace homsync {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t n = 0; n < 256; ++n) {
        std::uint32_t c = n;
        for (int k = 0; k < 8; ++k) {
            c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        }
        table[n] = c;
    }
    return table;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

constexpr std::size_t kHeaderSize = 20;
constexpr std::size_t kMinMessageSize = kHeaderSize + 4;

} // namespace

std::uint32_t crc32_ieee(std::span<const std::uint8_t> data) {
    static const auto table = make_crc_table();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (const std::uint8_t byte : data) {
        crc = table[(crc ^ byte) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> encode(const ArrivalSeries& series, std::uint64_t session_id) {
    if (series.timestamps.size() > 0xFFFFFFFFull)
        throw MessageTooLarge("series exceeds the 32-bit event count");
    if (!series.is_sorted())
        throw InvalidConfig("encode requires a sorted arrival series");

    std::vector<std::uint8_t> out;
    out.reserve(kMinMessageSize + 8 * series.timestamps.size());
    for (const std::uint8_t m : kWireMagic) out.push_back(m);
    put_u16(out, kWireVersion);
    out.push_back(static_cast<std::uint8_t>(series.clock_id));
    out.push_back(0); // reserved
    put_u64(out, session_id);
    put_u32(out, static_cast<std::uint32_t>(series.timestamps.size()));
    for (const FsTime t : series.timestamps) {
        put_u64(out, static_cast<std::uint64_t>(t.count()));
    }
    put_u32(out, crc32_ieee({out.data(), out.size()}));
    return out;
}

ArrivalDataMessage decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMinMessageSize)
        throw Truncated("message shorter than the fixed header", bytes.size());
    if (!std::equal(std::begin(kWireMagic), std::end(kWireMagic), bytes.data()))
        throw BadMagic("bad magic", 0);
    const std::uint16_t version = get_u16(bytes.data() + 4);
    if (version != kWireVersion)
        throw UnsupportedVersion("unsupported version", 4);

    const std::uint32_t count = get_u32(bytes.data() + 16);
    const std::size_t expected = kMinMessageSize + 8ull * count;
    if (bytes.size() != expected)
        throw Truncated("message length does not match the event count",
                        std::min(bytes.size(), expected));

    const std::size_t crc_offset = expected - 4;
    const std::uint32_t stored = get_u32(bytes.data() + crc_offset);
    const std::uint32_t computed = crc32_ieee(bytes.first(crc_offset));
    if (stored != computed) throw ChecksumMismatch("checksum mismatch", crc_offset);

    ArrivalDataMessage msg;
    msg.version = version;
    msg.clock_id = bytes[6];
    msg.session_id = get_u64(bytes.data() + 8);
    msg.timestamps_fs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t off = kHeaderSize + 8ull * i;
        const auto t = static_cast<std::int64_t>(get_u64(bytes.data() + off));
        if (i > 0 && t < msg.timestamps_fs.back())
            throw UnsortedTimestamps("timestamps not sorted ascending", off);
        msg.timestamps_fs.push_back(t);
    }
    return msg;
}

ArrivalSeries to_series(const ArrivalDataMessage& msg, FsDuration session_length_fs) {
    ArrivalSeries series;
    series.clock_id = msg.clock_id == 1 ? ClockSide::B : ClockSide::A;
    series.session_length_fs = session_length_fs;
    series.timestamps.reserve(msg.timestamps_fs.size());
    for (const std::int64_t t : msg.timestamps_fs) series.timestamps.emplace_back(t);
    return series;
}

const char* to_string(SyncState s) {
    switch (s) {
        case SyncState::Idle: return "idle";
        case SyncState::Balancing: return "balancing";
        case SyncState::Collecting: return "collecting";
        case SyncState::AwaitingData: return "awaiting_data";
        case SyncState::Correlating: return "correlating";
        case SyncState::Corrected: return "corrected";
        case SyncState::Failed: return "failed";
    }
    return "unknown";
}

const char* to_string(FailureReason r) {
    switch (r) {
        case FailureReason::None: return "none";
        case FailureReason::NoDip: return "no_dip_found";
        case FailureReason::EmptySeries: return "empty_series";
        case FailureReason::AmbiguousPeak: return "ambiguous_peak";
        case FailureReason::DecodeFailed: return "decode_failed";
        case FailureReason::Overflow: return "overflow";
        case FailureReason::InvalidConfig: return "invalid_config";
    }
    return "unknown";
}

void SyncSession::expect(SyncState from, const char* op) const {
    if (state_ != from) {
        throw IllegalTransition(std::string("illegal transition: ") + op + " from " +
                                to_string(state_));
    }
}

void SyncSession::begin_balancing() {
    expect(SyncState::Idle, "begin_balancing");
    state_ = SyncState::Balancing;
}

void SyncSession::begin_collecting() {
    expect(SyncState::Balancing, "begin_collecting");
    state_ = SyncState::Collecting;
}

void SyncSession::begin_awaiting_data() {
    expect(SyncState::Collecting, "begin_awaiting_data");
    state_ = SyncState::AwaitingData;
}

void SyncSession::begin_correlating() {
    expect(SyncState::AwaitingData, "begin_correlating");
    state_ = SyncState::Correlating;
}

void SyncSession::complete(const OffsetEstimate& estimate) {
    expect(SyncState::Correlating, "complete");
    result_ = estimate;
    state_ = SyncState::Corrected;
}

void SyncSession::fail(FailureReason reason) {
    if (state_ == SyncState::Corrected || state_ == SyncState::Failed)
        throw IllegalTransition("fail() called on a terminal session");
    reason_ = reason;
    state_ = SyncState::Failed;
}

std::pair<ClockModel, OffsetEstimate> synchronize(const ArrivalSeries& node_a_series,
                                                  const ArrivalSeries& node_b_series,
                                                  const CorrelationConfig& corr_cfg,
                                                  const ClockModel& clock_b) {
    OffsetEstimate estimate;
    if (corr_cfg.coarse_bin_width_fs) {
        estimate = correlate_twopass(node_a_series, node_b_series, corr_cfg).second;
    } else {
        estimate = estimate_offset(correlate(node_a_series, node_b_series, corr_cfg));
    }
    return {apply_correction(clock_b, estimate.tau0_fs), estimate};
}

} // namespace homsync
