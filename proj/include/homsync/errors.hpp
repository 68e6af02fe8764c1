#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace homsync {

/// Base class for every typed failure raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integer femtosecond arithmetic left the representable range.
class OverflowError : public Error {
public:
    using Error::Error;
};

/// A model or configuration field violates its invariants.
class InvalidConfig : public Error {
public:
    using Error::Error;
};

/// Balance scan bounds or step violate the search preconditions.
class InvalidScanRange : public InvalidConfig {
public:
    using InvalidConfig::InvalidConfig;
};

/// The coincidence scan showed no usable minimum (flat response, or the
/// dip lies outside the scan range). Carries the scan trace so callers
/// can still inspect or print what was measured.
class NoDipFound : public Error {
public:
    NoDipFound(std::string msg, double contrast,
               std::vector<std::pair<std::int64_t, std::uint64_t>> trace)
        : Error(std::move(msg)), contrast(contrast), scan_trace(std::move(trace)) {}

    double contrast;
    std::vector<std::pair<std::int64_t, std::uint64_t>> scan_trace;
};

/// Correlation input series has zero events.
class EmptySeries : public Error {
public:
    using Error::Error;
};

/// The exhaustive correlation oracle refuses inputs beyond its pair guard.
class OracleTooLarge : public Error {
public:
    using Error::Error;
};

/// Multiple histogram bins share the maximum and the peak is not
/// statistically significant; the offset cannot be trusted.
class AmbiguousPeak : public Error {
public:
    using Error::Error;
};

/// Arrival series exceeds the wire format's 32-bit event count.
class MessageTooLarge : public Error {
public:
    using Error::Error;
};

/// Base for wire-format decode failures; carries the byte offset at which
/// the problem was detected.
class DecodeError : public Error {
public:
    DecodeError(std::string msg, std::size_t offset)
        : Error(std::move(msg)), byte_offset(offset) {}

    std::size_t byte_offset;
};

class BadMagic : public DecodeError {
public:
    using DecodeError::DecodeError;
};

class UnsupportedVersion : public DecodeError {
public:
    using DecodeError::DecodeError;
};

class ChecksumMismatch : public DecodeError {
public:
    using DecodeError::DecodeError;
};

class UnsortedTimestamps : public DecodeError {
public:
    using DecodeError::DecodeError;
};

class Truncated : public DecodeError {
public:
    using DecodeError::DecodeError;
};

/// Sweep axis name is not on the supported whitelist.
class UnknownAxis : public Error {
public:
    using Error::Error;
};

/// A SyncSession was driven through a transition its state machine forbids.
class IllegalTransition : public Error {
public:
    using Error::Error;
};

} // namespace homsync
