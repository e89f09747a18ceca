#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dpafd {

/// Simulated time in integer ticks.
using Tick = std::uint64_t;

enum class StatusBit : std::uint8_t { FaultFree = 0, Faulty = 1 };

/// The three-field frame every node keeps about itself. Acknowledgement and
/// request frames are plain copies of it.
struct LocalFrame {
    std::string address;
    StatusBit status = StatusBit::FaultFree;
    bool leader = false;

    friend bool operator==(const LocalFrame&, const LocalFrame&) = default;
};

LocalFrame new_local_frame(std::string address, StatusBit status);

class FrameError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-node ledger of status and leader bits, in insertion order.
class ResultFrame {
public:
    ResultFrame() = default;

    const std::vector<LocalFrame>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(const std::string& address) const { return find(address) != nullptr; }
    const LocalFrame* find(const std::string& address) const;

    /// Appends a new address, or raises the leader bit of an existing entry
    /// with identical status. Conflicting status, lowering a leader bit or a
    /// faulty leader throws FrameError.
    void upsert(const LocalFrame& entry);
    ResultFrame upserted(const LocalFrame& entry) const;

    friend bool operator==(const ResultFrame&, const ResultFrame&) = default;

private:
    std::vector<LocalFrame> entries_;
};

/// Faulty entries of `rf` in their original order.
std::vector<LocalFrame> extract_faulty(const ResultFrame& rf);

/// Outcome vector of the four self-test batteries: input-output,
/// floating point, arithmetic, memory.
struct SelfTestResult {
    std::array<std::uint64_t, 4> values{};

    friend bool operator==(const SelfTestResult&, const SelfTestResult&) = default;
};

enum class MessageKind : std::uint8_t {
    VolunteerBroadcast = 1,
    VolunteerAck = 2,
    CountExchange = 3,
    LeaderAnnounce = 4,
    ProbeRequest = 5,
    ProbeAck = 6,
    ResultTransfer = 7,
    FinalBroadcast = 8,
    InterNetworkReport = 9,
};

enum class TransferDirection : std::uint8_t { Forward = 0, Backtrack = 1 };

struct VolunteerBroadcast {
    friend bool operator==(const VolunteerBroadcast&, const VolunteerBroadcast&) = default;
};

struct VolunteerAck {
    LocalFrame frame;
    friend bool operator==(const VolunteerAck&, const VolunteerAck&) = default;
};

/// A volunteer's acknowledgement tally, flooded between volunteers.
/// `origin` lets relays suppress duplicates.
struct CountExchange {
    std::string origin;
    std::uint64_t ack_count = 0;
    Tick broadcast_time = 0;
    friend bool operator==(const CountExchange&, const CountExchange&) = default;
};

/// Leadership claim; carries the election key so rival claimants settle.
struct LeaderAnnounce {
    LocalFrame frame;
    std::uint64_t ack_count = 0;
    Tick broadcast_time = 0;
    friend bool operator==(const LeaderAnnounce&, const LeaderAnnounce&) = default;
};

struct ProbeRequest {
    LocalFrame frame;
    friend bool operator==(const ProbeRequest&, const ProbeRequest&) = default;
};

struct ProbeAck {
    LocalFrame frame;
    SelfTestResult result;
    friend bool operator==(const ProbeAck&, const ProbeAck&) = default;
};

struct ResultTransfer {
    ResultFrame frame;
    TransferDirection direction = TransferDirection::Forward;
    friend bool operator==(const ResultTransfer&, const ResultTransfer&) = default;
};

struct FinalBroadcast {
    std::vector<LocalFrame> faulty;
    friend bool operator==(const FinalBroadcast&, const FinalBroadcast&) = default;
};

struct InterNetworkReport {
    std::string origin_network;
    std::vector<LocalFrame> faulty;
    friend bool operator==(const InterNetworkReport&, const InterNetworkReport&) = default;
};

using MessageBody = std::variant<VolunteerBroadcast, VolunteerAck, CountExchange, LeaderAnnounce,
                                 ProbeRequest, ProbeAck, ResultTransfer, FinalBroadcast,
                                 InterNetworkReport>;

struct Message {
    std::string src;
    std::string dst;
    Tick send_time = 0;
    MessageBody body;

    MessageKind kind() const noexcept { return static_cast<MessageKind>(body.index() + 1); }
    friend bool operator==(const Message&, const Message&) = default;
};

const char* to_string(MessageKind kind) noexcept;

/// Throws FrameError when a message breaks a per-kind invariant (probe
/// leader bits, all-faulty final broadcast, well-formed bits).
void check_message(const Message& m);

class DecodeError : public std::runtime_error {
public:
    DecodeError(std::size_t offset, const std::string& what);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Canonical length-prefixed binary layout; all integers big-endian.
std::vector<std::uint8_t> encode(const Message& m);
Message decode(std::span<const std::uint8_t> bytes);

/// `address<TAB>status<TAB>leader`
std::string render(const LocalFrame& entry);
/// One render() line per entry, newline terminated.
std::string render(const ResultFrame& rf);
std::string render(const std::vector<LocalFrame>& entries);

/// Single-line human summary used in trace details.
std::string describe(const Message& m);

}  // namespace dpafd
