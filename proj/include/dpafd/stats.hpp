#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpafd/trace.hpp"

namespace dpafd {

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Message tallies for one diagnosis cycle. Every category counts sends
/// except m_bcast, which counts FinalBroadcast deliveries.
struct MessageStats {
    std::uint64_t m_r = 0;           ///< ProbeRequest
    std::uint64_t m_a = 0;           ///< ProbeAck that passes f(r, B)
    std::uint64_t m_re_forward = 0;  ///< ResultTransfer towards a new leader
    std::uint64_t m_re_backtrack = 0;
    std::uint64_t m_bcast = 0;
    std::uint64_t election = 0;       ///< VolunteerBroadcast, VolunteerAck, CountExchange and relays, LeaderAnnounce
    std::uint64_t rejected_acks = 0;  ///< ProbeAck carrying a failing self-test

    std::uint64_t m_re() const noexcept { return m_re_forward + m_re_backtrack; }
    std::uint64_t m_extra() const noexcept { return election + rejected_acks; }
    std::uint64_t total() const noexcept { return m_r + m_a + m_re() + m_bcast + m_extra(); }

    friend bool operator==(const MessageStats&, const MessageStats&) = default;
};

/// One MessageStats per cycle marker in `trace`, in order. Throws
/// AnalysisError if the trace has no cycle markers.
std::vector<MessageStats> count_messages(const Trace& trace);

/// `m_r=.. m_a=.. ...` single line.
std::string render(const MessageStats& s);

}  // namespace dpafd
