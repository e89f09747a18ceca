#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpafd/frames.hpp"
#include "dpafd/protocol.hpp"

namespace dpafd {

enum class TraceKind : std::uint8_t {
    CycleStart,
    CycleEnd,
    Fault,    ///< fault-script action applied at a cycle boundary
    Send,
    Deliver,
    Drop,     ///< destination crashed
    Timer,
    Note,     ///< protocol annotation
};

const char* to_string(TraceKind k) noexcept;

struct TraceEvent {
    Tick time = 0;
    std::uint32_t cycle = 0;
    TraceKind kind = TraceKind::Note;
    std::string src;
    std::string dst;
    std::optional<Message> message;
    std::optional<Annotation> note;
    std::string detail;
};

/// Totally ordered event log. Times never decrease.
class Trace {
public:
    const std::vector<TraceEvent>& events() const noexcept { return events_; }
    bool empty() const noexcept { return events_.empty(); }

    void append(TraceEvent e);
    void append(const Trace& other);

    /// Events of one cycle (CycleStart .. CycleEnd inclusive); empty if absent.
    Trace cycle_segment(std::uint32_t cycle) const;
    std::vector<std::uint32_t> cycles() const;

    /// `<time>\t<kind>\t<src>\t<dst>\t<detail>` per event.
    std::string export_text() const;

private:
    std::vector<TraceEvent> events_;
};

}  // namespace dpafd
