#include "dpafd/trace.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace dpafd {

const char* to_string(TraceKind k) noexcept {
    switch (k) {
    case TraceKind::CycleStart: return "cycle-start";
    case TraceKind::CycleEnd: return "cycle-end";
    case TraceKind::Fault: return "fault";
    case TraceKind::Send: return "send";
    case TraceKind::Deliver: return "deliver";
    case TraceKind::Drop: return "drop";
    case TraceKind::Timer: return "timer";
    case TraceKind::Note: return "note";
    }
    return "?";
}

void Trace::append(TraceEvent e) {
    if (!events_.empty() && e.time < events_.back().time) {
        throw std::logic_error("trace time went backwards");
    }
    events_.push_back(std::move(e));
}

void Trace::append(const Trace& other) {
    for (const auto& e : other.events_) {
        append(e);
    }
}

Trace Trace::cycle_segment(std::uint32_t cycle) const {
    Trace out;
    for (const auto& e : events_) {
        if (e.cycle == cycle) {
            out.events_.push_back(e);
        }
    }
    return out;
}

std::vector<std::uint32_t> Trace::cycles() const {
    std::vector<std::uint32_t> out;
    for (const auto& e : events_) {
        if (e.kind == TraceKind::CycleStart) {
            out.push_back(e.cycle);
        }
    }
    return out;
}

std::string Trace::export_text() const {
    std::ostringstream out;
    for (const auto& e : events_) {
        out << e.time << '\t';
        if (e.kind == TraceKind::Note && e.note) {
            out << "note:" << to_string(e.note->kind);
        } else {
            out << to_string(e.kind);
        }
        out << '\t' << e.src << '\t' << e.dst << '\t';
        if (e.message) {
            out << describe(*e.message);
        } else if (e.note) {
            out << e.note->detail;
        } else {
            out << e.detail;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace dpafd
