#include "dpafd/stats.hpp"

#include <map>
#include <sstream>

namespace dpafd {

std::vector<MessageStats> count_messages(const Trace& trace) {
    std::map<std::uint32_t, MessageStats> per_cycle;
    bool marked = false;
    for (const auto& e : trace.events()) {
        if (e.kind == TraceKind::CycleStart) {
            marked = true;
            per_cycle.try_emplace(e.cycle);
            continue;
        }
        if (!e.message || (e.kind != TraceKind::Send && e.kind != TraceKind::Deliver)) {
            continue;
        }
        auto& s = per_cycle[e.cycle];
        const auto kind = e.message->kind();
        if (e.kind == TraceKind::Deliver) {
            if (kind == MessageKind::FinalBroadcast) {
                ++s.m_bcast;
            }
            continue;
        }
        switch (kind) {
        case MessageKind::ProbeRequest:
            ++s.m_r;
            break;
        case MessageKind::ProbeAck: {
            const auto& ack = std::get<ProbeAck>(e.message->body);
            if (classify(reference_result(), ack.result) == StatusBit::FaultFree) {
                ++s.m_a;
            } else {
                ++s.rejected_acks;
            }
            break;
        }
        case MessageKind::ResultTransfer:
            if (std::get<ResultTransfer>(e.message->body).direction == TransferDirection::Forward) {
                ++s.m_re_forward;
            } else {
                ++s.m_re_backtrack;
            }
            break;
        case MessageKind::VolunteerBroadcast:
        case MessageKind::VolunteerAck:
        case MessageKind::CountExchange:
        case MessageKind::LeaderAnnounce:
            ++s.election;
            break;
        case MessageKind::FinalBroadcast:
        case MessageKind::InterNetworkReport:
            break;
        }
    }
    if (!marked) {
        throw AnalysisError("trace has no cycle markers");
    }
    std::vector<MessageStats> out;
    for (auto& [_, s] : per_cycle) {
        out.push_back(s);
    }
    return out;
}

std::string render(const MessageStats& s) {
    std::ostringstream out;
    out << "m_r=" << s.m_r << " m_a=" << s.m_a << " m_re=" << s.m_re() << " (forward=" << s.m_re_forward
        << " backtrack=" << s.m_re_backtrack << ") m_bcast=" << s.m_bcast << " m_extra=" << s.m_extra()
        << " (election=" << s.election << " rejected_acks=" << s.rejected_acks << ") total=" << s.total();
    return out.str();
}

}  // namespace dpafd
