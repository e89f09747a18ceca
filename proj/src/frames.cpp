#include "dpafd/frames.hpp"

#include <algorithm>
#include <sstream>

namespace dpafd {

LocalFrame new_local_frame(std::string address, StatusBit status) {
    return LocalFrame{std::move(address), status, false};
}

const LocalFrame* ResultFrame::find(const std::string& address) const {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const LocalFrame& e) { return e.address == address; });
    return it == entries_.end() ? nullptr : &*it;
}

void ResultFrame::upsert(const LocalFrame& entry) {
    if (entry.leader && entry.status == StatusBit::Faulty) {
        throw FrameError("entry " + entry.address + " is faulty and cannot carry the leader bit");
    }
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const LocalFrame& e) { return e.address == entry.address; });
    if (it == entries_.end()) {
        entries_.push_back(entry);
        return;
    }
    if (it->status != entry.status) {
        throw FrameError("conflicting status for " + entry.address + ": each node is tested once");
    }
    if (it->leader && !entry.leader) {
        throw FrameError("leader bit of " + entry.address + " cannot be lowered");
    }
    it->leader = entry.leader;
}

ResultFrame ResultFrame::upserted(const LocalFrame& entry) const {
    ResultFrame copy = *this;
    copy.upsert(entry);
    return copy;
}

std::vector<LocalFrame> extract_faulty(const ResultFrame& rf) {
    std::vector<LocalFrame> out;
    std::copy_if(rf.entries().begin(), rf.entries().end(), std::back_inserter(out),
                 [](const LocalFrame& e) { return e.status == StatusBit::Faulty; });
    return out;
}

const char* to_string(MessageKind kind) noexcept {
    switch (kind) {
    case MessageKind::VolunteerBroadcast: return "VolunteerBroadcast";
    case MessageKind::VolunteerAck: return "VolunteerAck";
    case MessageKind::CountExchange: return "CountExchange";
    case MessageKind::LeaderAnnounce: return "LeaderAnnounce";
    case MessageKind::ProbeRequest: return "ProbeRequest";
    case MessageKind::ProbeAck: return "ProbeAck";
    case MessageKind::ResultTransfer: return "ResultTransfer";
    case MessageKind::FinalBroadcast: return "FinalBroadcast";
    case MessageKind::InterNetworkReport: return "InterNetworkReport";
    }
    return "?";
}

void check_message(const Message& m) {
    struct Visitor {
        void operator()(const VolunteerBroadcast&) const {}
        void operator()(const VolunteerAck&) const {}
        void operator()(const CountExchange&) const {}
        void operator()(const LeaderAnnounce& a) const {
            if (!a.frame.leader) {
                throw FrameError("LeaderAnnounce must carry leader bit 1");
            }
        }
        void operator()(const ProbeRequest& r) const {
            if (!r.frame.leader) {
                throw FrameError("ProbeRequest must carry leader bit 1");
            }
        }
        void operator()(const ProbeAck& a) const {
            if (a.frame.leader) {
                throw FrameError("ProbeAck must carry leader bit 0");
            }
        }
        void operator()(const ResultTransfer&) const {}
        void operator()(const FinalBroadcast& b) const { all_faulty(b.faulty); }
        void operator()(const InterNetworkReport& r) const { all_faulty(r.faulty); }

        static void all_faulty(const std::vector<LocalFrame>& entries) {
            for (const auto& e : entries) {
                if (e.status != StatusBit::Faulty) {
                    throw FrameError("faulty list contains fault-free entry " + e.address);
                }
            }
        }
    };
    std::visit(Visitor{}, m.body);
}

std::string render(const LocalFrame& entry) {
    std::string out = entry.address;
    out += '\t';
    out += entry.status == StatusBit::Faulty ? '1' : '0';
    out += '\t';
    out += entry.leader ? '1' : '0';
    return out;
}

std::string render(const std::vector<LocalFrame>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += render(e);
        out += '\n';
    }
    return out;
}

std::string render(const ResultFrame& rf) { return render(rf.entries()); }

namespace {

std::string compact(const LocalFrame& f) {
    std::ostringstream out;
    out << '{' << f.address << ',' << static_cast<int>(f.status) << ',' << (f.leader ? 1 : 0) << '}';
    return out.str();
}

std::string compact(const std::vector<LocalFrame>& entries) {
    std::string out = "[";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) {
            out += ' ';
        }
        out += compact(entries[i]);
    }
    return out + "]";
}

}  // namespace

std::string describe(const Message& m) {
    std::ostringstream out;
    out << to_string(m.kind());
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, VolunteerAck> || std::is_same_v<T, ProbeRequest>) {
                out << ' ' << compact(body.frame);
            } else if constexpr (std::is_same_v<T, ProbeAck>) {
                out << ' ' << compact(body.frame) << " r=";
                for (std::size_t i = 0; i < body.result.values.size(); ++i) {
                    out << (i ? "," : "") << std::hex << body.result.values[i] << std::dec;
                }
            } else if constexpr (std::is_same_v<T, CountExchange>) {
                out << " origin=" << body.origin << " acks=" << body.ack_count
                    << " bcast=" << body.broadcast_time;
            } else if constexpr (std::is_same_v<T, LeaderAnnounce>) {
                out << ' ' << compact(body.frame) << " acks=" << body.ack_count
                    << " bcast=" << body.broadcast_time;
            } else if constexpr (std::is_same_v<T, ResultTransfer>) {
                out << (body.direction == TransferDirection::Forward ? " forward " : " backtrack ")
                    << compact(body.frame.entries());
            } else if constexpr (std::is_same_v<T, FinalBroadcast>) {
                out << ' ' << compact(body.faulty);
            } else if constexpr (std::is_same_v<T, InterNetworkReport>) {
                out << " origin=" << body.origin_network << ' ' << compact(body.faulty);
            }
        },
        m.body);
    return out.str();
}

}  // namespace dpafd
