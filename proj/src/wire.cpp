// Binary layout of a Message:
//
//   u8  kind tag (MessageKind)
//   str src, str dst            str = u32 length + UTF-8 bytes
//   u64 send_time
//   ... per-kind payload
//
// A LocalFrame is `str address, u8 status, u8 leader`. Lists are a u32
// count followed by their elements. Integers are big-endian.
#include "dpafd/frames.hpp"

#include <limits>

namespace dpafd {

DecodeError::DecodeError(std::size_t offset, const std::string& what)
    : std::runtime_error("decode error at byte " + std::to_string(offset) + ": " + what),
      offset_(offset) {}

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) {
            out_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }
    void u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) {
            out_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }
    void str(const std::string& s) {
        if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw FrameError("label too long to encode");
        }
        u32(static_cast<std::uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }
    void frame(const LocalFrame& f) {
        str(f.address);
        u8(static_cast<std::uint8_t>(f.status));
        u8(f.leader ? 1 : 0);
    }
    void frames(const std::vector<LocalFrame>& fs) {
        u32(static_cast<std::uint32_t>(fs.size()));
        for (const auto& f : fs) {
            frame(f);
        }
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }
    bool done() const noexcept { return pos_ == bytes_.size(); }

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v = (v << 8) | bytes_[pos_++];
        }
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v = (v << 8) | bytes_[pos_++];
        }
        return v;
    }
    std::string str() {
        const std::size_t at = pos_;
        const std::uint32_t len = u32();
        if (len > bytes_.size() - pos_) {
            throw DecodeError(at, "string length " + std::to_string(len) + " exceeds input");
        }
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }
    bool bit(const char* what) {
        const std::size_t at = pos_;
        const std::uint8_t v = u8();
        if (v > 1) {
            throw DecodeError(at, std::string(what) + " must be 0 or 1");
        }
        return v == 1;
    }
    LocalFrame frame() {
        LocalFrame f;
        f.address = str();
        f.status = bit("status bit") ? StatusBit::Faulty : StatusBit::FaultFree;
        f.leader = bit("leader bit");
        return f;
    }
    std::vector<LocalFrame> frames() {
        const std::size_t at = pos_;
        const std::uint32_t count = u32();
        // Smallest encoded frame is 6 bytes.
        if (count > (bytes_.size() - pos_) / 6) {
            throw DecodeError(at, "frame count " + std::to_string(count) + " exceeds input");
        }
        std::vector<LocalFrame> out;
        out.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            out.push_back(frame());
        }
        return out;
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw DecodeError(pos_, "truncated input, need " + std::to_string(n) + " more byte(s)");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const Message& m) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(m.kind()));
    w.str(m.src);
    w.str(m.dst);
    w.u64(m.send_time);
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, VolunteerAck> || std::is_same_v<T, ProbeRequest>) {
                w.frame(body.frame);
            } else if constexpr (std::is_same_v<T, ProbeAck>) {
                w.frame(body.frame);
                w.u8(static_cast<std::uint8_t>(body.result.values.size()));
                for (auto v : body.result.values) {
                    w.u64(v);
                }
            } else if constexpr (std::is_same_v<T, CountExchange>) {
                w.str(body.origin);
                w.u64(body.ack_count);
                w.u64(body.broadcast_time);
            } else if constexpr (std::is_same_v<T, LeaderAnnounce>) {
                w.frame(body.frame);
                w.u64(body.ack_count);
                w.u64(body.broadcast_time);
            } else if constexpr (std::is_same_v<T, ResultTransfer>) {
                w.u8(static_cast<std::uint8_t>(body.direction));
                w.frames(body.frame.entries());
            } else if constexpr (std::is_same_v<T, FinalBroadcast>) {
                w.frames(body.faulty);
            } else if constexpr (std::is_same_v<T, InterNetworkReport>) {
                w.str(body.origin_network);
                w.frames(body.faulty);
            }
        },
        m.body);
    return w.take();
}

Message decode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) {
        throw DecodeError(0, "empty input");
    }
    Reader r(bytes);
    const std::uint8_t tag = r.u8();
    Message m;
    m.src = r.str();
    m.dst = r.str();
    m.send_time = r.u64();
    switch (static_cast<MessageKind>(tag)) {
    case MessageKind::VolunteerBroadcast:
        m.body = VolunteerBroadcast{};
        break;
    case MessageKind::VolunteerAck:
        m.body = VolunteerAck{r.frame()};
        break;
    case MessageKind::CountExchange: {
        CountExchange c;
        c.origin = r.str();
        c.ack_count = r.u64();
        c.broadcast_time = r.u64();
        m.body = std::move(c);
        break;
    }
    case MessageKind::LeaderAnnounce: {
        LeaderAnnounce a;
        a.frame = r.frame();
        a.ack_count = r.u64();
        a.broadcast_time = r.u64();
        m.body = std::move(a);
        break;
    }
    case MessageKind::ProbeRequest:
        m.body = ProbeRequest{r.frame()};
        break;
    case MessageKind::ProbeAck: {
        ProbeAck a;
        a.frame = r.frame();
        const std::size_t at = r.offset();
        if (r.u8() != a.result.values.size()) {
            throw DecodeError(at, "unexpected self-test vector length");
        }
        for (auto& v : a.result.values) {
            v = r.u64();
        }
        m.body = std::move(a);
        break;
    }
    case MessageKind::ResultTransfer: {
        ResultTransfer t;
        t.direction = r.bit("transfer direction") ? TransferDirection::Backtrack
                                                  : TransferDirection::Forward;
        const std::size_t at = r.offset();
        try {
            for (const auto& e : r.frames()) {
                if (t.frame.contains(e.address)) {
                    throw FrameError("duplicate address " + e.address);
                }
                t.frame.upsert(e);
            }
        } catch (const FrameError& e) {
            throw DecodeError(at, std::string("invalid result frame: ") + e.what());
        }
        m.body = std::move(t);
        break;
    }
    case MessageKind::FinalBroadcast:
        m.body = FinalBroadcast{r.frames()};
        break;
    case MessageKind::InterNetworkReport: {
        InterNetworkReport rep;
        rep.origin_network = r.str();
        rep.faulty = r.frames();
        m.body = std::move(rep);
        break;
    }
    default:
        throw DecodeError(0, "unknown message kind " + std::to_string(tag));
    }
    if (!r.done()) {
        throw DecodeError(r.offset(), "trailing bytes after message");
    }
    try {
        check_message(m);
    } catch (const FrameError& e) {
        throw DecodeError(r.offset(), e.what());
    }
    return m;
}

}  // namespace dpafd
