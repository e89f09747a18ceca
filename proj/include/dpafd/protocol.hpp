#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpafd/frames.hpp"
#include "dpafd/topology.hpp"

namespace dpafd {

class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Protocol timers, in ticks. All must be positive.
struct TimingParams {
    Tick t_bcast_wait = 10;     ///< wait for a volunteer broadcast before volunteering
    Tick t_bcast_stagger = 10;  ///< spread of the wait expiry across nodes
    Tick t_ack_window = 10;     ///< volunteer's ack window; also the announce settle window
    Tick t_count_window = 100;  ///< flooding time for ack tallies before the election decision
    Tick t_probe = 10;          ///< leader's per-probe reply deadline
    Tick cycle_period = 1000;

    /// Throws std::invalid_argument when a value is zero or t_probe >= cycle_period.
    void validate() const;

    /// Offset from cycle start at which every volunteer decides.
    Tick election_deadline() const noexcept {
        return t_bcast_wait + t_bcast_stagger + t_ack_window + t_count_window;
    }
};

enum class NodeCondition : std::uint8_t { Healthy, SoftwareFault, Crashed };

const char* to_string(NodeCondition c) noexcept;

// ---------------------------------------------------------------------------
// Self-test and the fault model

/// Known-good self-test vector B.
const SelfTestResult& reference_result();

struct SelfTestOutcome {
    SelfTestResult result;
    StatusBit status = StatusBit::FaultFree;
};

/// Runs the four test batteries. A software fault corrupts the memory
/// battery; a crashed node produces nothing.
std::optional<SelfTestOutcome> self_test(NodeCondition condition);

/// f(r, B): a missing result or any mismatch is Faulty.
StatusBit classify(const SelfTestResult& expected, const std::optional<SelfTestResult>& observed);

// ---------------------------------------------------------------------------
// Election

struct ElectionCandidate {
    std::size_t ordinal = 0;
    std::uint64_t ack_count = 0;
    Tick broadcast_time = 0;

    friend bool operator==(const ElectionCandidate&, const ElectionCandidate&) = default;
};

/// Most acks wins, then the earliest broadcast, then the smallest ordinal.
bool outranks(const ElectionCandidate& a, const ElectionCandidate& b) noexcept;

/// Ordinal of the winning candidate. Throws ProtocolError if empty.
std::size_t elect_leader(std::span<const ElectionCandidate> candidates);

// ---------------------------------------------------------------------------
// Node state

enum class NodePhase : std::uint8_t {
    Idle,
    AwaitBroadcast,
    Acknowledged,
    Volunteering,
    CountExchange,
    Announced,
    Standby,
    LeaderProbing,
    AwaitingNextLeader,
    Done,
};

const char* to_string(NodePhase p) noexcept;

enum class TimerKind : std::uint8_t {
    BroadcastWait,
    AckWindow,
    ElectionDecision,
    AnnounceSettle,
    ProbeDeadline,
};

const char* to_string(TimerKind k) noexcept;

/// `subject` is the probed ordinal for ProbeDeadline and the owner otherwise.
struct TimerRequest {
    TimerKind kind = TimerKind::BroadcastWait;
    Tick deadline = 0;
    std::size_t subject = 0;

    friend bool operator==(const TimerRequest&, const TimerRequest&) = default;
};

struct TimerCancel {
    TimerKind kind = TimerKind::BroadcastWait;
    std::size_t subject = 0;

    friend bool operator==(const TimerCancel&, const TimerCancel&) = default;
};

enum class AnnotationKind : std::uint8_t {
    Volunteered,
    ElectionLost,
    Elected,
    LeaderStart,
    ProbeResult,
    Backtracked,
    Finalize,
    Violation,
};

const char* to_string(AnnotationKind k) noexcept;

/// Observation emitted alongside a transition, recorded in the trace.
struct Annotation {
    AnnotationKind kind = AnnotationKind::Violation;
    std::string subject;  ///< node the note is about (probed node, leader, ...)
    std::string detail;
    std::optional<StatusBit> status;   ///< ProbeResult only
    std::optional<ResultFrame> frame;  ///< Finalize only

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Responder {
    std::size_t ordinal = 0;
    Tick response_time = 0;

    friend bool operator==(const Responder&, const Responder&) = default;
};

struct NodeContext {
    NodePhase phase = NodePhase::Idle;
    NodeCondition condition = NodeCondition::Healthy;
    LocalFrame self_frame;
    std::optional<SelfTestResult> self_result;

    // election stage
    std::uint64_t ack_count = 0;
    std::optional<Tick> broadcast_time;
    std::optional<std::size_t> acked_to;
    std::map<std::size_t, ElectionCandidate> rivals;  ///< tallies heard by flooding
    std::set<std::size_t> relayed;                    ///< tally origins already forwarded
    std::map<std::size_t, ElectionCandidate> announcers;
    std::optional<std::size_t> elected;

    // diagnosis stage
    bool led = false;
    bool probed = false;
    std::optional<ResultFrame> result_frame;  ///< present while holding the token
    std::optional<std::size_t> parent_leader;
    std::map<std::size_t, Tick> pending_probes;  ///< probed ordinal -> send time
    std::vector<Responder> responders;           ///< fault-free responders, in reply order
    std::set<std::size_t> tried;

    std::optional<std::vector<std::string>> known_faulty;

    friend bool operator==(const NodeContext&, const NodeContext&) = default;
};

/// Read-only facts a node has about its surroundings for one cycle.
struct NodeEnv {
    const Topology* topology = nullptr;  ///< neighbours and network roster
    std::size_t self = 0;
    TimingParams timing;
    Tick cycle_start = 0;
    Tick bcast_offset = 0;  ///< this node's share of t_bcast_stagger

    const Topology& topo() const { return *topology; }
    const std::string& label() const { return topology->node(self).label; }
};

struct Effects {
    std::vector<Message> messages;
    std::vector<TimerRequest> timers;
    std::vector<TimerCancel> cancels;
    std::vector<Annotation> notes;

    friend bool operator==(const Effects&, const Effects&) = default;
};

struct Step {
    NodeContext ctx;
    Effects effects;

    friend bool operator==(const Step&, const Step&) = default;
};

// ---------------------------------------------------------------------------
// Transition functions. All are pure: equal inputs give equal outputs.

Step on_cycle_start(const NodeEnv& env, NodeCondition condition);
Step on_message(const NodeEnv& env, NodeContext ctx, const Message& m, Tick now);
Step on_timer(const NodeEnv& env, NodeContext ctx, const TimerRequest& timer, Tick now);

/// `broadcaster` empty means the wait timer expired.
Step on_broadcast_or_timeout(const NodeEnv& env, NodeContext ctx,
                             std::optional<std::size_t> broadcaster, Tick now);

/// Takes the result frame and probes every unexplored neighbour.
Step on_become_leader(const NodeEnv& env, NodeContext ctx, ResultFrame rf, Tick now);

/// Records one probe outcome; `ack` empty means the deadline expired.
/// Does not advance the token even when this was the last pending probe.
Step on_probe_result(const NodeEnv& env, NodeContext ctx, std::size_t neighbor,
                     const std::optional<ProbeAck>& ack, Tick now);

/// Fastest untried fault-free responder whose leader bit is still 0.
std::optional<std::size_t> select_next_leader(const NodeEnv& env, const NodeContext& ctx);

Step transfer_leadership(const NodeEnv& env, NodeContext ctx, std::size_t next, Tick now);
Step on_backtrack(const NodeEnv& env, NodeContext ctx, ResultFrame rf, Tick now);
Step finalize_broadcast(const NodeEnv& env, NodeContext ctx, Tick now);

/// Chooses among transfer, backtrack and finalize once probing is over.
Step advance_token(const NodeEnv& env, NodeContext ctx, Tick now);

/// Every fault-free entry already carries the leader bit.
bool all_leaders_done(const ResultFrame& rf);

}  // namespace dpafd
