#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpafd/frames.hpp"
#include "dpafd/protocol.hpp"
#include "dpafd/stats.hpp"
#include "dpafd/topology.hpp"
#include "dpafd/trace.hpp"

namespace dpafd {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a cycle does not quiesce within the event budget.
class LivelockError : public std::runtime_error {
public:
    LivelockError(const std::string& what, std::vector<std::string> pending)
        : std::runtime_error(what), pending_(std::move(pending)) {}
    const std::vector<std::string>& pending() const noexcept { return pending_; }

private:
    std::vector<std::string> pending_;
};

/// One-hop delay: base + jitter in [0, jitter], or a fixed per-link value.
struct LatencyModel {
    Tick base = 1;
    Tick jitter = 3;
    std::map<std::pair<std::string, std::string>, Tick> links;  ///< keyed by sorted label pair

    void set_link(const std::string& a, const std::string& b, Tick ticks);
    std::optional<Tick> link(const std::string& a, const std::string& b) const;
    Tick max_one_hop() const;
};

enum class FaultAction : std::uint8_t { Crash, SoftwareFault, Repair, Join };

const char* to_string(FaultAction a) noexcept;

struct FaultEntry {
    std::string node;
    FaultAction action = FaultAction::Crash;
    std::uint32_t at_cycle = 1;  ///< takes effect at the start of this cycle (1-based)
    std::vector<std::string> neighbors;  ///< Join only

    friend bool operator==(const FaultEntry&, const FaultEntry&) = default;
};

struct FaultScript {
    std::vector<FaultEntry> entries;

    std::vector<FaultEntry> at(std::uint32_t cycle) const;
};

struct Scenario {
    std::string network_id = "net";
    Topology topology;
    FaultScript script;
    TimingParams timing;
    LatencyModel latency;
    std::uint64_t seed = 1;
    std::uint32_t cycles = 1;
    std::map<std::string, Tick> bcast_offsets;  ///< fixed stagger per node; others drawn from the seed
    std::optional<std::string> gateway;         ///< inter-network gateway override
    std::uint64_t event_budget = 1'000'000;

    /// Throws ScenarioError describing the first broken constraint.
    void validate() const;
};

/// Topology and per-node condition in force during one cycle.
struct NetworkState {
    Topology topology;
    std::vector<NodeCondition> conditions;  ///< by ordinal

    std::vector<std::string> faulty_labels() const;
    std::size_t alive() const;
};

NetworkState initial_state(const Scenario& s);

/// Applies the cycle's script actions. Throws ScenarioError on a repair of a
/// healthy node, a join of an existing node, or an unknown node.
NetworkState apply_script(const NetworkState& state, const FaultScript& script, std::uint32_t cycle);

/// Draws per-link jitter. Each (src, dst) pair owns an independent stream
/// seeded from (seed, cycle, src, dst), so arrivals replay exactly.
class LinkStreams {
public:
    LinkStreams(std::uint64_t seed, std::uint32_t cycle) : seed_(seed), cycle_(cycle) {}
    Tick jitter(const std::string& src, const std::string& dst, Tick bound);

private:
    std::uint64_t seed_;
    std::uint32_t cycle_;
    std::map<std::pair<std::string, std::string>, std::mt19937_64> streams_;
};

/// Arrival time of `m`, or nothing when the destination is crashed.
std::optional<Tick> deliver(const LatencyModel& latency, const Message& m, NodeCondition dst_condition,
                            LinkStreams& streams);

/// The wait-timer stagger a node uses in `cycle`.
Tick bcast_offset(const Scenario& s, const std::string& label, std::uint32_t cycle);

struct CycleReport {
    std::uint32_t cycle_index = 0;
    Tick start = 0;
    Tick end = 0;
    std::optional<std::string> first_leader;
    std::vector<std::string> volunteers;
    std::vector<std::string> leaders_in_order;
    std::vector<std::string> faulty_found;
    std::optional<ResultFrame> final_frame;
    std::optional<std::string> finalizer;
    MessageStats message_stats;
    std::size_t transitions = 0;  ///< forward result transfers
    std::size_t backtracks = 0;
    std::size_t alive = 0;
    std::size_t violations = 0;
    std::uint64_t events = 0;
    bool terminated = false;
};

struct CycleResult {
    Trace trace;
    CycleReport report;
    std::vector<NodeContext> final_states;  ///< by ordinal
};

/// Runs one diagnosis cycle from `start` until no event or timer is pending.
CycleResult run_cycle(const Scenario& s, std::uint32_t cycle_index, const NetworkState& state, Tick start);

struct PeriodicResult {
    std::vector<CycleReport> reports;
    std::vector<NetworkState> states;  ///< state in force during each cycle
    Trace trace;
};

PeriodicResult run_periodic(const Scenario& s);

/// Human-readable multi-line report for one cycle.
std::string render(const CycleReport& r);

// ---------------------------------------------------------------------------
// Scenario files

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Inter-network exchange

struct NetworkOutcome {
    std::string network_id;
    std::string gateway;
    std::vector<LocalFrame> faulty;
};

struct MergedView {
    std::string network_id;
    std::string gateway;
    std::vector<LocalFrame> own;
    std::vector<std::pair<std::string, std::vector<LocalFrame>>> received;  ///< (origin network, faulty list)
};

struct ExchangeResult {
    std::vector<MergedView> views;
    std::vector<Message> messages;  ///< one InterNetworkReport per ordered gateway pair
};

ExchangeResult inter_network_exchange(const std::vector<NetworkOutcome>& outcomes);

/// Configured gateway, else the lowest-ordinal node not reported faulty.
std::string choose_gateway(const Scenario& s, const NetworkState& state, const CycleReport& last);

}  // namespace dpafd
