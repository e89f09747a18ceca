#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpafd/engine.hpp"
#include "dpafd/stats.hpp"

namespace dpafd {

/// Single-leader message count 2*deg(l) - f_n + n.
/// Requires 0 <= f_n <= deg_l <= n - 1; throws AnalysisError otherwise.
std::int64_t eval_single_leader_formula(std::int64_t deg_l, std::int64_t f_n, std::int64_t n);

/// Whole-cycle count sum_i (2*deg_i - f_i) + n.
///
/// deg_i is the number of probes leader i actually sent (its unexplored
/// neighbours), not its graph degree: counting the full degree would test
/// already-explored nodes a second time. f_i is how many of those probes
/// came back faulty.
std::int64_t eval_cycle_formula(const std::vector<std::pair<std::int64_t, std::int64_t>>& per_leader,
                                std::int64_t n);

/// Per-leader probing figures recovered from a cycle's trace.
struct LeaderTally {
    std::string leader;
    std::int64_t probes = 0;       ///< deg(l_i) under the probes-sent convention
    std::int64_t faulty = 0;       ///< f_n(l_i): probes classified faulty
    std::int64_t timeouts = 0;
    std::int64_t mismatches = 0;
};

/// Leaders in the order they took the token, with the probes each sent.
std::vector<LeaderTally> leader_tallies(const Trace& cycle_segment);

/// Formula inputs for eval_cycle_formula.
std::vector<std::pair<std::int64_t, std::int64_t>> formula_inputs(const std::vector<LeaderTally>& tallies);

struct Verdict {
    bool sound = false;        ///< no oracle-reachable fault-free node reported faulty
    bool complete = false;     ///< every injected fault (and every unreachable node) reported
    bool tested_once = false;  ///< no node received two probe requests
    bool coverage = false;     ///< reachable fault-free nodes led exactly once; faulty nodes never led
    bool agreement = false;    ///< every live node holds the same faulty list

    bool all() const noexcept { return sound && complete && tested_once && coverage && agreement; }
    friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Checks one completed cycle of `trace` against the reachability oracle.
Verdict check_diagnosis(const Trace& trace, const Scenario& scenario, std::uint32_t cycle);

/// Same check with the cycle's network state already known.
Verdict check_diagnosis(const Trace& cycle_segment, const NetworkState& state);

/// `sound: true` style, one flag per line.
std::string render(const Verdict& v);

struct SweepRow {
    std::size_t faults = 0;
    double mean_total_messages = 0.0;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepConfig {
    TimingParams timing;
    LatencyModel latency;
};

/// For each k, runs `trials` single cycles with k distinct crashed nodes drawn
/// from the seeded stream and averages MessageStats::total().
std::vector<SweepRow> fault_sweep(const Topology& topology, const std::vector<std::size_t>& fault_counts,
                                  std::size_t trials, std::uint64_t seed, const SweepConfig& config = {});

/// `faults,mean_total_messages` header plus one row per count.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace dpafd
