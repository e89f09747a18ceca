#include "dpafd/analysis.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace dpafd {

std::int64_t eval_single_leader_formula(std::int64_t deg_l, std::int64_t f_n, std::int64_t n) {
    if (f_n < 0 || f_n > deg_l || deg_l > n - 1) {
        throw AnalysisError("single-leader formula needs 0 <= f_n <= deg(l) <= n - 1");
    }
    return 2 * deg_l - f_n + n;
}

std::int64_t eval_cycle_formula(const std::vector<std::pair<std::int64_t, std::int64_t>>& per_leader,
                                std::int64_t n) {
    std::int64_t sum = 0;
    for (const auto& [deg, f] : per_leader) {
        if (f < 0 || f > deg) {
            throw AnalysisError("cycle formula needs 0 <= f_n <= deg(l) for every leader");
        }
        sum += 2 * deg - f;
    }
    return sum + n;
}

std::vector<LeaderTally> leader_tallies(const Trace& cycle_segment) {
    std::vector<LeaderTally> out;
    std::map<std::string, std::size_t> index;
    auto tally = [&](const std::string& leader) -> LeaderTally& {
        auto [it, fresh] = index.try_emplace(leader, out.size());
        if (fresh) {
            out.push_back(LeaderTally{leader});
        }
        return out[it->second];
    };
    for (const auto& e : cycle_segment.events()) {
        if (e.kind == TraceKind::Note && e.note) {
            if (e.note->kind == AnnotationKind::LeaderStart) {
                tally(e.src);
            } else if (e.note->kind == AnnotationKind::ProbeResult && e.note->status == StatusBit::Faulty) {
                auto& t = tally(e.src);
                ++t.faulty;
                if (e.note->detail == "timeout") {
                    ++t.timeouts;
                } else {
                    ++t.mismatches;
                }
            }
        } else if (e.kind == TraceKind::Send && e.message && e.message->kind() == MessageKind::ProbeRequest) {
            ++tally(e.src).probes;
        }
    }
    return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> formula_inputs(const std::vector<LeaderTally>& tallies) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (const auto& t : tallies) {
        out.emplace_back(t.probes, t.faulty);
    }
    return out;
}

Verdict check_diagnosis(const Trace& trace, const Scenario& scenario, std::uint32_t cycle) {
    NetworkState state = initial_state(scenario);
    for (std::uint32_t c = 1; c <= cycle; ++c) {
        state = apply_script(state, scenario.script, c);
    }
    return check_diagnosis(trace.cycle_segment(cycle), state);
}

Verdict check_diagnosis(const Trace& segment, const NetworkState& state) {
    const Topology& topo = state.topology;
    const std::size_t n = topo.size();

    std::optional<std::size_t> first_leader;
    std::optional<std::size_t> finalizer;
    std::optional<ResultFrame> final_frame;
    std::vector<int> probes_received(n, 0);
    std::vector<int> times_led(n, 0);
    bool faulty_leader_entry = false;
    std::map<std::size_t, std::vector<std::vector<LocalFrame>>> final_lists;

    auto scan_frame = [&](const ResultFrame& rf) {
        for (const auto& e : rf.entries()) {
            if (e.status == StatusBit::Faulty && e.leader) {
                faulty_leader_entry = true;
            }
        }
    };

    for (const auto& e : segment.events()) {
        if (e.kind == TraceKind::Note && e.note) {
            switch (e.note->kind) {
            case AnnotationKind::Elected: first_leader = topo.ordinal_of(e.src); break;
            case AnnotationKind::LeaderStart: ++times_led[topo.ordinal_of(e.src)]; break;
            case AnnotationKind::Finalize:
                finalizer = topo.ordinal_of(e.src);
                final_frame = e.note->frame;
                break;
            default: break;
            }
            continue;
        }
        if (!e.message) {
            continue;
        }
        const auto kind = e.message->kind();
        if (e.kind == TraceKind::Send && kind == MessageKind::ProbeRequest) {
            ++probes_received[topo.ordinal_of(e.dst)];
        } else if (e.kind == TraceKind::Send && kind == MessageKind::ResultTransfer) {
            scan_frame(std::get<ResultTransfer>(e.message->body).frame);
        } else if (e.kind == TraceKind::Deliver && kind == MessageKind::FinalBroadcast) {
            final_lists[topo.ordinal_of(e.dst)].push_back(std::get<FinalBroadcast>(e.message->body).faulty);
        }
    }

    Verdict v;
    v.tested_once = std::all_of(probes_received.begin(), probes_received.end(), [](int c) { return c <= 1; });
    if (!first_leader || !final_frame || !finalizer) {
        return v;
    }
    scan_frame(*final_frame);

    std::vector<bool> faulty(n, false);
    for (std::size_t o = 0; o < n; ++o) {
        faulty[o] = state.conditions[o] != NodeCondition::Healthy;
    }
    std::vector<bool> reachable(n, false);
    for (std::size_t o : fault_free_reachable(topo, faulty, *first_leader)) {
        reachable[o] = true;
    }

    std::vector<bool> reported(n, false);
    for (const auto& f : extract_faulty(*final_frame)) {
        reported[topo.ordinal_of(f.address)] = true;
    }

    v.sound = true;
    v.complete = true;
    v.coverage = !faulty_leader_entry;
    for (std::size_t o = 0; o < n; ++o) {
        if (reachable[o] && reported[o]) {
            v.sound = false;
        }
        if (!reachable[o] && !reported[o]) {
            v.complete = false;
        }
        const auto* entry = final_frame->find(topo.node(o).label);
        if (reachable[o]) {
            if (times_led[o] != 1 || !entry || !entry->leader) {
                v.coverage = false;
            }
        } else if (times_led[o] != 0) {
            v.coverage = false;
        }
    }

    const auto expected = extract_faulty(*final_frame);
    v.agreement = true;
    for (std::size_t o = 0; o < n; ++o) {
        if (o == *finalizer || state.conditions[o] == NodeCondition::Crashed) {
            continue;
        }
        auto it = final_lists.find(o);
        if (it == final_lists.end() || it->second.size() != 1 || it->second.front() != expected) {
            v.agreement = false;
        }
    }
    return v;
}

std::string render(const Verdict& v) {
    std::ostringstream out;
    auto flag = [&](const char* name, bool value) { out << name << ": " << (value ? "true" : "false") << '\n'; };
    flag("sound", v.sound);
    flag("complete", v.complete);
    flag("tested_once", v.tested_once);
    flag("coverage", v.coverage);
    flag("agreement", v.agreement);
    return out.str();
}

std::vector<SweepRow> fault_sweep(const Topology& topology, const std::vector<std::size_t>& fault_counts,
                                  std::size_t trials, std::uint64_t seed, const SweepConfig& config) {
    const std::size_t n = topology.size();
    for (std::size_t k : fault_counts) {
        if (n == 0 || k > n - 1) {
            throw AnalysisError("fault count " + std::to_string(k) + " exceeds the diagnosability bound n-1 = " +
                                std::to_string(n == 0 ? 0 : n - 1));
        }
    }
    if (trials == 0) {
        throw AnalysisError("trials must be positive");
    }
    std::vector<SweepRow> rows;
    for (std::size_t k : fault_counts) {
        std::uint64_t sum = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(t)};
            std::mt19937_64 rng(seq);
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);

            Scenario s;
            s.network_id = "sweep";
            s.topology = topology;
            s.timing = config.timing;
            s.latency = config.latency;
            s.seed = rng();
            NetworkState state{topology, std::vector<NodeCondition>(n, NodeCondition::Healthy)};
            for (std::size_t i = 0; i < k; ++i) {
                state.conditions[order[i]] = NodeCondition::Crashed;
            }
            sum += run_cycle(s, 1, state, 0).report.message_stats.total();
        }
        rows.push_back(SweepRow{k, static_cast<double>(sum) / static_cast<double>(trials)});
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "faults,mean_total_messages\n";
    out << std::fixed << std::setprecision(3);
    for (const auto& r : rows) {
        out << r.faults << ',' << r.mean_total_messages << '\n';
    }
    return out.str();
}

}  // namespace dpafd
