#include "dpafd/engine.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <tuple>
#include <sstream>
#include <variant>

namespace dpafd {

namespace {

std::uint64_t label_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::mt19937_64 seeded_stream(std::initializer_list<std::uint64_t> parts) {
    std::vector<std::uint32_t> words;
    for (auto p : parts) {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

std::pair<std::string, std::string> link_key(const std::string& a, const std::string& b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

}  // namespace

// ---------------------------------------------------------------------------
// Latency

void LatencyModel::set_link(const std::string& a, const std::string& b, Tick ticks) {
    links[link_key(a, b)] = ticks;
}

std::optional<Tick> LatencyModel::link(const std::string& a, const std::string& b) const {
    auto it = links.find(link_key(a, b));
    if (it == links.end()) {
        return std::nullopt;
    }
    return it->second;
}

Tick LatencyModel::max_one_hop() const {
    Tick worst = base + jitter;
    for (const auto& [_, t] : links) {
        worst = std::max(worst, t);
    }
    return worst;
}

Tick LinkStreams::jitter(const std::string& src, const std::string& dst, Tick bound) {
    auto key = std::pair{src, dst};
    auto it = streams_.find(key);
    if (it == streams_.end()) {
        it = streams_.emplace(key, seeded_stream({seed_, cycle_, label_hash(src), label_hash(dst)})).first;
    }
    if (bound == 0) {
        return 0;
    }
    std::uniform_int_distribution<Tick> dist(0, bound);
    return dist(it->second);
}

std::optional<Tick> deliver(const LatencyModel& latency, const Message& m, NodeCondition dst_condition,
                            LinkStreams& streams) {
    if (dst_condition == NodeCondition::Crashed) {
        return std::nullopt;
    }
    if (auto fixed = latency.link(m.src, m.dst)) {
        return m.send_time + *fixed;
    }
    return m.send_time + latency.base + streams.jitter(m.src, m.dst, latency.jitter);
}

Tick bcast_offset(const Scenario& s, const std::string& label, std::uint32_t cycle) {
    if (auto it = s.bcast_offsets.find(label); it != s.bcast_offsets.end()) {
        return it->second;
    }
    auto rng = seeded_stream({s.seed, cycle, label_hash(label), 0xB0FF5E7ULL});
    std::uniform_int_distribution<Tick> dist(0, s.timing.t_bcast_stagger);
    return dist(rng);
}

// ---------------------------------------------------------------------------
// Fault script and network state

const char* to_string(FaultAction a) noexcept {
    switch (a) {
    case FaultAction::Crash: return "crash";
    case FaultAction::SoftwareFault: return "software";
    case FaultAction::Repair: return "repair";
    case FaultAction::Join: return "join";
    }
    return "?";
}

std::vector<FaultEntry> FaultScript::at(std::uint32_t cycle) const {
    std::vector<FaultEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                 [&](const FaultEntry& e) { return e.at_cycle == cycle; });
    return out;
}

std::vector<std::string> NetworkState::faulty_labels() const {
    std::vector<std::string> out;
    for (std::size_t o = 0; o < conditions.size(); ++o) {
        if (conditions[o] != NodeCondition::Healthy) {
            out.push_back(topology.node(o).label);
        }
    }
    return out;
}

std::size_t NetworkState::alive() const {
    return static_cast<std::size_t>(
        std::count_if(conditions.begin(), conditions.end(),
                      [](NodeCondition c) { return c != NodeCondition::Crashed; }));
}

NetworkState initial_state(const Scenario& s) {
    return NetworkState{s.topology, std::vector<NodeCondition>(s.topology.size(), NodeCondition::Healthy)};
}

NetworkState apply_script(const NetworkState& state, const FaultScript& script, std::uint32_t cycle) {
    NetworkState next = state;
    std::set<std::string> touched;
    for (const auto& e : script.at(cycle)) {
        const std::string where = "cycle " + std::to_string(cycle) + " " + to_string(e.action) + " " + e.node;
        if (!touched.insert(e.node).second) {
            throw ScenarioError(where + ": more than one action for the node in this cycle");
        }
        if (e.action == FaultAction::Join) {
            if (next.topology.contains(e.node)) {
                throw ScenarioError(where + ": node is already present");
            }
            try {
                next.topology = next.topology.with_node(e.node, e.neighbors);
            } catch (const TopologyError& err) {
                throw ScenarioError(where + ": " + err.what());
            }
            next.conditions.push_back(NodeCondition::Healthy);
            continue;
        }
        auto o = next.topology.find(e.node);
        if (!o) {
            throw ScenarioError(where + ": unknown node");
        }
        switch (e.action) {
        case FaultAction::Crash:
            next.conditions[*o] = NodeCondition::Crashed;
            break;
        case FaultAction::SoftwareFault:
            next.conditions[*o] = NodeCondition::SoftwareFault;
            break;
        case FaultAction::Repair:
            if (next.conditions[*o] == NodeCondition::Healthy) {
                throw ScenarioError(where + ": node is not faulty");
            }
            next.conditions[*o] = NodeCondition::Healthy;
            break;
        case FaultAction::Join:
            break;
        }
    }
    return next;
}

void Scenario::validate() const {
    if (topology.empty()) {
        throw ScenarioError("scenario has an empty topology");
    }
    if (cycles == 0) {
        throw ScenarioError("cycles must be at least 1");
    }
    try {
        timing.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("timing: ") + e.what());
    }
    if (latency.base < 1) {
        throw ScenarioError("latency base must be at least 1 tick");
    }
    if (latency.base + latency.jitter >= std::min(timing.t_probe, timing.t_bcast_wait)) {
        throw ScenarioError("latency base + jitter must be below min(t_probe, t_bcast_wait)");
    }
    for (const auto& [_, t] : latency.links) {
        if (t < 1) {
            throw ScenarioError("link latency must be at least 1 tick");
        }
    }
    const Tick round_trip = 2 * latency.max_one_hop();
    if (round_trip >= timing.t_probe || round_trip >= timing.t_ack_window) {
        throw ScenarioError("a round trip (" + std::to_string(round_trip) +
                            " ticks) must fit inside t_probe and t_ack_window");
    }

    std::uint32_t last = cycles;
    for (const auto& e : script.entries) {
        if (e.at_cycle == 0) {
            throw ScenarioError("fault script cycles are 1-based");
        }
        last = std::max(last, e.at_cycle);
    }
    std::set<std::string> known;
    for (const auto& n : topology.nodes()) {
        known.insert(n.label);
    }
    NetworkState state = initial_state(*this);
    for (std::uint32_t c = 1; c <= last; ++c) {
        state = apply_script(state, script, c);
        for (const auto& n : state.topology.nodes()) {
            known.insert(n.label);
        }
    }
    for (const auto& [label, offset] : bcast_offsets) {
        if (!known.contains(label)) {
            throw ScenarioError("offset for unknown node '" + label + "'");
        }
        if (offset > timing.t_bcast_stagger) {
            throw ScenarioError("offset for '" + label + "' exceeds t_bcast_stagger");
        }
    }
    for (const auto& [key, _] : latency.links) {
        if (!known.contains(key.first) || !known.contains(key.second)) {
            throw ScenarioError("link latency for unknown node pair " + key.first + " " + key.second);
        }
    }
    if (gateway && !known.contains(*gateway)) {
        throw ScenarioError("gateway '" + *gateway + "' is not a node of the network");
    }
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct TimerFire {
    TimerRequest timer;
    std::uint64_t generation = 0;
};

struct QueuedEvent {
    Tick time = 0;
    std::size_t actor = 0;
    std::uint64_t seq = 0;
    std::variant<Message, TimerFire> payload;
};

struct Later {
    bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
        if (a.time != b.time) {
            return a.time > b.time;
        }
        if (a.actor != b.actor) {
            return a.actor > b.actor;
        }
        return a.seq > b.seq;
    }
};

class CycleRunner {
public:
    CycleRunner(const Scenario& s, std::uint32_t cycle, const NetworkState& state, Tick start)
        : s_(s), cycle_(cycle), state_(state), start_(start), streams_(s.seed, cycle) {
        const std::size_t n = state.topology.size();
        envs_.resize(n);
        ctx_.resize(n);
        seq_.assign(n, 0);
        for (std::size_t o = 0; o < n; ++o) {
            auto& env = envs_[o];
            env.topology = &state_.topology;
            env.self = o;
            env.timing = s.timing;
            env.cycle_start = start;
            env.bcast_offset = bcast_offset(s, state.topology.node(o).label, cycle);
        }
    }

    CycleResult run() {
        record(start_, TraceKind::CycleStart, "", "", "cycle=" + std::to_string(cycle_));
        for (std::size_t o = 0; o < ctx_.size(); ++o) {
            if (crashed(o)) {
                ctx_[o].condition = NodeCondition::Crashed;
                ctx_[o].phase = NodePhase::Done;
                continue;
            }
            Step step = on_cycle_start(envs_[o], state_.conditions[o]);
            ctx_[o] = std::move(step.ctx);
            apply(o, std::move(step.effects), start_);
        }

        Tick now = start_;
        while (!queue_.empty()) {
            if (++events_ > s_.event_budget) {
                throw LivelockError("cycle " + std::to_string(cycle_) + " exceeded the event budget of " +
                                        std::to_string(s_.event_budget),
                                    pending());
            }
            QueuedEvent ev = queue_.top();
            queue_.pop();
            now = ev.time;
            const std::size_t o = ev.actor;
            if (auto* m = std::get_if<Message>(&ev.payload)) {
                record(now, TraceKind::Deliver, m->src, m->dst, "", *m);
                Step step = on_message(envs_[o], std::move(ctx_[o]), *m, now);
                ctx_[o] = std::move(step.ctx);
                apply(o, std::move(step.effects), now);
            } else {
                const auto& fire = std::get<TimerFire>(ev.payload);
                auto key = timer_key(o, fire.timer.kind, fire.timer.subject);
                auto it = active_.find(key);
                if (it == active_.end() || it->second != fire.generation) {
                    continue;
                }
                active_.erase(it);
                record(now, TraceKind::Timer, label(o), "", to_string(fire.timer.kind));
                Step step = on_timer(envs_[o], std::move(ctx_[o]), fire.timer, now);
                ctx_[o] = std::move(step.ctx);
                apply(o, std::move(step.effects), now);
            }
        }
        record(now, TraceKind::CycleEnd, "", "", "cycle=" + std::to_string(cycle_));
        return finish(now);
    }

private:
    using TimerKey = std::tuple<std::size_t, TimerKind, std::size_t>;

    static TimerKey timer_key(std::size_t o, TimerKind k, std::size_t subject) { return {o, k, subject}; }

    bool crashed(std::size_t o) const { return state_.conditions[o] == NodeCondition::Crashed; }
    const std::string& label(std::size_t o) const { return state_.topology.node(o).label; }

    void record(Tick t, TraceKind kind, std::string src, std::string dst, std::string detail,
                std::optional<Message> m = std::nullopt, std::optional<Annotation> note = std::nullopt) {
        trace_.append(TraceEvent{t, cycle_, kind, std::move(src), std::move(dst), std::move(m), std::move(note),
                                 std::move(detail)});
    }

    void schedule(Tick t, std::size_t actor, std::variant<Message, TimerFire> payload) {
        queue_.push(QueuedEvent{t, actor, seq_[actor]++, std::move(payload)});
    }

    void apply(std::size_t o, Effects fx, Tick now) {
        for (auto& n : fx.notes) {
            std::string subject = n.subject;
            record(now, TraceKind::Note, label(o), std::move(subject), "", std::nullopt, std::move(n));
        }
        for (const auto& c : fx.cancels) {
            active_.erase(timer_key(o, c.kind, c.subject));
        }
        for (const auto& t : fx.timers) {
            if (t.deadline < now) {
                throw std::logic_error("timer armed in the past");
            }
            const std::uint64_t gen = ++generation_;
            active_[timer_key(o, t.kind, t.subject)] = gen;
            schedule(t.deadline, o, TimerFire{t, gen});
        }
        for (auto& m : fx.messages) {
            if (m.send_time != now) {
                throw std::logic_error("message stamped with a foreign send time");
            }
            const std::size_t dst = state_.topology.ordinal_of(m.dst);
            record(now, TraceKind::Send, m.src, m.dst, "", m);
            auto arrival = deliver(s_.latency, m, state_.conditions[dst], streams_);
            if (!arrival) {
                record(now, TraceKind::Drop, m.src, m.dst, "destination crashed", m);
                continue;
            }
            schedule(*arrival, dst, std::move(m));
        }
    }

    std::vector<std::string> pending() const {
        std::vector<std::string> out;
        auto copy = queue_;
        while (!copy.empty() && out.size() < 20) {
            const auto& ev = copy.top();
            std::ostringstream line;
            line << "t=" << ev.time << " node=" << label(ev.actor) << ' ';
            if (const auto* m = std::get_if<Message>(&ev.payload)) {
                line << describe(*m);
            } else {
                line << "timer " << to_string(std::get<TimerFire>(ev.payload).timer.kind);
            }
            out.push_back(line.str());
            copy.pop();
        }
        return out;
    }

    CycleResult finish(Tick end) {
        CycleReport r;
        r.cycle_index = cycle_;
        r.start = start_;
        r.end = end;
        r.alive = state_.alive();
        r.events = events_;
        r.terminated = true;
        for (const auto& e : trace_.events()) {
            if (e.kind == TraceKind::Send && e.message && e.message->kind() == MessageKind::ResultTransfer) {
                if (std::get<ResultTransfer>(e.message->body).direction == TransferDirection::Forward) {
                    ++r.transitions;
                } else {
                    ++r.backtracks;
                }
            }
            if (e.kind != TraceKind::Note || !e.note) {
                continue;
            }
            switch (e.note->kind) {
            case AnnotationKind::Volunteered: r.volunteers.push_back(e.src); break;
            case AnnotationKind::Elected: r.first_leader = e.src; break;
            case AnnotationKind::LeaderStart: r.leaders_in_order.push_back(e.src); break;
            case AnnotationKind::Finalize:
                r.finalizer = e.src;
                r.final_frame = e.note->frame;
                break;
            case AnnotationKind::Violation: ++r.violations; break;
            default: break;
            }
        }
        if (r.final_frame) {
            for (const auto& f : extract_faulty(*r.final_frame)) {
                r.faulty_found.push_back(f.address);
            }
        }
        r.message_stats = count_messages(trace_).front();
        return CycleResult{std::move(trace_), std::move(r), std::move(ctx_)};
    }

    const Scenario& s_;
    std::uint32_t cycle_;
    NetworkState state_;
    Tick start_;
    LinkStreams streams_;
    std::vector<NodeEnv> envs_;
    std::vector<NodeContext> ctx_;
    std::vector<std::uint64_t> seq_;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, Later> queue_;
    std::map<TimerKey, std::uint64_t> active_;
    std::uint64_t generation_ = 0;
    std::uint64_t events_ = 0;
    Trace trace_;
};

}  // namespace

CycleResult run_cycle(const Scenario& s, std::uint32_t cycle_index, const NetworkState& state, Tick start) {
    return CycleRunner(s, cycle_index, state, start).run();
}

PeriodicResult run_periodic(const Scenario& s) {
    s.validate();
    PeriodicResult out;
    NetworkState state = initial_state(s);
    Tick start = 0;
    for (std::uint32_t c = 1; c <= s.cycles; ++c) {
        NetworkState next = apply_script(state, s.script, c);
        // A cycle that overruns its slot pushes the next one to the following boundary.
        Tick boundary = static_cast<Tick>(c - 1) * s.timing.cycle_period;
        if (c > 1 && boundary <= out.reports.back().end) {
            boundary = (out.reports.back().end / s.timing.cycle_period + 1) * s.timing.cycle_period;
        }
        start = boundary;

        Trace faults;
        for (const auto& e : s.script.at(c)) {
            std::string detail = to_string(e.action);
            for (const auto& nb : e.neighbors) {
                detail += ' ' + nb;
            }
            faults.append(TraceEvent{start, c, TraceKind::Fault, e.node, "", std::nullopt, std::nullopt, detail});
        }
        CycleResult result = run_cycle(s, c, next, start);
        Trace merged;
        // Cycle marker first so per-cycle segments stay self-contained.
        merged.append(result.trace.events().front());
        merged.append(faults);
        for (std::size_t i = 1; i < result.trace.events().size(); ++i) {
            merged.append(result.trace.events()[i]);
        }
        out.trace.append(merged);
        out.reports.push_back(std::move(result.report));
        out.states.push_back(next);
        state = std::move(next);
    }
    return out;
}

std::string render(const CycleReport& r) {
    std::ostringstream out;
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) {
            s += (s.empty() ? "" : " ") + x;
        }
        return s.empty() ? std::string("-") : s;
    };
    out << "Cycle " << r.cycle_index << " faulty=" << r.faulty_found.size() << '\n';
    out << "  first leader: " << r.first_leader.value_or("-") << '\n';
    out << "  leaders: " << join(r.leaders_in_order) << '\n';
    out << "  faulty: " << join(r.faulty_found) << '\n';
    out << "  messages: " << render(r.message_stats) << '\n';
    out << "  transitions=" << r.transitions << " backtracks=" << r.backtracks << " alive=" << r.alive
        << " violations=" << r.violations << " terminated=" << (r.terminated ? "yes" : "no") << '\n';
    return out.str();
}

}  // namespace dpafd
