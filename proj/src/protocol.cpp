#include "dpafd/protocol.hpp"

#include <algorithm>
#include <sstream>

namespace dpafd {

void TimingParams::validate() const {
    const std::pair<const char*, Tick> fields[] = {
        {"t_bcast_wait", t_bcast_wait},     {"t_bcast_stagger", t_bcast_stagger},
        {"t_ack_window", t_ack_window},     {"t_count_window", t_count_window},
        {"t_probe", t_probe},               {"cycle_period", cycle_period},
    };
    for (const auto& [name, value] : fields) {
        if (value == 0) {
            throw std::invalid_argument(std::string(name) + " must be positive");
        }
    }
    if (t_probe >= cycle_period) {
        throw std::invalid_argument("t_probe must be smaller than cycle_period");
    }
}

const char* to_string(NodeCondition c) noexcept {
    switch (c) {
    case NodeCondition::Healthy: return "healthy";
    case NodeCondition::SoftwareFault: return "software-fault";
    case NodeCondition::Crashed: return "crashed";
    }
    return "?";
}

const char* to_string(NodePhase p) noexcept {
    switch (p) {
    case NodePhase::Idle: return "Idle";
    case NodePhase::AwaitBroadcast: return "AwaitBroadcast";
    case NodePhase::Acknowledged: return "Acknowledged";
    case NodePhase::Volunteering: return "Volunteering";
    case NodePhase::CountExchange: return "CountExchange";
    case NodePhase::Announced: return "Announced";
    case NodePhase::Standby: return "Standby";
    case NodePhase::LeaderProbing: return "LeaderProbing";
    case NodePhase::AwaitingNextLeader: return "AwaitingNextLeader";
    case NodePhase::Done: return "Done";
    }
    return "?";
}

const char* to_string(TimerKind k) noexcept {
    switch (k) {
    case TimerKind::BroadcastWait: return "BroadcastWait";
    case TimerKind::AckWindow: return "AckWindow";
    case TimerKind::ElectionDecision: return "ElectionDecision";
    case TimerKind::AnnounceSettle: return "AnnounceSettle";
    case TimerKind::ProbeDeadline: return "ProbeDeadline";
    }
    return "?";
}

const char* to_string(AnnotationKind k) noexcept {
    switch (k) {
    case AnnotationKind::Volunteered: return "Volunteered";
    case AnnotationKind::ElectionLost: return "ElectionLost";
    case AnnotationKind::Elected: return "Elected";
    case AnnotationKind::LeaderStart: return "LeaderStart";
    case AnnotationKind::ProbeResult: return "ProbeResult";
    case AnnotationKind::Backtracked: return "Backtracked";
    case AnnotationKind::Finalize: return "Finalize";
    case AnnotationKind::Violation: return "Violation";
    }
    return "?";
}

bool outranks(const ElectionCandidate& a, const ElectionCandidate& b) noexcept {
    if (a.ack_count != b.ack_count) {
        return a.ack_count > b.ack_count;
    }
    if (a.broadcast_time != b.broadcast_time) {
        return a.broadcast_time < b.broadcast_time;
    }
    return a.ordinal < b.ordinal;
}

std::size_t elect_leader(std::span<const ElectionCandidate> candidates) {
    if (candidates.empty()) {
        throw ProtocolError("elect_leader: no candidates");
    }
    const ElectionCandidate* best = &candidates.front();
    for (const auto& c : candidates) {
        if (outranks(c, *best)) {
            best = &c;
        }
    }
    return best->ordinal;
}

bool all_leaders_done(const ResultFrame& rf) {
    return std::all_of(rf.entries().begin(), rf.entries().end(), [](const LocalFrame& e) {
        return e.status == StatusBit::Faulty || e.leader;
    });
}

namespace {

Message make_message(const NodeEnv& env, std::size_t dst, Tick now, MessageBody body) {
    return Message{env.label(), env.topo().node(dst).label, now, std::move(body)};
}

void note(Effects& fx, AnnotationKind kind, std::string subject, std::string detail) {
    fx.notes.push_back(Annotation{kind, std::move(subject), std::move(detail), std::nullopt, std::nullopt});
}

void violation(Effects& fx, const Message& m, const std::string& why) {
    note(fx, AnnotationKind::Violation, m.src, why + ": " + to_string(m.kind()) + " from " + m.src);
}

void append(Effects& into, Effects from) {
    auto move_all = [](auto& dst, auto& src) {
        dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    };
    move_all(into.messages, from.messages);
    move_all(into.timers, from.timers);
    move_all(into.cancels, from.cancels);
    move_all(into.notes, from.notes);
}

ElectionCandidate own_candidate(const NodeEnv& env, const NodeContext& ctx) {
    return ElectionCandidate{env.self, ctx.ack_count, ctx.broadcast_time.value_or(0)};
}

void cancel_election_timers(const NodeEnv& env, Effects& fx) {
    for (auto kind : {TimerKind::BroadcastWait, TimerKind::AckWindow, TimerKind::ElectionDecision,
                      TimerKind::AnnounceSettle}) {
        fx.cancels.push_back(TimerCancel{kind, env.self});
    }
}

bool before_election_outcome(NodePhase p) {
    switch (p) {
    case NodePhase::AwaitBroadcast:
    case NodePhase::Acknowledged:
    case NodePhase::Volunteering:
    case NodePhase::CountExchange:
        return true;
    default:
        return false;
    }
}

void send_ack(const NodeEnv& env, NodeContext& ctx, Effects& fx, std::size_t to, Tick now) {
    ctx.acked_to = to;
    LocalFrame copy = ctx.self_frame;
    copy.leader = false;
    fx.messages.push_back(make_message(env, to, now, VolunteerAck{copy}));
}

std::size_t ordinal_or_violation(const NodeEnv& env, const Message& m, Effects& fx) {
    auto o = env.topo().find(m.src);
    if (!o) {
        violation(fx, m, "sender outside the network");
        return env.topo().size();
    }
    return *o;
}

Step handle_volunteer_broadcast(const NodeEnv& env, NodeContext ctx, std::size_t from, Tick now) {
    if (ctx.phase == NodePhase::AwaitBroadcast) {
        return on_broadcast_or_timeout(env, std::move(ctx), from, now);
    }
    Step step{std::move(ctx), {}};
    // A node that failed its self-test never volunteers but still answers the
    // first volunteer it hears, reporting status 1.
    if (step.ctx.phase == NodePhase::Standby && step.ctx.condition == NodeCondition::SoftwareFault &&
        !step.ctx.acked_to && !step.ctx.elected) {
        send_ack(env, step.ctx, step.effects, from, now);
    }
    return step;
}

Step handle_count_exchange(const NodeEnv& env, NodeContext ctx, std::size_t from,
                           const CountExchange& tally, Tick now) {
    Step step{std::move(ctx), {}};
    auto origin = env.topo().find(tally.origin);
    if (!origin || *origin == env.self) {
        return step;
    }
    step.ctx.rivals[*origin] = ElectionCandidate{*origin, tally.ack_count, tally.broadcast_time};
    if (step.ctx.phase == NodePhase::Done || !step.ctx.relayed.insert(*origin).second) {
        return step;
    }
    for (std::size_t nb : env.topo().neighbors(env.self)) {
        if (nb != from) {
            step.effects.messages.push_back(make_message(env, nb, now, tally));
        }
    }
    return step;
}

Step handle_announce(const NodeEnv& env, NodeContext ctx, std::size_t from,
                     const LeaderAnnounce& announce) {
    Step step{std::move(ctx), {}};
    auto& c = step.ctx;
    c.announcers[from] = ElectionCandidate{from, announce.ack_count, announce.broadcast_time};
    if (c.phase == NodePhase::Announced) {
        return step;
    }
    std::vector<ElectionCandidate> all;
    for (const auto& [_, cand] : c.announcers) {
        all.push_back(cand);
    }
    c.elected = elect_leader(all);
    if (before_election_outcome(c.phase)) {
        cancel_election_timers(env, step.effects);
        c.phase = NodePhase::Standby;
    }
    return step;
}

Step handle_probe_request(const NodeEnv& env, NodeContext ctx, std::size_t from, const Message& m,
                          Tick now) {
    Step step{std::move(ctx), {}};
    if (step.ctx.probed) {
        violation(step.effects, m, "probed more than once");
    }
    step.ctx.probed = true;
    LocalFrame reply = step.ctx.self_frame;
    reply.leader = false;
    step.effects.messages.push_back(
        make_message(env, from, now, ProbeAck{reply, step.ctx.self_result.value_or(SelfTestResult{})}));
    return step;
}

Step finish_probe(const NodeEnv& env, Step step, Tick now) {
    if (step.ctx.phase == NodePhase::LeaderProbing && step.ctx.pending_probes.empty()) {
        Step next = advance_token(env, std::move(step.ctx), now);
        append(step.effects, std::move(next.effects));
        step.ctx = std::move(next.ctx);
    }
    return step;
}

Step handle_transfer(const NodeEnv& env, NodeContext ctx, std::size_t from, const Message& m,
                     const ResultTransfer& transfer, Tick now) {
    if (transfer.direction == TransferDirection::Backtrack) {
        if (!ctx.led) {
            Step step{std::move(ctx), {}};
            violation(step.effects, m, "backtrack to a node that never led");
            return step;
        }
        return on_backtrack(env, std::move(ctx), transfer.frame, now);
    }
    if (ctx.condition != NodeCondition::Healthy) {
        Step step{std::move(ctx), {}};
        violation(step.effects, m, "leadership offered to a faulty node");
        return step;
    }
    if (const auto* own = transfer.frame.find(env.label()); own && own->leader) {
        Step step{std::move(ctx), {}};
        violation(step.effects, m, env.label() + " was already a leader");
        return step;
    }
    Effects pre;
    cancel_election_timers(env, pre);
    ctx.parent_leader = from;
    Step step = on_become_leader(env, std::move(ctx), transfer.frame, now);
    append(pre, std::move(step.effects));
    step.effects = std::move(pre);
    return step;
}

}  // namespace

Step on_cycle_start(const NodeEnv& env, NodeCondition condition) {
    Step step;
    auto& c = step.ctx;
    c.condition = condition;
    auto outcome = self_test(condition);
    if (!outcome) {
        c.phase = NodePhase::Done;
        return step;
    }
    c.self_frame = new_local_frame(env.label(), outcome->status);
    c.self_result = outcome->result;
    if (outcome->status == StatusBit::FaultFree) {
        c.phase = NodePhase::AwaitBroadcast;
        step.effects.timers.push_back(TimerRequest{
            TimerKind::BroadcastWait, env.cycle_start + env.timing.t_bcast_wait + env.bcast_offset, env.self});
    } else {
        c.phase = NodePhase::Standby;
    }
    return step;
}

Step on_broadcast_or_timeout(const NodeEnv& env, NodeContext ctx,
                             std::optional<std::size_t> broadcaster, Tick now) {
    if (ctx.phase != NodePhase::AwaitBroadcast) {
        throw ProtocolError(std::string("on_broadcast_or_timeout in phase ") + to_string(ctx.phase));
    }
    Step step{std::move(ctx), {}};
    auto& c = step.ctx;
    if (broadcaster) {
        send_ack(env, c, step.effects, *broadcaster, now);
        step.effects.cancels.push_back(TimerCancel{TimerKind::BroadcastWait, env.self});
        c.phase = NodePhase::Acknowledged;
        return step;
    }
    c.broadcast_time = now;
    c.phase = NodePhase::Volunteering;
    for (std::size_t nb : env.topo().neighbors(env.self)) {
        step.effects.messages.push_back(make_message(env, nb, now, VolunteerBroadcast{}));
    }
    step.effects.timers.push_back(TimerRequest{TimerKind::AckWindow, now + env.timing.t_ack_window, env.self});
    note(step.effects, AnnotationKind::Volunteered, env.label(), "");
    return step;
}

Step on_become_leader(const NodeEnv& env, NodeContext ctx, ResultFrame rf, Tick now) {
    if (ctx.condition != NodeCondition::Healthy || ctx.self_frame.status != StatusBit::FaultFree) {
        throw ProtocolError(env.label() + " is faulty and cannot lead");
    }
    if (const auto* own = rf.find(env.label()); own && own->leader) {
        throw ProtocolError(env.label() + " was already a leader");
    }
    Step step{std::move(ctx), {}};
    auto& c = step.ctx;
    c.led = true;
    c.phase = NodePhase::LeaderProbing;
    c.self_frame.leader = true;
    rf.upsert(c.self_frame);

    std::size_t probes = 0;
    for (std::size_t nb : env.topo().neighbors(env.self)) {
        if (rf.contains(env.topo().node(nb).label)) {
            continue;
        }
        step.effects.messages.push_back(make_message(env, nb, now, ProbeRequest{c.self_frame}));
        step.effects.timers.push_back(TimerRequest{TimerKind::ProbeDeadline, now + env.timing.t_probe, nb});
        c.pending_probes[nb] = now;
        ++probes;
    }
    c.result_frame = std::move(rf);
    std::string parent = c.parent_leader ? env.topo().node(*c.parent_leader).label : "-";
    note(step.effects, AnnotationKind::LeaderStart, env.label(),
         "probes=" + std::to_string(probes) + " parent=" + parent);
    if (probes == 0) {
        Step next = advance_token(env, std::move(c), now);
        append(step.effects, std::move(next.effects));
        step.ctx = std::move(next.ctx);
    }
    return step;
}

Step on_probe_result(const NodeEnv& env, NodeContext ctx, std::size_t neighbor,
                     const std::optional<ProbeAck>& ack, Tick now) {
    auto it = ctx.pending_probes.find(neighbor);
    if (it == ctx.pending_probes.end() || !ctx.result_frame) {
        throw ProtocolError("no pending probe for ordinal " + std::to_string(neighbor));
    }
    const Tick sent = it->second;
    ctx.pending_probes.erase(it);

    Step step{std::move(ctx), {}};
    auto& c = step.ctx;
    const std::string& label = env.topo().node(neighbor).label;
    StatusBit status = StatusBit::Faulty;
    std::string detail;
    if (ack) {
        status = classify(reference_result(), ack->result);
        step.effects.cancels.push_back(TimerCancel{TimerKind::ProbeDeadline, neighbor});
        detail = "ack rt=" + std::to_string(now - sent);
        if (status == StatusBit::FaultFree) {
            c.responders.push_back(Responder{neighbor, now - sent});
        } else {
            detail += " mismatch";
        }
    } else {
        detail = "timeout";
    }
    c.result_frame->upsert(new_local_frame(label, status));
    step.effects.notes.push_back(Annotation{AnnotationKind::ProbeResult, label, detail, status, std::nullopt});
    return step;
}

std::optional<std::size_t> select_next_leader(const NodeEnv& env, const NodeContext& ctx) {
    if (!ctx.result_frame) {
        return std::nullopt;
    }
    const Responder* best = nullptr;
    for (const auto& r : ctx.responders) {
        if (ctx.tried.contains(r.ordinal)) {
            continue;
        }
        const auto* entry = ctx.result_frame->find(env.topo().node(r.ordinal).label);
        if (!entry || entry->status != StatusBit::FaultFree || entry->leader) {
            continue;
        }
        if (!best || r.response_time < best->response_time ||
            (r.response_time == best->response_time && r.ordinal < best->ordinal)) {
            best = &r;
        }
    }
    if (!best) {
        return std::nullopt;
    }
    return best->ordinal;
}

Step transfer_leadership(const NodeEnv& env, NodeContext ctx, std::size_t next, Tick now) {
    if (!ctx.result_frame) {
        throw ProtocolError(env.label() + " does not hold the result frame");
    }
    const bool responded = std::any_of(ctx.responders.begin(), ctx.responders.end(),
                                       [&](const Responder& r) { return r.ordinal == next; });
    if (next >= env.topo().size() || !env.topo().adjacent(env.self, next) || !responded) {
        throw ProtocolError("next leader must be a neighbour that responded fault-free");
    }
    Step step{std::move(ctx), {}};
    auto& c = step.ctx;
    c.tried.insert(next);
    step.effects.messages.push_back(
        make_message(env, next, now, ResultTransfer{std::move(*c.result_frame), TransferDirection::Forward}));
    c.result_frame.reset();
    c.phase = NodePhase::AwaitingNextLeader;
    return step;
}

Step on_backtrack(const NodeEnv& env, NodeContext ctx, ResultFrame rf, Tick now) {
    if (!ctx.led) {
        throw ProtocolError(env.label() + " never led and cannot take a backtrack");
    }
    ctx.result_frame = std::move(rf);
    ctx.phase = NodePhase::LeaderProbing;
    Step step = advance_token(env, std::move(ctx), now);
    Effects fx;
    note(fx, AnnotationKind::Backtracked, env.label(), "");
    append(fx, std::move(step.effects));
    step.effects = std::move(fx);
    return step;
}

Step advance_token(const NodeEnv& env, NodeContext ctx, Tick now) {
    if (auto next = select_next_leader(env, ctx)) {
        return transfer_leadership(env, std::move(ctx), *next, now);
    }
    if (!ctx.parent_leader || all_leaders_done(*ctx.result_frame)) {
        return finalize_broadcast(env, std::move(ctx), now);
    }
    Step step{std::move(ctx), {}};
    auto& c = step.ctx;
    step.effects.messages.push_back(make_message(
        env, *c.parent_leader, now, ResultTransfer{std::move(*c.result_frame), TransferDirection::Backtrack}));
    c.result_frame.reset();
    c.phase = NodePhase::AwaitingNextLeader;
    return step;
}

Step finalize_broadcast(const NodeEnv& env, NodeContext ctx, Tick now) {
    if (!ctx.result_frame) {
        throw ProtocolError(env.label() + " cannot finalize without the result frame");
    }
    Step step{std::move(ctx), {}};
    auto& c = step.ctx;
    // Nodes never reached through fault-free paths are indistinguishable from
    // failed ones.
    for (const auto& n : env.topo().nodes()) {
        if (!c.result_frame->contains(n.label)) {
            c.result_frame->upsert(new_local_frame(n.label, StatusBit::Faulty));
        }
    }
    auto faulty = extract_faulty(*c.result_frame);
    std::vector<std::string> labels;
    for (const auto& e : faulty) {
        labels.push_back(e.address);
    }
    for (const auto& n : env.topo().nodes()) {
        if (n.ordinal != env.self) {
            step.effects.messages.push_back(make_message(env, n.ordinal, now, FinalBroadcast{faulty}));
        }
    }
    step.effects.notes.push_back(Annotation{AnnotationKind::Finalize, env.label(),
                                            "faulty=" + std::to_string(labels.size()), std::nullopt,
                                            c.result_frame});
    c.known_faulty = std::move(labels);
    c.phase = NodePhase::Done;
    return step;
}

Step on_message(const NodeEnv& env, NodeContext ctx, const Message& m, Tick now) {
    if (ctx.condition == NodeCondition::Crashed) {
        return Step{std::move(ctx), {}};
    }
    Effects fx;
    const std::size_t from = ordinal_or_violation(env, m, fx);
    if (from == env.topo().size()) {
        return Step{std::move(ctx), std::move(fx)};
    }
    return std::visit(
        [&](const auto& body) -> Step {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, VolunteerBroadcast>) {
                return handle_volunteer_broadcast(env, std::move(ctx), from, now);
            } else if constexpr (std::is_same_v<T, VolunteerAck>) {
                if (ctx.phase == NodePhase::Volunteering) {
                    ++ctx.ack_count;
                }
                return Step{std::move(ctx), {}};
            } else if constexpr (std::is_same_v<T, CountExchange>) {
                return handle_count_exchange(env, std::move(ctx), from, body, now);
            } else if constexpr (std::is_same_v<T, LeaderAnnounce>) {
                return handle_announce(env, std::move(ctx), from, body);
            } else if constexpr (std::is_same_v<T, ProbeRequest>) {
                return handle_probe_request(env, std::move(ctx), from, m, now);
            } else if constexpr (std::is_same_v<T, ProbeAck>) {
                if (ctx.phase != NodePhase::LeaderProbing || !ctx.pending_probes.contains(from)) {
                    Step step{std::move(ctx), {}};
                    violation(step.effects, m, "unsolicited probe ack");
                    return step;
                }
                return finish_probe(env, on_probe_result(env, std::move(ctx), from, body, now), now);
            } else if constexpr (std::is_same_v<T, ResultTransfer>) {
                return handle_transfer(env, std::move(ctx), from, m, body, now);
            } else if constexpr (std::is_same_v<T, FinalBroadcast>) {
                Step step{std::move(ctx), {}};
                std::vector<std::string> labels;
                for (const auto& e : body.faulty) {
                    labels.push_back(e.address);
                }
                step.ctx.known_faulty = std::move(labels);
                step.ctx.phase = NodePhase::Done;
                return step;
            } else {
                Step step{std::move(ctx), {}};
                violation(step.effects, m, "unexpected message inside a network");
                return step;
            }
        },
        m.body);
}

Step on_timer(const NodeEnv& env, NodeContext ctx, const TimerRequest& timer, Tick now) {
    switch (timer.kind) {
    case TimerKind::BroadcastWait:
        if (ctx.phase == NodePhase::AwaitBroadcast) {
            return on_broadcast_or_timeout(env, std::move(ctx), std::nullopt, now);
        }
        break;
    case TimerKind::AckWindow:
        if (ctx.phase == NodePhase::Volunteering) {
            Step step{std::move(ctx), {}};
            auto& c = step.ctx;
            c.phase = NodePhase::CountExchange;
            c.relayed.insert(env.self);
            const CountExchange tally{env.label(), c.ack_count, c.broadcast_time.value_or(now)};
            for (std::size_t nb : env.topo().neighbors(env.self)) {
                step.effects.messages.push_back(make_message(env, nb, now, tally));
            }
            step.effects.timers.push_back(TimerRequest{
                TimerKind::ElectionDecision, env.cycle_start + env.timing.election_deadline(), env.self});
            return step;
        }
        break;
    case TimerKind::ElectionDecision:
        if (ctx.phase == NodePhase::CountExchange) {
            Step step{std::move(ctx), {}};
            auto& c = step.ctx;
            const ElectionCandidate own = own_candidate(env, c);
            const bool beaten = std::any_of(c.rivals.begin(), c.rivals.end(),
                                            [&](const auto& kv) { return outranks(kv.second, own); });
            if (beaten) {
                c.phase = NodePhase::Standby;
                note(step.effects, AnnotationKind::ElectionLost, env.label(),
                     "acks=" + std::to_string(own.ack_count));
                return step;
            }
            c.phase = NodePhase::Announced;
            c.announcers[env.self] = own;
            LocalFrame claim = c.self_frame;
            claim.leader = true;
            for (const auto& n : env.topo().nodes()) {
                if (n.ordinal != env.self) {
                    step.effects.messages.push_back(make_message(
                        env, n.ordinal, now, LeaderAnnounce{claim, own.ack_count, own.broadcast_time}));
                }
            }
            step.effects.timers.push_back(
                TimerRequest{TimerKind::AnnounceSettle, now + env.timing.t_ack_window, env.self});
            return step;
        }
        break;
    case TimerKind::AnnounceSettle:
        if (ctx.phase == NodePhase::Announced) {
            std::vector<ElectionCandidate> all;
            for (const auto& [_, cand] : ctx.announcers) {
                all.push_back(cand);
            }
            const std::size_t winner = elect_leader(all);
            ctx.elected = winner;
            if (winner != env.self) {
                Step step{std::move(ctx), {}};
                step.ctx.phase = NodePhase::Standby;
                note(step.effects, AnnotationKind::ElectionLost, env.label(),
                     "announced; outranked by " + env.topo().node(winner).label);
                return step;
            }
            std::ostringstream detail;
            detail << "acks=" << ctx.ack_count << " bcast=" << ctx.broadcast_time.value_or(0)
                   << " claimants=" << all.size();
            Effects fx;
            note(fx, AnnotationKind::Elected, env.label(), detail.str());
            Step step = on_become_leader(env, std::move(ctx), ResultFrame{}, now);
            append(fx, std::move(step.effects));
            step.effects = std::move(fx);
            return step;
        }
        break;
    case TimerKind::ProbeDeadline:
        if (ctx.phase == NodePhase::LeaderProbing && ctx.pending_probes.contains(timer.subject)) {
            return finish_probe(env, on_probe_result(env, std::move(ctx), timer.subject, std::nullopt, now),
                                now);
        }
        break;
    }
    return Step{std::move(ctx), {}};
}

}  // namespace dpafd
