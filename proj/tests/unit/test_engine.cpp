#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <set>

#include "dpafd/analysis.hpp"
#include "dpafd/engine.hpp"
#include "graphs.hpp"

using namespace dpafd;
using dpafd::testing::data_path;

namespace {

Scenario basic(const Topology& t, std::uint64_t seed = 1) {
    Scenario s;
    s.topology = t;
    s.seed = seed;
    return s;
}

NetworkState with_conditions(const Topology& t, const std::map<std::string, NodeCondition>& faults) {
    NetworkState st{t, std::vector<NodeCondition>(t.size(), NodeCondition::Healthy)};
    for (const auto& [label, c] : faults) {
        st.conditions[t.ordinal_of(label)] = c;
    }
    return st;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("latency") {
    LatencyModel lat;
    lat.base = 2;
    lat.jitter = 0;
    LinkStreams streams(1, 1);
    Message m{"a", "b", 17, VolunteerBroadcast{}};
    CHECK(deliver(lat, m, NodeCondition::Healthy, streams) == Tick{19});
    CHECK_FALSE(deliver(lat, m, NodeCondition::Crashed, streams));
    lat.set_link("b", "a", 5);
    CHECK(deliver(lat, m, NodeCondition::Healthy, streams) == Tick{22});
    CHECK(lat.max_one_hop() == 5);
}

TEST_CASE("jitter streams replay and stay in range") {
    LatencyModel lat;
    lat.base = 1;
    lat.jitter = 3;
    auto draw = [&](std::uint64_t seed) {
        LinkStreams streams(seed, 2);
        std::vector<Tick> out;
        for (int i = 0; i < 200; ++i) {
            Message m{i % 2 ? "x" : "y", "z", static_cast<Tick>(i), VolunteerBroadcast{}};
            out.push_back(*deliver(lat, m, NodeCondition::Healthy, streams) - m.send_time);
        }
        return out;
    };
    auto a = draw(7);
    CHECK(a == draw(7));
    CHECK(a != draw(8));
    for (Tick d : a) {
        CHECK(d >= 1);
        CHECK(d <= 4);
    }
}

TEST_CASE("broadcast offsets") {
    Scenario s = basic(dpafd::testing::path_graph(4), 5);
    s.bcast_offsets["n2"] = 7;
    CHECK(bcast_offset(s, "n2", 1) == 7);
    for (std::uint32_t c = 1; c < 20; ++c) {
        const Tick o = bcast_offset(s, "n0", c);
        CHECK(o <= s.timing.t_bcast_stagger);
        CHECK(o == bcast_offset(s, "n0", c));
    }
}

TEST_CASE("script application") {
    const Topology t = dpafd::testing::path_graph(3);
    const NetworkState st = with_conditions(t, {{"n1", NodeCondition::Crashed}});
    auto script = [](std::vector<FaultEntry> e) { return FaultScript{std::move(e)}; };

    SUBCASE("repair a faulty node") {
        auto next = apply_script(st, script({{"n1", FaultAction::Repair, 2, {}}}), 2);
        CHECK(next.conditions[1] == NodeCondition::Healthy);
    }
    SUBCASE("entries for other cycles are ignored") {
        auto next = apply_script(st, script({{"n1", FaultAction::Repair, 3, {}}}), 2);
        CHECK(next.conditions[1] == NodeCondition::Crashed);
    }
    SUBCASE("repair of a healthy node") {
        CHECK_THROWS_AS(apply_script(st, script({{"n0", FaultAction::Repair, 1, {}}}), 1), ScenarioError);
    }
    SUBCASE("join of an existing node") {
        CHECK_THROWS_AS(apply_script(st, script({{"n0", FaultAction::Join, 1, {"n1"}}}), 1), ScenarioError);
    }
    SUBCASE("two actions for one node") {
        CHECK_THROWS_AS(apply_script(st,
                                     script({{"n0", FaultAction::Crash, 1, {}},
                                             {"n0", FaultAction::SoftwareFault, 1, {}}}),
                                     1),
                        ScenarioError);
    }
    SUBCASE("unknown node") {
        CHECK_THROWS_AS(apply_script(st, script({{"zz", FaultAction::Crash, 1, {}}}), 1), ScenarioError);
    }
    SUBCASE("join grows the topology") {
        auto next = apply_script(st, script({{"new", FaultAction::Join, 1, {"n2"}}}), 1);
        CHECK(next.topology.size() == 4);
        CHECK(next.conditions.size() == 4);
        CHECK(next.conditions[3] == NodeCondition::Healthy);
    }
}

TEST_CASE("scenario validation") {
    Scenario s = basic(dpafd::testing::path_graph(4));
    CHECK_NOTHROW(s.validate());
    SUBCASE("round trip must fit the probe window") {
        s.latency.set_link("n0", "n1", 5);
        CHECK_THROWS_AS(s.validate(), ScenarioError);
    }
    SUBCASE("latency must stay below the timers") {
        s.latency.jitter = 20;
        CHECK_THROWS_AS(s.validate(), ScenarioError);
    }
    SUBCASE("offset beyond the stagger") {
        s.bcast_offsets["n0"] = s.timing.t_bcast_stagger + 1;
        CHECK_THROWS_AS(s.validate(), ScenarioError);
    }
    SUBCASE("unknown gateway") {
        s.gateway = "elsewhere";
        CHECK_THROWS_AS(s.validate(), ScenarioError);
    }
    SUBCASE("zero cycles") {
        s.cycles = 0;
        CHECK_THROWS_AS(s.validate(), ScenarioError);
    }
}

TEST_CASE("walkthrough cycle") {
    const Scenario s = load_scenario(data_path("walkthrough.scn"));
    const auto r = run_periodic(s);
    REQUIRE(r.reports.size() == 1);
    const auto& rep = r.reports[0];
    CHECK(rep.first_leader == "N1");
    CHECK(as_set(rep.faulty_found) == std::set<std::string>{"N3", "N9"});
    const auto tallies = leader_tallies(r.trace.cycle_segment(1));
    REQUIRE_FALSE(tallies.empty());
    CHECK(tallies[0].leader == "N1");
    CHECK(tallies[0].probes == 5);
    CHECK(tallies[0].faulty == 2);
    CHECK(tallies[0].timeouts == 1);
    CHECK(tallies[0].mismatches == 1);
    CHECK(rep.violations == 0);
}

TEST_CASE("fault-free network: every node leads once and nothing is reported") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const Topology t = dpafd::testing::random_connected(5 + trial, 0.2, rng);
        const auto res = run_cycle(basic(t, 100 + trial), 1, with_conditions(t, {}), 0);
        CHECK(res.report.faulty_found.empty());
        CHECK(res.report.leaders_in_order.size() == t.size());
        CHECK(as_set(res.report.leaders_in_order).size() == t.size());
        for (const auto& ctx : res.final_states) {
            CHECK(ctx.known_faulty == std::vector<std::string>{});
        }
    }
}

TEST_CASE("nodes behind a crashed cut are reported") {
    const auto r = run_periodic(load_scenario(data_path("blocked_path.scn")));
    CHECK(r.reports[0].first_leader == "A");
    CHECK(r.reports[0].faulty_found == std::vector<std::string>{"B", "C"});
}

TEST_CASE("repair between cycles") {
    const auto r = run_periodic(load_scenario(data_path("repair.scn")));
    REQUIRE(r.reports.size() == 2);
    CHECK(r.reports[0].faulty_found.size() == 5);
    CHECK(r.reports[1].faulty_found.size() == 4);
    const auto& second = r.reports[1].faulty_found;
    CHECK(std::find(second.begin(), second.end(), "172.16.30.109") == second.end());
}

TEST_CASE("a joining node is diagnosed from its first cycle") {
    const auto r = run_periodic(load_scenario(data_path("join.scn")));
    REQUIRE(r.reports.size() == 2);
    CHECK_FALSE(r.reports[0].final_frame->contains("N11"));
    CHECK(r.reports[1].final_frame->contains("N11"));
    CHECK(r.reports[1].final_frame->find("N11")->leader);
    CHECK(r.states[1].topology.size() == 11);
}

TEST_CASE("empty script repeats the fault-free outcome") {
    const auto r = run_periodic(load_scenario(data_path("fault_free.scn")));
    REQUIRE(r.reports.size() == 3);
    for (const auto& rep : r.reports) {
        CHECK(rep.faulty_found.empty());
        CHECK(rep.leaders_in_order.size() == 10);
        CHECK(rep.terminated);
    }
}

TEST_CASE("clock sanity") {
    const Scenario s = load_scenario(data_path("repair.scn"));
    const auto r = run_periodic(s);
    Tick last = 0;
    for (const auto& e : r.trace.events()) {
        CHECK(e.time >= last);
        last = e.time;
    }
    for (const auto& rep : r.reports) {
        CHECK(rep.start % s.timing.cycle_period == 0);
        CHECK(rep.end >= rep.start);
        CHECK(rep.end < rep.start + s.timing.cycle_period);
        for (const auto& e : r.trace.cycle_segment(rep.cycle_index).events()) {
            CHECK(e.time >= rep.start);
            CHECK(e.time <= rep.end);
        }
    }
    CHECK(r.reports[0].start == 0);
    CHECK(r.reports[1].start == s.timing.cycle_period);
}

TEST_CASE("an overrunning cycle pushes the next one to the following boundary") {
    Scenario s = load_scenario(data_path("fault_free.scn"));
    s.timing.cycle_period = 150;
    const auto r = run_periodic(s);
    for (std::size_t i = 1; i < r.reports.size(); ++i) {
        CHECK(r.reports[i].start > r.reports[i - 1].end);
        CHECK(r.reports[i].start % 150 == 0);
    }
}

TEST_CASE("script fidelity: every action is in the trace at its cycle start") {
    const Scenario s = load_scenario(data_path("repair.scn"));
    const auto r = run_periodic(s);
    std::size_t seen = 0;
    for (const auto& e : r.trace.events()) {
        if (e.kind != TraceKind::Fault) {
            continue;
        }
        ++seen;
        const auto& rep = r.reports[e.cycle - 1];
        CHECK(e.time == rep.start);
        const auto expected = s.script.at(e.cycle);
        CHECK(std::any_of(expected.begin(), expected.end(), [&](const FaultEntry& f) {
            return f.node == e.src && e.detail == to_string(f.action);
        }));
    }
    CHECK(seen == s.script.entries.size());
    CHECK(r.states[0].conditions[r.states[0].topology.ordinal_of("172.16.30.109")] == NodeCondition::Crashed);
    CHECK(r.states[1].conditions[r.states[1].topology.ordinal_of("172.16.30.109")] == NodeCondition::Healthy);
}

TEST_CASE("messages to crashed nodes are dropped and traced") {
    const auto r = run_periodic(load_scenario(data_path("blocked_path.scn")));
    std::size_t drops = 0;
    for (const auto& e : r.trace.events()) {
        if (e.kind == TraceKind::Drop) {
            ++drops;
            CHECK(e.dst == "B");
        }
        if (e.kind == TraceKind::Deliver) {
            CHECK(e.dst != "B");
        }
    }
    CHECK(drops > 0);
}

TEST_CASE("same seed replays the same trace") {
    const Scenario s = load_scenario(data_path("repair.scn"));
    CHECK(run_periodic(s).trace.export_text() == run_periodic(s).trace.export_text());
    Scenario other = s;
    other.seed += 1;
    CHECK(run_periodic(other).trace.export_text() != run_periodic(s).trace.export_text());
}

TEST_CASE("event budget") {
    Scenario s = load_scenario(data_path("walkthrough.scn"));
    s.event_budget = 20;
    try {
        run_periodic(s);
        FAIL("expected livelock");
    } catch (const LivelockError& e) {
        CHECK_FALSE(e.pending().empty());
    }
}

TEST_CASE("scenario files") {
    SUBCASE("errors name the line") {
        try {
            parse_scenario("network = x\n[timing]\nt_probe = ten\n[topology]\nA: B\nB:\n");
            FAIL("expected an error");
        } catch (const ScenarioError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_scenario("[nope]\n"), ScenarioError);
        CHECK_THROWS_AS(parse_scenario("[faults]\ncycle 1 explode A\n[topology]\nA: B\nB:\n"), ScenarioError);
    }
    SUBCASE("missing topology file names the path") {
        try {
            parse_scenario("topology = no_such.topo\n", "/tmp");
            FAIL("expected an error");
        } catch (const ScenarioError& e) {
            CHECK(std::string(e.what()).find("no_such.topo") != std::string::npos);
        }
    }
    SUBCASE("all sections") {
        const Scenario s = parse_scenario(
            "network = n\nseed = 4\ncycles = 2\ngateway = A\n"
            "[timing]\nt_probe = 12\n[latency]\nbase = 2\njitter = 1\nlink A B 3\n"
            "[offsets]\nB 5\n[faults]\ncycle 2 crash B\ncycle 2 join D C\n"
            "[topology]\nA: B\nB: C\nC:\n");
        CHECK(s.network_id == "n");
        CHECK(s.seed == 4);
        CHECK(s.cycles == 2);
        CHECK(s.gateway == "A");
        CHECK(s.timing.t_probe == 12);
        CHECK(s.latency.base == 2);
        CHECK(s.latency.link("B", "A") == Tick{3});
        CHECK(s.bcast_offsets.at("B") == 5);
        REQUIRE(s.script.entries.size() == 2);
        CHECK(s.script.entries[1].neighbors == std::vector<std::string>{"C"});
        CHECK(s.topology.size() == 3);
    }
    SUBCASE("seed from the environment") {
        ::setenv("DPAFD_SEED", "99", 1);
        const Scenario s = parse_scenario("[topology]\nA: B\nB:\n");
        const Scenario pinned = parse_scenario("seed = 3\n[topology]\nA: B\nB:\n");
        ::unsetenv("DPAFD_SEED");
        CHECK(s.seed == 99);
        CHECK(pinned.seed == 3);
    }
}

TEST_CASE("inter-network exchange") {
    SUBCASE("two testbed networks") {
        std::vector<NetworkOutcome> nets;
        std::vector<std::string> gateways;
        for (const char* f : {"exchange20.scn", "exchange30.scn"}) {
            const Scenario s = load_scenario(data_path(f));
            const auto r = run_periodic(s);
            nets.push_back({s.network_id, choose_gateway(s, r.states.back(), r.reports.back()),
                            extract_faulty(*r.reports.back().final_frame)});
        }
        CHECK(nets[0].gateway == "172.16.20.109");
        const auto ex = inter_network_exchange(nets);
        REQUIRE(ex.views.size() == 2);
        REQUIRE(ex.views[0].received.size() == 1);
        CHECK(ex.views[0].received[0].first == "vlan30");
        CHECK(ex.views[0].received[0].second == nets[1].faulty);
        std::set<std::string> got;
        for (const auto& f : ex.views[0].received[0].second) {
            got.insert(f.address);
        }
        CHECK(got == std::set<std::string>{"172.16.30.101", "172.16.30.104", "172.16.30.105", "172.16.30.109"});
        REQUIRE(ex.messages.size() == 2);
        CHECK(ex.messages[0].kind() == MessageKind::InterNetworkReport);
        CHECK(ex.messages[0].dst == "172.16.20.109");
    }
    SUBCASE("single network keeps its own view") {
        const auto ex = inter_network_exchange({{"a", "g", {LocalFrame{"x", StatusBit::Faulty, false}}}});
        REQUIRE(ex.views.size() == 1);
        CHECK(ex.views[0].own.size() == 1);
        CHECK(ex.views[0].received.empty());
        CHECK(ex.messages.empty());
    }
    SUBCASE("two clean networks") {
        const auto ex = inter_network_exchange({{"a", "g1", {}}, {"b", "g2", {}}});
        for (const auto& v : ex.views) {
            CHECK(v.own.empty());
            REQUIRE(v.received.size() == 1);
            CHECK(v.received[0].second.empty());
        }
    }
    SUBCASE("default gateway skips faulty nodes") {
        const Scenario s = load_scenario(data_path("exchange30.scn"));
        const auto r = run_periodic(s);
        CHECK(choose_gateway(s, r.states.back(), r.reports.back()) == "172.16.30.102");
    }
}
