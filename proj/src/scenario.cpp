// Scenario file reader.
//
//   network = vlan30          top-level key = value pairs
//   topology = vlan30.topo    path relative to the scenario file
//   seed = 7
//   cycles = 2
//   gateway = 172.16.30.103
//   event_budget = 1000000
//
//   [timing]                  t_bcast_wait, t_bcast_stagger, t_ack_window,
//                             t_count_window, t_probe, cycle_period
//   [latency]                 base = 1 / jitter = 3 / link <a> <b> <ticks>
//   [offsets]                 <node> <ticks>
//   [faults]                  cycle <k> <crash|software|repair|join> <node> [neighbours...]
//   [topology]                inline topology lines instead of a file
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dpafd/engine.hpp"

namespace dpafd {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> words(std::string_view s) {
    std::istringstream in{std::string(s)};
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw ScenarioError("line " + std::to_string(line) + ": " + what);
}

std::uint64_t to_u64(const std::string& text, std::size_t line, const std::string& what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(line, what + " must be a non-negative integer, got '" + text + "'");
    }
    return v;
}

FaultAction to_action(const std::string& word, std::size_t line) {
    if (word == "crash") return FaultAction::Crash;
    if (word == "software") return FaultAction::SoftwareFault;
    if (word == "repair") return FaultAction::Repair;
    if (word == "join") return FaultAction::Join;
    fail(line, "unknown fault action '" + word + "'");
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ScenarioError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
    Scenario s;
    if (const char* env = std::getenv("DPAFD_SEED")) {
        s.seed = to_u64(env, 0, "DPAFD_SEED");
    }
    std::string section;
    std::optional<std::filesystem::path> topology_path;
    std::string inline_topology;

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view = raw;
        if (auto hash = view.find('#'); hash != std::string_view::npos && section != "topology") {
            view = view.substr(0, hash);
        }
        const std::string content = trim(view);
        if (content.empty()) {
            continue;
        }
        if (content.front() == '[') {
            if (content.back() != ']') {
                fail(line, "malformed section header");
            }
            section = trim(std::string_view(content).substr(1, content.size() - 2));
            if (section != "timing" && section != "latency" && section != "offsets" && section != "faults" &&
                section != "topology") {
                fail(line, "unknown section [" + section + "]");
            }
            continue;
        }
        if (section == "topology") {
            inline_topology += raw;
            inline_topology += '\n';
            continue;
        }

        auto eq = content.find('=');
        if (eq != std::string::npos && section != "faults" && section != "offsets") {
            const std::string key = trim(std::string_view(content).substr(0, eq));
            const std::string value = trim(std::string_view(content).substr(eq + 1));
            if (section.empty()) {
                if (key == "network") {
                    s.network_id = value;
                } else if (key == "topology") {
                    topology_path = base_dir / value;
                } else if (key == "seed") {
                    s.seed = to_u64(value, line, key);
                } else if (key == "cycles") {
                    s.cycles = static_cast<std::uint32_t>(to_u64(value, line, key));
                } else if (key == "gateway") {
                    s.gateway = value;
                } else if (key == "event_budget") {
                    s.event_budget = to_u64(value, line, key);
                } else {
                    fail(line, "unknown key '" + key + "'");
                }
            } else if (section == "timing") {
                auto& t = s.timing;
                const Tick v = to_u64(value, line, key);
                if (key == "t_bcast_wait") t.t_bcast_wait = v;
                else if (key == "t_bcast_stagger") t.t_bcast_stagger = v;
                else if (key == "t_ack_window") t.t_ack_window = v;
                else if (key == "t_count_window") t.t_count_window = v;
                else if (key == "t_probe") t.t_probe = v;
                else if (key == "cycle_period") t.cycle_period = v;
                else fail(line, "unknown timing key '" + key + "'");
            } else if (section == "latency") {
                const Tick v = to_u64(value, line, key);
                if (key == "base") s.latency.base = v;
                else if (key == "jitter") s.latency.jitter = v;
                else fail(line, "unknown latency key '" + key + "'");
            }
            continue;
        }

        const auto w = words(content);
        if (section == "latency" && w.size() == 4 && w[0] == "link") {
            s.latency.set_link(w[1], w[2], to_u64(w[3], line, "link latency"));
        } else if (section == "offsets" && w.size() == 2) {
            s.bcast_offsets[w[0]] = to_u64(w[1], line, "offset");
        } else if (section == "faults" && w.size() >= 4 && w[0] == "cycle") {
            FaultEntry e;
            e.at_cycle = static_cast<std::uint32_t>(to_u64(w[1], line, "cycle"));
            e.action = to_action(w[2], line);
            e.node = w[3];
            e.neighbors.assign(w.begin() + 4, w.end());
            if (e.action != FaultAction::Join && !e.neighbors.empty()) {
                fail(line, "only join takes a neighbour list");
            }
            s.script.entries.push_back(std::move(e));
        } else {
            fail(line, "unrecognised line '" + content + "'");
        }
    }

    if (topology_path && !inline_topology.empty()) {
        throw ScenarioError("scenario gives both a topology file and an inline [topology]");
    }
    try {
        if (topology_path) {
            s.topology = parse_topology(read_file(*topology_path));
        } else if (!inline_topology.empty()) {
            s.topology = parse_topology(inline_topology);
        } else {
            throw ScenarioError("scenario names no topology");
        }
    } catch (const TopologyError& e) {
        throw ScenarioError("topology " + (topology_path ? topology_path->string() : std::string("[inline]")) +
                            ": " + e.what());
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(read_file(path), path.parent_path());
}

}  // namespace dpafd
