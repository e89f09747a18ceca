#include "dpafd/topology.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace dpafd {

TopologyParseError::TopologyParseError(std::size_t line, const std::string& what)
    : TopologyError("line " + std::to_string(line) + ": " + what), line_(line) {}

Topology Topology::from_adjacency(const Adjacency& rows) {
    Topology t;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& [label, _] : rows) {
        if (label.empty()) {
            throw TopologyError("empty node label");
        }
        if (!index.emplace(label, t.nodes_.size()).second) {
            throw TopologyError("duplicate node '" + label + "'");
        }
        t.nodes_.push_back(NodeId{label, t.nodes_.size()});
    }
    t.adjacency_.resize(t.nodes_.size());
    for (const auto& [label, neighbours] : rows) {
        const std::size_t self = index.at(label);
        for (const auto& other : neighbours) {
            auto it = index.find(other);
            if (it == index.end()) {
                throw TopologyError("node '" + label + "' references undeclared node '" + other + "'");
            }
            if (it->second == self) {
                throw TopologyError("self-loop on node '" + label + "'");
            }
            t.adjacency_[self].push_back(it->second);
            t.adjacency_[it->second].push_back(self);
        }
    }
    for (auto& adj : t.adjacency_) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return t;
}

const NodeId& Topology::node(std::size_t ordinal) const {
    if (ordinal >= nodes_.size()) {
        throw TopologyError("ordinal " + std::to_string(ordinal) + " out of range");
    }
    return nodes_[ordinal];
}

std::optional<std::size_t> Topology::find(std::string_view label) const {
    auto it = std::find_if(nodes_.begin(), nodes_.end(),
                           [&](const NodeId& n) { return n.label == label; });
    if (it == nodes_.end()) {
        return std::nullopt;
    }
    return it->ordinal;
}

std::size_t Topology::ordinal_of(std::string_view label) const {
    if (auto o = find(label)) {
        return *o;
    }
    throw TopologyError("unknown node '" + std::string(label) + "'");
}

const std::vector<std::size_t>& Topology::neighbors(std::size_t ordinal) const {
    if (ordinal >= adjacency_.size()) {
        throw TopologyError("ordinal " + std::to_string(ordinal) + " out of range");
    }
    return adjacency_[ordinal];
}

std::vector<NodeId> Topology::neighbors(std::string_view label) const {
    std::vector<NodeId> out;
    for (std::size_t o : neighbors(ordinal_of(label))) {
        out.push_back(nodes_[o]);
    }
    return out;
}

bool Topology::adjacent(std::size_t a, std::size_t b) const {
    const auto& adj = neighbors(a);
    return std::binary_search(adj.begin(), adj.end(), b);
}

std::size_t Topology::edge_count() const noexcept {
    std::size_t twice = 0;
    for (const auto& adj : adjacency_) {
        twice += adj.size();
    }
    return twice / 2;
}

Topology Topology::with_node(const std::string& label, const std::vector<std::string>& neighbours) const {
    Adjacency rows;
    rows.reserve(nodes_.size() + 1);
    for (const auto& n : nodes_) {
        std::vector<std::string> adj;
        for (std::size_t o : adjacency_[n.ordinal]) {
            adj.push_back(nodes_[o].label);
        }
        rows.emplace_back(n.label, std::move(adj));
    }
    rows.emplace_back(label, neighbours);
    return from_adjacency(rows);
}

std::string Topology::serialize() const {
    std::ostringstream out;
    for (const auto& n : nodes_) {
        out << n.label << ':';
        for (std::size_t o : adjacency_[n.ordinal]) {
            out << ' ' << nodes_[o].label;
        }
        out << '\n';
    }
    return out.str();
}

namespace {

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) {
            ++i;
        }
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') {
            ++j;
        }
        if (j > i) {
            out.emplace_back(s.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

}  // namespace

Topology parse_topology(std::string_view text) {
    struct Row {
        std::string label;
        std::vector<std::string> neighbours;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::unordered_map<std::string, std::size_t> declared;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        if (split_ws(line).empty()) {
            continue;
        }
        auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw TopologyParseError(line_no, "expected '<label>: <neighbours...>'");
        }
        auto head = split_ws(line.substr(0, colon));
        if (head.size() != 1) {
            throw TopologyParseError(line_no, "expected exactly one label before ':'");
        }
        if (!declared.emplace(head[0], line_no).second) {
            throw TopologyParseError(line_no, "duplicate node '" + head[0] + "'");
        }
        rows.push_back(Row{head[0], split_ws(line.substr(colon + 1)), line_no});
    }

    Topology::Adjacency adjacency;
    adjacency.reserve(rows.size());
    for (auto& row : rows) {
        for (const auto& n : row.neighbours) {
            if (n == row.label) {
                throw TopologyParseError(row.line, "self-loop on node '" + n + "'");
            }
            if (!declared.contains(n)) {
                throw TopologyParseError(row.line, "reference to undeclared node '" + n + "'");
            }
        }
        adjacency.emplace_back(std::move(row.label), std::move(row.neighbours));
    }
    return Topology::from_adjacency(adjacency);
}

std::vector<std::string> ValidationReport::messages() const {
    std::vector<std::string> out;
    if (too_small) {
        out.emplace_back("error: fewer than two nodes");
    }
    if (disconnected) {
        out.emplace_back("error: graph is disconnected");
    }
    if (fully_connected) {
        out.emplace_back("warning: graph is fully connected");
    }
    return out;
}

ValidationReport validate(const Topology& topology) {
    ValidationReport report;
    const std::size_t n = topology.size();
    report.too_small = n < 2;
    if (n == 0) {
        return report;
    }
    report.disconnected = fault_free_reachable(topology, std::vector<bool>(n, false), 0).size() != n;
    report.fully_connected = n >= 2 && topology.edge_count() == n * (n - 1) / 2;
    return report;
}

std::vector<std::size_t> fault_free_reachable(const Topology& topology,
                                              const std::vector<bool>& faulty,
                                              std::size_t start) {
    const std::size_t n = topology.size();
    if (start >= n) {
        throw TopologyError("start ordinal out of range");
    }
    auto is_faulty = [&](std::size_t o) { return o < faulty.size() && faulty[o]; };
    if (is_faulty(start)) {
        throw TopologyError("start node '" + topology.node(start).label + "' is faulty");
    }
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
        std::size_t u = queue.front();
        queue.pop_front();
        for (std::size_t v : topology.neighbors(u)) {
            if (!seen[v] && !is_faulty(v)) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t o = 0; o < n; ++o) {
        if (seen[o]) {
            out.push_back(o);
        }
    }
    return out;
}

std::vector<std::size_t> fault_free_reachable(const Topology& topology,
                                              const std::vector<std::string>& faulty,
                                              std::string_view start) {
    std::vector<bool> mask(topology.size(), false);
    for (const auto& label : faulty) {
        mask[topology.ordinal_of(label)] = true;
    }
    return fault_free_reachable(topology, mask, topology.ordinal_of(start));
}

}  // namespace dpafd
