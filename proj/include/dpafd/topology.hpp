#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dpafd {

/// Identity of a node: an opaque label plus the dense ordinal assigned when
/// the topology was loaded. Ordinals drive every deterministic tie-break.
struct NodeId {
    std::string label;
    std::size_t ordinal = 0;

    friend bool operator==(const NodeId&, const NodeId&) = default;
    friend auto operator<=>(const NodeId& a, const NodeId& b) { return a.ordinal <=> b.ordinal; }
};

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by parse_topology; `line()` is 1-based.
class TopologyParseError : public TopologyError {
public:
    TopologyParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Undirected, irreflexive graph over labelled nodes. Immutable once built.
class Topology {
public:
    using Adjacency = std::vector<std::pair<std::string, std::vector<std::string>>>;

    Topology() = default;

    /// Builds from (label, neighbour labels) rows in declaration order; the
    /// adjacency is symmetrized. Throws TopologyError on duplicates, unknown
    /// neighbours or self-loops.
    static Topology from_adjacency(const Adjacency& rows);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }
    const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
    const NodeId& node(std::size_t ordinal) const;

    std::optional<std::size_t> find(std::string_view label) const;
    /// Ordinal of `label`; throws TopologyError for unknown labels.
    std::size_t ordinal_of(std::string_view label) const;
    bool contains(std::string_view label) const { return find(label).has_value(); }

    /// Sorted ordinals adjacent to `ordinal`.
    const std::vector<std::size_t>& neighbors(std::size_t ordinal) const;
    std::vector<NodeId> neighbors(std::string_view label) const;
    std::size_t degree(std::size_t ordinal) const { return neighbors(ordinal).size(); }
    bool adjacent(std::size_t a, std::size_t b) const;
    std::size_t edge_count() const noexcept;

    /// Copy with one more node appended (ordinal = size()) linked to `neighbors`.
    Topology with_node(const std::string& label, const std::vector<std::string>& neighbors) const;

    /// Topology-file text that parses back to an isomorphic (here: identical) graph.
    std::string serialize() const;

private:
    std::vector<NodeId> nodes_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

/// Parses the `<label>: <label> <label> ...` line format. `#` starts a
/// comment and blank lines are skipped.
Topology parse_topology(std::string_view text);

struct ValidationReport {
    bool disconnected = false;
    bool fully_connected = false;  // warning only
    bool too_small = false;        // fewer than two nodes

    bool clean() const noexcept { return !disconnected && !fully_connected && !too_small; }
    std::vector<std::string> messages() const;
};

ValidationReport validate(const Topology& topology);

/// Ordinals reachable from `start` along paths whose every vertex is outside
/// `faulty` (start included), in ascending order. `faulty` is indexed by ordinal.
std::vector<std::size_t> fault_free_reachable(const Topology& topology,
                                              const std::vector<bool>& faulty,
                                              std::size_t start);

std::vector<std::size_t> fault_free_reachable(const Topology& topology,
                                              const std::vector<std::string>& faulty,
                                              std::string_view start);

}  // namespace dpafd
