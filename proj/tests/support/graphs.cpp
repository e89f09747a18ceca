#include "graphs.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace dpafd::testing {

Topology from_edges(std::size_t n, const std::vector<Edge>& edges, const std::string& prefix) {
    Topology::Adjacency rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].first = prefix + std::to_string(i);
    }
    for (auto [a, b] : edges) {
        rows[a].second.push_back(rows[b].first);
    }
    return Topology::from_adjacency(rows);
}

Topology path_graph(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        e.emplace_back(i, i + 1);
    }
    return from_edges(n, e);
}

Topology star_graph(std::size_t leaves) {
    std::vector<Edge> e;
    for (std::size_t i = 1; i <= leaves; ++i) {
        e.emplace_back(0, i);
    }
    return from_edges(leaves + 1, e);
}

Topology complete_graph(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            e.emplace_back(a, b);
        }
    }
    return from_edges(n, e);
}

Topology random_connected(std::size_t n, double extra, std::mt19937_64& rng) {
    std::vector<Edge> e;
    std::set<Edge> seen;
    for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        const std::size_t j = pick(rng);
        e.emplace_back(j, i);
        seen.emplace(j, i);
    }
    std::bernoulli_distribution coin(extra);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (!seen.contains({a, b}) && coin(rng)) {
                e.emplace_back(a, b);
            }
        }
    }
    return from_edges(n, e);
}

namespace {

using Matrix = std::vector<std::vector<bool>>;

bool connected(const Matrix& m) {
    const std::size_t n = m.size();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t w = 0; w < n; ++w) {
            if (m[v][w] && !seen[w]) {
                seen[w] = true;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == n;
}

// Smallest upper-triangle bit string over all relabellings.
std::uint32_t canonical(const Matrix& m) {
    const std::size_t n = m.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::uint32_t best = ~0u;
    do {
        std::uint32_t code = 0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                code = (code << 1) | (m[perm[a]][perm[b]] ? 1u : 0u);
            }
        }
        best = std::min(best, code);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

std::vector<Topology> connected_catalog(std::size_t n) {
    std::vector<Edge> pairs;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            pairs.emplace_back(a, b);
        }
    }
    std::set<std::uint32_t> classes;
    std::vector<Topology> out;
    const std::uint64_t subsets = std::uint64_t{1} << pairs.size();
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) + 1 < n) {
            continue;
        }
        Matrix m(n, std::vector<bool>(n, false));
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (mask >> i & 1) {
                auto [a, b] = pairs[i];
                m[a][b] = m[b][a] = true;
                edges.push_back(pairs[i]);
            }
        }
        if (!connected(m) || !classes.insert(canonical(m)).second) {
            continue;
        }
        out.push_back(from_edges(n, edges));
    }
    return out;
}

std::set<std::size_t> reachable_oracle(const Topology& t, const std::vector<bool>& faulty, std::size_t start) {
    std::set<std::size_t> seen;
    if (faulty[start]) {
        return seen;
    }
    std::vector<std::size_t> stack{start};
    seen.insert(start);
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t w = 0; w < t.size(); ++w) {
            if (t.adjacent(v, w) && !faulty[w] && seen.insert(w).second) {
                stack.push_back(w);
            }
        }
    }
    return seen;
}

Topology walkthrough_graph() {
    return parse_topology(
        "N1: N2 N3 N4 N8 N9\n"
        "N2: N1 N5\n"
        "N3: N1\n"
        "N4: N1 N6 N7\n"
        "N5: N2 N6 N10\n"
        "N6: N4 N5\n"
        "N7: N4 N8\n"
        "N8: N1 N7\n"
        "N9: N1 N10\n"
        "N10: N5 N9\n");
}

std::string data_path(const std::string& name) {
    return std::string(DPAFD_TEST_DATA) + "/" + name;
}

}  // namespace dpafd::testing
