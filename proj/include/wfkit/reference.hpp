#pragma once

// Reference implementations kept deliberately naive and separate from the
// production algorithms. The selfcheck command and the test suites compare
// the fast paths against these.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "wfkit/ir.hpp"
#include "wfkit/rng.hpp"

namespace wfkit::reference {

// Classic O(n*m) dynamic-programming LCS over type-name sequences.
inline int lcs_dp(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            dp[i][j] = (a[i - 1] == b[j - 1]) ? dp[i - 1][j - 1] + 1
                                              : std::max(dp[i - 1][j], dp[i][j - 1]);
        }
    }
    return dp[n][m];
}

namespace detail {

struct FlatGraph {
    std::vector<std::string> labels;
    std::vector<std::vector<bool>> adj;  // adj[i][j]: edge i -> j
};

inline FlatGraph flatten(const WorkflowGraph& g) {
    FlatGraph f;
    std::vector<NodeId> ids;
    for (const auto& [id, node] : g.nodes) ids.push_back(id);
    f.labels.resize(ids.size());
    f.adj.assign(ids.size(), std::vector<bool>(ids.size(), false));
    for (std::size_t i = 0; i < ids.size(); ++i) f.labels[i] = g.nodes.at(ids[i]).type_name;
    for (const Edge& e : edges_of(g)) {
        const auto si = std::lower_bound(ids.begin(), ids.end(), e.source) - ids.begin();
        const auto ti = std::lower_bound(ids.begin(), ids.end(), e.target) - ids.begin();
        f.adj[si][ti] = true;
    }
    return f;
}

inline void brute_extend(const FlatGraph& a, const FlatGraph& b, std::size_t i,
                         std::vector<int>& map_ab, std::vector<bool>& used_b, int mapped,
                         int& best) {
    if (mapped > best) best = mapped;
    if (i == a.labels.size()) return;
    // Upper bound: everything left could match.
    if (mapped + static_cast<int>(a.labels.size() - i) <= best) return;

    // Branch 1: leave a[i] unmatched.
    brute_extend(a, b, i + 1, map_ab, used_b, mapped, best);

    // Branch 2: match a[i] to every compatible b vertex.
    for (std::size_t j = 0; j < b.labels.size(); ++j) {
        if (used_b[j] || a.labels[i] != b.labels[j]) continue;
        bool ok = true;
        for (std::size_t k = 0; k < i && ok; ++k) {
            if (map_ab[k] < 0) continue;
            const auto bj = static_cast<std::size_t>(map_ab[k]);
            if (a.adj[i][k] != b.adj[j][bj] || a.adj[k][i] != b.adj[bj][j]) ok = false;
        }
        if (!ok) continue;
        map_ab[i] = static_cast<int>(j);
        used_b[j] = true;
        brute_extend(a, b, i + 1, map_ab, used_b, mapped + 1, best);
        used_b[j] = false;
        map_ab[i] = -1;
    }
}

}  // namespace detail

// Exhaustive maximum common induced subgraph size by enumerating every
// injective label-preserving map. Only sensible for small graphs (<= ~10
// nodes a side).
inline int mcis_brute_force(const WorkflowGraph& pred, const WorkflowGraph& gold) {
    const detail::FlatGraph a = detail::flatten(pred);
    const detail::FlatGraph b = detail::flatten(gold);
    std::vector<int> map_ab(a.labels.size(), -1);
    std::vector<bool> used_b(b.labels.size(), false);
    int best = 0;
    detail::brute_extend(a, b, 0, map_ab, used_b, 0, best);
    return best;
}

// ---------------------------------------------------------------------------
// Seeded generators for property and equivalence tests.
// ---------------------------------------------------------------------------

struct RandomDagOptions {
    int max_nodes = 8;
    int label_count = 5;
    double edge_prob = 0.35;
    bool sparse_ids = false;     // leave gaps in the id space
    bool rich_literals = false;  // attach literal bindings of every scalar kind
};

inline WorkflowGraph random_dag(SplitMix64& rng, const RandomDagOptions& opt = {}) {
    WorkflowGraph g;
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_nodes)));
    std::vector<NodeId> ids;
    NodeId id = 0;
    for (int i = 0; i < n; ++i) {
        id += opt.sparse_ids ? static_cast<NodeId>(1 + rng.below(3)) : 1;
        ids.push_back(id);
    }
    for (int i = 0; i < n; ++i) {
        NodeInstance node;
        node.id = ids[i];
        node.type_name = "T" + std::to_string(rng.below(static_cast<std::uint64_t>(opt.label_count)));
        int arg = 0;
        for (int j = 0; j < i; ++j) {
            if (rng.unit() < opt.edge_prob) {
                node.bindings["in" + std::to_string(arg++)] =
                    Link{ids[j], static_cast<std::int32_t>(rng.below(3))};
            }
        }
        if (opt.rich_literals) {
            const std::uint64_t kinds = rng.below(3);
            for (std::uint64_t k = 0; k < kinds; ++k) {
                const std::string name = "opt" + std::to_string(k);
                switch (rng.below(4)) {
                    case 0: node.bindings[name] = lit_bool(rng.below(2) == 1); break;
                    case 1:
                        node.bindings[name] =
                            lit_int(static_cast<std::int64_t>(rng.next()) % 1000000);
                        break;
                    case 2: {
                        const double mant = static_cast<double>(rng.below(1u << 20));
                        const int shift = static_cast<int>(rng.below(24));
                        node.bindings[name] = lit_float(mant / static_cast<double>(1u << shift));
                        break;
                    }
                    default: {
                        static const char* samples[] = {"plain", "with space", "quo\"te",
                                                        "line\nbreak", "tab\tchar", "uni\xc3\xa9"};
                        node.bindings[name] = lit_str(samples[rng.below(6)]);
                        break;
                    }
                }
            }
        }
        g.add(std::move(node));
    }
    return g;
}

inline std::vector<std::string> random_chain(SplitMix64& rng, int max_len, int alphabet) {
    const int len = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len + 1)));
    std::vector<std::string> chain;
    chain.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        chain.push_back(std::string(1, static_cast<char>('A' + rng.below(static_cast<std::uint64_t>(alphabet)))));
    }
    return chain;
}

}  // namespace wfkit::reference
