#pragma once

// Workflow intermediate representation: node instances with typed input
// bindings forming a labeled DAG. This is the canonical in-memory form both
// the JSON and the code representations compile to. All values are plain
// immutable-after-construction data; nothing here touches the filesystem.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "wfkit/error.hpp"

namespace wfkit {

using NodeId = std::int64_t;

enum class ParamKind { link, literal };

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::literal;
    std::string value_type;

    auto operator<=>(const ParamSpec&) const = default;
};

struct OutputSpec {
    std::string name;
    std::string value_type;

    auto operator<=>(const OutputSpec&) const = default;
};

// Documentation for one node type: what it is called, what it does, and the
// names/kinds of its input and output parameters.
struct NodeSpec {
    std::string type_name;
    std::string usage;
    std::vector<ParamSpec> inputs;
    std::vector<OutputSpec> outputs;
    std::string source;  // provenance tag, empty when unknown

    bool operator==(const NodeSpec&) const = default;

    // Identity used for exact-match deduplication (provenance excluded).
    auto content_key() const { return std::tie(type_name, usage, inputs, outputs); }
};

// Scalar literal carried by a binding. The alternative order matters only for
// serialization tags; construction always goes through the helpers below to
// avoid the const char* -> bool conversion trap.
using Scalar = std::variant<bool, std::int64_t, double, std::string>;

struct Literal {
    Scalar value;
    bool operator==(const Literal&) const = default;
};

inline Literal lit_bool(bool v) { return Literal{Scalar{v}}; }
inline Literal lit_int(std::int64_t v) { return Literal{Scalar{v}}; }
inline Literal lit_float(double v) { return Literal{Scalar{v}}; }
inline Literal lit_str(std::string v) { return Literal{Scalar{std::move(v)}}; }

// Reference to output `output_index` of node `source_id`.
struct Link {
    NodeId source_id = 0;
    std::int32_t output_index = 0;
    bool operator==(const Link&) const = default;
};

using Binding = std::variant<Literal, Link>;

inline bool is_link(const Binding& b) { return std::holds_alternative<Link>(b); }

struct NodeInstance {
    NodeId id = 0;
    std::string type_name;
    std::map<std::string, Binding> bindings;  // param name -> binding, sorted

    bool operator==(const NodeInstance&) const = default;
};

struct Edge {
    NodeId source = 0;
    std::int32_t output_index = 0;
    NodeId target = 0;
    std::string param;

    auto operator<=>(const Edge&) const = default;
};

struct WorkflowGraph {
    std::map<NodeId, NodeInstance> nodes;  // id -> instance, ascending id

    bool operator==(const WorkflowGraph&) const = default;

    bool empty() const { return nodes.empty(); }
    std::size_t size() const { return nodes.size(); }
    bool contains(NodeId id) const { return nodes.count(id) != 0; }

    void add(NodeInstance n) {
        const NodeId id = n.id;
        nodes.insert_or_assign(id, std::move(n));
    }
};

// Link edges whose source node exists, in (target, param) iteration order.
inline std::vector<Edge> edges_of(const WorkflowGraph& g) {
    std::vector<Edge> out;
    for (const auto& [id, node] : g.nodes) {
        for (const auto& [param, binding] : node.bindings) {
            if (const Link* l = std::get_if<Link>(&binding); l && g.contains(l->source_id)) {
                out.push_back(Edge{l->source_id, l->output_index, id, param});
            }
        }
    }
    return out;
}

struct ValidationReport {
    bool is_dag = true;
    std::optional<std::vector<NodeId>> cycle_witness;          // one cycle, when !is_dag
    std::vector<std::pair<NodeId, std::string>> dangling;      // (node, param) per bad link
    std::size_t isolated_nodes = 0;                            // nodes with no link edges at all

    bool ok() const { return is_dag && dangling.empty(); }
};

// Structural validation. Report-style: never throws, records every problem.
// Dangling links (references to absent node ids) are reported but do not
// participate in cycle detection.
inline ValidationReport validate_dag(const WorkflowGraph& g) {
    ValidationReport report;

    std::map<NodeId, std::vector<NodeId>> adj;
    std::set<NodeId> touched;
    for (const auto& [id, node] : g.nodes) {
        for (const auto& [param, binding] : node.bindings) {
            const Link* l = std::get_if<Link>(&binding);
            if (!l) continue;
            if (!g.contains(l->source_id)) {
                report.dangling.emplace_back(id, param);
                continue;
            }
            adj[l->source_id].push_back(id);
            touched.insert(l->source_id);
            touched.insert(id);
        }
    }
    for (auto& [id, targets] : adj) {
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    }
    for (const auto& [id, node] : g.nodes) {
        if (!touched.count(id)) ++report.isolated_nodes;
    }

    // Iterative tricolor DFS over ascending ids; records the first cycle found.
    enum class Mark : std::uint8_t { white, gray, black };
    std::map<NodeId, Mark> mark;
    for (const auto& [id, node] : g.nodes) mark[id] = Mark::white;

    std::vector<NodeId> stack;
    struct Frame {
        NodeId id;
        std::size_t next = 0;
    };
    for (const auto& [start, node] : g.nodes) {
        if (mark[start] != Mark::white) continue;
        std::vector<Frame> frames{{start}};
        mark[start] = Mark::gray;
        stack.push_back(start);
        static const std::vector<NodeId> kNoTargets;
        while (!frames.empty() && report.is_dag) {
            Frame& f = frames.back();
            const auto it = adj.find(f.id);
            const std::vector<NodeId>& targets = (it == adj.end()) ? kNoTargets : it->second;
            if (f.next < targets.size()) {
                const NodeId t = targets[f.next++];
                if (mark[t] == Mark::white) {
                    mark[t] = Mark::gray;
                    stack.push_back(t);
                    frames.push_back(Frame{t});
                } else if (mark[t] == Mark::gray) {
                    // Back edge: the cycle is the stack suffix starting at t.
                    report.is_dag = false;
                    std::vector<NodeId> cycle;
                    auto pos = std::find(stack.begin(), stack.end(), t);
                    cycle.assign(pos, stack.end());
                    report.cycle_witness = std::move(cycle);
                }
            } else {
                mark[f.id] = Mark::black;
                stack.pop_back();
                frames.pop_back();
            }
        }
        if (!report.is_dag) break;
    }
    return report;
}

// Kahn's algorithm with a min-id ready set, so identical graphs always yield
// identical orders. Dangling links are ignored here; validate_dag reports
// them. Throws CyclicGraph when no complete order exists.
inline std::vector<NodeId> topological_order(const WorkflowGraph& g) {
    std::map<NodeId, std::vector<NodeId>> adj;
    std::map<NodeId, std::size_t> indegree;
    for (const auto& [id, node] : g.nodes) indegree[id] = 0;
    for (const Edge& e : edges_of(g)) {
        adj[e.source].push_back(e.target);
        ++indegree[e.target];
    }

    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<NodeId>> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push(id);
    }

    std::vector<NodeId> order;
    order.reserve(g.size());
    while (!ready.empty()) {
        const NodeId id = ready.top();
        ready.pop();
        order.push_back(id);
        const auto it = adj.find(id);
        if (it == adj.end()) continue;
        for (const NodeId t : it->second) {
            if (--indegree[t] == 0) ready.push(t);
        }
    }
    if (order.size() != g.size()) {
        throw CyclicGraph("graph contains a directed cycle; no topological order exists");
    }
    return order;
}

// Deduplicated set of node type names present in the graph.
inline std::set<std::string> node_type_set(const WorkflowGraph& g) {
    std::set<std::string> types;
    for (const auto& [id, node] : g.nodes) types.insert(node.type_name);
    return types;
}

}  // namespace wfkit
