#include <doctest.h>

#include <algorithm>
#include <set>

#include "wfkit/ir.hpp"
#include "wfkit/reference.hpp"

using namespace wfkit;

namespace {

NodeInstance make_node(NodeId id, std::string type) {
    NodeInstance n;
    n.id = id;
    n.type_name = std::move(type);
    return n;
}

WorkflowGraph two_node_chain() {
    WorkflowGraph g;
    g.add(make_node(1, "A"));
    NodeInstance b = make_node(2, "B");
    b.bindings["x"] = Link{1, 0};
    g.add(std::move(b));
    return g;
}

}  // namespace

TEST_SUITE("ir") {

TEST_CASE("validate_dag accepts a two-node path") {
    const auto report = validate_dag(two_node_chain());
    CHECK(report.is_dag);
    CHECK(report.dangling.empty());
    CHECK(report.ok());
    CHECK(report.isolated_nodes == 0);
}

TEST_CASE("validate_dag reports a 2-cycle with witness") {
    WorkflowGraph g;
    NodeInstance a = make_node(1, "A");
    a.bindings["x"] = Link{2, 0};
    NodeInstance b = make_node(2, "B");
    b.bindings["y"] = Link{1, 0};
    g.add(std::move(a));
    g.add(std::move(b));

    const auto report = validate_dag(g);
    CHECK_FALSE(report.is_dag);
    REQUIRE(report.cycle_witness.has_value());
    std::vector<NodeId> witness = *report.cycle_witness;
    std::sort(witness.begin(), witness.end());
    CHECK(witness == std::vector<NodeId>{1, 2});
}

TEST_CASE("validate_dag reports dangling links") {
    WorkflowGraph g;
    g.add(make_node(1, "A"));
    NodeInstance b = make_node(2, "B");
    b.bindings["x"] = Link{99, 0};
    g.add(std::move(b));

    const auto report = validate_dag(g);
    CHECK(report.is_dag);
    REQUIRE(report.dangling.size() == 1);
    CHECK(report.dangling[0] == std::pair<NodeId, std::string>{2, "x"});
    CHECK_FALSE(report.ok());
}

TEST_CASE("validate_dag counts isolated nodes") {
    WorkflowGraph g = two_node_chain();
    g.add(make_node(9, "Lone"));
    const auto report = validate_dag(g);
    CHECK(report.ok());
    CHECK(report.isolated_nodes == 1);
}

TEST_CASE("topological_order on a singleton") {
    WorkflowGraph g;
    g.add(make_node(7, "Only"));
    CHECK(topological_order(g) == std::vector<NodeId>{7});
}

TEST_CASE("topological_order uses min-id tie-break") {
    // 3 feeds both 1 and 2: order must be [3, 1, 2].
    WorkflowGraph g;
    g.add(make_node(3, "Src"));
    NodeInstance n1 = make_node(1, "A");
    n1.bindings["x"] = Link{3, 0};
    NodeInstance n2 = make_node(2, "B");
    n2.bindings["x"] = Link{3, 0};
    g.add(std::move(n1));
    g.add(std::move(n2));
    CHECK(topological_order(g) == std::vector<NodeId>{3, 1, 2});
}

TEST_CASE("topological_order with no edges is id order") {
    WorkflowGraph g;
    g.add(make_node(5, "B"));
    g.add(make_node(2, "A"));
    CHECK(topological_order(g) == std::vector<NodeId>{2, 5});
}

TEST_CASE("topological_order throws on cycles") {
    WorkflowGraph g;
    NodeInstance a = make_node(1, "A");
    a.bindings["x"] = Link{2, 0};
    NodeInstance b = make_node(2, "B");
    b.bindings["y"] = Link{1, 0};
    g.add(std::move(a));
    g.add(std::move(b));
    CHECK_THROWS_AS(topological_order(g), CyclicGraph);
}

TEST_CASE("node_type_set deduplicates") {
    WorkflowGraph g;
    g.add(make_node(1, "LoadImage"));
    g.add(make_node(2, "LoadImage"));
    g.add(make_node(3, "SaveImage"));
    CHECK(node_type_set(g) == std::set<std::string>{"LoadImage", "SaveImage"});
}

TEST_CASE("node_type_set of empty graph is empty") {
    CHECK(node_type_set(WorkflowGraph{}).empty());
}

TEST_CASE("node_type_set keeps distinct types") {
    WorkflowGraph g;
    g.add(make_node(1, "A"));
    g.add(make_node(2, "B"));
    g.add(make_node(3, "C"));
    CHECK(node_type_set(g).size() == 3);
}

TEST_CASE("property: topological order is a valid permutation respecting edges") {
    SplitMix64 rng(2024);
    reference::RandomDagOptions opt;
    opt.max_nodes = 12;
    opt.sparse_ids = true;
    for (int trial = 0; trial < 200; ++trial) {
        const WorkflowGraph g = reference::random_dag(rng, opt);
        const auto order = topological_order(g);
        REQUIRE(order.size() == g.size());

        std::map<NodeId, std::size_t> pos;
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        for (const auto& [id, node] : g.nodes) REQUIRE(pos.count(id) == 1);
        for (const Edge& e : edges_of(g)) REQUIRE(pos[e.source] < pos[e.target]);

        // Determinism: a second run yields the identical order.
        CHECK(topological_order(g) == order);
    }
}

TEST_CASE("property: validate_dag.is_dag iff topological_order succeeds") {
    SplitMix64 rng(77);
    reference::RandomDagOptions opt;
    opt.max_nodes = 8;
    for (int trial = 0; trial < 200; ++trial) {
        WorkflowGraph g = reference::random_dag(rng, opt);
        // Half the time, try to close a cycle by linking the first node back
        // to the last one.
        if (trial % 2 == 1 && g.size() >= 2) {
            const NodeId first = g.nodes.begin()->first;
            const NodeId last = g.nodes.rbegin()->first;
            g.nodes.at(first).bindings["back"] = Link{last, 0};
        }
        const bool is_dag = validate_dag(g).is_dag;
        bool ordered = true;
        try {
            topological_order(g);
        } catch (const CyclicGraph&) {
            ordered = false;
        }
        CHECK(is_dag == ordered);
    }
}

TEST_CASE("property: node_type_set invariant under id renumbering") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const WorkflowGraph g = reference::random_dag(rng);
        WorkflowGraph renumbered;
        std::map<NodeId, NodeId> remap;
        NodeId next = 1000;
        for (const auto& [id, node] : g.nodes) remap[id] = next++;
        for (const auto& [id, node] : g.nodes) {
            NodeInstance copy = node;
            copy.id = remap[id];
            for (auto& [param, binding] : copy.bindings) {
                if (Link* l = std::get_if<Link>(&binding)) l->source_id = remap[l->source_id];
            }
            renumbered.add(std::move(copy));
        }
        CHECK(node_type_set(g) == node_type_set(renumbered));
    }
}

}  // TEST_SUITE
