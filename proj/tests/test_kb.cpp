#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "wfkit/kb.hpp"
#include "wfkit/reference.hpp"

using namespace wfkit;
namespace fs = std::filesystem;

namespace {

NodeSpec spec(std::string name, int n_inputs = 1, int n_outputs = 1,
              std::string usage = "does things") {
    NodeSpec s;
    s.type_name = std::move(name);
    s.usage = std::move(usage);
    for (int i = 0; i < n_inputs; ++i) {
        s.inputs.push_back(ParamSpec{"in" + std::to_string(i),
                                     i == 0 ? ParamKind::link : ParamKind::literal, "ANY"});
    }
    for (int i = 0; i < n_outputs; ++i) {
        s.outputs.push_back(OutputSpec{"out" + std::to_string(i), "ANY"});
    }
    return s;
}

NodeSpec source_spec(std::string name) {
    NodeSpec s;
    s.type_name = std::move(name);
    s.usage = "produces a value";
    s.inputs.push_back(ParamSpec{"value", ParamKind::literal, "ANY"});
    s.outputs.push_back(OutputSpec{"out", "ANY"});
    return s;
}

NodeKB small_kb() {
    NodeKB kb;
    for (const auto& s : {source_spec("Src"), spec("Mid"), spec("Sink"), spec("Relay")}) {
        kb.specs.emplace(s.type_name, s);
    }
    NodeSpec join;  // two link inputs: can never be spliced through
    join.type_name = "Join";
    join.usage = "merges two streams";
    join.inputs.push_back(ParamSpec{"in0", ParamKind::link, "ANY"});
    join.inputs.push_back(ParamSpec{"in1", ParamKind::link, "ANY"});
    join.outputs.push_back(OutputSpec{"out", "ANY"});
    kb.specs.emplace(join.type_name, join);
    return kb;
}

std::string wf_json(const std::string& body) { return "{" + body + "}"; }

const std::string kSimple = wf_json(
    R"("1":{"class_type":"Src","inputs":{"value":1}},)"
    R"("2":{"class_type":"Sink","inputs":{"in0":["1",0]}})");

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::path("wfkit_test_tmp") / name;
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("kb") {

TEST_CASE("clean_nodes dedups exactly, then drops missing io") {
    const NodeSpec a = source_spec("A");
    NodeSpec b = spec("B");
    b.outputs.clear();
    const auto [kb, stats] = clean_nodes({a, a, b});
    CHECK(kb.size() == 1);
    CHECK(kb.contains("A"));
    CHECK(stats.duplicate == 1);
    CHECK(stats.missing_io == 1);
    CHECK(stats.retained == 1);
    CHECK(stats.conserved());
}

TEST_CASE("clean_nodes keeps the first spec when names collide") {
    NodeSpec v1 = source_spec("A");
    NodeSpec v2 = source_spec("A");
    v2.usage = "different text";
    const auto [kb, stats] = clean_nodes({v1, v2});
    CHECK(kb.size() == 1);
    CHECK(kb.specs.at("A").usage == v1.usage);
    CHECK(stats.duplicate == 1);
    CHECK(stats.conserved());
}

TEST_CASE("clean_nodes on the empty list") {
    const auto [kb, stats] = clean_nodes({});
    CHECK(kb.size() == 0);
    CHECK(stats.conserved());
}

TEST_CASE("clean_nodes retains all valid distinct specs") {
    std::vector<NodeSpec> specs;
    for (int i = 0; i < 5; ++i) specs.push_back(source_spec("N" + std::to_string(i)));
    const auto [kb, stats] = clean_nodes(specs);
    CHECK(kb.size() == 5);
    CHECK(stats.retained == 5);
    CHECK(stats.conserved());
}

TEST_CASE("clean_nodes rejects empty type names") {
    NodeSpec anon = source_spec("");
    const auto [kb, stats] = clean_nodes({anon});
    CHECK(kb.size() == 0);
    CHECK(stats.invalid_structure == 1);
    CHECK(stats.conserved());
}

TEST_CASE("clean_workflows rejects unknown node types") {
    const NodeKB kb = small_kb();
    const std::string bad = wf_json(R"("1":{"class_type":"Zz","inputs":{"value":1}})");
    const auto [wkb, stats] = clean_workflows({{"desc", bad}}, kb, {});
    CHECK(wkb.size() == 0);
    CHECK(stats.unknown_node == 1);
    CHECK(stats.conserved());
}

TEST_CASE("clean_workflows drops exact duplicates on canonical form") {
    const NodeKB kb = small_kb();
    // Same workflow, different key order and whitespace.
    const std::string reordered =
        "{ \"2\":{\"class_type\":\"Sink\",\"inputs\":{\"in0\":[\"1\",0]}}, "
        "\"1\":{\"class_type\":\"Src\",\"inputs\":{\"value\":1}} }";
    const auto [wkb, stats] =
        clean_workflows({{"a", kSimple}, {"b", reordered}}, kb, {});
    CHECK(wkb.size() == 1);
    CHECK(stats.duplicate == 1);
    CHECK(stats.conserved());
}

TEST_CASE("clean_workflows rejects structural failures") {
    const NodeKB kb = small_kb();
    const std::string cyclic = wf_json(
        R"("1":{"class_type":"Mid","inputs":{"in0":["2",0]}},)"
        R"("2":{"class_type":"Mid","inputs":{"in0":["1",0]}})");
    const std::string dangling = wf_json(
        R"("1":{"class_type":"Mid","inputs":{"in0":["99",0]}})");
    const std::string not_json = "{oops";
    const std::string bad_arity = wf_json(
        R"("1":{"class_type":"Src","inputs":{"value":1}},)"
        R"("2":{"class_type":"Sink","inputs":{"in0":["1",7]}})");  // Src has 1 output
    const auto [wkb, stats] = clean_workflows(
        {{"c", cyclic}, {"d", dangling}, {"j", not_json}, {"a", bad_arity}}, kb, {});
    CHECK(wkb.size() == 0);
    CHECK(stats.invalid_structure == 4);
    CHECK(stats.conserved());
}

TEST_CASE("clean_workflows requires declared link params to be linked") {
    const NodeKB kb = small_kb();
    // Sink.in0 is declared link-kind but bound with a literal.
    const std::string literal_bound = wf_json(
        R"("1":{"class_type":"Sink","inputs":{"in0":5}})");
    const auto [wkb, stats] = clean_workflows({{"x", literal_bound}}, kb, {});
    CHECK(wkb.size() == 0);
    CHECK(stats.invalid_structure == 1);
}

TEST_CASE("clean_workflows splices a denylisted relay and keeps the workflow") {
    const NodeKB kb = small_kb();
    const std::string with_relay = wf_json(
        R"("1":{"class_type":"Src","inputs":{"value":1}},)"
        R"("2":{"class_type":"Relay","inputs":{"in0":["1",0]}},)"
        R"("3":{"class_type":"Sink","inputs":{"in0":["2",0]}})");
    const auto [wkb, stats] = clean_workflows({{"r", with_relay}}, kb, {"Relay"});
    REQUIRE(wkb.size() == 1);
    CHECK(stats.relays_spliced == 1);
    CHECK(stats.retained == 1);
    CHECK(stats.conserved());

    // The consumer now reads straight from the source; hand-built expectation.
    const WorkflowGraph& g = wkb.entries[0].graph;
    REQUIRE(g.size() == 2);
    CHECK(g.nodes.at(3).bindings.at("in0") == Binding{Link{1, 0}});
    CHECK(edges_of(g).size() == 1);
    CHECK(node_type_set(g) == std::set<std::string>{"Src", "Sink"});
}

TEST_CASE("clean_workflows rejects unspliceable denylisted nodes") {
    const NodeKB kb = small_kb();
    // Join has two link inputs feeding its consumer: no single through-path.
    const std::string two_in = wf_json(
        R"("1":{"class_type":"Src","inputs":{"value":1}},)"
        R"("2":{"class_type":"Src","inputs":{"value":2}},)"
        R"("3":{"class_type":"Join","inputs":{"in0":["1",0],"in1":["2",0]}},)"
        R"("4":{"class_type":"Sink","inputs":{"in0":["3",0]}})");
    const auto [wkb, stats] = clean_workflows({{"h", two_in}}, kb, {"Join"});
    CHECK(wkb.size() == 0);
    CHECK(stats.denylisted_stripped == 1);
    CHECK(stats.conserved());
}

TEST_CASE("clean_workflows dedups workflows that collide after splicing") {
    const NodeKB kb = small_kb();
    const std::string plain = kSimple;
    const std::string with_relay = wf_json(
        R"("1":{"class_type":"Src","inputs":{"value":1}},)"
        R"("2":{"class_type":"Sink","inputs":{"in0":["5",0]}},)"
        R"("5":{"class_type":"Relay","inputs":{"in0":["1",0]}})");
    const auto [wkb, stats] =
        clean_workflows({{"a", plain}, {"b", with_relay}}, kb, {"Relay"});
    CHECK(wkb.size() == 1);
    CHECK(stats.duplicate == 1);
    CHECK(stats.conserved());
}

TEST_CASE("clean_workflows is idempotent and retained entries re-pass all rules") {
    const NodeKB kb = small_kb();
    std::vector<RawWorkflow> raws;
    raws.push_back({"simple", kSimple});
    raws.push_back({"relay", wf_json(
        R"("1":{"class_type":"Src","inputs":{"value":2}},)"
        R"("2":{"class_type":"Relay","inputs":{"in0":["1",0]}},)"
        R"("3":{"class_type":"Sink","inputs":{"in0":["2",0]}})")});
    raws.push_back({"dup", kSimple});
    raws.push_back({"zz", wf_json(R"("1":{"class_type":"Zz","inputs":{"value":1}})")});

    const auto [first, stats1] = clean_workflows(raws, kb, {"Relay"});
    CHECK(stats1.conserved());
    REQUIRE(first.size() == 2);

    std::vector<RawWorkflow> again;
    for (const auto& e : first.entries) again.push_back({e.description, emit_json(e.graph)});
    const auto [second, stats2] = clean_workflows(again, kb, {"Relay"});
    CHECK(stats2.retained == first.size());
    CHECK(stats2.conserved());
    CHECK(second == first);

    // Post-hoc: every retained entry satisfies all five rules.
    for (const auto& e : first.entries) {
        CHECK(validate_dag(e.graph).ok());
        for (const auto& [id, node] : e.graph.nodes) {
            CHECK(kb.contains(node.type_name));
            CHECK(node.type_name != "Relay");
        }
        CHECK(parse_code(emit_code(e.graph)) == e.graph);
        CHECK(parse_json(emit_json(e.graph)) == e.graph);
    }
}

TEST_CASE("property: cleaning random corpora is idempotent with conserved stats") {
    SplitMix64 rng(606);
    reference::RandomDagOptions opt;
    opt.max_nodes = 6;
    opt.label_count = 4;  // types T0..T3
    NodeKB kb;
    for (int i = 0; i < 4; ++i) {
        NodeSpec s;
        s.type_name = "T" + std::to_string(i);
        s.usage = "synthetic";
        s.inputs.push_back(ParamSpec{"seed", ParamKind::literal, "INT"});
        s.outputs.push_back(OutputSpec{"out0", "ANY"});
        s.outputs.push_back(OutputSpec{"out1", "ANY"});
        s.outputs.push_back(OutputSpec{"out2", "ANY"});
        kb.specs.emplace(s.type_name, s);
    }

    for (int round = 0; round < 10; ++round) {
        std::vector<RawWorkflow> raws;
        for (int i = 0; i < 12; ++i) {
            const WorkflowGraph g = reference::random_dag(rng, opt);
            std::string json = emit_json(g);
            switch (rng.below(5)) {
                case 0: raws.push_back(raws.empty() ? RawWorkflow{"d", json}
                                                    : raws.back());  // duplicate
                    break;
                case 1: json.resize(json.size() / 2); raws.push_back({"trunc", json}); break;
                case 2:
                    raws.push_back({"ghost",
                                    R"({"1":{"class_type":"Ghost","inputs":{}}})"});
                    break;
                default: raws.push_back({"w" + std::to_string(i), json});
            }
        }
        const auto [first, s1] = clean_workflows(raws, kb, {"T3"});
        REQUIRE(s1.conserved());

        std::vector<RawWorkflow> again;
        for (const auto& e : first.entries) again.push_back({e.description, emit_json(e.graph)});
        const auto [second, s2] = clean_workflows(again, kb, {"T3"});
        REQUIRE(s2.conserved());
        REQUIRE(s2.retained == first.size());
        REQUIRE(second == first);
    }
}

TEST_CASE("node KB persistence round-trips") {
    const fs::path dir = temp_dir("kb_nodes");
    NodeKB kb;
    NodeSpec tagged = spec("Tagged", 2, 2, "usage text with \"quotes\" and\nnewlines");
    tagged.source = "unit-test";
    kb.specs.emplace(tagged.type_name, tagged);
    kb.specs.emplace("Plain", source_spec("Plain"));

    const fs::path path = dir / "nodes.jsonl";
    save_nodes(kb, path);
    CHECK(load_nodes(path) == kb);
}

TEST_CASE("workflow KB persistence round-trips") {
    const fs::path dir = temp_dir("kb_workflows");
    const NodeKB kb = small_kb();
    const auto [wkb, stats] = clean_workflows({{"desc one", kSimple}}, kb, {});
    REQUIRE(wkb.size() == 1);

    const fs::path path = dir / "workflows.jsonl";
    save_workflows(wkb, path);
    CHECK(load_workflows(path) == wkb);
}

TEST_CASE("load reports corrupt records with their line number") {
    const fs::path dir = temp_dir("kb_corrupt");
    const fs::path path = dir / "nodes.jsonl";
    {
        std::ofstream out(path, std::ios::binary);
        out << node_spec_to_json(source_spec("Ok")).dump() << "\n";
        out << "{\"type_name\":\"Trunc";  // cut mid-record
    }
    try {
        load_nodes(path);
        FAIL("expected CorruptRecord");
    } catch (const CorruptRecord& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("loading an empty file yields an empty KB") {
    const fs::path dir = temp_dir("kb_empty");
    const fs::path path = dir / "nodes.jsonl";
    std::ofstream(path, std::ios::binary).close();
    CHECK(load_nodes(path).size() == 0);
    const fs::path wpath = dir / "workflows.jsonl";
    std::ofstream(wpath, std::ios::binary).close();
    CHECK(load_workflows(wpath).size() == 0);
}

TEST_CASE("loading a missing file is an IoError") {
    CHECK_THROWS_AS(load_nodes("wfkit_test_tmp/definitely_missing.jsonl"), IoError);
}

}  // TEST_SUITE
