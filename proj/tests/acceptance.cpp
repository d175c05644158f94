// Acceptance suite: every release criterion, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#ifndef _WIN32
#include <sys/wait.h>
#endif

#include "wfkit/candidate.hpp"
#include "wfkit/codec.hpp"
#include "wfkit/fixtures.hpp"
#include "wfkit/grpo.hpp"
#include "wfkit/kb.hpp"
#include "wfkit/metrics.hpp"
#include "wfkit/pipeline.hpp"
#include "wfkit/reference.hpp"
#include "wfkit/reward.hpp"

using namespace wfkit;
namespace fs = std::filesystem;

namespace {

int failures = 0;
std::vector<std::string> notes;

void report(const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) {
        ++failures;
        for (const auto& n : notes) std::printf("       %s\n", n.c_str());
    }
    notes.clear();
}

void note(std::string text) { notes.push_back(std::move(text)); }

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string tagged_response(const std::vector<std::string>& selected, const std::string& code) {
    std::string text = "<selected_nodes>\n";
    for (const auto& s : selected) text += s + "\n";
    text += "</selected_nodes>\n<design_principle>\nplan\n</design_principle>\n<workflow>\n" +
            code + "</workflow>\n";
    return text;
}

std::string straight_chain(const std::vector<std::string>& types) {
    std::string code;
    for (std::size_t i = 0; i < types.size(); ++i) {
        code += "node_" + std::to_string(i + 1) + " = " + types[i] + "(";
        if (i > 0) code += "x=node_" + std::to_string(i) + "[0]";
        code += ")\n";
    }
    return code;
}

// ---------------------------------------------------------------------------

bool criterion_roundtrip(const FixtureSet& fixtures) {
    const auto start = std::chrono::steady_clock::now();

    if (fixtures.workflows.size() < 20) {
        note("fixture corpus too small: " + std::to_string(fixtures.workflows.size()));
        return false;
    }
    bool has21 = false;
    for (const auto& entry : fixtures.workflows.entries) {
        if (entry.graph.size() == 21) has21 = true;
        const WorkflowGraph& g = entry.graph;
        if (parse_code(emit_code(g)) != g || parse_json(emit_json(g)) != g) {
            note("fixture round-trip failed for " + entry.id);
            return false;
        }
    }
    if (!has21) {
        note("no 21-node fixture present");
        return false;
    }

    SplitMix64 rng(20240817);
    reference::RandomDagOptions opt;
    opt.max_nodes = 24;
    opt.sparse_ids = true;
    opt.rich_literals = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const WorkflowGraph g = reference::random_dag(rng, opt);
        if (parse_code(emit_code(g)) != g) {
            note("code round-trip failed at trial " + std::to_string(trial));
            return false;
        }
        if (parse_json(emit_json(g)) != g) {
            note("json round-trip failed at trial " + std::to_string(trial));
            return false;
        }
    }

    const double secs = elapsed_seconds(start);
    if (secs >= 10.0) {
        note("round-trip run took " + std::to_string(secs) + "s (budget 10s)");
        return false;
    }
    return true;
}

bool criterion_reward_table() {
    const std::set<std::string> cand{"A", "B", "C", "D", "E"};

    // The four worked examples, exact (tolerance 0).
    const RewardBreakdown full =
        score(tagged_response({"A", "B"}, straight_chain({"A", "B"})), cand, {"A", "B"});
    if (full.r_final != 1.0) {
        note("exact-selection reward is not 1.0");
        return false;
    }
    const RewardBreakdown half = score(tagged_response({"A", "B"}, straight_chain({"A", "B"})),
                                       cand, {"A", "B", "C", "D"});
    if (half.r_final != 0.875) {
        note("half-overlap reward is not 0.875");
        return false;
    }
    const RewardBreakdown hallucinated =
        score(tagged_response({"A", "Z"}, straight_chain({"A", "Z"})), cand, {"A", "B"});
    if (hallucinated.r_final != -1.0 || hallucinated.veto_reason != VetoReason::fidelity) {
        note("out-of-candidate selection must veto to -1");
        return false;
    }
    const RewardBreakdown cyclic =
        score(tagged_response({"A", "B"}, "node_1 = A(x=node_2[0])\nnode_2 = B(x=node_1[0])\n"),
              cand, {"A", "B"});
    if (cyclic.r_final != -1.0 || cyclic.veto_reason != VetoReason::dag) {
        note("cyclic workflow must veto to -1");
        return false;
    }

    // Exhaustive sweep against direct evaluation of the formulas.
    for (int g = 1; g <= 8; ++g) {
        std::set<std::string> gold, sweep_cand;
        for (int i = 0; i < g; ++i) gold.insert("G" + std::to_string(i));
        sweep_cand = gold;
        for (int k = 0; k <= g; ++k) {
            std::vector<std::string> sel;
            for (int i = 0; i < k; ++i) sel.push_back("G" + std::to_string(i));
            const RewardBreakdown b =
                score(tagged_response(sel, straight_chain(sel)), sweep_cand, gold);
            const double correctness =
                static_cast<double>(k) / static_cast<double>(g) - 1.0;
            const double direct = (4.0 + correctness) / 4.0;
            if (std::abs(b.r_final - direct) > 1e-12) {
                note("sweep mismatch at g=" + std::to_string(g) + " k=" + std::to_string(k));
                return false;
            }
            if (std::abs(b.r_correct - correctness) > 1e-12) {
                note("correctness mismatch at g=" + std::to_string(g) +
                     " k=" + std::to_string(k));
                return false;
            }
        }
    }
    return true;
}

bool criterion_grpo() {
    const auto a1 = group_advantages(std::vector<double>{1, 1, -1, -1});
    const double want1[] = {1, 1, -1, -1};
    for (int i = 0; i < 4; ++i) {
        if (std::abs(a1[i] - want1[i]) > 1e-12) {
            note("advantage table [1,1,-1,-1] mismatch");
            return false;
        }
    }
    for (const double v : group_advantages(std::vector<double>{0.875, 0.875, 0.875, 0.875})) {
        if (std::abs(v) > 1e-12) {
            note("constant group must normalize to zeros");
            return false;
        }
    }
    const auto a3 = group_advantages(std::vector<double>{1, 0});
    if (std::abs(a3[0] - 1.0) > 1e-12 || std::abs(a3[1] + 1.0) > 1e-12) {
        note("advantage table [1,0] mismatch");
        return false;
    }

    if (std::abs(kl_estimate(2.0) - 0.3068528194400547) > 1e-9) {
        note("kl_estimate(2) out of tolerance");
        return false;
    }

    if (clipped_term(1.5, 1.0, 0.2) != (1.0 + 0.2) * 1.0 ||
        clipped_term(0.5, -1.0, 0.2) != (1.0 - 0.2) * -1.0 ||
        clipped_term(1.0, 2.0, 0.2) != 2.0) {
        note("clipped_term hand values mismatch");
        return false;
    }

    GrpoConfig cfg;
    cfg.group_size = 2;
    cfg.kl_beta = 0.0;
    const std::vector<GroupSample> ex{{1, 1.5, 1}, {0, 1.0, 1}};
    if (std::abs(grpo_objective(ex, cfg) - 0.1) > 1e-12) {
        note("objective example must equal 0.1");
        return false;
    }
    return true;
}

bool criterion_mcis_oracle() {
    const auto start = std::chrono::steady_clock::now();
    SplitMix64 rng(8675309);
    reference::RandomDagOptions opt;
    opt.max_nodes = 8;
    opt.label_count = 3;
    for (int trial = 0; trial < 200; ++trial) {
        const WorkflowGraph a = reference::random_dag(rng, opt);
        const WorkflowGraph b = reference::random_dag(rng, opt);
        const McisResult m = mcis(a, b);
        if (!m.completed) {
            note("exact search exceeded its budget at trial " + std::to_string(trial));
            return false;
        }
        if (m.size != reference::mcis_brute_force(a, b)) {
            note("size disagreement at trial " + std::to_string(trial));
            return false;
        }
        if (!mapping_is_valid(a, b, m.mapping)) {
            note("invalid mapping at trial " + std::to_string(trial));
            return false;
        }
    }
    const double secs = elapsed_seconds(start);
    if (secs >= 60.0) {
        note("mcis oracle run took " + std::to_string(secs) + "s (budget 60s)");
        return false;
    }
    return true;
}

bool criterion_lcs_oracle() {
    SplitMix64 rng(13579);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = reference::random_chain(rng, 30, 5);
        const auto b = reference::random_chain(rng, 30, 5);
        if (node_chain_match(a, b) != reference::lcs_dp(a, b)) {
            note("LCS disagreement at trial " + std::to_string(trial));
            return false;
        }
    }
    return true;
}

bool criterion_metric_identities(const FixtureSet& fixtures) {
    for (const auto& entry : fixtures.workflows.entries) {
        const PairScores s = score_pair(render_script(entry.code), entry, fixtures.kb);
        if (!s.format_valid || s.node_p != 1.0 || s.node_r != 1.0 || s.node_f1 != 1.0 ||
            s.graph_p != 1.0 || s.graph_r != 1.0 || s.graph_f1 != 1.0) {
            note("self-score not perfect for " + entry.id);
            return false;
        }
    }
    return true;
}

bool criterion_corrupted_fixtures(const FixtureSet& fixtures) {
    // The manifest must actually contain every corrupted kind.
    const char* required[] = {"workflow_cycle", "code_unknown_node", "response_missing_tag",
                              "response_duplicate_tag", "response_hallucinated"};
    for (const char* kind : required) {
        bool present = false;
        for (const auto& item : fixtures.manifest.at("files")) {
            if (item.at("kind") == kind) present = true;
        }
        if (!present) {
            note(std::string("manifest lacks kind ") + kind);
            return false;
        }
    }
    // Every targeted check fails and every bystander check passes.
    const auto problems = verify_fixtures(fixtures.root);
    for (const auto& p : problems) note(p);
    return problems.empty();
}

bool criterion_candidate_rule() {
    NodeKB kb;
    for (int i = 0; i < 200; ++i) {
        NodeSpec s;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "Node%03d", i);
        s.type_name = buf;
        s.inputs.push_back(ParamSpec{"x", ParamKind::literal, "ANY"});
        s.outputs.push_back(OutputSpec{"out", "ANY"});
        kb.specs.emplace(s.type_name, s);
    }
    std::vector<std::string> names;
    for (const auto& [name, spec] : kb.specs) names.push_back(name);

    for (int g = 1; g <= 30; ++g) {
        std::set<std::string> gold(names.begin(), names.begin() + g);
        const CandidateSet c = build_candidate_set(gold, kb, 0.8, 7777);
        const std::size_t want = static_cast<std::size_t>((8 * g) / 10);  // floor(0.8 g)
        if (c.distractors.size() != want) {
            note("distractor count off at |gold|=" + std::to_string(g) + ": got " +
                 std::to_string(c.distractors.size()) + ", want " + std::to_string(want));
            return false;
        }
        const CandidateSet again = build_candidate_set(gold, kb, 0.8, 7777);
        if (candidate_to_json(c).dump() != candidate_to_json(again).dump()) {
            note("candidate set not byte-reproducible at |gold|=" + std::to_string(g));
            return false;
        }
    }
    return true;
}

bool criterion_pipeline_determinism(const fs::path& root) {
    const fs::path report_path = root / "acc_report.json";
    const fs::path config_path = root / "acc_run.toml";
    {
        std::ofstream cfg(config_path, std::ios::binary | std::ios::trunc);
        cfg << "seed = 42\n"
            << "nodes = " << fs::absolute(root / "fixtures/nodes.jsonl").string() << "\n"
            << "workflows = " << fs::absolute(root / "fixtures/workflows.jsonl").string() << "\n"
            << "samples = " << fs::absolute(root / "fixtures/samples.jsonl").string() << "\n"
            << "output = " << fs::absolute(report_path).string() << "\n";
    }
    const std::string cmd = std::string(WFKIT_BIN) + " pipeline --config " +
                            fs::absolute(config_path).string() + " > /dev/null 2>&1";

    auto run_once = [&]() -> int {
        const int rc = std::system(cmd.c_str());
#ifdef _WIN32
        return rc;
#else
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
#endif
    };

    if (run_once() != 0) {
        note("first pipeline run failed");
        return false;
    }
    const std::string first = slurp(report_path);
    if (run_once() != 0) {
        note("second pipeline run failed");
        return false;
    }
    const std::string second = slurp(report_path);
    if (first.empty() || first != second) {
        note("reports differ between runs");
        return false;
    }
    return true;
}

bool criterion_cleaning_idempotence(const FixtureSet& fixtures) {
    std::vector<RawWorkflow> raws;
    for (const auto& entry : fixtures.workflows.entries) {
        raws.push_back({entry.description, emit_json(entry.graph)});
    }
    // Mix in records every rejection rule catches.
    raws.push_back({"cycle",
                    R"({"1":{"class_type":"EncodeLatent","inputs":{"image":["2",0]}},)"
                    R"("2":{"class_type":"DecodeLatent","inputs":{"image":["1",0]}}})"});
    raws.push_back(raws[0]);  // duplicate
    raws.push_back({"ghost", R"({"1":{"class_type":"GhostNode","inputs":{}}})"});

    const std::set<std::string> denylist{"Anything Anywhere"};
    const auto [first, stats1] = clean_workflows(raws, fixtures.kb, denylist);
    if (!stats1.conserved()) {
        note("first-pass stats do not sum to the input count");
        return false;
    }
    if (stats1.retained != fixtures.workflows.size()) {
        note("clean fixture subset must be retained in full");
        return false;
    }

    std::vector<RawWorkflow> again;
    for (const auto& entry : first.entries) {
        again.push_back({entry.description, emit_json(entry.graph)});
    }
    const auto [second, stats2] = clean_workflows(again, fixtures.kb, denylist);
    if (!stats2.conserved()) {
        note("second-pass stats do not sum to the input count");
        return false;
    }
    if (!(second == first)) {
        note("clean(clean(X)) differs from clean(X)");
        return false;
    }

    // Node pipeline idempotence as well.
    std::vector<NodeSpec> node_records;
    for (const auto& [name, spec] : fixtures.kb.specs) node_records.push_back(spec);
    const auto [kb1, nstats1] = clean_nodes(node_records);
    std::vector<NodeSpec> node_again;
    for (const auto& [name, spec] : kb1.specs) node_again.push_back(spec);
    const auto [kb2, nstats2] = clean_nodes(node_again);
    if (!(kb1 == kb2) || !nstats1.conserved() || !nstats2.conserved()) {
        note("node cleaning not idempotent or stats not conserved");
        return false;
    }
    return true;
}

}  // namespace

int main() {
    const fs::path root = fs::path("wfkit_test_tmp") / "acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const FixtureSet fixtures = generate_fixtures(42, root / "fixtures");

    report("round-trip: fixture corpus + 1000 random DAGs under 10s",
           criterion_roundtrip(fixtures));
    report("reward exact-value table and full |gold| x overlap sweep",
           criterion_reward_table());
    report("grpo numerics: advantages, kl, clip, objective", criterion_grpo());
    report("mcis equals brute force on 200 random pairs under 60s", criterion_mcis_oracle());
    report("node-chain match equals DP oracle on 500 chain pairs", criterion_lcs_oracle());
    report("metric identities: every fixture scores 1.0 against itself",
           criterion_metric_identities(fixtures));
    report("corrupted fixtures trip exactly their targeted checks",
           criterion_corrupted_fixtures(fixtures));
    report("candidate rule: floor(0.8|gold|) for |gold| 1..30, byte-reproducible",
           criterion_candidate_rule());
    report("pipeline determinism: byte-identical reports across runs",
           criterion_pipeline_determinism(root));
    report("kb cleaning idempotence and stats conservation",
           criterion_cleaning_idempotence(fixtures));

    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
    } else {
        std::printf("acceptance: %d criteria FAILED\n", failures);
    }
    return failures == 0 ? 0 : 1;
}
