#pragma once

// Batch pipeline (retrieve -> candidates -> reward -> metrics -> aggregate)
// and the selfcheck oracle suites. Both are library functions so the CLI and
// the tests drive the identical code path.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfkit/candidate.hpp"
#include "wfkit/config.hpp"
#include "wfkit/fixtures.hpp"
#include "wfkit/grpo.hpp"
#include "wfkit/metrics.hpp"
#include "wfkit/reference.hpp"
#include "wfkit/retrieval.hpp"
#include "wfkit/retrieval_http.hpp"
#include "wfkit/reward.hpp"
#include "wfkit/version.hpp"

namespace wfkit {

inline std::unique_ptr<EmbeddingProvider> make_provider(const RetrievalConfig& cfg) {
    if (cfg.provider == "remote") {
        HttpProviderConfig http;
        http.endpoint = cfg.endpoint;
        http.model = cfg.model;
        http.api_key_env = cfg.api_key_env;
        http.dim = cfg.dim;
        return std::make_unique<HttpEmbeddingProvider>(http);
    }
    return std::make_unique<HashEmbeddingProvider>();
}

struct PipelineSample {
    std::string id;
    std::string query;
    std::string response;
    std::string gold_id;
};

struct SampleLoad {
    std::vector<PipelineSample> samples;
    std::vector<std::pair<std::string, std::string>> bad_lines;  // (pseudo id, error)
};

// One sample per JSONL line: {"id", "query", "response", "gold_id"}. Corrupt
// lines are collected, not fatal; the pipeline reports them as failures.
inline SampleLoad load_samples(const std::filesystem::path& path) {
    SampleLoad out;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::only_whitespace(lines[i])) continue;
        try {
            const auto j = nlohmann::json::parse(lines[i]);
            PipelineSample s;
            s.id = j.at("id").get<std::string>();
            s.query = j.at("query").get<std::string>();
            s.response = j.at("response").get<std::string>();
            s.gold_id = j.at("gold_id").get<std::string>();
            out.samples.push_back(std::move(s));
        } catch (const std::exception& e) {
            out.bad_lines.emplace_back("line_" + std::to_string(i + 1), e.what());
        }
    }
    return out;
}

// Runs the full per-sample pipeline and renders one deterministic report.
// Per-sample failures are recorded and skipped, never fatal.
inline std::string run_pipeline(const RunConfig& config, std::ostream& log) {
    if (config.nodes_path.empty() || config.workflows_path.empty() ||
        config.samples_path.empty()) {
        throw ConfigError("pipeline needs nodes, workflows and samples paths");
    }
    const NodeKB kb = load_nodes(config.nodes_path);
    const WorkflowKB workflows = load_workflows(config.workflows_path);

    std::unique_ptr<EmbeddingProvider> base_provider = make_provider(config.retrieval);
    std::unique_ptr<CachingProvider> cached;
    EmbeddingProvider* provider = base_provider.get();
    if (!config.retrieval.cache_dir.empty()) {
        cached = std::make_unique<CachingProvider>(*base_provider, config.retrieval.cache_dir);
        provider = cached.get();
    }
    const WorkflowIndex index = build_index(workflows, *provider);

    struct RowData {
        PipelineSample sample;
        std::vector<RetrievalHit> hits;
        std::size_t candidate_count = 0;
        RewardBreakdown reward;
        PairScores scores;
    };

    std::vector<RowData> rows;
    std::vector<std::pair<std::string, std::string>> failures;  // (id, error)

    const SampleLoad loaded = load_samples(config.samples_path);
    for (const auto& [id, what] : loaded.bad_lines) {
        failures.emplace_back(id, what);
        log << "sample '" << id << "' failed: " << what << "\n";
    }

    for (const PipelineSample& sample : loaded.samples) {
        try {
            const WorkflowEntry* gold = workflows.find(sample.gold_id);
            if (!gold) throw Error("gold workflow '" + sample.gold_id + "' not in KB");

            RowData row;
            row.sample = sample;
            row.hits = top_k(sample.query, index, *provider, config.retrieval.k);
            std::vector<std::string> hit_ids;
            for (const auto& h : row.hits) hit_ids.push_back(h.id);
            const std::set<std::string> cand = candidates_from_workflows(hit_ids, workflows);
            row.candidate_count = cand.size();

            const std::set<std::string> gold_types = node_type_set(gold->graph);
            row.reward = score(sample.response, cand, gold_types);

            const TagExtract wf_tag = extract_tag(sample.response, "workflow");
            row.scores = score_pair(wf_tag.ok() ? wf_tag.content : "", *gold, kb);
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            failures.emplace_back(sample.id, e.what());
            log << "sample '" << sample.id << "' failed: " << e.what() << "\n";
        }
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const RowData& a, const RowData& b) { return a.sample.id < b.sample.id; });

    nlohmann::ordered_json report;
    report["schema_version"] = kReportSchemaVersion;
    report["toolkit_version"] = kVersion;
    report["seed"] = config.seed;
    report["config_hash"] = config.config_hash;
    report["samples"] = loaded.samples.size() + loaded.bad_lines.size();
    report["failures"] = failures.size();
    nlohmann::ordered_json failed = nlohmann::ordered_json::array();
    for (const auto& [id, what] : failures) {
        failed.push_back({{"id", id}, {"error", what}});
    }
    report["failed_samples"] = std::move(failed);

    nlohmann::ordered_json stages;
    {
        nlohmann::ordered_json retrieval;
        retrieval["provider"] = provider->id();
        retrieval["k"] = config.retrieval.k;
        double mean_cand = 0;
        for (const RowData& r : rows) mean_cand += static_cast<double>(r.candidate_count);
        retrieval["mean_candidate_count"] =
            rows.empty() ? 0.0 : mean_cand / static_cast<double>(rows.size());
        stages["retrieval"] = std::move(retrieval);
    }
    {
        nlohmann::ordered_json reward_stage;
        double mean_final = 0;
        std::size_t vetoes_format = 0, vetoes_dag = 0, vetoes_fidelity = 0;
        for (const RowData& r : rows) {
            mean_final += r.reward.r_final;
            if (r.reward.veto_reason == VetoReason::format) ++vetoes_format;
            if (r.reward.veto_reason == VetoReason::dag) ++vetoes_dag;
            if (r.reward.veto_reason == VetoReason::fidelity) ++vetoes_fidelity;
        }
        reward_stage["mean_final"] =
            rows.empty() ? 0.0 : mean_final / static_cast<double>(rows.size());
        reward_stage["vetoes"] = {{"format", vetoes_format},
                                  {"dag", vetoes_dag},
                                  {"fidelity", vetoes_fidelity}};
        stages["reward"] = std::move(reward_stage);
    }
    if (!rows.empty()) {
        std::vector<EvalReport::Row> eval_rows;
        for (const RowData& r : rows) eval_rows.push_back({r.sample.id, r.scores});
        const EvalReport eval = aggregate(eval_rows);
        nlohmann::ordered_json eval_json;
        eval_json["format_validity"] = eval.format_validity_rate;
        eval_json["node_p"] = eval.node_p;
        eval_json["node_r"] = eval.node_r;
        eval_json["node_f1"] = eval.node_f1;
        eval_json["graph_p"] = eval.graph_p;
        eval_json["graph_r"] = eval.graph_r;
        eval_json["graph_f1"] = eval.graph_f1;
        stages["eval"] = std::move(eval_json);
    }
    report["stages"] = std::move(stages);

    nlohmann::ordered_json per_sample = nlohmann::ordered_json::array();
    for (const RowData& r : rows) {
        nlohmann::ordered_json row;
        row["id"] = r.sample.id;
        row["gold_id"] = r.sample.gold_id;
        nlohmann::ordered_json hits = nlohmann::ordered_json::array();
        for (const auto& h : r.hits) {
            hits.push_back({{"id", h.id}, {"similarity", h.similarity}});
        }
        row["retrieved"] = std::move(hits);
        row["candidate_count"] = r.candidate_count;
        row["reward"] = breakdown_to_json(r.reward);
        row["scores"] = pair_scores_to_json(r.scores);
        per_sample.push_back(std::move(row));
    }
    report["per_sample"] = std::move(per_sample);

    const std::string bytes = report.dump(2) + "\n";
    if (!config.output_path.empty()) {
        if (!config.output_path.parent_path().empty()) {
            std::filesystem::create_directories(config.output_path.parent_path());
        }
        detail::write_text(config.output_path, bytes);
    }
    return bytes;
}

// ---------------------------------------------------------------------------
// Selfcheck: oracle suites with hardcoded expected values plus randomized
// equivalence runs against the reference implementations.
// ---------------------------------------------------------------------------

namespace selfcheck_detail {

inline std::string straight_chain(const std::vector<std::string>& types) {
    std::string code;
    for (std::size_t i = 0; i < types.size(); ++i) {
        code += "node_" + std::to_string(i + 1) + " = " + types[i] + "(";
        if (i > 0) code += "x=node_" + std::to_string(i) + "[0]";
        code += ")\n";
    }
    return code;
}

inline std::string tagged_response(const std::vector<std::string>& selected,
                                   const std::string& code) {
    std::string text = "<selected_nodes>\n";
    for (const auto& s : selected) text += s + "\n";
    text += "</selected_nodes>\n<design_principle>\nstub\n</design_principle>\n"
            "<workflow>\n" + code + "</workflow>\n";
    return text;
}

inline std::vector<std::string> check_advantage_table() {
    std::vector<std::string> problems;
    struct Case {
        std::vector<double> rewards, expected;
    };
    const std::vector<Case> table{
        {{1, 1, -1, -1}, {1, 1, -1, -1}},
        {{0.875, 0.875, 0.875, 0.875}, {0, 0, 0, 0}},
        {{1, 0}, {1, -1}},
    };
    for (const Case& c : table) {
        const auto got = group_advantages(c.rewards);
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (std::abs(got[i] - c.expected[i]) > 1e-12) {
                problems.push_back("advantage mismatch at index " + std::to_string(i));
            }
        }
    }
    return problems;
}

inline std::vector<std::string> check_clip_table() {
    std::vector<std::string> problems;
    const double cases[][4] = {
        // ratio, advantage, eps, expected
        {1.5, 1.0, 0.2, (1.0 + 0.2) * 1.0},
        {0.5, -1.0, 0.2, (1.0 - 0.2) * -1.0},
        {1.0, 2.0, 0.2, 2.0},
        {0.9, 1.0, 0.2, 0.9},
        {2.0, -1.0, 0.2, -2.0},
    };
    for (const auto& c : cases) {
        if (clipped_term(c[0], c[1], c[2]) != c[3]) {
            problems.push_back("clipped_term(" + std::to_string(c[0]) + ", " +
                               std::to_string(c[1]) + ") off");
        }
    }
    return problems;
}

inline std::vector<std::string> check_kl_and_objective() {
    std::vector<std::string> problems;
    if (std::abs(kl_estimate(2.0) - 0.306852819440055) > 1e-9) {
        problems.push_back("kl_estimate(2) off");
    }
    if (std::abs(kl_estimate(0.5) - 0.193147180559945) > 1e-9) {
        problems.push_back("kl_estimate(0.5) off");
    }
    if (kl_estimate(1.0) != 0.0) problems.push_back("kl_estimate(1) must be zero");

    GrpoConfig cfg;
    cfg.group_size = 2;
    cfg.kl_beta = 0.0;
    const std::vector<GroupSample> ex{{1, 1.5, 1}, {0, 1.0, 1}};
    if (std::abs(grpo_objective(ex, cfg) - 0.1) > 1e-12) {
        problems.push_back("objective example must be 0.1");
    }
    return problems;
}

inline std::vector<std::string> check_reward_table() {
    std::vector<std::string> problems;
    const std::set<std::string> cand{"A", "B", "C", "D", "E"};

    auto expect_final = [&](const std::string& text, const std::set<std::string>& gold,
                            double want, const std::string& label) {
        const RewardBreakdown b = score(text, cand, gold);
        if (b.r_final != want) problems.push_back("reward case '" + label + "' off");
    };

    expect_final(tagged_response({"A", "B"}, straight_chain({"A", "B"})), {"A", "B"}, 1.0,
                 "exact");
    expect_final(tagged_response({"A", "B"}, straight_chain({"A", "B"})), {"A", "B", "C", "D"},
                 0.875, "half-overlap");
    expect_final(tagged_response({"A", "Z"}, straight_chain({"A", "Z"})), {"A", "B"}, -1.0,
                 "hallucination");
    expect_final(tagged_response({"A", "B"},
                                 "node_1 = A(x=node_2[0])\nnode_2 = B(x=node_1[0])\n"),
                 {"A", "B"}, -1.0, "cycle");

    // Sweep |gold| in [1,8], overlap in [0,|gold|], against the direct formula.
    for (int g = 1; g <= 8; ++g) {
        std::set<std::string> gold;
        for (int i = 0; i < g; ++i) gold.insert("G" + std::to_string(i));
        for (int k = 0; k <= g; ++k) {
            std::vector<std::string> sel;
            std::set<std::string> cand_sweep;
            for (int i = 0; i < k; ++i) sel.push_back("G" + std::to_string(i));
            for (const auto& t : gold) cand_sweep.insert(t);
            const RewardBreakdown b =
                score(tagged_response(sel, straight_chain(sel)), cand_sweep, gold);
            const double direct =
                (4.0 + (static_cast<double>(k) / static_cast<double>(g) - 1.0)) / 4.0;
            if (std::abs(b.r_final - direct) > 1e-12) {
                problems.push_back("reward sweep off at g=" + std::to_string(g) +
                                   " k=" + std::to_string(k));
            }
        }
    }
    return problems;
}

inline std::vector<std::string> check_lcs_oracle() {
    std::vector<std::string> problems;
    SplitMix64 rng(424242);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = reference::random_chain(rng, 30, 5);
        const auto b = reference::random_chain(rng, 30, 5);
        if (node_chain_match(a, b) != reference::lcs_dp(a, b)) {
            problems.push_back("LCS mismatch at trial " + std::to_string(trial));
        }
    }
    return problems;
}

inline std::vector<std::string> check_mcis_oracle() {
    std::vector<std::string> problems;
    SplitMix64 rng(515151);
    reference::RandomDagOptions opt;
    opt.max_nodes = 7;
    opt.label_count = 3;
    for (int trial = 0; trial < 50; ++trial) {
        const WorkflowGraph a = reference::random_dag(rng, opt);
        const WorkflowGraph b = reference::random_dag(rng, opt);
        const McisResult m = mcis(a, b);
        if (!m.completed || m.size != reference::mcis_brute_force(a, b) ||
            !mapping_is_valid(a, b, m.mapping)) {
            problems.push_back("MCIS mismatch at trial " + std::to_string(trial));
        }
    }
    return problems;
}

inline std::vector<std::string> check_codec_roundtrip() {
    std::vector<std::string> problems;
    SplitMix64 rng(99999);
    reference::RandomDagOptions opt;
    opt.max_nodes = 12;
    opt.sparse_ids = true;
    opt.rich_literals = true;
    for (int trial = 0; trial < 100; ++trial) {
        const WorkflowGraph g = reference::random_dag(rng, opt);
        if (parse_code(emit_code(g)) != g || parse_json(emit_json(g)) != g) {
            problems.push_back("round-trip failure at trial " + std::to_string(trial));
        }
    }
    return problems;
}

}  // namespace selfcheck_detail

// Exit codes: 0 all checks pass, 2 any mismatch, 3 fixtures missing.
inline int run_selfcheck(const std::filesystem::path& fixtures_dir, std::ostream& out) {
    namespace sd = selfcheck_detail;

    if (!std::filesystem::exists(fixtures_dir / "manifest.json")) {
        out << "[FAIL] fixtures: no manifest under '" << fixtures_dir.string()
            << "' (generate them with: wfkit fixtures -o " << fixtures_dir.string() << ")\n";
        return 3;
    }

    const std::vector<std::pair<std::string, std::vector<std::string> (*)()>> suites{
        {"grpo-advantages", &sd::check_advantage_table},
        {"grpo-clip", &sd::check_clip_table},
        {"grpo-kl-objective", &sd::check_kl_and_objective},
        {"reward-table", &sd::check_reward_table},
        {"lcs-oracle", &sd::check_lcs_oracle},
        {"mcis-oracle", &sd::check_mcis_oracle},
        {"codec-roundtrip", &sd::check_codec_roundtrip},
    };

    bool any_failed = false;
    for (const auto& [name, fn] : suites) {
        const auto problems = fn();
        if (problems.empty()) {
            out << "[ok]   " << name << "\n";
        } else {
            any_failed = true;
            out << "[FAIL] " << name << "\n";
            for (const auto& p : problems) out << "       " << p << "\n";
        }
    }

    const auto fixture_problems = verify_fixtures(fixtures_dir);
    if (fixture_problems.empty()) {
        out << "[ok]   fixtures\n";
    } else {
        any_failed = true;
        out << "[FAIL] fixtures\n";
        for (const auto& p : fixture_problems) out << "       " << p << "\n";
    }

    return any_failed ? 2 : 0;
}

}  // namespace wfkit
