// wfkit: command-line toolkit for node-graph workflow corpora. Subcommands
// cover format conversion, validation, KB curation, candidate generation,
// reward scoring, GRPO numerics, evaluation, retrieval, the batch pipeline,
// fixtures, and selfcheck.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wfkit/candidate.hpp"
#include "wfkit/codec.hpp"
#include "wfkit/config.hpp"
#include "wfkit/fixtures.hpp"
#include "wfkit/grpo.hpp"
#include "wfkit/kb.hpp"
#include "wfkit/metrics.hpp"
#include "wfkit/pipeline.hpp"
#include "wfkit/retrieval.hpp"
#include "wfkit/reward.hpp"
#include "wfkit/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitParse = 2;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw wfkit::IoError("cannot read '" + path.string() + "'");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw wfkit::IoError("cannot write '" + path.string() + "'");
    out << content;
}

void emit_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
    } else {
        write_file(out_path, content);
    }
}

// Node-name sets arrive as ["A","B"] or as an object wrapping such an array.
std::set<std::string> read_name_set(const fs::path& path, const char* key) {
    const json j = json::parse(read_file(path));
    std::set<std::string> names;
    const json* array = nullptr;
    if (j.is_array()) {
        array = &j;
    } else if (j.is_object() && j.contains(key)) {
        array = &j.at(key);
    } else {
        throw wfkit::SchemaError("expected a JSON array or an object with '" +
                                 std::string(key) + "' in " + path.string());
    }
    for (const auto& item : *array) names.insert(item.get<std::string>());
    return names;
}

std::set<std::string> read_candidate_names(const fs::path& path) {
    const json j = json::parse(read_file(path));
    if (j.is_object() && j.contains("gold")) {
        return wfkit::candidate_from_json(j).all();
    }
    return read_name_set(path, "candidates");
}

bool looks_like_json(const fs::path& path, const std::string& text) {
    if (path.extension() == ".json") return true;
    if (path.extension() == ".wf") return false;
    for (const char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
        return c == '{';
    }
    return false;
}

int cmd_convert(const std::string& in_path, const std::string& direction,
                const std::string& out_path) {
    const std::string text = read_file(in_path);
    try {
        wfkit::WorkflowGraph graph = looks_like_json(in_path, text)
                                         ? wfkit::parse_json(text)
                                         : wfkit::parse_code(text);
        const auto report = wfkit::validate_dag(graph);
        if (!report.ok()) {
            std::cerr << "invalid workflow structure\n";
            if (report.cycle_witness) {
                std::cerr << "cycle:";
                for (const auto id : *report.cycle_witness) std::cerr << " " << id;
                std::cerr << "\n";
            }
            for (const auto& [id, param] : report.dangling) {
                std::cerr << "dangling link: node " << id << ", input '" << param << "'\n";
            }
            return kExitParse;
        }
        emit_output(out_path,
                    direction == "code" ? wfkit::emit_code(graph) : wfkit::emit_json(graph));
        return kExitOk;
    } catch (const wfkit::Error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    }
}

int cmd_validate(const std::string& in_path) {
    const std::string text = read_file(in_path);
    ordered_json out;
    try {
        const wfkit::WorkflowGraph graph = looks_like_json(in_path, text)
                                               ? wfkit::parse_json(text)
                                               : wfkit::parse_code(text);
        const auto report = wfkit::validate_dag(graph);
        out["parsed"] = true;
        out["is_dag"] = report.is_dag;
        out["valid"] = report.ok();
        if (report.cycle_witness) out["cycle"] = *report.cycle_witness;
        ordered_json dangling = ordered_json::array();
        for (const auto& [id, param] : report.dangling) {
            dangling.push_back({{"node", id}, {"param", param}});
        }
        out["dangling"] = std::move(dangling);
        out["isolated_nodes"] = report.isolated_nodes;
        out["nodes"] = graph.size();
        std::cout << out.dump(2) << "\n";
        return report.ok() ? kExitOk : kExitParse;
    } catch (const wfkit::Error& e) {
        out["parsed"] = false;
        out["valid"] = false;
        out["error"] = e.what();
        std::cout << out.dump(2) << "\n";
        return kExitParse;
    }
}

int cmd_clean_kb(const std::string& nodes_in, const std::string& workflows_in,
                 const std::string& nodes_out, const std::string& workflows_out,
                 const std::string& denylist_csv, const std::string& stats_out) {
    std::set<std::string> denylist;
    {
        std::string current;
        for (const char c : denylist_csv + ",") {
            if (c == ',') {
                const auto first = current.find_first_not_of(" \t");
                if (first != std::string::npos) {
                    const auto last = current.find_last_not_of(" \t");
                    denylist.insert(current.substr(first, last - first + 1));
                }
                current.clear();
            } else {
                current += c;
            }
        }
    }

    ordered_json stats_json;

    std::vector<wfkit::NodeSpec> raw_nodes;
    {
        std::ifstream in(nodes_in, std::ios::binary);
        if (!in) throw wfkit::IoError("cannot read '" + nodes_in + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                raw_nodes.push_back(wfkit::node_spec_from_json(json::parse(line)));
            } catch (const std::exception& e) {
                throw wfkit::CorruptRecord(line_no, e.what());
            }
        }
    }
    auto [node_kb, node_stats] = wfkit::clean_nodes(raw_nodes);
    wfkit::save_nodes(node_kb, nodes_out);
    stats_json["nodes"] = {{"input", node_stats.input_count},
                           {"retained", node_stats.retained},
                           {"duplicate", node_stats.duplicate},
                           {"missing_io", node_stats.missing_io},
                           {"invalid_structure", node_stats.invalid_structure}};

    if (!workflows_in.empty()) {
        std::vector<wfkit::RawWorkflow> raw_workflows;
        std::ifstream in(workflows_in, std::ios::binary);
        if (!in) throw wfkit::IoError("cannot read '" + workflows_in + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const json j = json::parse(line);
                wfkit::RawWorkflow raw;
                raw.description = j.value("description", std::string{});
                raw.json = j.at("json").is_string() ? j.at("json").get<std::string>()
                                                    : j.at("json").dump();
                raw_workflows.push_back(std::move(raw));
            } catch (const std::exception& e) {
                throw wfkit::CorruptRecord(line_no, e.what());
            }
        }
        auto [workflow_kb, wf_stats] = wfkit::clean_workflows(raw_workflows, node_kb, denylist);
        wfkit::save_workflows(workflow_kb, workflows_out);
        stats_json["workflows"] = {{"input", wf_stats.input_count},
                                   {"retained", wf_stats.retained},
                                   {"duplicate", wf_stats.duplicate},
                                   {"roundtrip_fail", wf_stats.roundtrip_fail},
                                   {"unknown_node", wf_stats.unknown_node},
                                   {"denylisted_stripped", wf_stats.denylisted_stripped},
                                   {"invalid_structure", wf_stats.invalid_structure},
                                   {"relays_spliced", wf_stats.relays_spliced}};
    }

    emit_output(stats_out, stats_json.dump(2) + "\n");
    return kExitOk;
}

int cmd_candgen(const std::string& gold_path, const std::string& kb_path, double ratio,
                std::uint64_t seed, const std::string& out_path) {
    const auto gold = read_name_set(gold_path, "gold");
    const auto kb = wfkit::load_nodes(kb_path);
    const auto cand = wfkit::build_candidate_set(gold, kb, ratio, seed);
    emit_output(out_path, wfkit::candidate_to_json(cand).dump(2) + "\n");
    return kExitOk;
}

int cmd_reward(const std::string& response_path, const std::string& cand_path,
               const std::string& gold_path, const std::string& batch_path,
               const std::string& out_path) {
    if (!batch_path.empty()) {
        std::ifstream in(batch_path, std::ios::binary);
        if (!in) throw wfkit::IoError("cannot read '" + batch_path + "'");
        std::string line, output;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const json j = json::parse(line);
                std::set<std::string> cand, gold;
                for (const auto& c : j.at("cand")) cand.insert(c.get<std::string>());
                for (const auto& g : j.at("gold")) gold.insert(g.get<std::string>());
                const auto breakdown =
                    wfkit::score(j.at("response").get<std::string>(), cand, gold);
                ordered_json row;
                row["id"] = j.value("id", std::to_string(line_no));
                row.update(wfkit::breakdown_to_json(breakdown));
                output += row.dump() + "\n";
            } catch (const std::exception& e) {
                throw wfkit::CorruptRecord(line_no, e.what());
            }
        }
        emit_output(out_path, output);
        return kExitOk;
    }

    const std::string response = read_file(response_path);
    const auto cand = read_candidate_names(cand_path);
    const auto gold = read_name_set(gold_path, "gold");
    const auto breakdown = wfkit::score(response, cand, gold);
    emit_output(out_path, wfkit::breakdown_to_json(breakdown).dump(2) + "\n");
    return kExitOk;
}

int cmd_grpo(const std::string& rewards_csv, const std::string& batch_path, int group_size,
             double clip_eps, double kl_beta, double std_floor, const std::string& out_path) {
    wfkit::GrpoConfig cfg;
    cfg.group_size = group_size;
    cfg.clip_eps = clip_eps;
    cfg.kl_beta = kl_beta;
    cfg.std_floor = std_floor;
    cfg.validate();

    if (!batch_path.empty()) {
        std::ifstream in(batch_path, std::ios::binary);
        if (!in) throw wfkit::IoError("cannot read '" + batch_path + "'");
        std::string line, output;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const json j = json::parse(line);
                std::vector<wfkit::GroupSample> samples;
                const auto& rewards = j.at("rewards");
                for (std::size_t i = 0; i < rewards.size(); ++i) {
                    wfkit::GroupSample s;
                    s.reward = rewards[i].get<double>();
                    if (j.contains("ratios")) s.ratio = j.at("ratios")[i].get<double>();
                    if (j.contains("ref_ratios")) s.ref_ratio = j.at("ref_ratios")[i].get<double>();
                    samples.push_back(s);
                }
                std::vector<double> reward_values;
                for (const auto& s : samples) reward_values.push_back(s.reward);
                ordered_json row;
                row["advantages"] = wfkit::group_advantages(reward_values, cfg.std_floor);
                row["objective"] = wfkit::grpo_objective(samples, cfg);
                output += row.dump() + "\n";
            } catch (const wfkit::Error&) {
                throw;
            } catch (const std::exception& e) {
                throw wfkit::CorruptRecord(line_no, e.what());
            }
        }
        emit_output(out_path, output);
        return kExitOk;
    }

    std::vector<double> rewards;
    std::string current;
    for (const char c : rewards_csv + ",") {
        if (c == ',') {
            if (!current.empty()) rewards.push_back(std::stod(current));
            current.clear();
        } else if (c != ' ') {
            current += c;
        }
    }
    const auto advantages = wfkit::group_advantages(rewards, cfg.std_floor);
    emit_output(out_path, ordered_json(advantages).dump() + "\n");
    return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& gold_path,
             const std::string& nodes_path, std::uint64_t mcis_budget,
             const std::string& out_path) {
    const auto kb = wfkit::load_nodes(nodes_path);
    const auto gold_kb = wfkit::load_workflows(gold_path);

    std::map<std::string, std::string> preds;  // id -> code
    {
        std::ifstream in(pred_path, std::ios::binary);
        if (!in) throw wfkit::IoError("cannot read '" + pred_path + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const json j = json::parse(line);
                preds[j.at("id").get<std::string>()] = j.at("code").get<std::string>();
            } catch (const std::exception& e) {
                throw wfkit::CorruptRecord(line_no, e.what());
            }
        }
    }

    std::vector<wfkit::EvalReport::Row> rows;
    for (const auto& entry : gold_kb.entries) {
        const auto it = preds.find(entry.id);
        const std::string code = (it == preds.end()) ? std::string{} : it->second;
        rows.push_back({entry.id, wfkit::score_pair(code, entry, kb, mcis_budget)});
    }
    const auto report = wfkit::aggregate(rows);

    ordered_json out;
    out["schema_version"] = wfkit::kReportSchemaVersion;
    out["toolkit_version"] = wfkit::kVersion;
    out.update(wfkit::eval_report_to_json(report));
    emit_output(out_path, out.dump(2) + "\n");
    return kExitOk;
}

int cmd_retrieve(const std::string& query_path, const std::string& workflows_path, int k,
                 const std::string& config_path, const std::string& out_path) {
    wfkit::RetrievalConfig rcfg;
    if (!config_path.empty()) rcfg = wfkit::RunConfig::from_file(config_path).retrieval;

    const std::string query = read_file(query_path);
    const auto kb = wfkit::load_workflows(workflows_path);

    auto provider = wfkit::make_provider(rcfg);
    std::unique_ptr<wfkit::CachingProvider> cached;
    wfkit::EmbeddingProvider* active = provider.get();
    if (!rcfg.cache_dir.empty()) {
        cached = std::make_unique<wfkit::CachingProvider>(*provider, rcfg.cache_dir);
        active = cached.get();
    }

    const auto index = wfkit::build_index(kb, *active);
    const auto hits = wfkit::top_k(query, index, *active, k);
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.id);
    const auto candidates = wfkit::candidates_from_workflows(ids, kb);

    ordered_json out;
    out["provider"] = active->id();
    ordered_json results = ordered_json::array();
    for (const auto& h : hits) {
        results.push_back({{"id", h.id}, {"similarity", h.similarity}});
    }
    out["results"] = std::move(results);
    out["candidates"] = candidates;
    emit_output(out_path, out.dump(2) + "\n");
    return kExitOk;
}

int cmd_pipeline(const std::string& config_path, const std::string& samples_override,
                 const std::string& out_override) {
    wfkit::RunConfig cfg = wfkit::RunConfig::from_file(config_path);
    if (!samples_override.empty()) cfg.samples_path = samples_override;
    if (!out_override.empty()) cfg.output_path = out_override;
    const std::string report = wfkit::run_pipeline(cfg, std::cerr);
    if (cfg.output_path.empty()) std::cout << report;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"workflow toolkit: IR, codecs, KBs, rewards, GRPO numerics, evaluation"};
    app.set_version_flag("--version", wfkit::kVersion);
    app.require_subcommand(1);

    // convert
    std::string conv_in, conv_to, conv_out;
    auto* convert = app.add_subcommand("convert", "convert between workflow JSON and code");
    convert->add_option("--in", conv_in, "input file (.json or .wf)")->required();
    convert->add_option("--to", conv_to, "target form: code or json")
        ->required()
        ->check(CLI::IsMember({"code", "json"}));
    convert->add_option("-o,--out", conv_out, "output path (default: stdout)");

    // validate
    std::string val_in;
    auto* validate = app.add_subcommand("validate", "structural validation report");
    validate->add_option("--in", val_in, "input file (.json or .wf)")->required();

    // clean-kb
    std::string ck_nodes, ck_workflows, ck_out_nodes = "nodes.jsonl",
                                        ck_out_workflows = "workflows.jsonl",
                                        ck_denylist = "Anything Anywhere", ck_stats;
    auto* clean = app.add_subcommand("clean-kb", "run the KB cleaning pipelines");
    clean->add_option("--nodes", ck_nodes, "raw node specs, one JSON per line")->required();
    clean->add_option("--workflows", ck_workflows, "raw workflows, one JSON per line");
    clean->add_option("--out-nodes", ck_out_nodes, "cleaned node KB path");
    clean->add_option("--out-workflows", ck_out_workflows, "cleaned workflow KB path");
    clean->add_option("--denylist", ck_denylist, "comma-separated node types to strip");
    clean->add_option("--stats", ck_stats, "stats JSON path (default: stdout)");

    // candgen
    std::string cg_gold, cg_kb, cg_out;
    double cg_ratio = 0.8;
    std::uint64_t cg_seed = 0;
    auto* candgen = app.add_subcommand("candgen", "build a candidate node set");
    candgen->add_option("--gold", cg_gold, "gold node names (JSON array)")->required();
    candgen->add_option("--kb", cg_kb, "node KB jsonl")->required();
    candgen->add_option("--ratio", cg_ratio, "distractor ratio (default 0.8)");
    candgen->add_option("--seed", cg_seed, "sampling seed");
    candgen->add_option("-o,--out", cg_out, "output path (default: stdout)");

    // reward
    std::string rw_response, rw_cand, rw_gold, rw_batch, rw_out;
    auto* reward = app.add_subcommand("reward", "score a tagged response");
    reward->add_option("--response", rw_response, "response text file");
    reward->add_option("--candidates", rw_cand, "candidate set JSON");
    reward->add_option("--gold", rw_gold, "gold node names JSON");
    reward->add_option("--batch", rw_batch, "JSONL batch: {id, response, cand, gold}");
    reward->add_option("-o,--out", rw_out, "output path (default: stdout)");

    // grpo
    std::string gp_rewards, gp_batch, gp_out;
    int gp_group = 4;
    double gp_eps = 0.2, gp_beta = 0.001, gp_floor = 1e-8;
    auto* grpo = app.add_subcommand("grpo", "group advantages and objective");
    grpo->add_option("--rewards", gp_rewards, "comma-separated group rewards");
    grpo->add_option("--batch", gp_batch, "JSONL batch: {rewards, ratios, ref_ratios}");
    grpo->add_option("--group-size", gp_group, "group size G (default 4)");
    grpo->add_option("--eps", gp_eps, "clipping coefficient (default 0.2)");
    grpo->add_option("--beta", gp_beta, "KL penalty weight (default 0.001)");
    grpo->add_option("--std-floor", gp_floor, "advantage std floor");
    grpo->add_option("-o,--out", gp_out, "output path (default: stdout)");

    // eval
    std::string ev_pred, ev_gold, ev_nodes, ev_out;
    std::uint64_t ev_budget = wfkit::kDefaultMcisBudget;
    auto* eval = app.add_subcommand("eval", "score predictions against gold workflows");
    eval->add_option("--pred", ev_pred, "predictions JSONL: {id, code}")->required();
    eval->add_option("--gold", ev_gold, "gold workflow KB jsonl")->required();
    eval->add_option("--nodes", ev_nodes, "node KB jsonl")->required();
    eval->add_option("--mcis-budget", ev_budget, "exact-search step budget");
    eval->add_option("-o,--out", ev_out, "report path (default: stdout)");

    // retrieve
    std::string rt_query, rt_workflows, rt_config, rt_out;
    int rt_k = 3;
    auto* retrieve = app.add_subcommand("retrieve", "top-k workflows for a query");
    retrieve->add_option("--query", rt_query, "query text file")->required();
    retrieve->add_option("--workflows", rt_workflows, "workflow KB jsonl")->required();
    retrieve->add_option("--k", rt_k, "number of hits (default 3)");
    retrieve->add_option("--config", rt_config, "run config for provider settings");
    retrieve->add_option("-o,--out", rt_out, "output path (default: stdout)");

    // pipeline
    std::string pl_config, pl_samples, pl_out;
    auto* pipeline = app.add_subcommand("pipeline", "batch retrieve+reward+eval run");
    pipeline->add_option("--config", pl_config, "run config file")->required();
    pipeline->add_option("--samples", pl_samples, "override samples JSONL");
    pipeline->add_option("-o,--out", pl_out, "override report path");

    // selfcheck
    std::string sc_fixtures = "fixtures";
    auto* selfcheck = app.add_subcommand("selfcheck", "run the oracle suites");
    selfcheck->add_option("--fixtures", sc_fixtures, "fixture directory (default ./fixtures)");

    // fixtures
    std::string fx_out = "fixtures";
    std::uint64_t fx_seed = 42;
    auto* fixtures = app.add_subcommand("fixtures", "generate the synthetic fixture corpus");
    fixtures->add_option("--seed", fx_seed, "generation seed (default 42)");
    fixtures->add_option("-o,--out", fx_out, "output directory (default ./fixtures)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (convert->parsed()) return cmd_convert(conv_in, conv_to, conv_out);
        if (validate->parsed()) return cmd_validate(val_in);
        if (clean->parsed()) {
            return cmd_clean_kb(ck_nodes, ck_workflows, ck_out_nodes, ck_out_workflows,
                                ck_denylist, ck_stats);
        }
        if (candgen->parsed()) return cmd_candgen(cg_gold, cg_kb, cg_ratio, cg_seed, cg_out);
        if (reward->parsed()) return cmd_reward(rw_response, rw_cand, rw_gold, rw_batch, rw_out);
        if (grpo->parsed()) {
            return cmd_grpo(gp_rewards, gp_batch, gp_group, gp_eps, gp_beta, gp_floor, gp_out);
        }
        if (eval->parsed()) return cmd_eval(ev_pred, ev_gold, ev_nodes, ev_budget, ev_out);
        if (retrieve->parsed()) {
            return cmd_retrieve(rt_query, rt_workflows, rt_k, rt_config, rt_out);
        }
        if (pipeline->parsed()) return cmd_pipeline(pl_config, pl_samples, pl_out);
        if (selfcheck->parsed()) return wfkit::run_selfcheck(sc_fixtures, std::cout);
        if (fixtures->parsed()) {
            wfkit::generate_fixtures(fx_seed, fx_out);
            std::cout << "fixtures written to " << fx_out << "\n";
            return kExitOk;
        }
    } catch (const wfkit::MalformedJson& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const wfkit::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const wfkit::CodeSyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const wfkit::CorruptRecord& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}
