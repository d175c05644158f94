#pragma once

// Synthetic fixture corpus: a ~40-type node KB, two dozen workflows sized to
// average around 21 nodes, tagged gold responses, and corrupted variants that
// each trip exactly one check. Everything derives from one seed; the manifest
// records the intended outcome per file so tests stay data-independent.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfkit/candidate.hpp"
#include "wfkit/codec.hpp"
#include "wfkit/kb.hpp"
#include "wfkit/metrics.hpp"
#include "wfkit/reward.hpp"
#include "wfkit/rng.hpp"
#include "wfkit/version.hpp"

namespace wfkit {

struct FixtureSet {
    std::filesystem::path root;
    NodeKB kb;
    WorkflowKB workflows;
    nlohmann::ordered_json manifest;
};

namespace fixture_detail {

inline const std::vector<std::string>& source_type_names() {
    static const std::vector<std::string> names{
        "LoadImageAsset", "LoadMaskAsset",  "PromptText",   "NegativePromptText",
        "SeedValue",      "NoiseField",     "PaletteSource", "ReferenceFrame"};
    return names;
}

inline const std::vector<std::string>& transform_type_names() {
    static const std::vector<std::string> names{
        "EncodeLatent",   "DecodeLatent",   "DiffusionSampler", "GuidanceMix",
        "StyleTransfer",  "FaceRestore",    "UpscaleBicubic",   "UpscaleModel",
        "SharpenPass",    "BlurPass",       "EdgeDetect",       "DepthEstimate",
        "PoseExtract",    "SegmentSubject", "InpaintRegion",    "OutpaintBorder",
        "ColorBalance",   "ToneCurve",      "FilmGrain",        "VignetteOverlay",
        "BlendLayers",    "MaskCompose",    "AlphaMerge",       "CropRegion",
        "ResizeCanvas",   "RotateFrame",    "TileSplit",        "TileMerge",
        "FrameInterpolate", "ExportArtifact"};
    return names;
}

inline const std::vector<std::pair<std::string, std::string>>& literal_param_pool() {
    static const std::vector<std::pair<std::string, std::string>> pool{
        {"value", "INT"}, {"text", "STRING"}, {"strength", "FLOAT"}, {"enabled", "BOOL"}};
    return pool;
}

inline const std::vector<std::pair<std::string, std::string>>& link_param_pool() {
    static const std::vector<std::pair<std::string, std::string>> pool{
        {"image", "IMAGE"}, {"latent", "LATENT"}, {"mask", "MASK"},
        {"cond", "CONDITIONING"}, {"aux", "ANY"}};
    return pool;
}

inline Literal literal_for(const std::string& value_type, SplitMix64& rng) {
    if (value_type == "INT") return lit_int(static_cast<std::int64_t>(rng.below(1000)));
    if (value_type == "FLOAT") return lit_float(static_cast<double>(rng.below(1600)) / 16.0);
    if (value_type == "BOOL") return lit_bool(rng.below(2) == 1);
    static const std::vector<std::string> words{"default", "soft light", "bicubic", "euler",
                                                "wrap", "mirror"};
    return lit_str(words[rng.below(words.size())]);
}

inline NodeKB build_node_kb(std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, 1));
    NodeKB kb;

    for (const std::string& name : source_type_names()) {
        NodeSpec s;
        s.type_name = name;
        s.usage = "Provides " + name + " data to downstream nodes.";
        const std::size_t n_lit = 1 + rng.below(2);
        for (std::size_t i = 0; i < n_lit; ++i) {
            const auto& [pname, ptype] = literal_param_pool()[(i + rng.below(2)) %
                                                              literal_param_pool().size()];
            if (s.inputs.end() == std::find_if(s.inputs.begin(), s.inputs.end(),
                                               [&](const ParamSpec& p) { return p.name == pname; })) {
                s.inputs.push_back(ParamSpec{pname, ParamKind::literal, ptype});
            }
        }
        if (s.inputs.empty()) {
            s.inputs.push_back(ParamSpec{"value", ParamKind::literal, "INT"});
        }
        const std::size_t n_out = 1 + rng.below(2);
        for (std::size_t i = 0; i < n_out; ++i) {
            s.outputs.push_back(OutputSpec{"out" + std::to_string(i),
                                           link_param_pool()[rng.below(5)].second});
        }
        s.source = "fixture";
        kb.specs.emplace(s.type_name, s);
    }

    for (const std::string& name : transform_type_names()) {
        NodeSpec s;
        s.type_name = name;
        s.usage = "Applies the " + name + " stage to its inputs.";
        const std::size_t n_link = 1 + rng.below(3);
        for (std::size_t i = 0; i < n_link; ++i) {
            const auto& [pname, ptype] = link_param_pool()[i];
            s.inputs.push_back(ParamSpec{pname, ParamKind::link, ptype});
        }
        const std::size_t n_lit = rng.below(3);
        for (std::size_t i = 0; i < n_lit; ++i) {
            const auto& [pname, ptype] = literal_param_pool()[i];
            s.inputs.push_back(ParamSpec{pname, ParamKind::literal, ptype});
        }
        const std::size_t n_out = 1 + rng.below(2);
        for (std::size_t i = 0; i < n_out; ++i) {
            s.outputs.push_back(OutputSpec{"out" + std::to_string(i),
                                           link_param_pool()[rng.below(5)].second});
        }
        s.source = "fixture";
        kb.specs.emplace(s.type_name, s);
    }

    // Pass-through relays: one ordinary, one conventionally stripped.
    for (const std::string& name : {std::string("Reroute"), std::string("Anything Anywhere")}) {
        NodeSpec s;
        s.type_name = name;
        s.usage = "Forwards its single input unchanged.";
        s.inputs.push_back(ParamSpec{"input", ParamKind::link, "ANY"});
        s.outputs.push_back(OutputSpec{"out0", "ANY"});
        s.source = "fixture";
        kb.specs.emplace(s.type_name, s);
    }
    return kb;
}

inline const std::vector<int>& workflow_sizes() {
    static const std::vector<int> sizes{1,  3,  10, 14, 17, 19, 20, 21, 21, 21, 21, 21,
                                        21, 22, 22, 23, 24, 25, 26, 27, 28, 29, 30, 30};
    return sizes;
}

inline WorkflowGraph build_workflow(const NodeKB& kb, int n_nodes, bool sparse_ids,
                                    SplitMix64& rng) {
    const auto& sources = source_type_names();
    const auto& transforms = transform_type_names();

    WorkflowGraph g;
    std::vector<NodeId> ids;
    NodeId id = 0;
    for (int i = 0; i < n_nodes; ++i) {
        id += sparse_ids ? static_cast<NodeId>(1 + rng.below(3)) : 1;
        ids.push_back(id);
    }

    for (int i = 0; i < n_nodes; ++i) {
        // A few extra sources keep fan-in plausible on big graphs.
        const bool is_source = (i == 0) || (rng.below(5) == 0);
        const std::string& type_name =
            is_source ? sources[rng.below(sources.size())]
                      : transforms[rng.below(transforms.size())];
        const NodeSpec& spec = kb.specs.at(type_name);

        NodeInstance node;
        node.id = ids[static_cast<std::size_t>(i)];
        node.type_name = type_name;
        for (const ParamSpec& p : spec.inputs) {
            if (p.kind == ParamKind::link) {
                const NodeId src = ids[rng.below(static_cast<std::uint64_t>(i))];
                const NodeSpec& src_spec = kb.specs.at(g.nodes.at(src).type_name);
                node.bindings[p.name] =
                    Link{src, static_cast<std::int32_t>(rng.below(src_spec.outputs.size()))};
            } else {
                node.bindings[p.name] = literal_for(p.value_type, rng);
            }
        }
        g.add(std::move(node));
    }
    return g;
}

inline std::string number_word(std::size_t n) {
    static const std::vector<std::string> words{
        "zero",    "one",      "two",      "three",    "four",     "five",   "six",
        "seven",   "eight",    "nine",     "ten",      "eleven",   "twelve", "thirteen",
        "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen",
        "twenty",  "twentyone", "twentytwo", "twentythree", "twentyfour"};
    return n < words.size() ? words[n] : "many" + std::to_string(n);
}

inline std::string describe_workflow(std::size_t index, const WorkflowGraph& g) {
    const std::set<std::string> types = node_type_set(g);
    std::string desc = "Fixture pipeline " + number_word(index + 1) + ": chains ";
    std::size_t i = 0;
    for (const std::string& t : types) {
        if (i == 4) break;
        if (i++) desc += ", ";
        desc += t;
    }
    desc += " across " + std::to_string(g.size()) +
            (g.size() == 1 ? " node." : " nodes.");
    return desc;
}

inline std::string build_response(const std::set<std::string>& selected,
                                  const std::string& principle, const std::string& code) {
    std::string text = "<selected_nodes>\n";
    for (const std::string& s : selected) text += s + "\n";
    text += "</selected_nodes>\n<design_principle>\n" + principle +
            "\n</design_principle>\n<workflow>\n" + code + "</workflow>\n";
    return text;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write fixture file " + path.string());
    out << content;
}

}  // namespace fixture_detail

inline FixtureSet generate_fixtures(std::uint64_t seed, const std::filesystem::path& out_dir) {
    namespace fd = fixture_detail;
    FixtureSet set;
    set.root = out_dir;
    set.kb = fd::build_node_kb(seed);

    nlohmann::ordered_json files = nlohmann::ordered_json::array();

    // Clean workflows.
    const auto& sizes = fd::workflow_sizes();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        SplitMix64 rng(derive_seed(seed, 100 + i));
        const WorkflowGraph g = fd::build_workflow(set.kb, sizes[i], i % 3 == 2, rng);

        WorkflowEntry entry;
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%02zu", i + 1);
        entry.id = std::string("wf_") + buf;
        entry.description = fd::describe_workflow(i, g);
        entry.code = to_script(g);
        entry.graph = g;

        const std::string rel = "workflows/" + entry.id + ".json";
        fd::write_file(out_dir / rel, emit_json(g));
        nlohmann::ordered_json item;
        item["path"] = rel;
        item["kind"] = "workflow";
        item["node_count"] = g.size();
        item["checks"] = {{"dag", "pass"}, {"known_nodes", "pass"}, {"roundtrip", "pass"}};
        files.push_back(std::move(item));

        set.workflows.entries.push_back(std::move(entry));
    }

    save_nodes(set.kb, out_dir / "nodes.jsonl");
    save_workflows(set.workflows, out_dir / "workflows.jsonl");

    // Corrupted workflow: a two-node cycle between known transforms.
    {
        const std::string cycle =
            R"({"1":{"class_type":"EncodeLatent","inputs":{"image":["2",0]}},)"
            R"("2":{"class_type":"DecodeLatent","inputs":{"image":["1",0]}}})" "\n";
        fd::write_file(out_dir / "corrupt/cycle_01.json", cycle);
        nlohmann::ordered_json item;
        item["path"] = "corrupt/cycle_01.json";
        item["kind"] = "workflow_cycle";
        item["checks"] = {{"dag", "fail"}, {"known_nodes", "pass"}};
        files.push_back(std::move(item));
    }

    // Corrupted code: references a type absent from the KB.
    {
        const std::string code =
            "node_1 = SeedValue(value=7)\nnode_2 = MysteryNode(aux=node_1[0])\n";
        fd::write_file(out_dir / "corrupt/unknown_node_01.wf", code);
        nlohmann::ordered_json item;
        item["path"] = "corrupt/unknown_node_01.wf";
        item["kind"] = "code_unknown_node";
        item["checks"] = {{"format_validity", "fail"}, {"dag", "pass"}};
        files.push_back(std::move(item));
    }

    // Response bundles built from mid-sized workflows.
    std::vector<const WorkflowEntry*> picks;
    for (const WorkflowEntry& e : set.workflows.entries) {
        if (e.graph.size() >= 8 && e.graph.size() <= 19 && picks.size() < 4) {
            picks.push_back(&e);
        }
    }

    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < picks.size(); ++j) {
        const WorkflowEntry& entry = *picks[j];
        const std::set<std::string> gold_types = node_type_set(entry.graph);
        const CandidateSet cand =
            build_candidate_set(gold_types, set.kb, 0.8, derive_seed(seed, 500 + j));
        const std::string code = render_script(entry.code);
        const std::string principle =
            "Route the source nodes through the listed transforms in order.";

        const std::string tagname = std::to_string(j + 1);
        const std::string cand_rel = "responses/bundle_" + tagname + ".cand.json";
        const std::string gold_rel = "responses/bundle_" + tagname + ".gold.json";
        fd::write_file(out_dir / cand_rel, candidate_to_json(cand).dump() + "\n");
        nlohmann::ordered_json gold_json = nlohmann::ordered_json::array();
        for (const std::string& t : gold_types) gold_json.push_back(t);
        fd::write_file(out_dir / gold_rel, gold_json.dump() + "\n");

        auto bundle_item = [&](const std::string& path, const std::string& kind,
                               nlohmann::ordered_json checks) {
            nlohmann::ordered_json item;
            item["path"] = path;
            item["kind"] = kind;
            item["cand"] = cand_rel;
            item["gold"] = gold_rel;
            item["workflow_id"] = entry.id;
            item["checks"] = std::move(checks);
            files.push_back(std::move(item));
        };

        // Gold response: everything passes, reward exactly 1.0.
        const std::string gold_text = fd::build_response(gold_types, principle, code);
        const std::string gold_path = "responses/gold_" + tagname + ".txt";
        fd::write_file(out_dir / gold_path, gold_text);
        bundle_item(gold_path, "response_gold",
                    {{"r_format", "pass"},
                     {"r_dag", "pass"},
                     {"r_fidelity", "pass"},
                     {"r_final", 1.0}});

        nlohmann::ordered_json sample;
        sample["id"] = "s" + tagname;
        sample["query"] = entry.description;
        sample["response"] = gold_text;
        sample["gold_id"] = entry.id;
        samples.push_back(std::move(sample));

        if (j == 1) {  // unclosed design_principle
            std::string text = gold_text;
            const std::string close = "</design_principle>";
            text.erase(text.find(close), close.size());
            const std::string path = "responses/missing_tag_1.txt";
            fd::write_file(out_dir / path, text);
            bundle_item(path, "response_missing_tag",
                        {{"r_format", "fail"}, {"r_dag", "pass"}, {"r_fidelity", "pass"}});
        }
        if (j == 2) {  // a second selected_nodes block
            const std::string text =
                "<selected_nodes>\n</selected_nodes>\n" + gold_text;
            const std::string path = "responses/duplicate_tag_1.txt";
            fd::write_file(out_dir / path, text);
            bundle_item(path, "response_duplicate_tag",
                        {{"r_format", "fail"},
                         {"r_dag", "pass"},
                         {"r_fidelity", "not_evaluated"}});
        }
        if (j == 3) {  // selection includes a node outside the candidate set
            std::string hallucinated;
            for (const auto& [name, spec] : set.kb.specs) {
                if (!cand.contains(name) && name != "Anything Anywhere") {
                    hallucinated = name;
                    break;
                }
            }
            std::set<std::string> selected = gold_types;
            selected.insert(hallucinated);
            // The workflow uses it too, so only the candidate-membership rule
            // trips, not the consistency rule.
            WorkflowGraph g = entry.graph;
            NodeInstance extra;
            extra.id = g.nodes.rbegin()->first + 1;
            extra.type_name = hallucinated;
            const NodeSpec& spec = set.kb.specs.at(hallucinated);
            SplitMix64 lit_rng(derive_seed(seed, 900));
            for (const ParamSpec& p : spec.inputs) {
                if (p.kind == ParamKind::link) {
                    extra.bindings[p.name] = Link{g.nodes.begin()->first, 0};
                } else {
                    extra.bindings[p.name] = fd::literal_for(p.value_type, lit_rng);
                }
            }
            g.add(std::move(extra));
            const std::string text =
                fd::build_response(selected, principle, emit_code(g));
            const std::string path = "responses/hallucinated_1.txt";
            fd::write_file(out_dir / path, text);
            bundle_item(path, "response_hallucinated",
                        {{"r_format", "pass"},
                         {"r_dag", "pass"},
                         {"r_fidelity", "fail"},
                         {"r_correct", 0.0}});
        }
    }

    std::string samples_text;
    for (const auto& s : samples) samples_text += s.dump() + "\n";
    fd::write_file(out_dir / "samples.jsonl", samples_text);

    set.manifest["seed"] = seed;
    set.manifest["version"] = kVersion;
    set.manifest["workflow_count"] = set.workflows.size();
    set.manifest["node_type_count"] = set.kb.size();
    set.manifest["files"] = std::move(files);
    fd::write_file(out_dir / "manifest.json", set.manifest.dump(2) + "\n");
    return set;
}

// ---------------------------------------------------------------------------
// Manifest verification: re-run every check the manifest promises and report
// mismatches. Shared by the test suites and the selfcheck command.
// ---------------------------------------------------------------------------

namespace fixture_detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read fixture file " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline bool reward_check_matches(const std::string& expect, double value, bool evaluated) {
    if (expect == "pass") return evaluated && value == 0.0;
    if (expect == "fail") return evaluated && value == -1.0;
    if (expect == "not_evaluated") return !evaluated;
    return false;
}

}  // namespace fixture_detail

inline std::vector<std::string> verify_fixtures(const std::filesystem::path& root) {
    namespace fd = fixture_detail;
    std::vector<std::string> problems;

    const NodeKB kb = load_nodes(root / "nodes.jsonl");
    const auto manifest = nlohmann::json::parse(fd::read_file(root / "manifest.json"));

    auto complain = [&](const std::string& path, const std::string& check,
                        const std::string& detail) {
        problems.push_back(path + ": check '" + check + "' " + detail);
    };

    for (const auto& item : manifest.at("files")) {
        const std::string rel = item.at("path").get<std::string>();
        const std::string kind = item.at("kind").get<std::string>();
        const auto& checks = item.at("checks");

        if (kind == "workflow" || kind == "workflow_cycle") {
            const WorkflowGraph g = parse_json(fd::read_file(root / rel));
            if (checks.contains("dag")) {
                const bool ok = validate_dag(g).ok();
                if (ok != (checks.at("dag") == "pass")) complain(rel, "dag", "mismatch");
            }
            if (checks.contains("known_nodes")) {
                bool known = true;
                for (const auto& [id, node] : g.nodes) {
                    if (!kb.contains(node.type_name)) known = false;
                }
                if (known != (checks.at("known_nodes") == "pass")) {
                    complain(rel, "known_nodes", "mismatch");
                }
            }
            if (checks.contains("roundtrip")) {
                bool ok = false;
                try {
                    ok = parse_code(emit_code(g)) == g && parse_json(emit_json(g)) == g;
                } catch (const Error&) {
                }
                if (ok != (checks.at("roundtrip") == "pass")) {
                    complain(rel, "roundtrip", "mismatch");
                }
            }
        } else if (kind == "code_unknown_node") {
            const std::string code = fd::read_file(root / rel);
            if (checks.contains("format_validity")) {
                const bool ok = format_validity(code, kb);
                if (ok != (checks.at("format_validity") == "pass")) {
                    complain(rel, "format_validity", "mismatch");
                }
            }
            if (checks.contains("dag")) {
                bool ok = false;
                try {
                    ok = validate_dag(parse_code(code)).ok();
                } catch (const Error&) {
                }
                if (ok != (checks.at("dag") == "pass")) complain(rel, "dag", "mismatch");
            }
        } else if (kind.rfind("response_", 0) == 0) {
            const std::string text = fd::read_file(root / rel);
            const CandidateSet cand = candidate_from_json(
                nlohmann::json::parse(fd::read_file(root / item.at("cand").get<std::string>())));
            std::set<std::string> gold;
            for (const auto& t : nlohmann::json::parse(
                     fd::read_file(root / item.at("gold").get<std::string>()))) {
                gold.insert(t.get<std::string>());
            }
            const RewardBreakdown b = score(text, cand.all(), gold);
            if (checks.contains("r_format") &&
                !fd::reward_check_matches(checks.at("r_format"), b.r_format, true)) {
                complain(rel, "r_format", "mismatch");
            }
            if (checks.contains("r_dag") &&
                !fd::reward_check_matches(checks.at("r_dag"), b.r_dag, b.dag_evaluated)) {
                complain(rel, "r_dag", "mismatch");
            }
            if (checks.contains("r_fidelity") &&
                !fd::reward_check_matches(checks.at("r_fidelity"), b.r_fidelity,
                                          b.fidelity_evaluated)) {
                complain(rel, "r_fidelity", "mismatch");
            }
            if (checks.contains("r_final") &&
                b.r_final != checks.at("r_final").get<double>()) {
                complain(rel, "r_final", "mismatch");
            }
            if (checks.contains("r_correct") &&
                !(b.correct_evaluated &&
                  b.r_correct == checks.at("r_correct").get<double>())) {
                complain(rel, "r_correct", "mismatch");
            }
        } else {
            complain(rel, kind, "unknown fixture kind");
        }
    }
    return problems;
}

}  // namespace wfkit
