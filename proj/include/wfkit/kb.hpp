#pragma once

// Node and workflow knowledge bases: the cleaning pipelines that build them
// from raw records and the JSONL persistence for both.
//
// nodes.jsonl     one NodeSpec per line:
//                 {"type_name":..., "usage":..., "inputs":[{"name","kind","type"}],
//                  "outputs":[{"name","type"}]}  (+ "source" when known)
// workflows.jsonl one entry per line: {"id","description","json","code"}

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wfkit/codec.hpp"
#include "wfkit/error.hpp"
#include "wfkit/ir.hpp"

namespace wfkit {

struct NodeKB {
    std::map<std::string, NodeSpec> specs;  // type_name -> spec, sorted

    bool operator==(const NodeKB&) const = default;

    bool contains(const std::string& type_name) const { return specs.count(type_name) != 0; }
    std::size_t size() const { return specs.size(); }

    std::set<std::string> type_names() const {
        std::set<std::string> names;
        for (const auto& [name, spec] : specs) names.insert(name);
        return names;
    }
};

struct WorkflowEntry {
    std::string id;
    std::string description;
    WorkflowGraph graph;
    CodeScript code;

    bool operator==(const WorkflowEntry&) const = default;
};

struct WorkflowKB {
    std::vector<WorkflowEntry> entries;

    bool operator==(const WorkflowKB&) const = default;

    std::size_t size() const { return entries.size(); }
    const WorkflowEntry* find(const std::string& id) const {
        for (const auto& e : entries) {
            if (e.id == id) return &e;
        }
        return nullptr;
    }
};

struct CleaningStats {
    std::size_t input_count = 0;
    std::size_t retained = 0;
    std::size_t duplicate = 0;
    std::size_t missing_io = 0;
    std::size_t roundtrip_fail = 0;
    std::size_t unknown_node = 0;
    std::size_t denylisted_stripped = 0;  // denylisted node present and not spliceable
    std::size_t invalid_structure = 0;

    // Informational, not a rejection: denylisted relays removed from
    // otherwise-retained workflows.
    std::size_t relays_spliced = 0;

    bool conserved() const {
        return input_count == retained + duplicate + missing_io + roundtrip_fail +
                                  unknown_node + denylisted_stripped + invalid_structure;
    }
};

// ---------------------------------------------------------------------------
// Node cleaning: exact-match dedup first, then drop specs missing inputs or
// outputs. Nonempty unique names are required for the retained set.
// ---------------------------------------------------------------------------

inline std::pair<NodeKB, CleaningStats> clean_nodes(const std::vector<NodeSpec>& records) {
    NodeKB kb;
    CleaningStats stats;
    stats.input_count = records.size();

    std::set<std::string> seen_content;
    auto content_fingerprint = [](const NodeSpec& s) {
        std::string key = s.type_name + "\x1f" + s.usage;
        for (const auto& p : s.inputs) {
            key += "\x1e" + p.name + "\x1f" + (p.kind == ParamKind::link ? "link" : "literal") +
                   "\x1f" + p.value_type;
        }
        key += "\x1d";
        for (const auto& o : s.outputs) key += "\x1e" + o.name + "\x1f" + o.value_type;
        return key;
    };

    for (const NodeSpec& spec : records) {
        if (!seen_content.insert(content_fingerprint(spec)).second) {
            ++stats.duplicate;
            continue;
        }
        if (spec.type_name.empty()) {
            ++stats.invalid_structure;
            continue;
        }
        if (kb.contains(spec.type_name)) {  // same name, different content
            ++stats.duplicate;
            continue;
        }
        if (spec.inputs.empty() || spec.outputs.empty()) {
            ++stats.missing_io;
            continue;
        }
        kb.specs.emplace(spec.type_name, spec);
        ++stats.retained;
    }
    return {std::move(kb), stats};
}

// ---------------------------------------------------------------------------
// Workflow cleaning
// ---------------------------------------------------------------------------

namespace detail {

// Checks a graph against known node specs: declared link params must be bound
// with links and link output indexes must be within the source's arity.
// Unknown types are not judged here; the final pipeline rule handles them.
inline bool bindings_consistent(const WorkflowGraph& g, const NodeKB& kb) {
    for (const auto& [id, node] : g.nodes) {
        const auto it = kb.specs.find(node.type_name);
        if (it == kb.specs.end()) continue;
        for (const ParamSpec& p : it->second.inputs) {
            if (p.kind != ParamKind::link) continue;
            const auto bound = node.bindings.find(p.name);
            if (bound == node.bindings.end() || !is_link(bound->second)) return false;
        }
        for (const auto& [param, binding] : node.bindings) {
            const Link* l = std::get_if<Link>(&binding);
            if (!l) continue;
            const auto src = g.nodes.find(l->source_id);
            if (src == g.nodes.end()) return false;
            const auto src_spec = kb.specs.find(src->second.type_name);
            if (src_spec != kb.specs.end() &&
                l->output_index >= static_cast<std::int32_t>(src_spec->second.outputs.size())) {
                return false;
            }
        }
    }
    return true;
}

// Removes a pass-through node, repointing its consumers at its single link
// input. Returns false when the node is not spliceable (no unambiguous
// through-path).
inline bool splice_relay(WorkflowGraph& g, NodeId id) {
    const NodeInstance& relay = g.nodes.at(id);

    std::vector<Link> in_links;
    for (const auto& [param, binding] : relay.bindings) {
        if (const Link* l = std::get_if<Link>(&binding)) in_links.push_back(*l);
    }

    std::vector<std::pair<NodeId, std::string>> consumers;
    for (const auto& [nid, node] : g.nodes) {
        if (nid == id) continue;
        for (const auto& [param, binding] : node.bindings) {
            const Link* l = std::get_if<Link>(&binding);
            if (l && l->source_id == id) {
                if (l->output_index != 0) return false;  // no pass-through meaning
                consumers.emplace_back(nid, param);
            }
        }
    }

    if (!consumers.empty()) {
        if (in_links.size() != 1) return false;
        for (const auto& [nid, param] : consumers) {
            g.nodes.at(nid).bindings[param] = in_links[0];
        }
    }
    g.nodes.erase(id);
    return true;
}

}  // namespace detail

struct RawWorkflow {
    std::string description;
    std::string json;
};

// Five-rule pipeline: structural validity, exact dedup on canonical JSON,
// JSON->code->JSON round-trip, denylist strip (re-verified), and node-KB
// membership. Rejections land in stats; nothing throws per record.
inline std::pair<WorkflowKB, CleaningStats> clean_workflows(
    const std::vector<RawWorkflow>& records, const NodeKB& kb,
    const std::set<std::string>& denylist) {
    WorkflowKB out;
    CleaningStats stats;
    stats.input_count = records.size();

    std::set<std::string> seen_canonical;

    for (const RawWorkflow& raw : records) {
        // 1. structural validity
        WorkflowGraph graph;
        try {
            graph = parse_json(raw.json);
        } catch (const Error&) {
            ++stats.invalid_structure;
            continue;
        }
        if (!validate_dag(graph).ok() || !detail::bindings_consistent(graph, kb)) {
            ++stats.invalid_structure;
            continue;
        }

        // 2. exact duplicates on canonical bytes
        std::string canonical = emit_json(graph);
        if (!seen_canonical.insert(canonical).second) {
            ++stats.duplicate;
            continue;
        }

        // 3. round-trip both directions
        try {
            const WorkflowGraph from_code = parse_code(emit_code(graph));
            if (emit_json(from_code) != canonical || parse_json(canonical) != graph) {
                ++stats.roundtrip_fail;
                continue;
            }
        } catch (const Error&) {
            ++stats.roundtrip_fail;
            continue;
        }

        // 4. strip denylisted relays, then re-verify
        std::size_t spliced = 0;
        bool splice_failed = false;
        for (;;) {
            NodeId target = 0;
            for (const auto& [id, node] : graph.nodes) {
                if (denylist.count(node.type_name)) {
                    target = id;
                    break;
                }
            }
            if (target == 0) break;
            if (!detail::splice_relay(graph, target)) {
                splice_failed = true;
                break;
            }
            ++spliced;
        }
        if (splice_failed) {
            ++stats.denylisted_stripped;
            continue;
        }
        if (spliced > 0) {
            // Re-verify and re-dedup on the post-splice form: stripping can
            // make two previously distinct workflows identical.
            try {
                canonical = emit_json(graph);
                if (!seen_canonical.insert(canonical).second) {
                    ++stats.duplicate;
                    continue;
                }
                if (!validate_dag(graph).ok() ||
                    parse_code(emit_code(graph)) != graph) {
                    ++stats.roundtrip_fail;
                    continue;
                }
            } catch (const Error&) {
                ++stats.roundtrip_fail;
                continue;
            }
        }

        // 5. every node type must exist in the node KB
        bool unknown = false;
        for (const auto& [id, node] : graph.nodes) {
            if (!kb.contains(node.type_name)) unknown = true;
        }
        if (unknown) {
            ++stats.unknown_node;
            continue;
        }

        WorkflowEntry entry;
        entry.id = "w" + std::to_string(out.entries.size() + 1);
        entry.description = raw.description;
        entry.code = to_script(graph);
        entry.graph = std::move(graph);
        out.entries.push_back(std::move(entry));
        ++stats.retained;
        stats.relays_spliced += spliced;
    }
    return {std::move(out), stats};
}

// ---------------------------------------------------------------------------
// JSONL persistence
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

inline bool only_whitespace(const std::string& s) {
    return s.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

inline nlohmann::ordered_json node_spec_to_json(const NodeSpec& spec) {
    nlohmann::ordered_json j;
    j["type_name"] = spec.type_name;
    j["usage"] = spec.usage;
    j["inputs"] = nlohmann::ordered_json::array();
    for (const ParamSpec& p : spec.inputs) {
        j["inputs"].push_back({{"name", p.name},
                               {"kind", p.kind == ParamKind::link ? "link" : "literal"},
                               {"type", p.value_type}});
    }
    j["outputs"] = nlohmann::ordered_json::array();
    for (const OutputSpec& o : spec.outputs) {
        j["outputs"].push_back({{"name", o.name}, {"type", o.value_type}});
    }
    if (!spec.source.empty()) j["source"] = spec.source;
    return j;
}

inline NodeSpec node_spec_from_json(const nlohmann::json& j) {
    NodeSpec spec;
    spec.type_name = j.at("type_name").get<std::string>();
    spec.usage = j.value("usage", std::string{});
    for (const auto& p : j.at("inputs")) {
        ParamSpec param;
        param.name = p.at("name").get<std::string>();
        const std::string kind = p.value("kind", "literal");
        if (kind != "link" && kind != "literal") throw SchemaError("bad param kind '" + kind + "'");
        param.kind = (kind == "link") ? ParamKind::link : ParamKind::literal;
        param.value_type = p.value("type", std::string{});
        spec.inputs.push_back(std::move(param));
    }
    for (const auto& o : j.at("outputs")) {
        OutputSpec out;
        out.name = o.at("name").get<std::string>();
        out.value_type = o.value("type", std::string{});
        spec.outputs.push_back(std::move(out));
    }
    spec.source = j.value("source", std::string{});
    return spec;
}

inline void save_nodes(const NodeKB& kb, const std::filesystem::path& path) {
    std::string text;
    for (const auto& [name, spec] : kb.specs) {
        text += node_spec_to_json(spec).dump();
        text += '\n';
    }
    detail::write_text(path, text);
}

inline NodeKB load_nodes(const std::filesystem::path& path) {
    NodeKB kb;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::only_whitespace(lines[i])) continue;
        try {
            const auto j = nlohmann::json::parse(lines[i]);
            NodeSpec spec = node_spec_from_json(j);
            const std::string name = spec.type_name;
            kb.specs.emplace(std::move(name), std::move(spec));
        } catch (const CorruptRecord&) {
            throw;
        } catch (const std::exception& e) {
            throw CorruptRecord(i + 1, e.what());
        }
    }
    return kb;
}

inline void save_workflows(const WorkflowKB& kb, const std::filesystem::path& path) {
    std::string text;
    for (const WorkflowEntry& e : kb.entries) {
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["description"] = e.description;
        std::string canonical = emit_json(e.graph);
        canonical.pop_back();  // line-embedded: no trailing LF inside the field
        j["json"] = nlohmann::ordered_json::parse(canonical);
        j["code"] = render_script(e.code);
        text += j.dump();
        text += '\n';
    }
    detail::write_text(path, text);
}

inline WorkflowKB load_workflows(const std::filesystem::path& path) {
    WorkflowKB kb;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::only_whitespace(lines[i])) continue;
        try {
            const auto j = nlohmann::json::parse(lines[i]);
            WorkflowEntry entry;
            entry.id = j.at("id").get<std::string>();
            entry.description = j.value("description", std::string{});
            entry.graph = parse_json(j.at("json").dump());
            entry.code = parse_script(j.at("code").get<std::string>());
            kb.entries.push_back(std::move(entry));
        } catch (const std::exception& e) {
            throw CorruptRecord(i + 1, e.what());
        }
    }
    return kb;
}

}  // namespace wfkit
