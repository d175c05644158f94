#pragma once

// Parses tagged model responses and scores them with the rule-metric hybrid
// reward: format, DAG and node-fidelity checks veto the reward to -1, and
// only a fully well-formed output earns (4 + correctness) / 4 based on
// node-selection overlap with the gold set.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wfkit/codec.hpp"
#include "wfkit/ir.hpp"

namespace wfkit {

inline constexpr const char* kResponseTags[3] = {"selected_nodes", "design_principle", "workflow"};

enum class TagStatus { ok, missing, duplicated, unclosed };

struct TagExtract {
    TagStatus status = TagStatus::missing;
    std::string content;
    std::size_t begin = 0;  // content byte range, valid when status == ok
    std::size_t end = 0;

    bool ok() const { return status == TagStatus::ok; }
};

// Exactly-once extraction of <name>...</name>.
inline TagExtract extract_tag(std::string_view text, std::string_view name) {
    const std::string open = "<" + std::string(name) + ">";
    const std::string close = "</" + std::string(name) + ">";

    std::vector<std::size_t> opens, closes;
    for (std::size_t pos = text.find(open); pos != std::string_view::npos;
         pos = text.find(open, pos + 1)) {
        opens.push_back(pos);
    }
    for (std::size_t pos = text.find(close); pos != std::string_view::npos;
         pos = text.find(close, pos + 1)) {
        closes.push_back(pos);
    }

    TagExtract out;
    if (opens.empty() && closes.empty()) {
        out.status = TagStatus::missing;
    } else if (opens.size() > 1 || closes.size() > 1) {
        out.status = TagStatus::duplicated;
    } else if (opens.size() != 1 || closes.size() != 1 || closes[0] < opens[0]) {
        out.status = TagStatus::unclosed;
    } else {
        out.status = TagStatus::ok;
        out.begin = opens[0] + open.size();
        out.end = closes[0];
        out.content = std::string(text.substr(out.begin, out.end - out.begin));
    }
    return out;
}

// Splits tag content on newlines and commas, trims, drops empties.
inline std::vector<std::string> split_node_list(std::string_view content) {
    std::vector<std::string> items;
    std::string current;
    auto flush = [&] {
        const auto first = current.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            current.clear();
            return;
        }
        const auto last = current.find_last_not_of(" \t\r");
        items.push_back(current.substr(first, last - first + 1));
        current.clear();
    };
    for (const char c : content) {
        if (c == '\n' || c == ',') {
            flush();
        } else {
            current += c;
        }
    }
    flush();
    return items;
}

struct TagSpan {
    std::string tag;
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct ParsedResponse {
    std::vector<std::string> selected_nodes;  // as listed, duplicates preserved
    std::string design_principle;
    std::string workflow_code;
    std::vector<TagSpan> tag_spans;
};

struct FormatFailure {
    std::vector<std::string> missing_or_duplicated;
};

inline std::variant<ParsedResponse, FormatFailure> parse_response(std::string_view text) {
    TagExtract parts[3];
    FormatFailure failure;
    for (int i = 0; i < 3; ++i) {
        parts[i] = extract_tag(text, kResponseTags[i]);
        if (!parts[i].ok()) failure.missing_or_duplicated.push_back(kResponseTags[i]);
    }
    if (!failure.missing_or_duplicated.empty()) return failure;

    ParsedResponse resp;
    resp.selected_nodes = split_node_list(parts[0].content);
    resp.design_principle = parts[1].content;
    resp.workflow_code = parts[2].content;
    for (int i = 0; i < 3; ++i) {
        resp.tag_spans.push_back(TagSpan{kResponseTags[i], parts[i].begin, parts[i].end});
    }
    return resp;
}

enum class VetoReason { none, format, dag, fidelity };

inline const char* veto_reason_name(VetoReason v) {
    switch (v) {
        case VetoReason::format: return "format";
        case VetoReason::dag: return "dag";
        case VetoReason::fidelity: return "fidelity";
        default: return "none";
    }
}

struct RewardBreakdown {
    double r_format = 0.0;    // {0, -1}
    double r_dag = 0.0;       // {0, -1}
    double r_fidelity = 0.0;  // {0, -1}
    double r_correct = -1.0;  // [-1, 0]
    double r_final = -1.0;    // {-1} U [0.75, 1.0]
    VetoReason veto_reason = VetoReason::none;

    // Diagnostics. A component that could not be evaluated (its tag missing
    // or the workflow unparseable) keeps value 0 / -1 above but is flagged
    // here so it is never mistaken for a real pass or fail.
    bool dag_evaluated = false;
    bool fidelity_evaluated = false;
    bool correct_evaluated = false;
    bool duplicate_count_mismatch = false;  // same sets, different multiset counts
};

inline nlohmann::ordered_json breakdown_to_json(const RewardBreakdown& b) {
    nlohmann::ordered_json j;
    j["r_format"] = b.r_format;
    j["r_dag"] = b.dag_evaluated ? nlohmann::ordered_json(b.r_dag)
                                 : nlohmann::ordered_json(nullptr);
    j["r_fidelity"] = b.fidelity_evaluated ? nlohmann::ordered_json(b.r_fidelity)
                                           : nlohmann::ordered_json(nullptr);
    j["r_correct"] = b.correct_evaluated ? nlohmann::ordered_json(b.r_correct)
                                         : nlohmann::ordered_json(nullptr);
    j["r_final"] = b.r_final;
    j["veto_reason"] = (b.veto_reason == VetoReason::none)
                           ? nlohmann::ordered_json(nullptr)
                           : nlohmann::ordered_json(veto_reason_name(b.veto_reason));
    if (b.duplicate_count_mismatch) j["duplicate_count_mismatch"] = true;
    return j;
}

// Pure scoring function: response text plus the candidate and gold node-name
// sets. Components are evaluated independently whenever their inputs are
// extractable so a veto still leaves useful diagnostics.
inline RewardBreakdown score(std::string_view response_text,
                             const std::set<std::string>& candidates,
                             const std::set<std::string>& gold) {
    if (gold.empty()) throw Error("reward scoring requires a nonempty gold node set");

    RewardBreakdown out;

    TagExtract selected_tag = extract_tag(response_text, kResponseTags[0]);
    TagExtract principle_tag = extract_tag(response_text, kResponseTags[1]);
    TagExtract workflow_tag = extract_tag(response_text, kResponseTags[2]);

    const bool format_ok = selected_tag.ok() && principle_tag.ok() && workflow_tag.ok();
    out.r_format = format_ok ? 0.0 : -1.0;

    // Workflow structure, evaluable whenever the workflow tag extracted.
    std::optional<WorkflowGraph> graph;
    if (workflow_tag.ok()) {
        out.dag_evaluated = true;
        try {
            WorkflowGraph g = parse_code(workflow_tag.content);
            if (validate_dag(g).ok()) {
                out.r_dag = 0.0;
                graph = std::move(g);
            } else {
                out.r_dag = -1.0;
            }
        } catch (const Error&) {
            out.r_dag = -1.0;
        }
    }

    // Node selection, evaluable whenever the selected_nodes tag extracted.
    std::optional<std::set<std::string>> selected;
    std::vector<std::string> selected_list;
    if (selected_tag.ok()) {
        selected_list = split_node_list(selected_tag.content);
        selected.emplace(selected_list.begin(), selected_list.end());

        out.correct_evaluated = true;
        std::size_t overlap = 0;
        for (const std::string& name : *selected) {
            if (gold.count(name)) ++overlap;
        }
        out.r_correct =
            static_cast<double>(overlap) / static_cast<double>(gold.size()) - 1.0;
    }

    // Fidelity needs both the selection and a parsed workflow. When the
    // workflow failed to parse the DAG veto already covers that root cause,
    // so fidelity stays unevaluated instead of double-counting.
    if (selected.has_value() && graph.has_value()) {
        out.fidelity_evaluated = true;
        bool invalid = false;
        for (const std::string& name : *selected) {
            if (!candidates.count(name)) invalid = true;
        }
        const std::set<std::string> workflow_types = node_type_set(*graph);
        const bool inconsistent = (*selected != workflow_types);
        out.r_fidelity = (invalid || inconsistent) ? -1.0 : 0.0;

        if (!inconsistent) {
            std::map<std::string, int> sel_counts, wf_counts;
            for (const std::string& name : selected_list) ++sel_counts[name];
            for (const auto& [id, node] : graph->nodes) ++wf_counts[node.type_name];
            out.duplicate_count_mismatch = (sel_counts != wf_counts);
        }
    }

    if (out.r_format < 0.0) {
        out.veto_reason = VetoReason::format;
    } else if (out.r_dag < 0.0) {
        out.veto_reason = VetoReason::dag;
    } else if (out.r_fidelity < 0.0) {
        out.veto_reason = VetoReason::fidelity;
    }

    out.r_final =
        (out.veto_reason == VetoReason::none) ? (4.0 + out.r_correct) / 4.0 : -1.0;
    return out;
}

}  // namespace wfkit
