#pragma once

// Evaluation protocol: format validity, longest-node-chain matching (LCS via
// LIS on position lists, duplicate-safe), exact maximum common induced
// subgraph, and node/graph-level precision, recall, F1 with corpus
// aggregation.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wfkit/codec.hpp"
#include "wfkit/error.hpp"
#include "wfkit/ir.hpp"
#include "wfkit/kb.hpp"

namespace wfkit {

// True iff the code parses, every referenced node type exists in the KB, and
// the structure is a valid DAG.
inline bool format_validity(std::string_view code_text, const NodeKB& kb) {
    try {
        const WorkflowGraph g = parse_code(code_text);
        for (const auto& [id, node] : g.nodes) {
            if (!kb.contains(node.type_name)) return false;
        }
        return validate_dag(g).ok();
    } catch (const Error&) {
        return false;
    }
}

// Type sequence of the graph in (deterministic) topological order.
inline std::vector<std::string> type_chain(const WorkflowGraph& g) {
    std::vector<std::string> chain;
    chain.reserve(g.size());
    for (const NodeId id : topological_order(g)) chain.push_back(g.nodes.at(id).type_name);
    return chain;
}

// Longest common subsequence of the two chains, computed by mapping each pred
// element to its gold positions in descending order and taking the strictly
// increasing LIS of the concatenation. Handles duplicate types correctly.
inline int node_chain_match(const std::vector<std::string>& pred_chain,
                            const std::vector<std::string>& gold_chain) {
    std::map<std::string, std::vector<int>> positions;
    for (std::size_t i = 0; i < gold_chain.size(); ++i) {
        positions[gold_chain[i]].push_back(static_cast<int>(i));
    }
    std::vector<int> seq;
    for (const std::string& p : pred_chain) {
        const auto it = positions.find(p);
        if (it == positions.end()) continue;
        for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit) seq.push_back(*rit);
    }
    std::vector<int> tails;
    for (const int x : seq) {
        const auto it = std::lower_bound(tails.begin(), tails.end(), x);
        if (it == tails.end()) {
            tails.push_back(x);
        } else {
            *it = x;
        }
    }
    return static_cast<int>(tails.size());
}

// ---------------------------------------------------------------------------
// Maximum common induced subgraph (exact, McSplit-style branch and bound over
// label-partitioned vertex classes)
// ---------------------------------------------------------------------------

struct McisResult {
    int size = 0;
    std::vector<std::pair<NodeId, NodeId>> mapping;  // (pred id, gold id), pred-sorted
    bool completed = true;  // false when the step budget ran out first
    std::uint64_t steps = 0;
};

namespace detail {

class McisSolver {
public:
    McisSolver(const WorkflowGraph& a, const WorkflowGraph& b, std::uint64_t budget)
        : budget_(budget) {
        index(a, a_ids_, a_adj_, a_label_);
        index(b, b_ids_, b_adj_, b_label_);
    }

    McisResult run() {
        // Initial classes: one per label present on both sides.
        std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_label;
        for (std::size_t i = 0; i < a_label_.size(); ++i) {
            by_label[a_label_[i]].first.push_back(static_cast<int>(i));
        }
        for (std::size_t j = 0; j < b_label_.size(); ++j) {
            by_label[b_label_[j]].second.push_back(static_cast<int>(j));
        }
        std::vector<Bidomain> domains;
        for (auto& [label, lr] : by_label) {
            if (!lr.first.empty() && !lr.second.empty()) {
                domains.push_back(Bidomain{std::move(lr.first), std::move(lr.second)});
            }
        }
        search(domains);

        McisResult result;
        result.size = static_cast<int>(best_.size());
        result.steps = steps_;
        result.completed = !truncated_;
        for (const auto& [i, j] : best_) {
            result.mapping.emplace_back(a_ids_[static_cast<std::size_t>(i)],
                                        b_ids_[static_cast<std::size_t>(j)]);
        }
        std::sort(result.mapping.begin(), result.mapping.end());
        return result;
    }

private:
    struct Bidomain {
        std::vector<int> left, right;
    };

    static void index(const WorkflowGraph& g, std::vector<NodeId>& ids,
                      std::vector<std::vector<bool>>& adj, std::vector<std::string>& labels) {
        for (const auto& [id, node] : g.nodes) ids.push_back(id);
        const std::size_t n = ids.size();
        adj.assign(n, std::vector<bool>(n, false));
        labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = g.nodes.at(ids[i]).type_name;
        for (const Edge& e : edges_of(g)) {
            const auto s = std::lower_bound(ids.begin(), ids.end(), e.source) - ids.begin();
            const auto t = std::lower_bound(ids.begin(), ids.end(), e.target) - ids.begin();
            adj[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = true;
        }
    }

    void search(std::vector<Bidomain>& domains) {
        if (truncated_) return;
        if (++steps_ > budget_) {
            truncated_ = true;
            return;
        }
        if (current_.size() > best_.size()) best_ = current_;

        std::size_t bound = current_.size();
        for (const Bidomain& d : domains) bound += std::min(d.left.size(), d.right.size());
        if (bound <= best_.size()) return;

        // Pick the tightest class (smallest max side), first index on ties.
        int pick = -1;
        std::size_t pick_metric = SIZE_MAX;
        for (std::size_t i = 0; i < domains.size(); ++i) {
            const Bidomain& d = domains[i];
            if (d.left.empty() || d.right.empty()) continue;
            const std::size_t metric = std::max(d.left.size(), d.right.size());
            if (metric < pick_metric) {
                pick_metric = metric;
                pick = static_cast<int>(i);
            }
        }
        if (pick < 0) return;

        const Bidomain chosen = domains[static_cast<std::size_t>(pick)];
        const int v = *std::min_element(chosen.left.begin(), chosen.left.end());

        for (const int w : chosen.right) {
            std::vector<Bidomain> child;
            child.reserve(domains.size() * 2);
            for (const Bidomain& d : domains) {
                std::vector<int> lefts[4], rights[4];
                for (const int p : d.left) {
                    if (p == v) continue;
                    const int pattern = (a_adj_[static_cast<std::size_t>(v)][static_cast<std::size_t>(p)] ? 1 : 0) |
                                        (a_adj_[static_cast<std::size_t>(p)][static_cast<std::size_t>(v)] ? 2 : 0);
                    lefts[pattern].push_back(p);
                }
                for (const int q : d.right) {
                    if (q == w) continue;
                    const int pattern = (b_adj_[static_cast<std::size_t>(w)][static_cast<std::size_t>(q)] ? 1 : 0) |
                                        (b_adj_[static_cast<std::size_t>(q)][static_cast<std::size_t>(w)] ? 2 : 0);
                    rights[pattern].push_back(q);
                }
                for (int pattern = 0; pattern < 4; ++pattern) {
                    if (!lefts[pattern].empty() && !rights[pattern].empty()) {
                        child.push_back(
                            Bidomain{std::move(lefts[pattern]), std::move(rights[pattern])});
                    }
                }
            }
            current_.emplace_back(v, w);
            search(child);
            current_.pop_back();
            if (truncated_) return;
        }

        // Branch with v permanently unmatched.
        std::vector<Bidomain> rest = domains;
        auto& left = rest[static_cast<std::size_t>(pick)].left;
        left.erase(std::remove(left.begin(), left.end(), v), left.end());
        search(rest);
    }

    std::vector<NodeId> a_ids_, b_ids_;
    std::vector<std::vector<bool>> a_adj_, b_adj_;
    std::vector<std::string> a_label_, b_label_;
    std::uint64_t budget_;
    std::uint64_t steps_ = 0;
    bool truncated_ = false;
    std::vector<std::pair<int, int>> current_, best_;
};

}  // namespace detail

inline constexpr std::uint64_t kDefaultMcisBudget = 10'000'000;

inline McisResult mcis(const WorkflowGraph& pred, const WorkflowGraph& gold,
                       std::uint64_t budget = kDefaultMcisBudget) {
    detail::McisSolver solver(pred, gold, budget);
    return solver.run();
}

// Independent re-check of a returned mapping: injectivity, label equality,
// and induced-edge agreement in both directions.
inline bool mapping_is_valid(const WorkflowGraph& pred, const WorkflowGraph& gold,
                             const std::vector<std::pair<NodeId, NodeId>>& mapping) {
    std::set<NodeId> used_pred, used_gold;
    for (const auto& [p, g] : mapping) {
        if (!pred.contains(p) || !gold.contains(g)) return false;
        if (!used_pred.insert(p).second || !used_gold.insert(g).second) return false;
        if (pred.nodes.at(p).type_name != gold.nodes.at(g).type_name) return false;
    }
    std::set<std::pair<NodeId, NodeId>> pred_edges, gold_edges;
    for (const Edge& e : edges_of(pred)) pred_edges.emplace(e.source, e.target);
    for (const Edge& e : edges_of(gold)) gold_edges.emplace(e.source, e.target);
    for (const auto& [p1, g1] : mapping) {
        for (const auto& [p2, g2] : mapping) {
            if (pred_edges.count({p1, p2}) != gold_edges.count({g1, g2})) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Pair scoring and aggregation
// ---------------------------------------------------------------------------

struct PairScores {
    bool format_valid = false;
    int node_match_len = 0;
    int graph_match_size = 0;
    bool mcis_completed = true;
    double node_p = 0, node_r = 0, node_f1 = 0;
    double graph_p = 0, graph_r = 0, graph_f1 = 0;
};

inline double f1_score(double p, double r) { return (p + r > 0) ? 2 * p * r / (p + r) : 0.0; }

// Scores one prediction against its gold workflow. An invalid prediction
// contributes zeros everywhere, keeping format validity and the F1 columns
// independent.
inline PairScores score_pair(std::string_view pred_code, const WorkflowEntry& gold,
                             const NodeKB& kb, std::uint64_t mcis_budget = kDefaultMcisBudget) {
    PairScores s;
    s.format_valid = format_validity(pred_code, kb);
    if (!s.format_valid) return s;

    const WorkflowGraph pred = parse_code(pred_code);
    const std::vector<std::string> pred_chain = type_chain(pred);
    const std::vector<std::string> gold_chain = type_chain(gold.graph);

    s.node_match_len = node_chain_match(pred_chain, gold_chain);
    s.node_p = pred_chain.empty()
                   ? 0.0
                   : static_cast<double>(s.node_match_len) / static_cast<double>(pred_chain.size());
    s.node_r = gold_chain.empty()
                   ? 0.0
                   : static_cast<double>(s.node_match_len) / static_cast<double>(gold_chain.size());
    s.node_f1 = f1_score(s.node_p, s.node_r);

    const McisResult m = mcis(pred, gold.graph, mcis_budget);
    s.graph_match_size = m.size;
    s.mcis_completed = m.completed;
    s.graph_p = pred.empty()
                    ? 0.0
                    : static_cast<double>(m.size) / static_cast<double>(pred.size());
    s.graph_r = gold.graph.empty()
                    ? 0.0
                    : static_cast<double>(m.size) / static_cast<double>(gold.graph.size());
    s.graph_f1 = f1_score(s.graph_p, s.graph_r);
    return s;
}

struct EvalReport {
    struct Row {
        std::string id;
        PairScores scores;
    };
    std::vector<Row> rows;  // sorted by id
    std::size_t pair_count = 0;
    std::size_t valid_count = 0;
    double format_validity_rate = 0;
    double node_p = 0, node_r = 0, node_f1 = 0;
    double graph_p = 0, graph_r = 0, graph_f1 = 0;
};

inline EvalReport aggregate(std::vector<EvalReport::Row> rows) {
    if (rows.empty()) throw EmptyCorpus("no pairs to aggregate");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.id < b.id; });

    EvalReport report;
    report.pair_count = rows.size();
    const double n = static_cast<double>(rows.size());
    for (const auto& row : rows) {
        const PairScores& s = row.scores;
        if (s.format_valid) ++report.valid_count;
        report.node_p += s.node_p;
        report.node_r += s.node_r;
        report.node_f1 += s.node_f1;
        report.graph_p += s.graph_p;
        report.graph_r += s.graph_r;
        report.graph_f1 += s.graph_f1;
    }
    report.format_validity_rate = static_cast<double>(report.valid_count) / n;
    report.node_p /= n;
    report.node_r /= n;
    report.node_f1 /= n;
    report.graph_p /= n;
    report.graph_r /= n;
    report.graph_f1 /= n;
    report.rows = std::move(rows);
    return report;
}

inline nlohmann::ordered_json pair_scores_to_json(const PairScores& s) {
    nlohmann::ordered_json j;
    j["format_valid"] = s.format_valid;
    j["node_match_len"] = s.node_match_len;
    j["graph_match_size"] = s.graph_match_size;
    j["mcis_completed"] = s.mcis_completed;
    j["node_p"] = s.node_p;
    j["node_r"] = s.node_r;
    j["node_f1"] = s.node_f1;
    j["graph_p"] = s.graph_p;
    j["graph_r"] = s.graph_r;
    j["graph_f1"] = s.graph_f1;
    return j;
}

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["pair_count"] = report.pair_count;
    j["valid_count"] = report.valid_count;
    j["format_validity"] = report.format_validity_rate;
    j["node_p"] = report.node_p;
    j["node_r"] = report.node_r;
    j["node_f1"] = report.node_f1;
    j["graph_p"] = report.graph_p;
    j["graph_r"] = report.graph_r;
    j["graph_f1"] = report.graph_f1;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) {
        nlohmann::ordered_json r;
        r["id"] = row.id;
        r["scores"] = pair_scores_to_json(row.scores);
        rows.push_back(std::move(r));
    }
    j["pairs"] = std::move(rows);
    return j;
}

}  // namespace wfkit
