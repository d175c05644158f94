#pragma once

// Bidirectional conversion between the API-format workflow JSON, the
// code-script representation, and WorkflowGraph.
//
// JSON dialect: top-level object mapping node-id strings to
// {"class_type": <name>, "inputs": {<param>: scalar | [<id string>, <output
// index>]}}. Unknown keys inside a node object (canvas metadata and the like)
// are dropped. Canonical emission orders node keys by ascending numeric id
// and inputs by param name, with compact separators and a trailing LF.
//
// Code grammar, emitted bit-exactly and parsed back:
//   script    := (statement NL)*
//   statement := var " = " TYPE "(" [arg (", " arg)*] ")"
//   arg       := NAME "=" (literal | var "[" INT "]")
// TYPE and NAME are bare identifiers when possible, double-quoted strings
// otherwise. Strings use backslash escapes; floats render with the shortest
// decimal form that round-trips exactly (always containing '.' or an
// exponent, so integer and float literals stay distinct); booleans are
// `true`/`false`. Parsing is whitespace-tolerant between tokens.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wfkit/error.hpp"
#include "wfkit/ir.hpp"

namespace wfkit {

// Non-numeric source ids are remapped to fresh integer ids; the table records
// original name -> assigned id.
using AliasTable = std::map<std::string, NodeId>;

struct VarRef {
    std::string var_name;
    std::int32_t output_index = 0;
    bool operator==(const VarRef&) const = default;
};

struct Statement {
    std::string var_name;
    std::string type_name;
    std::vector<std::pair<std::string, std::variant<Literal, VarRef>>> args;
    bool operator==(const Statement&) const = default;
};

struct CodeScript {
    std::vector<Statement> statements;
    bool operator==(const CodeScript&) const = default;
};

namespace detail {

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

inline bool is_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(s[0])) return false;
    for (char c : s) {
        if (!is_ident_char(c)) return false;
    }
    return s != "true" && s != "false";
}

// Canonical decimal: no sign, no leading zeros, fits NodeId, >= 1.
inline bool parse_canonical_id(std::string_view s, NodeId& out) {
    if (s.empty() || s.size() > 18) return false;
    if (s[0] == '0') return false;
    NodeId v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    if (v < 1) return false;
    out = v;
    return true;
}

inline std::string quote_string(std::string_view s) {
    std::string out = "\"";
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    out += '"';
    return out;
}

inline std::string render_double(double v) {
    if (!std::isfinite(v)) {
        throw InvalidGraph("non-finite float literal cannot be serialized");
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, ptr);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find('E') == std::string::npos) {
        s += ".0";
    }
    return s;
}

inline std::string render_type_or_name(const std::string& s) {
    return is_identifier(s) ? s : quote_string(s);
}

}  // namespace detail

inline std::string render_literal(const Literal& lit) {
    struct Renderer {
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return detail::render_double(v); }
        std::string operator()(const std::string& v) const { return detail::quote_string(v); }
    };
    return std::visit(Renderer{}, lit.value);
}

// ---------------------------------------------------------------------------
// JSON -> graph
// ---------------------------------------------------------------------------

inline WorkflowGraph parse_json(std::string_view text, AliasTable* aliases = nullptr) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedJson(e.what());
    }
    if (!doc.is_object()) throw SchemaError("top-level value must be an object of node entries");

    // Pass 1: resolve node keys. Canonical numeric keys keep their value;
    // everything else gets a fresh id above every numeric id in the document
    // (keys and link targets alike), assigned in lexicographic key order so
    // parsing is deterministic.
    NodeId max_id = 0;
    std::map<std::string, NodeId> key_ids;
    std::vector<std::string> alias_keys;
    std::vector<std::string> string_targets;
    for (const auto& [key, value] : doc.items()) {
        NodeId id = 0;
        if (detail::parse_canonical_id(key, id)) {
            key_ids[key] = id;
            max_id = std::max(max_id, id);
        } else {
            alias_keys.push_back(key);
        }
        if (!value.is_object()) continue;
        const auto inputs = value.find("inputs");
        if (inputs == value.end() || !inputs->is_object()) continue;
        for (const auto& [param, bound] : inputs->items()) {
            if (bound.is_array() && bound.size() == 2 && bound[0].is_string()) {
                string_targets.push_back(bound[0].get<std::string>());
            }
        }
    }
    for (const std::string& target : string_targets) {
        NodeId id = 0;
        if (detail::parse_canonical_id(target, id)) max_id = std::max(max_id, id);
    }
    std::sort(alias_keys.begin(), alias_keys.end());
    for (const auto& key : alias_keys) {
        key_ids[key] = ++max_id;
        if (aliases) (*aliases)[key] = key_ids[key];
    }

    // Link targets may name ids that are not node keys; they stay dangling but
    // still need a stable integer. Assign in sorted order.
    std::vector<std::string> unresolved;
    for (const std::string& target : string_targets) {
        NodeId id = 0;
        if (!key_ids.count(target) && !detail::parse_canonical_id(target, id)) {
            unresolved.push_back(target);
        }
    }
    std::sort(unresolved.begin(), unresolved.end());
    unresolved.erase(std::unique(unresolved.begin(), unresolved.end()), unresolved.end());
    std::map<std::string, NodeId> extra_ids;
    for (const auto& key : unresolved) {
        extra_ids[key] = ++max_id;
        if (aliases) (*aliases)[key] = extra_ids[key];
    }

    auto scalar_of = [](const nlohmann::json& v, const std::string& where) -> Scalar {
        switch (v.type()) {
            case nlohmann::json::value_t::boolean: return Scalar{v.get<bool>()};
            case nlohmann::json::value_t::number_integer: return Scalar{v.get<std::int64_t>()};
            case nlohmann::json::value_t::number_unsigned: {
                const std::uint64_t u = v.get<std::uint64_t>();
                if (u <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
                    return Scalar{static_cast<std::int64_t>(u)};
                }
                return Scalar{static_cast<double>(u)};
            }
            case nlohmann::json::value_t::number_float: return Scalar{v.get<double>()};
            case nlohmann::json::value_t::string: return Scalar{v.get<std::string>()};
            default: throw SchemaError(where + ": input value must be a scalar or a 2-element link array");
        }
    };

    WorkflowGraph graph;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_object()) throw SchemaError("node '" + key + "': entry must be an object");
        const auto ct = value.find("class_type");
        if (ct == value.end() || !ct->is_string()) {
            throw SchemaError("node '" + key + "': missing class_type");
        }
        const auto inputs = value.find("inputs");
        if (inputs == value.end() || !inputs->is_object()) {
            throw SchemaError("node '" + key + "': missing inputs object");
        }

        NodeInstance node;
        node.id = key_ids.at(key);
        node.type_name = ct->get<std::string>();
        for (const auto& [param, bound] : inputs->items()) {
            const std::string where = "node '" + key + "', input '" + param + "'";
            if (bound.is_array()) {
                if (bound.size() != 2 || !bound[1].is_number_integer() ||
                    (!bound[0].is_string() && !bound[0].is_number_integer())) {
                    throw SchemaError(where + ": link must be [source id, output index]");
                }
                const std::int64_t idx = bound[1].get<std::int64_t>();
                if (idx < 0) throw SchemaError(where + ": output index must be non-negative");
                NodeId source = 0;
                if (bound[0].is_string()) {
                    const std::string target = bound[0].get<std::string>();
                    if (auto it = key_ids.find(target); it != key_ids.end()) {
                        source = it->second;
                    } else if (auto ex = extra_ids.find(target); ex != extra_ids.end()) {
                        source = ex->second;
                    } else {
                        detail::parse_canonical_id(target, source);  // numeric non-key
                    }
                } else {
                    source = bound[0].get<std::int64_t>();
                }
                node.bindings[param] = Link{source, static_cast<std::int32_t>(idx)};
            } else {
                node.bindings[param] = Literal{scalar_of(bound, where)};
            }
        }
        graph.add(std::move(node));
    }
    return graph;
}

// ---------------------------------------------------------------------------
// graph -> JSON (canonical)
// ---------------------------------------------------------------------------

namespace detail {

inline void require_emittable(const WorkflowGraph& g) {
    const ValidationReport r = validate_dag(g);
    if (!r.ok()) {
        std::string msg = "graph is not emittable:";
        if (!r.is_dag) msg += " contains a cycle;";
        if (!r.dangling.empty()) {
            msg += " dangling links:";
            for (const auto& [id, param] : r.dangling) {
                msg += " (" + std::to_string(id) + ", " + param + ")";
            }
        }
        throw InvalidGraph(msg);
    }
}

inline nlohmann::ordered_json scalar_to_json(const Scalar& s) {
    struct ToJson {
        nlohmann::ordered_json operator()(bool v) const { return v; }
        nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
        nlohmann::ordered_json operator()(double v) const {
            if (!std::isfinite(v)) {
                throw InvalidGraph("non-finite float literal cannot be serialized");
            }
            return v;
        }
        nlohmann::ordered_json operator()(const std::string& v) const { return v; }
    };
    return std::visit(ToJson{}, s);
}

}  // namespace detail

inline std::string emit_json(const WorkflowGraph& g) {
    detail::require_emittable(g);
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& [id, node] : g.nodes) {  // ascending numeric id
        nlohmann::ordered_json entry;
        entry["class_type"] = node.type_name;
        nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
        for (const auto& [param, binding] : node.bindings) {  // sorted by param
            if (const Link* l = std::get_if<Link>(&binding)) {
                inputs[param] = nlohmann::ordered_json::array(
                    {std::to_string(l->source_id), l->output_index});
            } else {
                inputs[param] = detail::scalar_to_json(std::get<Literal>(binding).value);
            }
        }
        entry["inputs"] = std::move(inputs);
        doc[std::to_string(id)] = std::move(entry);
    }
    return doc.dump() + "\n";
}

// ---------------------------------------------------------------------------
// graph -> code
// ---------------------------------------------------------------------------

inline CodeScript to_script(const WorkflowGraph& g) {
    detail::require_emittable(g);
    CodeScript script;
    for (const NodeId id : topological_order(g)) {
        const NodeInstance& node = g.nodes.at(id);
        Statement st;
        st.var_name = "node_" + std::to_string(id);
        st.type_name = node.type_name;
        for (const auto& [param, binding] : node.bindings) {
            if (const Link* l = std::get_if<Link>(&binding)) {
                st.args.emplace_back(
                    param, VarRef{"node_" + std::to_string(l->source_id), l->output_index});
            } else {
                st.args.emplace_back(param, std::get<Literal>(binding));
            }
        }
        script.statements.push_back(std::move(st));
    }
    return script;
}

inline std::string render_script(const CodeScript& script) {
    std::string out;
    for (const Statement& st : script.statements) {
        out += st.var_name;
        out += " = ";
        out += detail::render_type_or_name(st.type_name);
        out += '(';
        bool first = true;
        for (const auto& [name, value] : st.args) {
            if (!first) out += ", ";
            first = false;
            out += detail::render_type_or_name(name);
            out += '=';
            if (const VarRef* ref = std::get_if<VarRef>(&value)) {
                out += ref->var_name;
                out += '[';
                out += std::to_string(ref->output_index);
                out += ']';
            } else {
                out += render_literal(std::get<Literal>(value));
            }
        }
        out += ")\n";
    }
    return out;
}

inline std::string emit_code(const WorkflowGraph& g) { return render_script(to_script(g)); }

// ---------------------------------------------------------------------------
// code -> graph
// ---------------------------------------------------------------------------

namespace detail {

class CodeLexer {
public:
    CodeLexer(std::string_view line, std::size_t line_no) : text_(line), line_no_(line_no) {}

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c) {
            throw CodeSyntaxError(line_no_, std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string identifier() {
        skip_ws();
        const std::size_t start = pos_;
        if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) {
            throw CodeSyntaxError(line_no_, "expected identifier");
        }
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    // identifier or quoted string (for TYPE and NAME positions)
    std::string name() {
        skip_ws();
        if (peek() == '"') return quoted();
        return identifier();
    }

    std::string quoted() {
        expect('"');
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            char c = text_[pos_++];
            if (c == '\\') {
                if (pos_ >= text_.size()) throw CodeSyntaxError(line_no_, "unterminated escape");
                const char e = text_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'u': {
                        if (pos_ + 4 > text_.size()) {
                            throw CodeSyntaxError(line_no_, "bad \\u escape");
                        }
                        unsigned code = 0;
                        for (int i = 0; i < 4; ++i) {
                            const char h = text_[pos_++];
                            code <<= 4;
                            if (h >= '0' && h <= '9') code += h - '0';
                            else if (h >= 'a' && h <= 'f') code += h - 'a' + 10;
                            else if (h >= 'A' && h <= 'F') code += h - 'A' + 10;
                            else throw CodeSyntaxError(line_no_, "bad \\u escape");
                        }
                        if (code > 0xFF) throw CodeSyntaxError(line_no_, "\\u escape out of range");
                        out += static_cast<char>(code);
                        break;
                    }
                    default: throw CodeSyntaxError(line_no_, std::string("unknown escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        if (pos_ >= text_.size()) throw CodeSyntaxError(line_no_, "unterminated string");
        ++pos_;  // closing quote
        return out;
    }

    Literal number() {
        skip_ws();
        const std::size_t start = pos_;
        if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
        bool is_float = false;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c >= '0' && c <= '9') {
                ++pos_;
            } else if (c == '.' || c == 'e' || c == 'E') {
                is_float = true;
                ++pos_;
                if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+') &&
                    (c == 'e' || c == 'E')) {
                    ++pos_;
                }
            } else {
                break;
            }
        }
        const std::string_view tok = text_.substr(start, pos_ - start);
        if (tok.empty() || tok == "-") {
            throw CodeSyntaxError(line_no_, "expected number");
        }
        if (is_float) {
            double v = 0;
            const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size()) {
                throw CodeSyntaxError(line_no_, "bad float literal '" + std::string(tok) + "'");
            }
            return lit_float(v);
        }
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) {
            throw CodeSyntaxError(line_no_, "bad integer literal '" + std::string(tok) + "'");
        }
        return lit_int(v);
    }

    std::int32_t index() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        const std::string_view tok = text_.substr(start, pos_ - start);
        if (tok.empty()) throw CodeSyntaxError(line_no_, "expected output index");
        std::int32_t v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{}) throw CodeSyntaxError(line_no_, "output index out of range");
        return v;
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::string_view text_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline CodeScript parse_script(std::string_view text) {
    CodeScript script;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        detail::CodeLexer lex(line, line_no);
        if (lex.at_end()) continue;  // blank line

        Statement st;
        st.var_name = lex.identifier();
        lex.expect('=');
        st.type_name = lex.name();
        lex.expect('(');
        if (!lex.accept(')')) {
            for (;;) {
                const std::string arg_name = lex.name();
                lex.expect('=');
                const char c = lex.peek();
                if (c == '"') {
                    st.args.emplace_back(arg_name, lit_str(lex.quoted()));
                } else if (c == '-' || (c >= '0' && c <= '9')) {
                    st.args.emplace_back(arg_name, lex.number());
                } else if (detail::is_ident_start(c)) {
                    const std::string word = lex.identifier();
                    if (word == "true" || word == "false") {
                        st.args.emplace_back(arg_name, lit_bool(word == "true"));
                    } else {
                        lex.expect('[');
                        const std::int32_t idx = lex.index();
                        lex.expect(']');
                        st.args.emplace_back(arg_name, VarRef{word, idx});
                    }
                } else {
                    throw CodeSyntaxError(line_no, "expected literal or variable reference");
                }
                if (lex.accept(')')) break;
                lex.expect(',');
            }
        }
        if (!lex.at_end()) throw CodeSyntaxError(line_no, "trailing characters after statement");
        script.statements.push_back(std::move(st));
    }
    return script;
}

inline WorkflowGraph script_to_graph(const CodeScript& script, AliasTable* aliases = nullptr) {
    // Recover ids: "node_<k>" keeps k, other names get fresh ids above the
    // recovered maximum, in definition order.
    NodeId max_id = 0;
    std::map<std::string, NodeId> var_ids;
    std::map<std::string, std::size_t> def_line;
    std::size_t line = 0;
    for (const Statement& st : script.statements) {
        ++line;
        if (var_ids.count(st.var_name)) throw DuplicateDef(line, st.var_name);
        NodeId id = 0;
        if (st.var_name.rfind("node_", 0) == 0 &&
            detail::parse_canonical_id(std::string_view(st.var_name).substr(5), id)) {
            var_ids[st.var_name] = id;
            max_id = std::max(max_id, id);
        } else {
            var_ids[st.var_name] = 0;  // assigned below
        }
        def_line[st.var_name] = line;
    }
    line = 0;
    for (const Statement& st : script.statements) {
        ++line;
        NodeId& id = var_ids[st.var_name];
        if (id == 0) {
            id = ++max_id;
            if (aliases) (*aliases)[st.var_name] = id;
        }
    }

    WorkflowGraph graph;
    line = 0;
    for (const Statement& st : script.statements) {
        ++line;
        NodeInstance node;
        node.id = var_ids.at(st.var_name);
        node.type_name = st.type_name;
        for (const auto& [name, value] : st.args) {
            if (const VarRef* ref = std::get_if<VarRef>(&value)) {
                const auto it = var_ids.find(ref->var_name);
                if (it == var_ids.end() || def_line.at(ref->var_name) >= line) {
                    throw UseBeforeDef(line, ref->var_name);
                }
                node.bindings[name] = Link{it->second, ref->output_index};
            } else {
                node.bindings[name] = std::get<Literal>(value);
            }
        }
        if (graph.contains(node.id)) throw DuplicateDef(line, st.var_name);
        graph.add(std::move(node));
    }
    return graph;
}

inline WorkflowGraph parse_code(std::string_view text, AliasTable* aliases = nullptr) {
    return script_to_graph(parse_script(text), aliases);
}

}  // namespace wfkit
