#pragma once

// Run configuration: a minimal TOML-style key/value file with [section]
// headers, comments, and quoted or bare values. Referenced input paths must
// exist at load time; the config hash and seed end up in every report so runs
// stay attributable.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wfkit/error.hpp"
#include "wfkit/grpo.hpp"
#include "wfkit/retrieval.hpp"

namespace wfkit {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

}  // namespace detail

// Flat dotted-key view of a config file: "[grpo] eps = 0.2" -> grpo.eps.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::unquote(detail::trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

struct RetrievalConfig {
    std::string provider = "offline";  // offline | remote
    int k = 3;
    std::string endpoint;
    std::string model = "text-embedding-3-small";
    std::string api_key_env;
    int dim = 0;
    std::string cache_dir;
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::filesystem::path nodes_path;
    std::filesystem::path workflows_path;
    std::filesystem::path samples_path;
    std::filesystem::path output_path;
    std::set<std::string> denylist{"Anything Anywhere"};
    GrpoConfig grpo;
    RetrievalConfig retrieval;
    std::string config_hash;  // FNV-1a over the raw file bytes, hex

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_text(const std::string& text,
                               const std::filesystem::path& base_dir = ".");
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + value + "'");
    }
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
    }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

}  // namespace detail

inline RunConfig RunConfig::from_text(const std::string& text,
                                      const std::filesystem::path& base_dir) {
    const auto kv = parse_config_text(text);
    RunConfig cfg;

    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(text, 0)));
    cfg.config_hash = hash_hex;

    for (const auto& [key, value] : kv) {
        if (key == "seed") {
            cfg.seed = detail::parse_u64(key, value);
        } else if (key == "nodes") {
            cfg.nodes_path = detail::resolve(base_dir, value);
        } else if (key == "workflows") {
            cfg.workflows_path = detail::resolve(base_dir, value);
        } else if (key == "samples") {
            cfg.samples_path = detail::resolve(base_dir, value);
        } else if (key == "output") {
            cfg.output_path = detail::resolve(base_dir, value);
        } else if (key == "denylist" || key == "kb.denylist") {
            cfg.denylist.clear();
            std::string current;
            for (const char c : value + ",") {
                if (c == ',') {
                    const std::string item = detail::unquote(detail::trim(current));
                    if (!item.empty()) cfg.denylist.insert(item);
                    current.clear();
                } else {
                    current += c;
                }
            }
        } else if (key == "grpo.group_size") {
            cfg.grpo.group_size = static_cast<int>(detail::parse_u64(key, value));
        } else if (key == "grpo.clip_eps") {
            cfg.grpo.clip_eps = detail::parse_double(key, value);
        } else if (key == "grpo.kl_beta") {
            cfg.grpo.kl_beta = detail::parse_double(key, value);
        } else if (key == "grpo.std_floor") {
            cfg.grpo.std_floor = detail::parse_double(key, value);
        } else if (key == "retrieval.provider") {
            if (value != "offline" && value != "remote") {
                throw ConfigError("retrieval.provider must be 'offline' or 'remote'");
            }
            cfg.retrieval.provider = value;
        } else if (key == "retrieval.k") {
            cfg.retrieval.k = static_cast<int>(detail::parse_u64(key, value));
        } else if (key == "retrieval.endpoint") {
            cfg.retrieval.endpoint = value;
        } else if (key == "retrieval.model") {
            cfg.retrieval.model = value;
        } else if (key == "retrieval.api_key_env") {
            cfg.retrieval.api_key_env = value;
        } else if (key == "retrieval.dim") {
            cfg.retrieval.dim = static_cast<int>(detail::parse_u64(key, value));
        } else if (key == "retrieval.cache_dir") {
            cfg.retrieval.cache_dir = detail::resolve(base_dir, value).string();
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    cfg.grpo.validate();
    for (const auto& [name, path] :
         {std::pair<std::string, std::filesystem::path>{"nodes", cfg.nodes_path},
          {"workflows", cfg.workflows_path},
          {"samples", cfg.samples_path}}) {
        if (!path.empty() && !std::filesystem::exists(path)) {
            throw ConfigError("config path '" + name + "' does not exist: " + path.string());
        }
    }
    return cfg;
}

inline RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_text(text, path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace wfkit
