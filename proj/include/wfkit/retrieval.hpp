#pragma once

// Description embedding and top-k workflow retrieval. Providers are
// pluggable: the offline provider feature-hashes token counts into a fixed
// 256-dim vector (fully deterministic, no network); an HTTP provider lives in
// retrieval_http.hpp. Vectors are L2-normalized so cosine similarity is a
// plain dot product.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wfkit/error.hpp"
#include "wfkit/kb.hpp"

namespace wfkit {

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;

    std::size_t dim() const { return values.size(); }
};

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw ProviderMismatch("embedding dimensions differ");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot;
}

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    virtual EmbeddingVector embed(std::string_view text) = 0;
};

namespace detail {

inline void l2_normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
}

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ull ^ seed;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

// Offline fallback: lowercase alphanumeric tokens, feature-hashed counts,
// fixed dimension and hash seed, unit L2 norm.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    static constexpr int kDim = 256;
    static constexpr std::uint64_t kHashSeed = 0x5EEDED5EEDED5EEDull;

    std::string id() const override { return "hash-256"; }

    EmbeddingVector embed(std::string_view text) override {
        std::vector<double> counts(kDim, 0.0);
        std::string token;
        bool any = false;
        auto flush = [&] {
            if (token.empty()) return;
            counts[detail::fnv1a(token, kHashSeed) % kDim] += 1.0;
            any = true;
            token.clear();
        };
        for (const char c : text) {
            if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
                token += c;
            } else if (c >= 'A' && c <= 'Z') {
                token += static_cast<char>(c - 'A' + 'a');
            } else {
                flush();
            }
        }
        flush();
        if (!any) throw EmptyText("no tokens to embed");
        detail::l2_normalize(counts);
        return EmbeddingVector{std::move(counts), id()};
    }
};

// Wraps a provider with a content-addressed on-disk cache keyed by
// (provider id, text hash).
class CachingProvider final : public EmbeddingProvider {
public:
    CachingProvider(EmbeddingProvider& inner, std::filesystem::path cache_dir)
        : inner_(inner), dir_(std::move(cache_dir)) {}

    std::string id() const override { return inner_.id(); }

    EmbeddingVector embed(std::string_view text) override {
        const std::filesystem::path path = entry_path(text);
        if (std::filesystem::exists(path)) {
            std::ifstream in(path, std::ios::binary);
            nlohmann::json j;
            in >> j;
            EmbeddingVector v;
            v.provider_id = j.at("provider").get<std::string>();
            v.values = j.at("values").get<std::vector<double>>();
            if (v.provider_id == inner_.id()) return v;
        }
        EmbeddingVector v = inner_.embed(text);
        std::filesystem::create_directories(path.parent_path());
        nlohmann::ordered_json j;
        j["provider"] = v.provider_id;
        j["values"] = v.values;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << j.dump();
        return v;
    }

private:
    std::filesystem::path entry_path(std::string_view text) const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a(text, 0)));
        std::string provider = inner_.id();
        for (char& c : provider) {
            if (c == '/' || c == ':') c = '_';
        }
        return dir_ / provider / (std::string(buf) + ".json");
    }

    EmbeddingProvider& inner_;
    std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Index and queries
// ---------------------------------------------------------------------------

struct WorkflowIndex {
    std::string provider_id;
    std::vector<std::pair<std::string, EmbeddingVector>> entries;  // (workflow id, vector)
};

inline WorkflowIndex build_index(const WorkflowKB& kb, EmbeddingProvider& provider) {
    WorkflowIndex index;
    index.provider_id = provider.id();
    for (const WorkflowEntry& e : kb.entries) {
        index.entries.emplace_back(e.id, provider.embed(e.description));
    }
    return index;
}

struct RetrievalHit {
    std::string id;
    double similarity = 0.0;
};

// Cosine ranking, descending; equal similarities break toward the smaller
// workflow id; returns min(k, index size) hits.
inline std::vector<RetrievalHit> top_k(std::string_view query_text, const WorkflowIndex& index,
                                       EmbeddingProvider& provider, int k = 3) {
    if (index.entries.empty()) throw EmptyCorpus("retrieval index is empty");
    if (provider.id() != index.provider_id) {
        throw ProviderMismatch("index built with provider '" + index.provider_id +
                               "', query uses '" + provider.id() + "'");
    }
    const EmbeddingVector q = provider.embed(query_text);
    std::vector<RetrievalHit> hits;
    hits.reserve(index.entries.size());
    for (const auto& [id, vec] : index.entries) {
        hits.push_back(RetrievalHit{id, cosine(q, vec)});
    }
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (k < 0) k = 0;
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

// Union of node types over the selected workflow entries.
inline std::set<std::string> candidates_from_workflows(std::span<const std::string> ids,
                                                       const WorkflowKB& kb) {
    std::set<std::string> out;
    for (const std::string& id : ids) {
        const WorkflowEntry* e = kb.find(id);
        if (!e) throw Error("workflow id '" + id + "' not present in the KB");
        const std::set<std::string> types = node_type_set(e->graph);
        out.insert(types.begin(), types.end());
    }
    return out;
}

}  // namespace wfkit
