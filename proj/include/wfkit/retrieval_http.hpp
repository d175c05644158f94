#pragma once

// Remote embedding provider speaking the common embeddings wire format:
//   POST <path> {"model": ..., "input": [text]}
//   -> {"data": [{"embedding": [...]}]}
// Bearer auth token comes from an environment variable named in the config so
// secrets stay out of files and reports.

#include <cstdlib>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "wfkit/error.hpp"
#include "wfkit/retrieval.hpp"

namespace wfkit {

struct HttpProviderConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/embeddings
    std::string model = "text-embedding-3-small";
    std::string api_key_env;  // env var holding the bearer token, optional
    int dim = 0;              // expected dimension, 0 = accept whatever comes back
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpProviderConfig config) : config_(std::move(config)) {
        const auto scheme_end = config_.endpoint.find("://");
        if (scheme_end == std::string::npos) {
            throw ConfigError("endpoint must include a scheme: " + config_.endpoint);
        }
        const auto path_start = config_.endpoint.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base_ = config_.endpoint;
            path_ = "/";
        } else {
            base_ = config_.endpoint.substr(0, path_start);
            path_ = config_.endpoint.substr(path_start);
        }
    }

    std::string id() const override { return "remote:" + config_.model; }

    EmbeddingVector embed(std::string_view text) override {
        if (text.empty()) throw EmptyText("cannot embed empty text");

        nlohmann::ordered_json body;
        body["model"] = config_.model;
        body["input"] = nlohmann::ordered_json::array({std::string(text)});

        httplib::Client client(base_);
        client.set_connection_timeout(10);
        client.set_read_timeout(30);
        httplib::Headers headers;
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            if (!key) {
                throw ProviderUnavailable("environment variable '" + config_.api_key_env +
                                          "' is not set");
            }
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        const auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res) {
            throw ProviderUnavailable("embedding request to " + base_ + " failed: " +
                                      httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw ProviderUnavailable("embedding endpoint returned status " +
                                      std::to_string(res->status));
        }

        try {
            const auto j = nlohmann::json::parse(res->body);
            EmbeddingVector v;
            v.provider_id = id();
            v.values = j.at("data").at(0).at("embedding").get<std::vector<double>>();
            if (config_.dim > 0 && v.values.size() != static_cast<std::size_t>(config_.dim)) {
                throw ProviderUnavailable("embedding dimension mismatch");
            }
            detail::l2_normalize(v.values);
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw ProviderUnavailable(std::string("malformed embedding response: ") + e.what());
        }
    }

private:
    HttpProviderConfig config_;
    std::string base_;
    std::string path_;
};

}  // namespace wfkit
