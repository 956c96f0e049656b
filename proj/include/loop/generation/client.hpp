#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace loop::generation {

inline constexpr const char* kEndpointEnv = "LOOP_GENERATION_ENDPOINT";

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text generation backend. Requests are JSON documents with a "purpose"
/// field ("validate", "generate_problem", "refine_problem", ...). Replies
/// are raw text. Implementations must be safe to call concurrently.
class GenerationClient {
public:
    virtual ~GenerationClient() = default;
    virtual std::string complete(const nlohmann::json& request) = 0;
    virtual std::string name() const = 0;
};

/// Canned replies. The first rule whose purpose equals the request's and
/// whose `match` occurs in the serialized request wins. Stateless, so the
/// same request always gets the same reply.
class ScriptedClient final : public GenerationClient {
public:
    struct Rule {
        std::string purpose;
        std::string match;  // empty matches anything
        std::string reply;
    };

    explicit ScriptedClient(std::vector<Rule> rules) : rules_(std::move(rules)) {}
    /// {"rules": [{"purpose": ..., "match": ..., "reply": ...}, ...]}. A
    /// "reply_file" key, relative to `base`, may replace "reply".
    static std::shared_ptr<ScriptedClient> from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
    static std::shared_ptr<ScriptedClient> load(const std::filesystem::path& path);
    /// Rules with replies inlined.
    nlohmann::json to_json() const;

    std::string complete(const nlohmann::json& request) override;
    std::string name() const override { return "scripted"; }
    std::size_t calls() const { return calls_.load(); }

private:
    std::vector<Rule> rules_;
    std::atomic<std::size_t> calls_{0};
};

/// POSTs the request as JSON to an http:// endpoint. The reply body is either
/// {"text": "..."} or plain text.
class HttpClient final : public GenerationClient {
public:
    explicit HttpClient(std::string url, double timeout_seconds = 60.0);
    /// Uses $LOOP_GENERATION_ENDPOINT; nullptr when unset.
    static std::shared_ptr<HttpClient> from_env();

    std::string complete(const nlohmann::json& request) override;
    std::string name() const override { return "http"; }

private:
    std::string host_;
    int port_ = 80;
    std::string path_;
    double timeout_;
};

}  // namespace loop::generation
