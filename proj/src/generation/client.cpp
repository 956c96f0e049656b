#include "loop/generation/client.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

namespace loop::generation {

using nlohmann::json;

std::shared_ptr<ScriptedClient> ScriptedClient::from_json(const json& j, const std::filesystem::path& base) {
    std::vector<Rule> rules;
    try {
        for (const auto& r : j.at("rules")) {
            Rule rule;
            rule.purpose = r.at("purpose").get<std::string>();
            rule.match = r.value("match", "");
            if (r.contains("reply_file")) {
                auto p = base / r.at("reply_file").get<std::string>();
                std::ifstream in(p);
                if (!in) throw GenerationError("script reply file not found: " + p.string());
                std::ostringstream ss;
                ss << in.rdbuf();
                rule.reply = ss.str();
            } else {
                rule.reply = r.at("reply").get<std::string>();
            }
            rules.push_back(std::move(rule));
        }
    } catch (const json::exception& e) {
        throw GenerationError(std::string("malformed client script: ") + e.what());
    }
    return std::make_shared<ScriptedClient>(std::move(rules));
}

std::shared_ptr<ScriptedClient> ScriptedClient::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GenerationError("cannot open client script " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw GenerationError(path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

json ScriptedClient::to_json() const {
    json rules = json::array();
    for (const auto& r : rules_) rules.push_back({{"purpose", r.purpose}, {"match", r.match}, {"reply", r.reply}});
    return {{"rules", rules}};
}

std::string ScriptedClient::complete(const json& request) {
    ++calls_;
    const std::string purpose = request.value("purpose", "");
    const std::string text = request.dump();
    for (const auto& r : rules_) {
        if (r.purpose != purpose) continue;
        if (!r.match.empty() && text.find(r.match) == std::string::npos) continue;
        return r.reply;
    }
    throw GenerationError("no scripted reply for purpose '" + purpose + "'");
}

HttpClient::HttpClient(std::string url, double timeout_seconds) : timeout_(timeout_seconds) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) throw GenerationError("only http:// endpoints are supported: " + url);
    std::string rest = url.substr(scheme.size());
    auto slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        host_ = authority.substr(0, colon);
        try {
            port_ = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw GenerationError("bad port in endpoint " + url);
        }
    } else {
        host_ = authority;
    }
    if (host_.empty()) throw GenerationError("missing host in endpoint " + url);
}

std::shared_ptr<HttpClient> HttpClient::from_env() {
    const char* v = std::getenv(kEndpointEnv);
    if (!v || !*v) return nullptr;
    return std::make_shared<HttpClient>(v);
}

std::string HttpClient::complete(const json& request) {
    httplib::Client cli(host_, port_);
    auto secs = static_cast<time_t>(timeout_);
    auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    auto res = cli.Post(path_, request.dump(), "application/json");
    if (!res) throw GenerationError("generation endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw GenerationError("generation endpoint returned HTTP " + std::to_string(res->status));
    auto parsed = json::parse(res->body, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("text") && parsed["text"].is_string())
        return parsed["text"].get<std::string>();
    return res->body;
}

}  // namespace loop::generation
