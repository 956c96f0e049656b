#include "loop/orchestrator/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace loop::orchestrator {

using nlohmann::json;

const char* to_string(PlannerKind k) { return k == PlannerKind::builtin ? "builtin" : "external"; }

PlannerKind parse_planner_kind(const std::string& text) {
    if (text == "builtin") return PlannerKind::builtin;
    if (text == "external") return PlannerKind::external;
    throw std::invalid_argument("unknown planner '" + text + "' (builtin or external)");
}

const char* to_string(ValidatorKind k) { return k == ValidatorKind::rule ? "rule" : "generative"; }

ValidatorKind parse_validator_kind(const std::string& text) {
    if (text == "rule") return ValidatorKind::rule;
    if (text == "generative") return ValidatorKind::generative;
    throw std::invalid_argument("unknown validators '" + text + "' (rule or generative)");
}

void Config::check() const {
    if (!(budget >= 0.0)) throw std::invalid_argument("budget must be >= 0");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
    if (!(approval >= 0.0 && approval <= 1.0)) throw std::invalid_argument("approval must lie in [0,1]");
    if (agents == 0) throw std::invalid_argument("agents must be positive");
    if (node_cap == 0) throw std::invalid_argument("node_cap must be positive");
    if (memory_capacity == 0) throw std::invalid_argument("memory_capacity must be positive");
    if (workers == 0) throw std::invalid_argument("workers must be positive");
    if (embedder.empty()) throw std::invalid_argument("embedder must be 'hash' or a command");
}

planner::SearchConfig Config::search() const {
    planner::SearchConfig s;
    s.mode = search_mode;
    s.heuristic = heuristic;
    s.node_cap = node_cap;
    s.time_budget = budget > 0.0 ? budget : 1.0;
    return s;
}

json Config::to_json() const {
    json j = {{"budget", budget},
              {"threshold", threshold},
              {"approval", approval},
              {"agents", agents},
              {"validators", to_string(validators)},
              {"planner", to_string(planner)},
              {"external", external},
              {"search_mode", planner::to_string(search_mode)},
              {"heuristic", planner::to_string(heuristic)},
              {"node_cap", node_cap},
              {"refine_iterations", refine_iterations},
              {"temperature", temperature},
              {"seed", seed},
              {"embedder", embedder},
              {"gnn_advisory", gnn_advisory},
              {"memory_capacity", memory_capacity},
              {"workers", workers}};
    j["gnn_weights"] = gnn_weights ? json(gnn_weights->string()) : json(nullptr);
    j["script"] = script ? json(script->string()) : json(nullptr);
    j["memory_dir"] = memory_dir ? json(memory_dir->string()) : json(nullptr);
    return j;
}

Config Config::from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    static const std::set<std::string> known = {
        "budget",     "threshold", "approval",          "agents",      "validators", "planner",
        "external",   "search_mode", "heuristic",       "node_cap",    "refine_iterations", "temperature",
        "seed",       "embedder",  "gnn_advisory",      "gnn_weights", "memory_capacity",   "script",
        "memory_dir", "workers"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw std::invalid_argument("unknown config key '" + k + "'");
    Config c;
    auto path_or_null = [&](const char* key, std::optional<std::filesystem::path>& out) {
        if (j.contains(key) && !j[key].is_null()) out = j[key].get<std::string>();
    };
    try {
        c.budget = j.value("budget", c.budget);
        c.threshold = j.value("threshold", c.threshold);
        c.approval = j.value("approval", c.approval);
        c.agents = j.value("agents", c.agents);
        if (j.contains("validators")) c.validators = parse_validator_kind(j["validators"].get<std::string>());
        if (j.contains("planner")) c.planner = parse_planner_kind(j["planner"].get<std::string>());
        c.external = j.value("external", c.external);
        if (j.contains("search_mode")) c.search_mode = planner::parse_search_mode(j["search_mode"].get<std::string>());
        if (j.contains("heuristic")) c.heuristic = planner::parse_heuristic(j["heuristic"].get<std::string>());
        c.node_cap = j.value("node_cap", c.node_cap);
        c.refine_iterations = j.value("refine_iterations", c.refine_iterations);
        c.temperature = j.value("temperature", c.temperature);
        c.seed = j.value("seed", c.seed);
        c.embedder = j.value("embedder", c.embedder);
        c.gnn_advisory = j.value("gnn_advisory", c.gnn_advisory);
        c.memory_capacity = j.value("memory_capacity", c.memory_capacity);
        c.workers = j.value("workers", c.workers);
        path_or_null("gnn_weights", c.gnn_weights);
        path_or_null("script", c.script);
        path_or_null("memory_dir", c.memory_dir);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
    c.check();
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
    }
    auto c = from_json(j);
    // Relative paths inside a config file are relative to the file.
    auto base = path.parent_path();
    for (auto* p : {&c.gnn_weights, &c.script, &c.memory_dir})
        if (*p && p->value().is_relative()) *p = base / p->value();
    return c;
}

}  // namespace loop::orchestrator
