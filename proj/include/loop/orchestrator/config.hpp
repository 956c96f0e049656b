#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "loop/planner/search.hpp"

namespace loop::orchestrator {

enum class PlannerKind { builtin, external };
enum class ValidatorKind { rule, generative };

const char* to_string(PlannerKind k);
PlannerKind parse_planner_kind(const std::string& text);
const char* to_string(ValidatorKind k);
ValidatorKind parse_validator_kind(const std::string& text);

struct Config {
    double budget = 300.0;
    double threshold = 0.6;
    double approval = 0.7;
    std::size_t agents = 12;
    ValidatorKind validators = ValidatorKind::rule;
    PlannerKind planner = PlannerKind::builtin;
    std::string external = "seq-opt-fdss-1";
    planner::SearchMode search_mode = planner::SearchMode::optimal;
    planner::HeuristicKind heuristic = planner::HeuristicKind::h_max;
    std::size_t node_cap = 2'000'000;
    std::size_t refine_iterations = 5;
    double temperature = 0.1;
    std::uint64_t seed = 0;
    /// "hash" or a shell command printing 384 numbers.
    std::string embedder = "hash";
    bool gnn_advisory = false;
    std::optional<std::filesystem::path> gnn_weights;
    std::size_t memory_capacity = 1000;
    std::optional<std::filesystem::path> script;
    std::optional<std::filesystem::path> memory_dir;
    std::size_t workers = 4;

    /// Throws std::invalid_argument on out-of-range values.
    void check() const;
    planner::SearchConfig search() const;

    nlohmann::json to_json() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    static Config from_json(const nlohmann::json& j);
    static Config load(const std::filesystem::path& path);
};

}  // namespace loop::orchestrator
