#pragma once

#include <map>
#include <span>
#include <string>

#include <json.hpp>

#include "loop/causal/causal_memory.hpp"
#include "loop/embedding/embedding.hpp"
#include "loop/memory/experience.hpp"
#include "loop/pddl/grounding.hpp"

namespace loop::confidence {

struct Weights {
    double experience = 0.4;
    double complexity = 0.3;  // applied to (1 - c_complexity)
    double causal = 0.2;
    double domain = 0.1;
};

struct ComplexityScale {
    double object_weight = 0.5;
    double objects = 30.0;
    double goal_weight = 0.3;
    double goals = 15.0;
    double action_weight = 0.2;
    double actions = 2000.0;
};

struct Options {
    Weights weights{};
    ComplexityScale scale{};
    std::size_t top_k = 3;
    double causal_min_confidence = 0.5;
    double default_success_rate = 0.5;  // used when the domain has no history
    double route_threshold = 0.6;
};

struct Report {
    double c_exp = 0.0;
    double c_complexity = 0.0;
    double c_causal = 0.0;
    double c_domain = 0.0;
    double c_total = 0.0;
    std::map<std::string, std::string> notes;

    nlohmann::json to_json() const;
};

/// 0.4·c_exp + 0.3·(1 − c_complexity) + 0.2·c_causal + 0.1·c_domain
double combine(double c_exp, double c_complexity, double c_causal, double c_domain, const Weights& w = {});

double complexity(std::size_t objects, std::size_t goals, std::size_t ground_actions, const ComplexityScale& s = {});
double complexity(const pddl::GroundTask& task, const ComplexityScale& s = {});

/// Mean of the top-k similarities, each clamped at 0; 0 with no matches.
double experience_component(const memory::MemoryStore& mem, std::span<const double> query, std::size_t k = 3);

/// Share of the domain's action schemas with a triple at or above `min_conf`.
double causal_component(const pddl::DomainModel& domain, const causal::CausalMemory& causal, double min_conf = 0.5);

/// 0.5·[expert registered] + 0.5·success rate (default_rate at zero history).
double domain_component(bool expert_registered, const memory::SuccessRate& rate, double default_rate = 0.5);

Report assess(std::span<const double> query, const pddl::GroundTask& task, const memory::MemoryStore& mem,
              const causal::CausalMemory& causal, bool expert_registered, const Options& opts = {});

enum class Route { decomposition, progressive };
const char* to_string(Route r);
/// c_total >= threshold → decomposition, otherwise progressive generation.
Route route(const Report& r, double threshold = 0.6);

}  // namespace loop::confidence
