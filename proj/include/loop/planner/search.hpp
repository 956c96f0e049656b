#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "loop/pddl/grounding.hpp"
#include "loop/state/execution.hpp"

namespace loop::planner {

enum class SearchMode { optimal, satisficing };
enum class HeuristicKind { blind, h_add, h_max };
enum class SearchStatus { solved, unsolvable, timeout, cap_exceeded };

const char* to_string(SearchMode m);
const char* to_string(HeuristicKind h);
const char* to_string(SearchStatus s);
SearchMode parse_search_mode(const std::string& text);
HeuristicKind parse_heuristic(const std::string& text);

/// Externally supplied state score, lower is better. Only used in
/// satisficing mode, where it replaces the heuristic.
using StateScorer = std::function<double(const State&)>;

struct SearchConfig {
    SearchMode mode = SearchMode::optimal;
    HeuristicKind heuristic = HeuristicKind::h_max;
    std::size_t node_cap = 2'000'000;
    double time_budget = 300.0;  // seconds
    pddl::GroundingOptions grounding{};
    StateScorer scorer{};
    const std::atomic<bool>* cancel = nullptr;

    /// Throws std::invalid_argument on a non-positive cap or budget, or h_add
    /// or a scorer in optimal mode.
    void check() const;
};

struct PlannerResult {
    SearchStatus status = SearchStatus::unsolvable;
    std::optional<Plan> plan;
    std::size_t expanded = 0;
    std::size_t generated = 0;
    double wall_seconds = 0.0;

    bool solved() const { return status == SearchStatus::solved; }
};

/// A* (optimal) or greedy best-first (satisficing) over the ground task,
/// from the task's initial state to its goal. Ties on the priority are
/// broken by insertion order; successors are generated in canonical action
/// order. Returned plans are validated before returning.
PlannerResult solve(const pddl::GroundTask& task, const SearchConfig& cfg);

/// Same, from an arbitrary state towards an arbitrary goal.
PlannerResult solve(const pddl::GroundTask& task, const State& init, const pddl::Goal& goal, const SearchConfig& cfg);

/// Grounds then solves. Plan indices refer to ground(dom, prob, cfg.grounding),
/// which is deterministic.
PlannerResult solve(const pddl::DomainModel& dom, const pddl::ProblemModel& prob, const SearchConfig& cfg);

}  // namespace loop::planner
