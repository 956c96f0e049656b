#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loop/causal/causal_memory.hpp"
#include "loop/planner/search.hpp"

namespace loop::decomposition {

/// Smallest per-node planning budget in seconds.
inline constexpr double kMinNodeBudget = 5.0;

struct Subtask {
    std::size_t id = 0;
    /// Goal literals owned by this node.
    std::vector<GroundLiteral> goals;

    pddl::Goal goal() const;
};

/// Subtasks with ordering edges (from must finish before to).
struct DependencyGraph {
    std::vector<Subtask> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    std::vector<std::size_t> predecessors(std::size_t node) const;
    /// Transitive predecessors, ascending.
    std::vector<std::size_t> ancestors(std::size_t node) const;
    /// Kahn order, ties by node id. Throws std::logic_error on a cycle.
    std::vector<std::size_t> topological_order() const;
    /// Nodes grouped by longest path from a source.
    std::vector<std::vector<std::size_t>> waves() const;
    bool acyclic() const;
    /// Throws std::logic_error unless the graph is acyclic, edges reference
    /// existing nodes and the node goals partition `goal`.
    void check(const pddl::Goal& goal) const;

    nlohmann::json to_json(const pddl::GroundTask& task) const;
};

/// Goal literals sharing their first argument form one node. A node v must
/// precede u when achieving u deletes an atom that v's achievers, or the
/// achievers of their unmet preconditions, need; or when v's achievers
/// delete one of u's goal atoms (also when learned PREVENTS knowledge
/// predicts it). Strongly connected nodes are merged.
DependencyGraph decompose(const pddl::GroundTask& task, const causal::CausalMemory* causal = nullptr);

/// Builds a graph from explicit goal groups and edges; cycles are merged.
DependencyGraph make_graph(std::vector<std::vector<GroundLiteral>> groups,
                           std::vector<std::pair<std::size_t, std::size_t>> edges);

class DecompositionFailure : public std::runtime_error {
public:
    DecompositionFailure(std::size_t node, const std::string& message)
        : std::runtime_error(message), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

class MergeInvalid : public std::runtime_error {
public:
    MergeInvalid(std::size_t step, std::size_t node, const std::string& message)
        : std::runtime_error(message), step_(step), node_(node) {}
    /// 1-based step of the merged plan.
    std::size_t step() const noexcept { return step_; }
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t step_;
    std::size_t node_;
};

struct NodeResult {
    std::size_t node = 0;
    std::size_t wave = 0;
    State init;
    /// Own goals plus those of all ancestors.
    pddl::Goal goal;
    planner::PlannerResult result;
};

/// Per-node budget: global / node count, at least kMinNodeBudget but never
/// more than the global budget.
double node_budget(double global, std::size_t nodes);

/// Plans wave by wave, nodes of a wave concurrently. A node starts from the
/// state reached by executing its ancestors' plans in topological order.
/// Throws DecompositionFailure naming the first node (by id) not solved.
std::vector<NodeResult> plan_subtasks(const pddl::GroundTask& task, const DependencyGraph& g,
                                      const planner::SearchConfig& cfg);

/// Concatenates per-node plans in topological order and validates the result
/// on the full task. Throws MergeInvalid.
Plan merge(const pddl::GroundTask& task, const DependencyGraph& g, const std::vector<Plan>& plans);

struct Result {
    DependencyGraph graph;
    std::vector<NodeResult> nodes;
    Plan plan;
    /// Nodes re-planned after a failed merge.
    std::vector<std::size_t> repaired;
    std::size_t merge_failures = 0;
};

/// decompose, plan_subtasks, merge; on MergeInvalid, walks the nodes in
/// order and re-plans every node whose plan does not reach its goals and
/// those of earlier nodes from the true intermediate state. The returned
/// plan always validates on `task`. Throws DecompositionFailure.
Result solve(const pddl::GroundTask& task, const causal::CausalMemory* causal, const planner::SearchConfig& cfg);
Result solve(const pddl::GroundTask& task, const DependencyGraph& g, const planner::SearchConfig& cfg);

/// One domain/problem pair per node: "<dir>/node-<id>-domain.pddl" and
/// "<dir>/node-<id>-problem.pddl".
void write_subtasks(const std::filesystem::path& dir, const pddl::GroundTask& task, const std::vector<NodeResult>& nodes);

}  // namespace loop::decomposition
