#pragma once

#include <limits>
#include <span>
#include <vector>

#include "loop/pddl/grounding.hpp"
#include "loop/state/state.hpp"

namespace loop::planner {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Delete-relaxation estimates over a fixed ground action set. Negative
/// preconditions and negative goals are ignored by the relaxation. Build once
/// per task; evaluation is const and safe to call concurrently.
class RelaxedHeuristic {
public:
    explicit RelaxedHeuristic(std::span<const pddl::GroundAction> actions, std::size_t atom_count);
    explicit RelaxedHeuristic(const pddl::GroundTask& task);

    double h_add(const State& s, const pddl::Goal& goal) const;
    double h_max(const State& s, const pddl::Goal& goal) const;

private:
    enum class Combine { sum, max };
    double evaluate(const State& s, const pddl::Goal& goal, Combine mode) const;

    struct Op {
        std::vector<AtomId> pre;
        std::vector<AtomId> add;
    };
    std::vector<Op> ops_;
    std::vector<std::vector<std::uint32_t>> consumers_;  // atom -> ops with it as precondition
    std::vector<std::uint32_t> free_ops_;                // ops without positive preconditions
    std::size_t atom_count_;
};

/// One-shot additive estimate; infinity when the goal is relaxed-unreachable.
double h_add(const State& s, const pddl::Goal& goal, std::span<const pddl::GroundAction> actions);
double h_max(const State& s, const pddl::Goal& goal, std::span<const pddl::GroundAction> actions);

}  // namespace loop::planner
