#include "loop/planner/heuristics.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace loop::planner {

namespace {

std::size_t universe_size(std::span<const pddl::GroundAction> actions) {
    std::size_t n = 0;
    for (const auto& a : actions)
        for (const auto* list : {&a.pre_pos, &a.add})
            for (AtomId id : *list) n = std::max<std::size_t>(n, id + 1);
    return n;
}

}  // namespace

RelaxedHeuristic::RelaxedHeuristic(std::span<const pddl::GroundAction> actions, std::size_t atom_count)
    : consumers_(atom_count), atom_count_(atom_count) {
    ops_.reserve(actions.size());
    for (const auto& a : actions) {
        auto idx = static_cast<std::uint32_t>(ops_.size());
        ops_.push_back({a.pre_pos, a.add});
        if (a.pre_pos.empty()) free_ops_.push_back(idx);
        for (AtomId p : a.pre_pos) consumers_.at(p).push_back(idx);
    }
}

RelaxedHeuristic::RelaxedHeuristic(const pddl::GroundTask& task) : RelaxedHeuristic(task.actions, task.atoms.size()) {}

double RelaxedHeuristic::h_add(const State& s, const pddl::Goal& goal) const { return evaluate(s, goal, Combine::sum); }

double RelaxedHeuristic::h_max(const State& s, const pddl::Goal& goal) const { return evaluate(s, goal, Combine::max); }

double RelaxedHeuristic::evaluate(const State& s, const pddl::Goal& goal, Combine mode) const {
    bool trivial = true;
    for (AtomId g : goal.positive)
        if (!s.contains(g)) trivial = false;
    if (trivial) return 0.0;
    for (AtomId g : goal.positive)
        if (g >= atom_count_) return kInfinity;

    std::vector<double> cost(atom_count_, kInfinity);
    std::vector<char> done(atom_count_, 0);
    std::vector<std::uint32_t> remaining(ops_.size());
    std::vector<double> acc(ops_.size(), 0.0);
    for (std::size_t i = 0; i < ops_.size(); ++i) remaining[i] = static_cast<std::uint32_t>(ops_[i].pre.size());

    using Entry = std::pair<double, AtomId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    for (AtomId a : s.atoms()) {
        if (a >= atom_count_) continue;
        cost[a] = 0.0;
        open.push({0.0, a});
    }
    auto fire = [&](std::uint32_t op) {
        double c = acc[op] + 1.0;
        for (AtomId q : ops_[op].add) {
            if (c < cost[q]) {
                cost[q] = c;
                open.push({c, q});
            }
        }
    };
    for (std::uint32_t op : free_ops_) fire(op);

    std::size_t goals_left = goal.positive.size();
    std::vector<char> is_goal(atom_count_, 0);
    for (AtomId g : goal.positive) is_goal[g] = 1;

    while (!open.empty() && goals_left > 0) {
        auto [c, a] = open.top();
        open.pop();
        if (done[a] || c > cost[a]) continue;
        done[a] = 1;
        if (is_goal[a]) --goals_left;
        for (std::uint32_t op : consumers_[a]) {
            acc[op] = mode == Combine::sum ? acc[op] + c : std::max(acc[op], c);
            if (--remaining[op] == 0) fire(op);
        }
    }

    double h = 0.0;
    for (AtomId g : goal.positive) {
        if (cost[g] == kInfinity) return kInfinity;
        h = mode == Combine::sum ? h + cost[g] : std::max(h, cost[g]);
    }
    return h;
}

double h_add(const State& s, const pddl::Goal& goal, std::span<const pddl::GroundAction> actions) {
    std::size_t n = universe_size(actions);
    for (AtomId a : s.atoms()) n = std::max<std::size_t>(n, a + 1);
    for (AtomId a : goal.positive) n = std::max<std::size_t>(n, a + 1);
    return RelaxedHeuristic(actions, n).h_add(s, goal);
}

double h_max(const State& s, const pddl::Goal& goal, std::span<const pddl::GroundAction> actions) {
    std::size_t n = universe_size(actions);
    for (AtomId a : s.atoms()) n = std::max<std::size_t>(n, a + 1);
    for (AtomId a : goal.positive) n = std::max<std::size_t>(n, a + 1);
    return RelaxedHeuristic(actions, n).h_max(s, goal);
}

}  // namespace loop::planner
