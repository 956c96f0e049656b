#include "loop/planner/search.hpp"

#include <chrono>
#include <queue>
#include <unordered_map>

#include "loop/planner/heuristics.hpp"

namespace loop::planner {

const char* to_string(SearchMode m) { return m == SearchMode::optimal ? "optimal" : "satisficing"; }

const char* to_string(HeuristicKind h) {
    switch (h) {
        case HeuristicKind::blind: return "blind";
        case HeuristicKind::h_add: return "h_add";
        case HeuristicKind::h_max: return "h_max";
    }
    return "?";
}

const char* to_string(SearchStatus s) {
    switch (s) {
        case SearchStatus::solved: return "solved";
        case SearchStatus::unsolvable: return "unsolvable";
        case SearchStatus::timeout: return "timeout";
        case SearchStatus::cap_exceeded: return "cap-exceeded";
    }
    return "?";
}

SearchMode parse_search_mode(const std::string& text) {
    if (text == "optimal") return SearchMode::optimal;
    if (text == "satisficing") return SearchMode::satisficing;
    throw std::invalid_argument("unknown search mode '" + text + "'");
}

HeuristicKind parse_heuristic(const std::string& text) {
    if (text == "blind") return HeuristicKind::blind;
    if (text == "h_add" || text == "hadd" || text == "add") return HeuristicKind::h_add;
    if (text == "h_max" || text == "hmax" || text == "max") return HeuristicKind::h_max;
    throw std::invalid_argument("unknown heuristic '" + text + "'");
}

void SearchConfig::check() const {
    if (node_cap == 0) throw std::invalid_argument("node cap must be positive");
    if (!(time_budget > 0.0)) throw std::invalid_argument("time budget must be positive");
    if (mode == SearchMode::optimal && heuristic == HeuristicKind::h_add)
        throw std::invalid_argument("h_add is inadmissible; use blind or h_max in optimal mode");
    if (mode == SearchMode::optimal && scorer)
        throw std::invalid_argument("a state scorer cannot guarantee optimality");
}

namespace {

struct Node {
    State state;
    std::size_t parent;
    std::size_t action;
    std::size_t g;
};

constexpr std::size_t kRoot = static_cast<std::size_t>(-1);

struct OpenEntry {
    double priority;
    std::size_t order;
    std::size_t node;
    bool operator>(const OpenEntry& o) const {
        if (priority != o.priority) return priority > o.priority;
        return order > o.order;
    }
};

}  // namespace

PlannerResult solve(const pddl::GroundTask& task, const State& init, const pddl::Goal& goal, const SearchConfig& cfg) {
    cfg.check();
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.time_budget));

    PlannerResult result;
    auto finish = [&](SearchStatus st) {
        result.status = st;
        result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return result;
    };

    std::optional<RelaxedHeuristic> relaxed;
    if (cfg.heuristic != HeuristicKind::blind && !(cfg.mode == SearchMode::satisficing && cfg.scorer))
        relaxed.emplace(task);
    auto estimate = [&](const State& s) -> double {
        if (cfg.mode == SearchMode::satisficing && cfg.scorer) return cfg.scorer(s);
        switch (cfg.heuristic) {
            case HeuristicKind::blind: return goal.satisfied_by(s) ? 0.0 : (cfg.mode == SearchMode::optimal ? 0.0 : 1.0);
            case HeuristicKind::h_add: return relaxed->h_add(s, goal);
            case HeuristicKind::h_max: return relaxed->h_max(s, goal);
        }
        return 0.0;
    };
    auto priority = [&](std::size_t g, double h) {
        return cfg.mode == SearchMode::optimal ? static_cast<double>(g) + h : h;
    };

    std::vector<Node> nodes;
    std::unordered_map<State, std::size_t, StateHash> best;  // state -> node with lowest g
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
    std::size_t order = 0;

    double h0 = estimate(init);
    if (h0 == kInfinity) return finish(SearchStatus::unsolvable);
    nodes.push_back({init, kRoot, 0, 0});
    best.emplace(init, 0);
    open.push({priority(0, h0), order++, 0});
    result.generated = 1;

    while (!open.empty()) {
        OpenEntry top = open.top();
        open.pop();
        const std::size_t id = top.node;
        if (best.at(nodes[id].state) != id) continue;  // superseded by a cheaper path

        if (goal.satisfied_by(nodes[id].state)) {
            Plan plan;
            for (std::size_t n = id; nodes[n].parent != kRoot; n = nodes[n].parent) plan.steps.push_back(nodes[n].action);
            std::reverse(plan.steps.begin(), plan.steps.end());
            if (!validate_plan(task, plan, init, goal).ok()) throw std::logic_error("search produced an invalid plan");
            result.plan = std::move(plan);
            return finish(SearchStatus::solved);
        }

        if ((result.expanded & 0xff) == 0) {
            if (Clock::now() >= deadline) return finish(SearchStatus::timeout);
            if (cfg.cancel && cfg.cancel->load(std::memory_order_relaxed)) return finish(SearchStatus::timeout);
        }
        ++result.expanded;

        const State current = nodes[id].state;
        const std::size_t g = nodes[id].g + 1;
        for (std::size_t a = 0; a < task.actions.size(); ++a) {
            const auto& act = task.actions[a];
            if (!applicable(current, act)) continue;
            State next = apply_unchecked(current, act);
            auto it = best.find(next);
            if (it != best.end() && (cfg.mode == SearchMode::satisficing || nodes[it->second].g <= g)) continue;
            double h = estimate(next);
            if (h == kInfinity) continue;
            if (nodes.size() >= cfg.node_cap) return finish(SearchStatus::cap_exceeded);
            std::size_t nid = nodes.size();
            nodes.push_back({next, id, a, g});
            if (it != best.end()) it->second = nid;
            else best.emplace(std::move(next), nid);
            open.push({priority(g, h), order++, nid});
            ++result.generated;
        }
    }
    return finish(SearchStatus::unsolvable);
}

PlannerResult solve(const pddl::GroundTask& task, const SearchConfig& cfg) { return solve(task, task.init, task.goal, cfg); }

PlannerResult solve(const pddl::DomainModel& dom, const pddl::ProblemModel& prob, const SearchConfig& cfg) {
    cfg.check();
    auto task = pddl::ground(dom, prob, cfg.grounding);
    return solve(task, cfg);
}

}  // namespace loop::planner
