#include "loop/decomposition/decomposition.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <queue>
#include <set>

#include "loop/pddl/serializer.hpp"

namespace loop::decomposition {

namespace {

using Bits = std::vector<char>;

bool has(const std::vector<AtomId>& sorted, AtomId a) { return std::binary_search(sorted.begin(), sorted.end(), a); }

bool achieves(const GroundAction& a, GroundLiteral lit) {
    return lit.positive ? has(a.add, lit.atom) : has(a.del, lit.atom);
}

bool clobbers(const GroundAction& a, GroundLiteral lit) {
    return lit.positive ? has(a.del, lit.atom) : has(a.add, lit.atom);
}

struct NodeFacts {
    std::vector<std::size_t> achievers;
    Bits needs;
    Bits side_deletes;
};

NodeFacts facts_for(const pddl::GroundTask& task, const std::vector<GroundLiteral>& goals) {
    NodeFacts f;
    f.needs.assign(task.atoms.size(), 0);
    f.side_deletes.assign(task.atoms.size(), 0);
    Bits unmet(task.atoms.size(), 0);
    for (std::size_t i = 0; i < task.actions.size(); ++i) {
        const auto& a = task.actions[i];
        if (std::none_of(goals.begin(), goals.end(), [&](GroundLiteral l) { return achieves(a, l); })) continue;
        f.achievers.push_back(i);
        for (AtomId p : a.pre_pos) {
            f.needs[p] = 1;
            if (!task.init.contains(p)) unmet[p] = 1;
        }
        for (AtomId d : a.del) f.side_deletes[d] = 1;
    }
    for (const auto& a : task.actions) {
        if (std::none_of(a.add.begin(), a.add.end(), [&](AtomId x) { return unmet[x] != 0; })) continue;
        for (AtomId p : a.pre_pos) f.needs[p] = 1;
    }
    return f;
}

bool instantiates(const causal::StatePattern& p, const std::vector<std::string>& args, const pddl::Atom& atom) {
    if (p.predicate != atom.predicate || p.roles.size() != atom.args.size()) return false;
    for (std::size_t i = 0; i < p.roles.size(); ++i) {
        int r = p.roles[i];
        if (r == causal::kWildcardRole) continue;
        if (r < 0 || static_cast<std::size_t>(r) >= args.size() || args[static_cast<std::size_t>(r)] != atom.args[i])
            return false;
    }
    return true;
}

// Tarjan; returns component index per node, components numbered in
// discovery order.
std::vector<std::size_t> components(std::size_t n, const std::vector<std::vector<std::size_t>>& succ) {
    std::vector<std::size_t> comp(n, SIZE_MAX), index(n, SIZE_MAX), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    std::size_t counter = 0, ncomp = 0;
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = 1;
        for (std::size_t w : succ[v]) {
            if (index[w] == SIZE_MAX) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = 0;
                comp[w] = ncomp;
            } while (w != v);
            ++ncomp;
        }
    };
    for (std::size_t v = 0; v < n; ++v)
        if (index[v] == SIZE_MAX) visit(v);
    return comp;
}

std::vector<Plan> plans_of(const std::vector<NodeResult>& nodes) {
    std::vector<Plan> out;
    for (const auto& n : nodes) out.push_back(n.result.plan.value_or(Plan{}));
    return out;
}

void add_goals(pddl::Goal& into, const std::vector<GroundLiteral>& lits) {
    for (auto l : lits) (l.positive ? into.positive : into.negative).push_back(l.atom);
    for (auto* v : {&into.positive, &into.negative}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
}

}  // namespace

pddl::Goal Subtask::goal() const {
    pddl::Goal g;
    add_goals(g, goals);
    return g;
}

std::vector<std::size_t> DependencyGraph::predecessors(std::size_t node) const {
    std::vector<std::size_t> out;
    for (auto [a, b] : edges)
        if (b == node) out.push_back(a);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> DependencyGraph::ancestors(std::size_t node) const {
    std::set<std::size_t> seen;
    std::vector<std::size_t> todo{node};
    while (!todo.empty()) {
        std::size_t n = todo.back();
        todo.pop_back();
        for (std::size_t p : predecessors(n))
            if (seen.insert(p).second) todo.push_back(p);
    }
    seen.erase(node);
    return {seen.begin(), seen.end()};
}

std::vector<std::size_t> DependencyGraph::topological_order() const {
    std::vector<std::size_t> indegree(nodes.size(), 0);
    for (auto [a, b] : edges) ++indegree.at(b);
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        std::size_t n = ready.top();
        ready.pop();
        order.push_back(n);
        for (auto [a, b] : edges)
            if (a == n && --indegree[b] == 0) ready.push(b);
    }
    if (order.size() != nodes.size()) throw std::logic_error("dependency graph has a cycle");
    return order;
}

std::vector<std::vector<std::size_t>> DependencyGraph::waves() const {
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t top = 0;
    for (std::size_t n : topological_order()) {
        for (std::size_t p : predecessors(n)) level[n] = std::max(level[n], level[p] + 1);
        top = std::max(top, level[n]);
    }
    std::vector<std::vector<std::size_t>> out(nodes.empty() ? 0 : top + 1);
    for (std::size_t i = 0; i < nodes.size(); ++i) out[level[i]].push_back(i);
    return out;
}

bool DependencyGraph::acyclic() const {
    try {
        topological_order();
        return true;
    } catch (const std::logic_error&) {
        return false;
    }
}

void DependencyGraph::check(const pddl::Goal& goal) const {
    for (auto [a, b] : edges)
        if (a >= nodes.size() || b >= nodes.size() || a == b) throw std::logic_error("edge references a missing node");
    if (!acyclic()) throw std::logic_error("dependency graph has a cycle");
    std::multiset<std::pair<AtomId, bool>> owned, wanted;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id != i) throw std::logic_error("node ids must equal their index");
        for (auto l : nodes[i].goals) owned.insert({l.atom, l.positive});
    }
    for (AtomId a : goal.positive) wanted.insert({a, true});
    for (AtomId a : goal.negative) wanted.insert({a, false});
    if (owned != wanted) throw std::logic_error("node goals do not partition the goal");
}

nlohmann::json DependencyGraph::to_json(const pddl::GroundTask& task) const {
    nlohmann::json ns = nlohmann::json::array();
    for (const auto& n : nodes) {
        nlohmann::json goals = nlohmann::json::array();
        for (auto l : n.goals) goals.push_back(task.literal_name(l));
        ns.push_back({{"id", n.id}, {"goals", goals}});
    }
    nlohmann::json es = nlohmann::json::array();
    for (auto [a, b] : edges) es.push_back({a, b});
    return {{"nodes", ns}, {"edges", es}, {"waves", waves()}};
}

DependencyGraph make_graph(std::vector<std::vector<GroundLiteral>> groups,
                           std::vector<std::pair<std::size_t, std::size_t>> edges) {
    std::size_t n = groups.size();
    std::vector<std::vector<std::size_t>> succ(n);
    for (auto [a, b] : edges) {
        if (a >= n || b >= n) throw std::invalid_argument("edge references a missing group");
        if (a != b) succ[a].push_back(b);
    }
    auto comp = components(n, succ);
    // Renumber components by their smallest member so ids follow the input.
    std::vector<std::size_t> renum(n);
    {
        std::vector<std::pair<std::size_t, std::size_t>> order;  // (smallest member, comp)
        std::map<std::size_t, std::size_t> smallest;
        for (std::size_t i = 0; i < n; ++i) smallest.emplace(comp[i], i);
        for (auto [c, s] : smallest) order.emplace_back(s, c);
        std::sort(order.begin(), order.end());
        std::map<std::size_t, std::size_t> id_of;
        for (std::size_t k = 0; k < order.size(); ++k) id_of[order[k].second] = k;
        for (std::size_t i = 0; i < n; ++i) renum[i] = id_of[comp[i]];
    }
    DependencyGraph g;
    std::size_t count = n == 0 ? 0 : *std::max_element(renum.begin(), renum.end()) + 1;
    g.nodes.resize(count);
    for (std::size_t k = 0; k < count; ++k) g.nodes[k].id = k;
    for (std::size_t i = 0; i < n; ++i)
        for (auto l : groups[i]) g.nodes[renum[i]].goals.push_back(l);
    std::set<std::pair<std::size_t, std::size_t>> unique;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b : succ[a])
            if (renum[a] != renum[b]) unique.insert({renum[a], renum[b]});
    g.edges.assign(unique.begin(), unique.end());
    return g;
}

DependencyGraph decompose(const pddl::GroundTask& task, const causal::CausalMemory* causal) {
    std::vector<GroundLiteral> lits;
    for (AtomId a : task.goal.positive) lits.push_back({a, true});
    for (AtomId a : task.goal.negative) lits.push_back({a, false});
    if (lits.empty()) throw std::invalid_argument("decomposition needs at least one goal literal");

    std::vector<std::vector<GroundLiteral>> groups;
    std::map<std::string, std::size_t> by_key;
    for (auto l : lits) {
        const auto& atom = task.atoms.at(l.atom);
        if (atom.args.empty()) {
            groups.push_back({l});
            continue;
        }
        auto [it, fresh] = by_key.emplace(atom.args.front(), groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(l);
    }

    std::vector<NodeFacts> facts;
    for (const auto& g : groups) facts.push_back(facts_for(task, g));

    std::map<std::string, std::vector<causal::StatePattern>> prevents;
    if (causal) {
        for (const auto& f : facts)
            for (std::size_t i : f.achievers) {
                const auto& schema = task.actions[i].schema;
                if (prevents.count(schema)) continue;
                auto& list = prevents[schema];
                for (const auto& t : causal->query(schema, Relation::PREVENTS, 0.5))
                    if (t.key.action == schema) list.push_back(t.key.pattern);
            }
    }

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t v = 0; v < groups.size(); ++v) {
        for (std::size_t u = 0; u < groups.size(); ++u) {
            if (u == v) continue;
            bool before = false;
            for (std::size_t x = 0; x < task.atoms.size() && !before; ++x)
                before = facts[u].side_deletes[x] && facts[v].needs[x];
            for (std::size_t i : facts[v].achievers) {
                if (before) break;
                const auto& a = task.actions[i];
                for (auto l : groups[u]) {
                    if (clobbers(a, l)) before = true;
                    if (!before && l.positive && causal) {
                        for (const auto& p : prevents[a.schema])
                            if (instantiates(p, a.args, task.atoms[l.atom])) before = true;
                    }
                    if (before) break;
                }
            }
            if (before) edges.emplace_back(v, u);
        }
    }
    return make_graph(std::move(groups), std::move(edges));
}

double node_budget(double global, std::size_t nodes) {
    if (nodes == 0) return global;
    return std::min(global, std::max(kMinNodeBudget, global / static_cast<double>(nodes)));
}

std::vector<NodeResult> plan_subtasks(const pddl::GroundTask& task, const DependencyGraph& g,
                                      const planner::SearchConfig& cfg) {
    cfg.check();
    auto order = g.topological_order();
    std::vector<NodeResult> out(g.nodes.size());
    planner::SearchConfig node_cfg = cfg;
    node_cfg.time_budget = node_budget(cfg.time_budget, g.nodes.size());

    auto waves = g.waves();
    for (std::size_t w = 0; w < waves.size(); ++w) {
        std::vector<std::future<void>> jobs;
        for (std::size_t n : waves[w]) {
            NodeResult& slot = out[n];
            slot.node = n;
            slot.wave = w;
            auto anc = g.ancestors(n);
            State s = task.init;
            bool projecting = true;
            slot.goal = g.nodes[n].goal();
            for (std::size_t k : order) {
                if (!std::binary_search(anc.begin(), anc.end(), k)) continue;
                add_goals(slot.goal, g.nodes[k].goals);
                if (!projecting || !out[k].result.plan) continue;
                for (std::size_t step : out[k].result.plan->steps) {
                    if (!applicable(s, task.actions[step])) {
                        projecting = false;
                        break;
                    }
                    s = apply_unchecked(s, task.actions[step]);
                }
            }
            slot.init = std::move(s);
            jobs.push_back(std::async(std::launch::async, [&task, &slot, &node_cfg] {
                slot.result = planner::solve(task, slot.init, slot.goal, node_cfg);
            }));
        }
        for (auto& j : jobs) j.get();
        for (std::size_t n : waves[w])
            if (!out[n].result.solved())
                throw DecompositionFailure(n, "subtask " + std::to_string(n) + " not solved: " +
                                                  planner::to_string(out[n].result.status));
    }
    return out;
}

Plan merge(const pddl::GroundTask& task, const DependencyGraph& g, const std::vector<Plan>& plans) {
    if (plans.size() != g.nodes.size()) throw std::invalid_argument("one plan per node expected");
    Plan merged;
    std::vector<std::size_t> owner;
    auto order = g.topological_order();
    for (std::size_t n : order) {
        for (std::size_t s : plans[n].steps) {
            merged.steps.push_back(s);
            owner.push_back(n);
        }
    }
    auto trace = validate_plan(task, merged);
    if (!trace.ok()) {
        std::size_t node = owner.empty() ? order.back() : owner.at(std::max<std::size_t>(trace.failed_step, 1) - 1);
        throw MergeInvalid(trace.failed_step, node, "merged plan invalid: " + describe_failure(task, trace));
    }
    return merged;
}

Result solve(const pddl::GroundTask& task, const DependencyGraph& g, const planner::SearchConfig& cfg) {
    g.check(task.goal);
    Result r;
    r.graph = g;
    r.nodes = plan_subtasks(task, g, cfg);
    auto plans = plans_of(r.nodes);
    try {
        r.plan = merge(task, g, plans);
        return r;
    } catch (const MergeInvalid&) {
        ++r.merge_failures;
    }

    planner::SearchConfig node_cfg = cfg;
    node_cfg.time_budget = node_budget(cfg.time_budget, g.nodes.size());
    State s = task.init;
    pddl::Goal reached;
    for (std::size_t n : g.topological_order()) {
        add_goals(reached, g.nodes[n].goals);
        auto trace = validate_plan(task, plans[n], s, reached);
        if (!trace.ok()) {
            auto res = planner::solve(task, s, reached, node_cfg);
            if (!res.solved())
                throw DecompositionFailure(n, "repair of subtask " + std::to_string(n) +
                                                  " failed: " + planner::to_string(res.status));
            plans[n] = *res.plan;
            r.nodes[n].init = s;
            r.nodes[n].goal = reached;
            r.nodes[n].result = std::move(res);
            r.repaired.push_back(n);
            trace = validate_plan(task, plans[n], s, reached);
        }
        s = trace.terminal;
    }
    try {
        r.plan = merge(task, g, plans);
    } catch (const MergeInvalid& e) {
        ++r.merge_failures;
        throw DecompositionFailure(e.node(), e.what());
    }
    return r;
}

Result solve(const pddl::GroundTask& task, const causal::CausalMemory* causal, const planner::SearchConfig& cfg) {
    return solve(task, decompose(task, causal), cfg);
}

void write_subtasks(const std::filesystem::path& dir, const pddl::GroundTask& task, const std::vector<NodeResult>& nodes) {
    std::filesystem::create_directories(dir);
    std::string domain = pddl::serialize_domain(task.domain);
    for (const auto& n : nodes) {
        pddl::ProblemModel p = task.problem;
        p.name += "-node-" + std::to_string(n.node);
        p.init = task.to_atoms(n.init);
        p.goal = task.to_literals(n.goal);
        std::string stem = "node-" + std::to_string(n.node);
        std::ofstream(dir / (stem + "-domain.pddl")) << domain;
        std::ofstream(dir / (stem + "-problem.pddl")) << pddl::serialize_problem(p);
    }
}

}  // namespace loop::decomposition
